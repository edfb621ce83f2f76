//! Fitting profile parameters to qualitative constraints.
//!
//! Physical quantities (UART and air timing, path loss, the XBee sketch
//! overhead, host service costs) are inputs. `calibrate` solves the rest:
//! transmit intervals so that the rate ordering and ratios hold, an iSense
//! transmit power and receiver sensitivities so that the range behaviour
//! holds with a shadowing safety margin. Every constraint is checked again
//! on the result.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use super::{
    rx_host_bytes, uart_drain_time, DeviceError, PlatformProfile, ProfileSet, RxCapacityModel,
    TxRateModel, AIR_BYTE_TIME_S, PHY_OVERHEAD, XBEE_UART_BAUD,
};
use crate::frame::DispatchPrefix;
use crate::platform::{caps, xbee, Envelope, PlatformId};
use crate::rssi::{packet_error_rate, PathLossModel};

use PlatformId::{ArduinoXBee, ISense, SunSpot, TelosB};

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// Strictly highest packet rate at every payload size.
    FastestTx(PlatformId),
    /// Strictly lowest packet rate at every payload size.
    SlowestTx(PlatformId),
    /// `pps(fast) / pps(slow)` within `[min, max]` at every payload size.
    TxRatio {
        fast: PlatformId,
        slow: PlatformId,
        min: f64,
        max: f64,
    },
    /// Packet rate independent of payload size.
    ConstantTxRate(PlatformId),
    RestartThreshold {
        platform: PlatformId,
        pps: f64,
    },
    /// `tx` broadcasts faster than `rx` tolerates at every payload size.
    Overloads {
        tx: PlatformId,
        rx: PlatformId,
    },
    /// At `distance_m`, `tx` reaches only the listed receivers.
    RangeCutoff {
        tx: PlatformId,
        distance_m: f64,
        reached: Vec<PlatformId>,
    },
    /// Mean PER at `distance_m` from every full-power sender.
    LossyLink {
        rx: PlatformId,
        distance_m: f64,
        per_min: f64,
        per_max: f64,
    },
    /// `rx` keeps up with `tx` up to `payload` octets and falls behind past it.
    RxDeclineOnset {
        rx: PlatformId,
        tx: PlatformId,
        payload: usize,
    },
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::FastestTx(p) => write!(f, "fastest-tx({p})"),
            Constraint::SlowestTx(p) => write!(f, "slowest-tx({p})"),
            Constraint::TxRatio {
                fast,
                slow,
                min,
                max,
            } => write!(f, "tx-ratio({fast}/{slow} in [{min}, {max}])"),
            Constraint::ConstantTxRate(p) => write!(f, "constant-tx-rate({p})"),
            Constraint::RestartThreshold { platform, pps } => {
                write!(f, "restart-threshold({platform} > {pps} pps)")
            }
            Constraint::Overloads { tx, rx } => write!(f, "overloads({tx} -> {rx})"),
            Constraint::RangeCutoff {
                tx,
                distance_m,
                reached,
            } => {
                let names: Vec<_> = reached.iter().map(|p| p.name()).collect();
                write!(
                    f,
                    "range-cutoff({tx} at {distance_m} m reaches [{}])",
                    names.join(", ")
                )
            }
            Constraint::LossyLink {
                rx,
                distance_m,
                per_min,
                per_max,
            } => write!(
                f,
                "lossy-link({rx} at {distance_m} m, PER in [{per_min}, {per_max}])"
            ),
            Constraint::RxDeclineOnset { rx, tx, payload } => {
                write!(f, "rx-decline-onset({rx} from {tx} at {payload} B)")
            }
        }
    }
}

/// The behaviour the testbed showed.
pub fn default_constraints() -> Vec<Constraint> {
    vec![
        Constraint::RestartThreshold {
            platform: ArduinoXBee,
            pps: 150.0,
        },
        Constraint::ConstantTxRate(SunSpot),
        Constraint::RxDeclineOnset {
            rx: ArduinoXBee,
            tx: TelosB,
            payload: 28,
        },
        Constraint::TxRatio {
            fast: TelosB,
            slow: SunSpot,
            min: 1.7,
            max: 2.3,
        },
        Constraint::FastestTx(ISense),
        Constraint::Overloads {
            tx: ISense,
            rx: ArduinoXBee,
        },
        Constraint::LossyLink {
            rx: ArduinoXBee,
            distance_m: 8.5,
            per_min: 0.6,
            per_max: 0.8,
        },
        Constraint::RangeCutoff {
            tx: ISense,
            distance_m: 8.5,
            reached: vec![ISense],
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxDefaults {
    pub service_base: f64,
    pub service_byte: f64,
    pub buffer_capacity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationInputs {
    pub payloads: Vec<usize>,
    pub distances_m: Vec<f64>,
    pub path_loss: PathLossModel,
    pub per_margin_db: f64,
    /// Required link slack in units of the shadowing sigma.
    pub safety_sigmas: f64,
    pub uart_baud: f64,
    pub air_byte_time: f64,
    /// Per-packet time of the Arduino sketch outside the UART.
    pub host_tx_overhead: f64,
    pub nominal_tx_power_dbm: f64,
    /// Sensitivity of receivers that no constraint limits.
    pub sensitivity_floor_dbm: f64,
    pub rx: BTreeMap<PlatformId, RxDefaults>,
    pub restart_duration: f64,
    /// Factor by which the fastest platform must beat every other rate.
    pub fastest_margin: f64,
    pub t_base_search_start: f64,
    pub t_base_step: f64,
    pub t_byte_step: f64,
    pub power_step_db: f64,
    pub power_span_db: f64,
}

/// `round(6 + k * 90 / 19)` for `k = 0..=19`.
pub fn payload_sweep() -> Vec<usize> {
    (0..20).map(|k| (114 + 90 * k + 9) / 19).collect()
}

impl Default for CalibrationInputs {
    fn default() -> Self {
        let uart_byte = uart_drain_time(1, XBEE_UART_BAUD);
        let rx = |service_base, service_byte, buffer_capacity| RxDefaults {
            service_base,
            service_byte,
            buffer_capacity,
        };
        CalibrationInputs {
            payloads: payload_sweep(),
            distances_m: vec![1.0, 3.0, 8.5],
            path_loss: PathLossModel::default(),
            per_margin_db: 3.0,
            safety_sigmas: 5.0,
            uart_baud: XBEE_UART_BAUD,
            air_byte_time: AIR_BYTE_TIME_S,
            host_tx_overhead: 12e-3,
            nominal_tx_power_dbm: 0.0,
            sensitivity_floor_dbm: -100.0,
            rx: BTreeMap::from([
                (ArduinoXBee, rx(0.2e-3, uart_byte, 2)),
                (SunSpot, rx(9e-3, 4e-6, 32)),
                (TelosB, rx(0.5e-3, 4e-6, 4)),
                (ISense, rx(0.3e-3, 4e-6, 8)),
            ]),
            restart_duration: 1.0,
            fastest_margin: 1.25,
            t_base_search_start: 20e-3,
            t_base_step: 10e-6,
            t_byte_step: 1e-6,
            power_step_db: 0.5,
            power_span_db: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub profiles: ProfileSet,
    /// Smallest link slack in dB among the links the range search scored.
    pub min_link_slack_db: Option<f64>,
    pub report: String,
}

fn infeasible(msg: impl Into<String>) -> DeviceError {
    DeviceError::Infeasible(msg.into())
}

struct Solver<'a> {
    inputs: &'a CalibrationInputs,
    tx: BTreeMap<PlatformId, TxRateModel>,
    rx: BTreeMap<PlatformId, RxCapacityModel>,
    power: BTreeMap<PlatformId, f64>,
    sensitivity: BTreeMap<PlatformId, f64>,
    /// Platforms whose interval at a payload is fixed by an onset constraint.
    pinned: BTreeMap<PlatformId, (usize, f64)>,
    log: Vec<String>,
}

impl Solver<'_> {
    fn air_time(&self, payload: usize) -> f64 {
        let mac = super::mac_frame_len(payload + DispatchPrefix::LEN);
        (PHY_OVERHEAD + mac) as f64 * self.inputs.air_byte_time
    }

    fn interval(&self, p: PlatformId, payload: usize) -> f64 {
        self.tx[&p].interval(payload)
    }

    fn service(&self, p: PlatformId, payload: usize) -> f64 {
        let rx = &self.rx[&p];
        rx.service_base + rx.service_byte * rx_host_bytes(p, payload) as f64
    }

    fn mean_rx(&self, tx: PlatformId, d: f64) -> Result<f64, DeviceError> {
        self.inputs
            .path_loss
            .mean_rx_dbm(self.power[&tx], d)
            .map_err(|e| infeasible(e.to_string()))
    }

    fn max_payload(&self) -> usize {
        *self
            .inputs
            .payloads
            .iter()
            .max()
            .expect("payloads checked non-empty")
    }

    fn set_pinned_base(&mut self, p: PlatformId) -> bool {
        if let Some(&(payload, target)) = self.pinned.get(&p) {
            let m = self.tx.get_mut(&p).unwrap();
            m.t_base = target - m.t_byte * payload as f64;
            return m.t_base > 0.0;
        }
        true
    }

    /// Window of `t_base` for `slow` that keeps the ratio in band.
    fn ratio_window(&self, fast: PlatformId, slow: PlatformId, min: f64, max: f64) -> (f64, f64) {
        let c = self.tx[&slow].t_byte;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for &p in &self.inputs.payloads {
            let a = self.interval(fast, p);
            lo = lo.max(min * a - c * p as f64);
            hi = hi.min(max * a - c * p as f64);
        }
        (lo, hi)
    }

    fn solve_ratio(
        &mut self,
        fast: PlatformId,
        slow: PlatformId,
        min: f64,
        max: f64,
    ) -> Result<(), DeviceError> {
        if !(min > 0.0 && min <= max) {
            return Err(infeasible(format!("ratio band [{min}, {max}] is empty")));
        }
        let step = self.inputs.t_byte_step;
        let n = (self.tx[&fast].t_byte / step).round() as i64;
        for k in (0..=n).rev() {
            self.tx.get_mut(&fast).unwrap().t_byte = k as f64 * step;
            if !self.set_pinned_base(fast) {
                continue;
            }
            let (lo, hi) = self.ratio_window(fast, slow, min, max);
            if lo > 0.0 && lo <= hi {
                let base = (lo * hi).sqrt();
                self.tx.get_mut(&slow).unwrap().t_base = base;
                let _ = writeln!(
                    self.log_line(),
                    "tx-ratio {fast}/{slow}: t_byte({fast}) = {:.1} us, t_base({slow}) window [{lo:.6}, {hi:.6}] s",
                    k as f64 * step * 1e6
                );
                return Ok(());
            }
        }
        Err(infeasible(format!(
            "no per-byte time for {fast} puts {fast}/{slow} in [{min}, {max}]"
        )))
    }

    fn log_line(&mut self) -> &mut String {
        self.log.push(String::new());
        self.log.last_mut().unwrap()
    }

    fn solve_fastest(
        &mut self,
        x: PlatformId,
        constraints: &[Constraint],
    ) -> Result<(), DeviceError> {
        let thresholds: Vec<f64> = constraints
            .iter()
            .filter_map(|c| match c {
                Constraint::Overloads { tx, rx } if *tx == x => self.rx[rx].overload_pps_threshold,
                _ => None,
            })
            .collect();
        let margin = self.inputs.fastest_margin;
        let t_byte = self.tx[&x].t_byte;
        let steps = (self.inputs.t_base_search_start / self.inputs.t_base_step).round() as i64;
        for k in (1..=steps).rev() {
            let t_base = k as f64 * self.inputs.t_base_step;
            let ok = self.inputs.payloads.iter().all(|&p| {
                let pps = 1.0 / (t_base + t_byte * p as f64);
                let others = PlatformId::ALL
                    .iter()
                    .filter(|&&o| o != x)
                    .all(|&o| pps >= margin * (1.0 / self.interval(o, p)));
                let over = thresholds.iter().all(|&t| pps >= margin * t);
                others && over && 1.0 / pps >= self.air_time(p)
            });
            if ok {
                self.tx.get_mut(&x).unwrap().t_base = t_base;
                let _ = writeln!(
                    self.log_line(),
                    "fastest-tx {x}: t_base = {:.2} ms",
                    t_base * 1e3
                );
                return Ok(());
            }
        }
        Err(infeasible(format!(
            "no interval makes {x} the fastest sender"
        )))
    }

    fn solve_links(&mut self, constraints: &[Constraint]) -> Result<Option<f64>, DeviceError> {
        let cutoffs: Vec<_> = constraints
            .iter()
            .filter_map(|c| match c {
                Constraint::RangeCutoff {
                    tx,
                    distance_m,
                    reached,
                } => Some((*tx, *distance_m, reached.clone())),
                _ => None,
            })
            .collect();
        if cutoffs.len() > 1 {
            return Err(infeasible("at most one range cutoff is supported"));
        }
        let cutoff = cutoffs.into_iter().next();
        let m = self.inputs.per_margin_db;

        // Lossy receivers are placed in the middle of their PER band.
        let mut lossy: BTreeMap<PlatformId, f64> = BTreeMap::new();
        for c in constraints {
            if let Constraint::LossyLink {
                rx,
                distance_m,
                per_min,
                per_max,
            } = c
            {
                if !(0.0..=1.0).contains(per_min) || !(per_min <= per_max) || *per_max > 1.0 {
                    return Err(infeasible(format!("bad PER band for {rx}")));
                }
                let senders: Vec<_> = PlatformId::ALL
                    .into_iter()
                    .filter(|&t| cutoff.as_ref().is_none_or(|(ct, _, _)| *ct != t))
                    .collect();
                let mean = self.mean_rx(senders[0], *distance_m)?;
                let mid = (per_min + per_max) / 2.0;
                let s = mean - m + 2.0 * m * mid;
                let s = (s * 10.0).round() / 10.0;
                self.sensitivity.insert(*rx, s);
                lossy.insert(*rx, *distance_m);
                let _ = writeln!(
                    self.log_line(),
                    "lossy-link {rx}: sensitivity {s:.1} dBm (mean rx {mean:.2} dBm at {distance_m} m)"
                );
            }
        }

        let Some((ctx, cd, reached)) = cutoff else {
            return Ok(None);
        };
        let mut distances = self.inputs.distances_m.clone();
        if !distances.contains(&cd) {
            distances.push(cd);
        }
        let searched: Vec<PlatformId> = PlatformId::ALL
            .into_iter()
            .filter(|p| !reached.contains(p) && !lossy.contains_key(p))
            .collect();

        // Score of a candidate: minimum slack over all links with a
        // definite requirement.
        let score = |solver: &Solver<'_>| -> Result<f64, DeviceError> {
            let mut worst = f64::INFINITY;
            for tx in PlatformId::ALL {
                for rx in PlatformId::ALL {
                    let s = solver.sensitivity[&rx];
                    for &d in &distances {
                        let r = solver.mean_rx(tx, d)?;
                        let clean = r - (s + m);
                        let dead = (s - m) - r;
                        let slack = if tx == ctx {
                            if reached.contains(&rx) {
                                clean
                            } else if d >= cd {
                                dead
                            } else if solver.rx[&rx].overload_pps_threshold.is_some() {
                                clean.max(dead)
                            } else {
                                clean
                            }
                        } else {
                            match lossy.get(&rx) {
                                Some(&ld) if d >= ld => continue,
                                _ => clean,
                            }
                        };
                        worst = worst.min(slack);
                    }
                }
            }
            Ok(worst)
        };

        let step = self.inputs.power_step_db;
        let n_power = (self.inputs.power_span_db / step).round() as i64;
        let s_top = self.inputs.nominal_tx_power_dbm - 50.0;
        let n_sens = ((s_top - self.inputs.sensitivity_floor_dbm) / step).round() as i64;
        let mut best: Option<(f64, f64, f64)> = None;
        for i in 0..=n_power {
            let p = self.inputs.nominal_tx_power_dbm - i as f64 * step;
            self.power.insert(ctx, p);
            for j in 0..=n_sens {
                let s = s_top - j as f64 * step;
                for &r in &searched {
                    self.sensitivity.insert(r, s);
                }
                let v = score(self)?;
                if best.is_none_or(|(bv, _, _)| v > bv) {
                    best = Some((v, p, s));
                }
            }
        }
        let (v, p, s) = best.expect("grid is non-empty");
        self.power.insert(ctx, p);
        for &r in &searched {
            self.sensitivity.insert(r, s);
        }
        let required = self.inputs.safety_sigmas * self.inputs.path_loss.shadowing_sigma;
        let names: Vec<_> = searched.iter().map(|p| p.name()).collect();
        let _ = writeln!(
            self.log_line(),
            "range-cutoff {ctx}: tx power {p:.1} dBm, sensitivity [{}] {s:.1} dBm, min slack {v:.2} dB (need {required:.2})",
            names.join(", ")
        );
        if v < required {
            return Err(infeasible(format!(
                "best link slack {v:.2} dB is below the required {required:.2} dB"
            )));
        }
        Ok(Some(v))
    }

    fn verify(&self, c: &Constraint) -> Result<(), String> {
        let pays = &self.inputs.payloads;
        let pps = |p: PlatformId, n: usize| 1.0 / self.interval(p, n);
        let others = |x: PlatformId| PlatformId::ALL.into_iter().filter(move |&o| o != x);
        let m = self.inputs.per_margin_db;
        let required = self.inputs.safety_sigmas * self.inputs.path_loss.shadowing_sigma;
        match c {
            Constraint::FastestTx(x) => {
                for &n in pays {
                    if let Some(o) = others(*x).find(|&o| pps(o, n) >= pps(*x, n)) {
                        return Err(format!("{o} is at least as fast as {x} at {n} B"));
                    }
                }
            }
            Constraint::SlowestTx(x) => {
                for &n in pays {
                    if let Some(o) = others(*x).find(|&o| pps(o, n) <= pps(*x, n)) {
                        return Err(format!("{o} is at most as fast as {x} at {n} B"));
                    }
                }
            }
            Constraint::TxRatio {
                fast,
                slow,
                min,
                max,
            } => {
                for &n in pays {
                    let r = pps(*fast, n) / pps(*slow, n);
                    if r < min - 1e-9 || r > max + 1e-9 {
                        return Err(format!("ratio {r:.4} at {n} B"));
                    }
                }
            }
            Constraint::ConstantTxRate(p) => {
                if self.tx[p].t_byte != 0.0 {
                    return Err(format!("{p} has a per-byte cost"));
                }
            }
            Constraint::RestartThreshold { platform, pps } => {
                if self.rx[platform].overload_pps_threshold != Some(*pps) {
                    return Err("threshold not applied".into());
                }
            }
            Constraint::Overloads { tx, rx } => {
                let Some(t) = self.rx[rx].overload_pps_threshold else {
                    return Err(format!("{rx} has no restart threshold"));
                };
                if let Some(&n) = pays.iter().find(|&&n| pps(*tx, n) <= t) {
                    return Err(format!("{tx} sends only {:.1} pps at {n} B", pps(*tx, n)));
                }
            }
            Constraint::RangeCutoff {
                tx,
                distance_m,
                reached,
            } => {
                let r = self.mean_rx(*tx, *distance_m).map_err(|e| e.to_string())?;
                for rx in PlatformId::ALL {
                    let s = self.sensitivity[&rx];
                    let slack = if reached.contains(&rx) {
                        r - (s + m)
                    } else {
                        (s - m) - r
                    };
                    if slack < required {
                        return Err(format!("{tx} -> {rx} slack {slack:.2} dB"));
                    }
                }
            }
            Constraint::LossyLink {
                rx,
                distance_m,
                per_min,
                per_max,
            } => {
                for tx in PlatformId::ALL {
                    if self.power[&tx] != self.inputs.nominal_tx_power_dbm {
                        continue;
                    }
                    let r = self.mean_rx(tx, *distance_m).map_err(|e| e.to_string())?;
                    let per = packet_error_rate(r, self.sensitivity[rx], m);
                    if per < *per_min || per > *per_max {
                        return Err(format!("{tx} -> {rx} PER {per:.3}"));
                    }
                }
            }
            Constraint::RxDeclineOnset { rx, tx, payload } => {
                let a = self.interval(*tx, *payload);
                let s = self.service(*rx, *payload);
                if (a - s).abs() > 1e-12 {
                    return Err(format!("interval {a} s vs service {s} s at onset"));
                }
                let top = self.max_payload();
                if self.service(*rx, top) <= self.interval(*tx, top) {
                    return Err(format!("{rx} still keeps up at {top} B"));
                }
            }
        }
        Ok(())
    }
}

/// Solve profile parameters for `constraints` from physical `inputs`.
pub fn calibrate(
    constraints: &[Constraint],
    inputs: &CalibrationInputs,
) -> Result<Calibration, DeviceError> {
    if inputs.payloads.is_empty() || inputs.distances_m.is_empty() {
        return Err(infeasible("empty payload or distance sweep"));
    }
    inputs
        .path_loss
        .validate()
        .map_err(|e| DeviceError::Infeasible(e.to_string()))?;

    let uart_byte = uart_drain_time(1, inputs.uart_baud);
    let mut solver = Solver {
        inputs,
        tx: BTreeMap::new(),
        rx: BTreeMap::new(),
        power: BTreeMap::new(),
        sensitivity: BTreeMap::new(),
        pinned: BTreeMap::new(),
        log: Vec::new(),
    };
    for p in PlatformId::ALL {
        let d = inputs
            .rx
            .get(&p)
            .ok_or_else(|| infeasible(format!("no receive defaults for {p}")))?;
        solver.rx.insert(
            p,
            RxCapacityModel {
                service_base: d.service_base,
                service_byte: d.service_byte,
                buffer_capacity: d.buffer_capacity,
                overload_pps_threshold: None,
                restart_duration: inputs.restart_duration,
            },
        );
        let tx = match caps(p).envelope {
            Envelope::XBeeApi => TxRateModel {
                t_base: inputs.host_tx_overhead
                    + uart_drain_time(xbee::tx16_len(DispatchPrefix::LEN), inputs.uart_baud),
                t_byte: uart_byte,
            },
            Envelope::Plain | Envelope::LowPanBypass => TxRateModel {
                t_base: inputs.host_tx_overhead,
                t_byte: inputs.air_byte_time,
            },
        };
        solver.tx.insert(p, tx);
        solver.power.insert(p, inputs.nominal_tx_power_dbm);
        solver.sensitivity.insert(p, inputs.sensitivity_floor_dbm);
    }

    for c in constraints {
        match c {
            Constraint::RestartThreshold { platform, pps } => {
                if !(*pps > 0.0) {
                    return Err(infeasible("restart threshold must be positive"));
                }
                solver.rx.get_mut(platform).unwrap().overload_pps_threshold = Some(*pps);
            }
            Constraint::ConstantTxRate(p) => solver.tx.get_mut(p).unwrap().t_byte = 0.0,
            _ => {}
        }
    }
    for c in constraints {
        if let Constraint::RxDeclineOnset { rx, tx, payload } = c {
            let target = solver.service(*rx, *payload);
            solver.pinned.insert(*tx, (*payload, target));
            if !solver.set_pinned_base(*tx) {
                return Err(infeasible(format!(
                    "{tx} cannot match {rx} service at {payload} B"
                )));
            }
            let _ = writeln!(
                solver.log_line(),
                "rx-decline-onset {rx}/{tx}: interval at {payload} B = {:.4} ms",
                target * 1e3
            );
        }
    }
    for c in constraints {
        if let Constraint::TxRatio {
            fast,
            slow,
            min,
            max,
        } = c
        {
            solver.solve_ratio(*fast, *slow, *min, *max)?;
        }
    }
    for c in constraints {
        if let Constraint::FastestTx(x) = c {
            solver.solve_fastest(*x, constraints)?;
        }
    }
    let min_link_slack_db = solver.solve_links(constraints)?;

    for c in constraints {
        solver
            .verify(c)
            .map_err(|why| infeasible(format!("{c}: {why}")))?;
    }

    let profiles = ProfileSet::new(PlatformId::ALL.into_iter().map(|p| PlatformProfile {
        id: p,
        caps: caps(p),
        tx: solver.tx[&p],
        rx: solver.rx[&p],
        tx_power_dbm: solver.power[&p],
        sensitivity_dbm: solver.sensitivity[&p],
        rssi_bias_db: 0.0,
    }))?;

    let mut report = String::from("calibration\n");
    for line in &solver.log {
        report.push_str("  ");
        report.push_str(line.trim_end());
        report.push('\n');
    }
    report.push_str("constraints\n");
    for c in constraints {
        let _ = writeln!(report, "  ok  {c}");
    }
    report.push_str("profiles\n");
    for p in profiles.iter() {
        let lo = *inputs.payloads.iter().min().unwrap();
        let hi = solver.max_payload();
        let _ = writeln!(
            report,
            "  {:<13} tx {:>7.2}-{:>7.2} pps  rx service {:>6.3}-{:>6.3} ms  buffer {:>2}  power {:>5.1} dBm  sens {:>6.1} dBm",
            p.id.name(),
            p.tx.pps(hi),
            p.tx.pps(lo),
            solver.service(p.id, lo) * 1e3,
            solver.service(p.id, hi) * 1e3,
            p.rx.buffer_capacity,
            p.tx_power_dbm,
            p.sensitivity_dbm,
        );
    }
    Ok(Calibration {
        profiles,
        min_link_slack_db,
        report,
    })
}
