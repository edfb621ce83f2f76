//! Discrete-event replay of the beacon experiment: one transmitter at a
//! time broadcasts a fixed number of beacons per payload size while every
//! receiver samples its own channel and pushes survivors through its host
//! model.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::device::{
    mac_frame_len, payload_sweep, rx_host_bytes, rx_service_time, DeviceError, ProfileSet,
    PHY_OVERHEAD, RESTART_WINDOW_S,
};
use crate::error::CodecError;
use crate::frame::{DispatchPrefix, MacFrame, BROADCAST_ADDR};
use crate::platform::{to_air, validate_payload_with, wrap, InteropConfig, PlatformId};
use crate::rssi::{
    encode_raw, normalize, packet_error_rate, synth_rssi, PathLossModel, RssiConfig, RssiDbm,
    RssiError,
};

/// Simulation clock in nanoseconds.
pub type SimTime = u64;

pub fn secs_to_ns(s: f64) -> SimTime {
    (s * 1e9).round() as SimTime
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Rssi(#[from] RssiError),
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidScenario(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub transmitters: Vec<PlatformId>,
    pub receivers: Vec<PlatformId>,
    pub distances_m: Vec<f64>,
    pub payload_sizes: Vec<usize>,
    pub beacons_per_run: u32,
    pub repetitions: u32,
    pub seed: u64,
    pub path_loss: PathLossModel,
    /// Half-width of the PER ramp around each receiver's sensitivity.
    pub per_margin_db: f64,
    pub restart_window_s: f64,
    pub profiles: ProfileSet,
    pub interop: InteropConfig,
    pub rssi: RssiConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            transmitters: PlatformId::ALL.to_vec(),
            receivers: PlatformId::ALL.to_vec(),
            distances_m: vec![1.0, 3.0, 8.5],
            payload_sizes: payload_sweep(),
            beacons_per_run: 500,
            repetitions: 9,
            seed: 1,
            path_loss: PathLossModel::default(),
            per_margin_db: 3.0,
            restart_window_s: RESTART_WINDOW_S,
            profiles: ProfileSet::default_calibrated(),
            interop: InteropConfig::default(),
            rssi: RssiConfig::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.transmitters.is_empty() || self.receivers.is_empty() {
            return Err(invalid("need at least one transmitter and one receiver"));
        }
        if self.distances_m.is_empty() || self.payload_sizes.is_empty() {
            return Err(invalid("need at least one distance and one payload size"));
        }
        for list in [&self.transmitters, &self.receivers] {
            for (i, p) in list.iter().enumerate() {
                if list[..i].contains(p) {
                    return Err(invalid(format!("{p} listed twice")));
                }
            }
        }
        if self.receivers.len() > 254 {
            return Err(invalid("too many receivers"));
        }
        if let Some(d) = self
            .distances_m
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return Err(invalid(format!("distance {d} m is not positive")));
        }
        if self.beacons_per_run == 0 || self.repetitions == 0 {
            return Err(invalid("beacons_per_run and repetitions must be >= 1"));
        }
        if !(self.per_margin_db >= 0.0 && self.per_margin_db.is_finite()) {
            return Err(invalid("PER margin must be >= 0"));
        }
        if !(self.restart_window_s > 0.0 && self.restart_window_s.is_finite()) {
            return Err(invalid("restart window must be positive"));
        }
        self.path_loss.validate()?;
        for &p in self.transmitters.iter().chain(&self.receivers) {
            self.profiles.get(p)?;
            for &n in &self.payload_sizes {
                validate_payload_with(p, n, &self.interop)
                    .map_err(|e| invalid(format!("payload {n} B on {p}: {e}")))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    RestartEnd,
    RxServiceDone,
    TxStart,
    RxArrival,
}

/// A scheduled event. Ordered by time, then kind, then node, then beacon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: SimTime,
    pub kind: EventKind,
    /// 0 is the transmitter; receivers are numbered from 1.
    pub node: u8,
    pub beacon: u32,
    pub generation: u64,
    pub rssi_raw: u8,
}

impl Event {
    fn key(&self) -> (SimTime, EventKind, u8, u32) {
        (self.time, self.kind, self.node, self.beacon)
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// What became of one beacon at one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fate {
    Received,
    ChannelDrop,
    OverloadDrop,
    RestartDrop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub tx_power_dbm: f64,
    pub distance_m: f64,
    pub path_loss: PathLossModel,
    pub sensitivity_dbm: f64,
    pub margin_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub rx_dbm: RssiDbm,
    pub lost: bool,
}

pub fn channel_per(rx_dbm: RssiDbm, sensitivity_dbm: f64, margin_db: f64) -> f64 {
    packet_error_rate(rx_dbm.0, sensitivity_dbm, margin_db)
}

/// One beacon over one link: a shadowed power sample, then a loss draw
/// against the PER at that power. Always consumes one normal and one
/// uniform draw.
pub fn sample_channel<R: Rng + ?Sized>(
    link: &LinkSpec,
    rng: &mut R,
) -> Result<ChannelSample, RssiError> {
    let rx_dbm = synth_rssi(link.tx_power_dbm, link.distance_m, &link.path_loss, rng)?;
    let per = channel_per(rx_dbm, link.sensitivity_dbm, link.margin_db);
    let u: f64 = rng.gen();
    Ok(ChannelSample {
        rx_dbm,
        lost: u < per,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartPolicy {
    pub threshold_pps: f64,
    pub window_ns: SimTime,
    pub duration_ns: SimTime,
}

impl RestartPolicy {
    fn tripped(&self, arrivals_in_window: usize) -> bool {
        arrivals_in_window as f64 > self.threshold_pps * (self.window_ns as f64 * 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverParams {
    pub service_ns: SimTime,
    pub buffer_capacity: usize,
    pub restart: Option<RestartPolicy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pending {
    pub beacon: u32,
    pub rssi_raw: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArrivalOutcome {
    /// Service started; completes at `done_at`.
    Serve {
        done_at: SimTime,
        generation: u64,
    },
    Queued,
    Dropped(Fate),
    /// The arrival tripped a restart. `flushed` lists the beacons lost with
    /// it (the arriving one last).
    Restart {
        flushed: Vec<u32>,
        until: SimTime,
    },
}

/// Host-side state of one receiver.
#[derive(Debug, Clone, Default)]
pub struct ReceiverState {
    in_service: Option<Pending>,
    queue: VecDeque<Pending>,
    restart_until: Option<SimTime>,
    window: VecDeque<SimTime>,
    generation: u64,
}

impl ReceiverState {
    pub fn is_restarting(&self, now: SimTime) -> bool {
        self.restart_until.is_some_and(|u| now < u)
    }

    pub fn busy(&self) -> bool {
        self.in_service.is_some()
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    /// Handle a frame that survived the channel.
    pub fn receiver_step(
        &mut self,
        now: SimTime,
        pkt: Pending,
        params: &ReceiverParams,
    ) -> ArrivalOutcome {
        if self.is_restarting(now) {
            return ArrivalOutcome::Dropped(Fate::RestartDrop);
        }
        if let Some(policy) = &params.restart {
            self.window.push_back(now);
            while self
                .window
                .front()
                .is_some_and(|&t| t + policy.window_ns <= now)
            {
                self.window.pop_front();
            }
            if policy.tripped(self.window.len()) {
                let mut flushed: Vec<u32> = self
                    .in_service
                    .take()
                    .into_iter()
                    .map(|p| p.beacon)
                    .collect();
                flushed.extend(self.queue.drain(..).map(|p| p.beacon));
                flushed.push(pkt.beacon);
                self.window.clear();
                self.generation += 1;
                let until = now + policy.duration_ns;
                self.restart_until = Some(until);
                return ArrivalOutcome::Restart { flushed, until };
            }
        }
        if self.in_service.is_none() {
            self.in_service = Some(pkt);
            return ArrivalOutcome::Serve {
                done_at: now + params.service_ns,
                generation: self.generation,
            };
        }
        if self.queue.len() < params.buffer_capacity {
            self.queue.push_back(pkt);
            return ArrivalOutcome::Queued;
        }
        ArrivalOutcome::Dropped(Fate::OverloadDrop)
    }

    /// Finish the frame in service. Returns it together with the completion
    /// time of the next queued frame, if one starts. Stale completions from
    /// before a restart return `None`.
    pub fn on_service_done(
        &mut self,
        now: SimTime,
        generation: u64,
        params: &ReceiverParams,
    ) -> Option<(Pending, Option<SimTime>)> {
        if generation != self.generation {
            return None;
        }
        let done = self.in_service.take()?;
        let next = self.queue.pop_front().map(|p| {
            self.in_service = Some(p);
            now + params.service_ns
        });
        Some((done, next))
    }

    pub fn on_restart_end(&mut self, now: SimTime) {
        if self.restart_until.is_some_and(|u| u <= now) {
            self.restart_until = None;
        }
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }
}

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneKey {
    pub tx: PlatformId,
    pub rx: PlatformId,
    pub distance_m: f64,
    pub payload: usize,
    pub repetition: u32,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic substream for `lane`, independent of every other lane
/// and of the order lanes are run in.
pub fn rng_stream(seed: u64, lane: &LaneKey) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for v in [
        lane.tx.index() as u64,
        lane.rx.index() as u64,
        lane.distance_m.to_bits(),
        lane.payload as u64,
        lane.repetition as u64,
    ] {
        h = splitmix64(h ^ v);
    }
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(h.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

#[derive(Debug, Clone)]
pub struct ReceiverSpec {
    pub platform: PlatformId,
    pub link: LinkSpec,
    pub params: ReceiverParams,
    pub rssi_bias_db: f64,
    pub rng: ChaCha8Rng,
}

/// A single transmitter run: `beacons` frames, `interval_ns` apart, each
/// on the air for `air_time_ns`.
#[derive(Debug, Clone)]
pub struct LaneSpec {
    pub beacons: u32,
    pub interval_ns: SimTime,
    pub air_time_ns: SimTime,
    pub receivers: Vec<ReceiverSpec>,
    pub rssi: RssiConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutcome {
    pub platform: PlatformId,
    pub fates: Vec<Fate>,
    pub received: u64,
    pub channel_drops: u64,
    pub overload_drops: u64,
    pub restart_drops: u64,
    pub restarts: u64,
    pub rssi_dbm_sum: f64,
    pub rssi_raw_sum: f64,
}

pub fn run_lane(spec: &LaneSpec) -> Result<Vec<ReceiverOutcome>, SimError> {
    let n = spec.beacons as usize;
    let mut rngs: Vec<ChaCha8Rng> = spec.receivers.iter().map(|r| r.rng.clone()).collect();
    let mut states = vec![ReceiverState::default(); spec.receivers.len()];
    let mut fates: Vec<Vec<Option<Fate>>> = vec![vec![None; n]; spec.receivers.len()];
    let mut out: Vec<ReceiverOutcome> = spec
        .receivers
        .iter()
        .map(|r| ReceiverOutcome {
            platform: r.platform,
            fates: Vec::new(),
            received: 0,
            channel_drops: 0,
            overload_drops: 0,
            restart_drops: 0,
            restarts: 0,
            rssi_dbm_sum: 0.0,
            rssi_raw_sum: 0.0,
        })
        .collect();

    let mut queue = BinaryHeap::new();
    let event = |time, kind, node, beacon| Event {
        time,
        kind,
        node,
        beacon,
        generation: 0,
        rssi_raw: 0,
    };
    if n > 0 {
        queue.push(event(0, EventKind::TxStart, 0, 0));
    }
    while let Some(ev) = queue.pop() {
        match ev.kind {
            EventKind::TxStart => {
                for (r, rx) in spec.receivers.iter().enumerate() {
                    let sample = sample_channel(&rx.link, &mut rngs[r])?;
                    if sample.lost {
                        fates[r][ev.beacon as usize] = Some(Fate::ChannelDrop);
                        continue;
                    }
                    let raw = encode_raw(
                        rx.platform,
                        RssiDbm(sample.rx_dbm.0 + rx.rssi_bias_db),
                        &spec.rssi,
                    );
                    queue.push(Event {
                        rssi_raw: raw.raw,
                        ..event(
                            ev.time + spec.air_time_ns,
                            EventKind::RxArrival,
                            r as u8 + 1,
                            ev.beacon,
                        )
                    });
                }
                if ev.beacon + 1 < spec.beacons {
                    queue.push(event(
                        ev.time + spec.interval_ns,
                        EventKind::TxStart,
                        0,
                        ev.beacon + 1,
                    ));
                }
            }
            EventKind::RxArrival => {
                let r = ev.node as usize - 1;
                let params = &spec.receivers[r].params;
                let pkt = Pending {
                    beacon: ev.beacon,
                    rssi_raw: ev.rssi_raw,
                };
                match states[r].receiver_step(ev.time, pkt, params) {
                    ArrivalOutcome::Serve {
                        done_at,
                        generation,
                    } => queue.push(Event {
                        generation,
                        ..event(done_at, EventKind::RxServiceDone, ev.node, ev.beacon)
                    }),
                    ArrivalOutcome::Queued => {}
                    ArrivalOutcome::Dropped(fate) => fates[r][ev.beacon as usize] = Some(fate),
                    ArrivalOutcome::Restart { flushed, until } => {
                        for b in flushed {
                            fates[r][b as usize] = Some(Fate::RestartDrop);
                        }
                        out[r].restarts += 1;
                        queue.push(event(until, EventKind::RestartEnd, ev.node, ev.beacon));
                    }
                }
            }
            EventKind::RxServiceDone => {
                let r = ev.node as usize - 1;
                let rx = &spec.receivers[r];
                if let Some((done, next)) =
                    states[r].on_service_done(ev.time, ev.generation, &rx.params)
                {
                    fates[r][done.beacon as usize] = Some(Fate::Received);
                    let raw = crate::rssi::RawRssiReading {
                        platform: rx.platform,
                        raw: done.rssi_raw,
                    };
                    out[r].rssi_dbm_sum += normalize(raw, &spec.rssi).0;
                    out[r].rssi_raw_sum += done.rssi_raw as f64;
                    if let Some(t) = next {
                        let beacon = states[r].in_service.expect("next frame in service").beacon;
                        queue.push(Event {
                            generation: ev.generation,
                            ..event(t, EventKind::RxServiceDone, ev.node, beacon)
                        });
                    }
                }
            }
            EventKind::RestartEnd => states[ev.node as usize - 1].on_restart_end(ev.time),
        }
    }

    for (r, o) in out.iter_mut().enumerate() {
        o.fates = fates[r]
            .iter()
            .map(|f| f.expect("every beacon has a fate once the queue drains"))
            .collect();
        for f in &o.fates {
            match f {
                Fate::Received => o.received += 1,
                Fate::ChannelDrop => o.channel_drops += 1,
                Fate::OverloadDrop => o.overload_drops += 1,
                Fate::RestartDrop => o.restart_drops += 1,
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub tx_platform: PlatformId,
    pub rx_platform: PlatformId,
    pub distance_m: f64,
    pub payload_bytes: usize,
    pub sent: u64,
    pub received: u64,
    pub rx_pps: f64,
    pub loss_pct: f64,
    pub rssi_mean_dbm: Option<f64>,
    pub rssi_raw_mean: Option<f64>,
    pub tx_pps: f64,
    pub channel_drops: u64,
    pub overload_drops: u64,
    pub restart_drops: u64,
}

impl MetricsRecord {
    pub fn drops(&self) -> u64 {
        self.channel_drops + self.overload_drops + self.restart_drops
    }
}

/// Octets on the air for a beacon of `payload` octets sent by `tx`.
pub fn air_frame_len(
    tx: PlatformId,
    payload: usize,
    cfg: &InteropConfig,
) -> Result<usize, SimError> {
    let src = cfg.node_addr(tx);
    let frame = MacFrame::short_data(0, cfg.pan_id, BROADCAST_ADDR, src, vec![0; payload]);
    let host = wrap(tx, &frame, cfg)?;
    let air = to_air(tx, &host, cfg, 0)?;
    debug_assert_eq!(air.len(), mac_frame_len(payload + DispatchPrefix::LEN));
    Ok(PHY_OVERHEAD + air.len())
}

fn lane_spec(
    sc: &Scenario,
    tx: PlatformId,
    distance_m: f64,
    payload: usize,
    repetition: u32,
) -> Result<LaneSpec, SimError> {
    let txp = sc.profiles.get(tx)?;
    let air_bytes = air_frame_len(tx, payload, &sc.interop)?;
    let air_time = air_bytes as f64 * crate::device::AIR_BYTE_TIME_S;
    let receivers = sc
        .receivers
        .iter()
        .map(|&rx| {
            let rxp = sc.profiles.get(rx)?;
            let service = rx_service_time(rxp, rx_host_bytes(rx, payload));
            Ok(ReceiverSpec {
                platform: rx,
                link: LinkSpec {
                    tx_power_dbm: txp.tx_power_dbm,
                    distance_m,
                    path_loss: sc.path_loss,
                    sensitivity_dbm: rxp.sensitivity_dbm,
                    margin_db: sc.per_margin_db,
                },
                params: ReceiverParams {
                    service_ns: secs_to_ns(service),
                    buffer_capacity: rxp.rx.buffer_capacity,
                    restart: rxp
                        .rx
                        .overload_pps_threshold
                        .map(|threshold_pps| RestartPolicy {
                            threshold_pps,
                            window_ns: secs_to_ns(sc.restart_window_s),
                            duration_ns: secs_to_ns(rxp.rx.restart_duration),
                        }),
                },
                rssi_bias_db: rxp.rssi_bias_db,
                rng: rng_stream(
                    sc.seed,
                    &LaneKey {
                        tx,
                        rx,
                        distance_m,
                        payload,
                        repetition,
                    },
                ),
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(LaneSpec {
        beacons: sc.beacons_per_run,
        interval_ns: secs_to_ns(txp.tx.interval(payload)),
        air_time_ns: secs_to_ns(air_time),
        receivers,
        rssi: sc.rssi,
    })
}

/// Run the full matrix. Records come out ordered by transmitter, receiver,
/// distance, then payload, each in scenario order.
pub fn run_scenario(sc: &Scenario) -> Result<Vec<MetricsRecord>, SimError> {
    sc.validate()?;
    let (nt, nr, nd, np) = (
        sc.transmitters.len(),
        sc.receivers.len(),
        sc.distances_m.len(),
        sc.payload_sizes.len(),
    );
    let reps = sc.repetitions as usize;
    let lanes: Vec<(usize, usize, usize, u32)> = (0..nt)
        .flat_map(|t| {
            (0..nd).flat_map(move |d| {
                (0..np).flat_map(move |p| (0..reps as u32).map(move |r| (t, d, p, r)))
            })
        })
        .collect();
    let results: Vec<Result<Vec<ReceiverOutcome>, SimError>> = lanes
        .par_iter()
        .map(|&(t, d, p, r)| {
            let spec = lane_spec(
                sc,
                sc.transmitters[t],
                sc.distances_m[d],
                sc.payload_sizes[p],
                r,
            )?;
            run_lane(&spec)
        })
        .collect();

    struct Acc {
        received: u64,
        channel: u64,
        overload: u64,
        restart: u64,
        dbm: f64,
        raw: f64,
    }
    let mut acc: Vec<Acc> = (0..nt * nr * nd * np)
        .map(|_| Acc {
            received: 0,
            channel: 0,
            overload: 0,
            restart: 0,
            dbm: 0.0,
            raw: 0.0,
        })
        .collect();
    for (&(t, d, p, _), res) in lanes.iter().zip(results) {
        for (r, o) in res?.into_iter().enumerate() {
            let a = &mut acc[((t * nr + r) * nd + d) * np + p];
            a.received += o.received;
            a.channel += o.channel_drops;
            a.overload += o.overload_drops;
            a.restart += o.restart_drops;
            a.dbm += o.rssi_dbm_sum;
            a.raw += o.rssi_raw_sum;
        }
    }

    let mut records = Vec::with_capacity(acc.len());
    for t in 0..nt {
        let tx = sc.transmitters[t];
        let txp = sc.profiles.get(tx)?;
        for r in 0..nr {
            for d in 0..nd {
                for p in 0..np {
                    let a = &acc[((t * nr + r) * nd + d) * np + p];
                    let payload = sc.payload_sizes[p];
                    let sent = sc.beacons_per_run as u64 * sc.repetitions as u64;
                    let interval = secs_to_ns(txp.tx.interval(payload)) as f64 * 1e-9;
                    let span = sent as f64 * interval;
                    let mean = |sum: f64| (a.received > 0).then(|| sum / a.received as f64);
                    records.push(MetricsRecord {
                        tx_platform: tx,
                        rx_platform: sc.receivers[r],
                        distance_m: sc.distances_m[d],
                        payload_bytes: payload,
                        sent,
                        received: a.received,
                        rx_pps: a.received as f64 / span,
                        loss_pct: 100.0 * (sent - a.received) as f64 / sent as f64,
                        rssi_mean_dbm: mean(a.dbm),
                        rssi_raw_mean: mean(a.raw),
                        tx_pps: 1.0 / interval,
                        channel_drops: a.channel,
                        overload_drops: a.overload,
                        restart_drops: a.restart,
                    });
                }
            }
        }
    }
    Ok(records)
}
