//! Scenario files, CSV artifacts, the findings checks and the codec
//! debugging tool behind the `hetnet` binary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceError, ProfileSet};
use crate::error::CodecError;
use crate::frame::{decode_frame, Address, AddressMode, FrameControl, MacFrame, BROADCAST_ADDR};
use crate::platform::{caps, wrap, xbee, Envelope, InteropConfig, PlatformId};
use crate::rssi::{PathLossModel, RssiConfig, RssiOffset};
use crate::sim::{run_scenario, MetricsRecord, Scenario, SimError};

use PlatformId::{ArduinoXBee, ISense, SunSpot, TelosB};

pub const METRICS_HEADER: [&str; 10] = [
    "tx_platform",
    "rx_platform",
    "distance_m",
    "payload_bytes",
    "sent",
    "received",
    "rx_pps",
    "loss_pct",
    "rssi_mean_dbm",
    "rssi_raw_mean",
];

pub const DROPS_HEADER: [&str; 8] = [
    "tx_platform",
    "rx_platform",
    "distance_m",
    "payload_bytes",
    "tx_pps",
    "channel_drops",
    "overload_drops",
    "restart_drops",
];

pub const METRICS_FILE: &str = "metrics.csv";
pub const DROPS_FILE: &str = "drops.csv";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot load profiles: {0}")]
    ProfileLoad(#[source] DeviceError),
    #[error("calibration failed: {0}")]
    Calibration(#[source] DeviceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("incomplete matrix: {0}")]
    IncompleteMatrix(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `x` with 6 significant digits, ties to even, trailing zeros dropped;
/// scientific notation outside 1e-4..1e6.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.5e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if x < 0.0 { "-" } else { "" };
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s
        }
    };
    if !(-4..6).contains(&exp) {
        let m = trim(format!("{}.{}", &digits[..1], &digits[1..]));
        return format!("{sign}{m}e{exp}");
    }
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{}", trim(body))
}

fn platform_list(v: &[PlatformId]) -> String {
    v.iter().map(|p| p.name()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: Option<u64>,
    pub transmitters: Option<Vec<PlatformId>>,
    pub receivers: Option<Vec<PlatformId>>,
    pub distances_m: Option<Vec<f64>>,
    pub payload_sizes: Option<Vec<usize>>,
    pub beacons_per_run: Option<u32>,
    pub repetitions: Option<u32>,
    pub per_margin_db: Option<f64>,
    pub restart_window_s: Option<f64>,
    pub rssi_offset_db: Option<f64>,
    /// Profile file, relative to the scenario file.
    pub profiles: Option<PathBuf>,
    /// Platforms whose restart behaviour is switched off.
    #[serde(default)]
    pub disable_restart: Vec<PlatformId>,
    pub path_loss: Option<PathLossModel>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut file = Self::parse(&text)?;
        if let Some(p) = &file.profiles {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                file.profiles = Some(base.join(p));
            }
        }
        Ok(file)
    }

    /// Fill a scenario from this file over the defaults.
    pub fn to_scenario(&self, profiles: ProfileSet) -> Scenario {
        let d = Scenario::default();
        let mut profiles = profiles;
        for p in &self.disable_restart {
            if let Some(profile) = profiles.get_mut(*p) {
                profile.rx.overload_pps_threshold = None;
            }
        }
        Scenario {
            transmitters: self.transmitters.clone().unwrap_or(d.transmitters),
            receivers: self.receivers.clone().unwrap_or(d.receivers),
            distances_m: self.distances_m.clone().unwrap_or(d.distances_m),
            payload_sizes: self.payload_sizes.clone().unwrap_or(d.payload_sizes),
            beacons_per_run: self.beacons_per_run.unwrap_or(d.beacons_per_run),
            repetitions: self.repetitions.unwrap_or(d.repetitions),
            seed: self.seed.unwrap_or(d.seed),
            path_loss: self.path_loss.unwrap_or(d.path_loss),
            per_margin_db: self.per_margin_db.unwrap_or(d.per_margin_db),
            restart_window_s: self.restart_window_s.unwrap_or(d.restart_window_s),
            profiles,
            interop: d.interop,
            rssi: self.rssi_offset_db.map_or(d.rssi, |o| RssiConfig {
                offset: RssiOffset(o),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    JsonLines,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "jsonl" | "json-lines" => Ok(ReportFormat::JsonLines),
            other => Err(HarnessError::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub scenario: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub profiles: Option<PathBuf>,
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellKey {
    pub tx: PlatformId,
    pub rx: PlatformId,
    pub distance_m: f64,
    pub payload_bytes: usize,
}

impl CellKey {
    fn of(r: &MetricsRecord) -> Self {
        CellKey {
            tx: r.tx_platform,
            rx: r.rx_platform,
            distance_m: r.distance_m,
            payload_bytes: r.payload_bytes,
        }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}->{}@{}m/{}B",
            self.tx,
            self.rx,
            fmt_sig(self.distance_m),
            self.payload_bytes
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindingCheck {
    pub id: &'static str,
    pub description: &'static str,
    pub status: CheckStatus,
    pub evaluated: Vec<CellKey>,
    pub offending: Vec<CellKey>,
}

impl FindingCheck {
    fn new(
        id: &'static str,
        description: &'static str,
        evaluated: Vec<CellKey>,
        offending: Vec<CellKey>,
    ) -> Self {
        let status = if evaluated.is_empty() || !offending.is_empty() {
            CheckStatus::Fail
        } else {
            CheckStatus::Pass
        };
        FindingCheck {
            id,
            description,
            status,
            evaluated,
            offending,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub fn text_line(&self) -> String {
        let status = if self.passed() { "pass" } else { "fail" };
        let mut line = format!(
            "{} {} cells={} offending={}",
            self.id,
            status,
            self.evaluated.len(),
            self.offending.len()
        );
        if let Some(first) = self.offending.first() {
            line.push_str(&format!(" first={first}"));
        }
        line
    }

    pub fn json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            id: &'a str,
            status: CheckStatus,
            description: &'a str,
            cells: usize,
            offending: &'a [CellKey],
        }
        serde_json::to_string(&Line {
            id: self.id,
            status: self.status,
            description: self.description,
            cells: self.evaluated.len(),
            offending: &self.offending,
        })
        .expect("serializable")
    }
}

pub const FAR_DISTANCE_M: f64 = 8.5;
pub const NEAR_DISTANCE_M: f64 = 1.0;
pub const LARGE_PAYLOAD: usize = 50;
pub const DECLINE_ONSET: usize = 28;
pub const ARDUINO_RESTART_PPS: f64 = 150.0;
pub const RATE_RATIO_BAND: (f64, f64) = (1.7, 2.3);

fn check_complete(records: &[MetricsRecord]) -> Result<(), HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::IncompleteMatrix("no records".into()));
    }
    let mut tx = BTreeSet::new();
    let mut rx = BTreeSet::new();
    let mut d = BTreeSet::new();
    let mut p = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for r in records {
        tx.insert(r.tx_platform);
        rx.insert(r.rx_platform);
        d.insert(r.distance_m.to_bits());
        p.insert(r.payload_bytes);
        if !seen.insert((
            r.tx_platform,
            r.rx_platform,
            r.distance_m.to_bits(),
            r.payload_bytes,
        )) {
            return Err(HarnessError::IncompleteMatrix(format!(
                "duplicate cell {}",
                CellKey::of(r)
            )));
        }
    }
    let expected = tx.len() * rx.len() * d.len() * p.len();
    if expected != records.len() {
        return Err(HarnessError::IncompleteMatrix(format!(
            "{} records for a {}x{}x{}x{} matrix",
            records.len(),
            tx.len(),
            rx.len(),
            d.len(),
            p.len()
        )));
    }
    Ok(())
}

/// Evaluate every findings check over a complete matrix.
pub fn check_findings(records: &[MetricsRecord]) -> Result<Vec<FindingCheck>, HarnessError> {
    check_complete(records)?;
    let keys =
        |it: &mut dyn Iterator<Item = &MetricsRecord>| it.map(CellKey::of).collect::<Vec<_>>();
    let find = |tx, rx, d: f64, p| {
        records.iter().find(|r| {
            r.tx_platform == tx && r.rx_platform == rx && r.distance_m == d && r.payload_bytes == p
        })
    };
    let mut checks = Vec::new();

    let cells: Vec<_> = records.iter().filter(|r| r.rx_platform == ISense).collect();
    checks.push(FindingCheck::new(
        "isense-lossless",
        "iSense receives every beacon from every sender at every distance and size",
        keys(&mut cells.iter().copied()),
        keys(&mut cells.iter().copied().filter(|r| r.loss_pct != 0.0)),
    ));

    let cells: Vec<_> = records
        .iter()
        .filter(|r| r.distance_m == FAR_DISTANCE_M && r.payload_bytes > LARGE_PAYLOAD)
        .filter(|r| !(r.tx_platform == ISense && r.rx_platform != ArduinoXBee))
        .collect();
    checks.push(FindingCheck::new(
        "arduino-far-loss",
        "at 8.5 m with payloads over 50 B only the Arduino loses more than half",
        keys(&mut cells.iter().copied()),
        keys(&mut cells.iter().copied().filter(|r| {
            if r.rx_platform == ArduinoXBee {
                r.loss_pct <= 50.0
            } else {
                r.loss_pct > 50.0
            }
        })),
    ));

    let cells: Vec<_> = records
        .iter()
        .filter(|r| r.tx_platform == ISense && r.distance_m == FAR_DISTANCE_M)
        .collect();
    checks.push(FindingCheck::new(
        "isense-tx-range",
        "at 8.5 m iSense beacons reach only iSense receivers",
        keys(&mut cells.iter().copied()),
        keys(&mut cells.iter().copied().filter(|r| {
            if r.rx_platform == ISense {
                r.loss_pct != 0.0
            } else {
                r.loss_pct != 100.0
            }
        })),
    ));

    // Broadcast rates, one value per (tx, payload).
    let mut rate: BTreeMap<(PlatformId, usize), f64> = BTreeMap::new();
    for r in records {
        rate.entry((r.tx_platform, r.payload_bytes))
            .or_insert(r.tx_pps);
    }
    let payloads: BTreeSet<usize> = records.iter().map(|r| r.payload_bytes).collect();
    let cells: Vec<_> = records
        .iter()
        .filter(|r| [TelosB, SunSpot, ISense].contains(&r.tx_platform))
        .collect();
    let sunspot_rates: Vec<f64> = payloads
        .iter()
        .filter_map(|p| rate.get(&(SunSpot, *p)).copied())
        .collect();
    let bad_rate = |r: &MetricsRecord| -> bool {
        let p = r.payload_bytes;
        match r.tx_platform {
            TelosB => match rate.get(&(SunSpot, p)) {
                Some(s) => {
                    let ratio = r.tx_pps / s;
                    ratio < RATE_RATIO_BAND.0 || ratio > RATE_RATIO_BAND.1
                }
                None => true,
            },
            SunSpot => sunspot_rates.iter().any(|&v| v != r.tx_pps),
            ISense => rate
                .iter()
                .any(|(&(tx, q), &v)| q == p && tx != ISense && v >= r.tx_pps),
            _ => false,
        }
    };
    checks.push(FindingCheck::new(
        "tx-rate-order",
        "TelosB broadcasts at about twice the SunSPOT rate, SunSPOT is flat, iSense is fastest",
        keys(&mut cells.iter().copied()),
        keys(&mut cells.iter().copied().filter(|r| bad_rate(r))),
    ));

    let mut decline: Vec<_> = records
        .iter()
        .filter(|r| {
            r.tx_platform == TelosB
                && r.rx_platform == ArduinoXBee
                && r.distance_m == NEAR_DISTANCE_M
                && r.payload_bytes >= DECLINE_ONSET
        })
        .collect();
    decline.sort_by_key(|r| r.payload_bytes);
    let mut evaluated = keys(&mut decline.iter().copied());
    let mut offending: Vec<CellKey> = decline
        .windows(2)
        .filter(|w| w[1].rx_pps > w[0].rx_pps)
        .map(|w| CellKey::of(w[1]))
        .collect();
    if let Some(top) = decline.last() {
        for other in PlatformId::ALL.into_iter().filter(|&p| p != ArduinoXBee) {
            if let Some(o) = find(TelosB, other, NEAR_DISTANCE_M, top.payload_bytes) {
                evaluated.push(CellKey::of(o));
                if top.rx_pps >= o.rx_pps {
                    offending.push(CellKey::of(o));
                }
            }
        }
    }
    checks.push(FindingCheck::new(
        "arduino-rx-decline",
        "under TelosB at 1 m the Arduino receive rate falls past 28 B and trails everyone at the largest size",
        evaluated,
        offending,
    ));

    checks.push(FindingCheck::new(
        "conservation",
        "every beacon is received or dropped for exactly one reason",
        keys(&mut records.iter()),
        keys(&mut records.iter().filter(|r| r.received + r.drops() != r.sent)),
    ));

    let cells: Vec<_> = records
        .iter()
        .filter(|r| {
            r.rx_platform == ArduinoXBee
                && r.tx_pps > ARDUINO_RESTART_PPS
                && 2 * r.channel_drops < r.sent
        })
        .collect();
    checks.push(FindingCheck::new(
        "arduino-restart",
        "senders above 150 pps drive a reachable Arduino into restarts",
        keys(&mut cells.iter().copied()),
        keys(&mut cells.iter().copied().filter(|r| r.restart_drops == 0)),
    ));

    let mut evaluated = Vec::new();
    let mut offending = Vec::new();
    for &p in &payloads {
        if let (Some(s), Some(a)) = (
            find(ISense, SunSpot, NEAR_DISTANCE_M, p),
            find(ISense, ArduinoXBee, NEAR_DISTANCE_M, p),
        ) {
            evaluated.push(CellKey::of(s));
            evaluated.push(CellKey::of(a));
            if s.loss_pct >= a.loss_pct {
                offending.push(CellKey::of(s));
            }
        }
    }
    checks.push(FindingCheck::new(
        "sunspot-buffering",
        "flooded by iSense at 1 m, the buffered SunSPOT loses less than the Arduino",
        evaluated,
        offending,
    ));

    Ok(checks)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn metrics_csv(records: &[MetricsRecord]) -> Vec<u8> {
    csv_bytes(
        &METRICS_HEADER,
        records.iter().map(|r| {
            vec![
                r.tx_platform.name().to_owned(),
                r.rx_platform.name().to_owned(),
                fmt_sig(r.distance_m),
                r.payload_bytes.to_string(),
                r.sent.to_string(),
                r.received.to_string(),
                fmt_sig(r.rx_pps),
                fmt_sig(r.loss_pct),
                opt(r.rssi_mean_dbm),
                opt(r.rssi_raw_mean),
            ]
        }),
    )
}

pub fn drops_csv(records: &[MetricsRecord]) -> Vec<u8> {
    csv_bytes(
        &DROPS_HEADER,
        records.iter().map(|r| {
            vec![
                r.tx_platform.name().to_owned(),
                r.rx_platform.name().to_owned(),
                fmt_sig(r.distance_m),
                r.payload_bytes.to_string(),
                fmt_sig(r.tx_pps),
                r.channel_drops.to_string(),
                r.overload_drops.to_string(),
                r.restart_drops.to_string(),
            ]
        }),
    )
}

fn parse_field<T: FromStr>(s: &str, what: &str) -> Result<T, HarnessError> {
    s.parse()
        .map_err(|_| HarnessError::Parse(format!("bad {what} {s:?}")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>, HarnessError> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(s, what).map(Some)
    }
}

fn read_rows(text: &[u8], header: &[&str]) -> Result<Vec<csv::StringRecord>, HarnessError> {
    let mut rd = csv::Reader::from_reader(text);
    let got = rd
        .headers()
        .map_err(|e| HarnessError::Parse(e.to_string()))?;
    if got.iter().ne(header.iter().copied()) {
        return Err(HarnessError::Parse(format!("unexpected header {got:?}")));
    }
    rd.records()
        .map(|r| r.map_err(|e| HarnessError::Parse(e.to_string())))
        .collect()
}

/// Rebuild records from `metrics.csv` and `drops.csv` contents.
pub fn parse_records(metrics: &[u8], drops: &[u8]) -> Result<Vec<MetricsRecord>, HarnessError> {
    let m = read_rows(metrics, &METRICS_HEADER)?;
    let d = read_rows(drops, &DROPS_HEADER)?;
    if m.len() != d.len() {
        return Err(HarnessError::Parse(format!(
            "{} metrics rows but {} drops rows",
            m.len(),
            d.len()
        )));
    }
    m.iter()
        .zip(&d)
        .map(|(m, d)| {
            if m.iter().take(4).ne(d.iter().take(4)) {
                return Err(HarnessError::Parse(
                    "metrics and drops rows disagree".into(),
                ));
            }
            let platform = |s: &str| {
                s.parse::<PlatformId>()
                    .map_err(|e| HarnessError::Parse(e.to_string()))
            };
            Ok(MetricsRecord {
                tx_platform: platform(&m[0])?,
                rx_platform: platform(&m[1])?,
                distance_m: parse_field(&m[2], "distance")?,
                payload_bytes: parse_field(&m[3], "payload")?,
                sent: parse_field(&m[4], "sent")?,
                received: parse_field(&m[5], "received")?,
                rx_pps: parse_field(&m[6], "rx_pps")?,
                loss_pct: parse_field(&m[7], "loss_pct")?,
                rssi_mean_dbm: parse_opt(&m[8], "rssi_mean_dbm")?,
                rssi_raw_mean: parse_opt(&m[9], "rssi_raw_mean")?,
                tx_pps: parse_field(&d[4], "tx_pps")?,
                channel_drops: parse_field(&d[5], "channel_drops")?,
                overload_drops: parse_field(&d[6], "overload_drops")?,
                restart_drops: parse_field(&d[7], "restart_drops")?,
            })
        })
        .collect()
}

pub fn read_records(dir: &Path) -> Result<Vec<MetricsRecord>, HarnessError> {
    let m = dir.join(METRICS_FILE);
    let d = dir.join(DROPS_FILE);
    let metrics = std::fs::read(&m).map_err(io_err(&m))?;
    let drops = std::fs::read(&d).map_err(io_err(&d))?;
    parse_records(&metrics, &drops)
}

pub fn findings_report(checks: &[FindingCheck], format: ReportFormat) -> String {
    let mut out = String::new();
    for c in checks {
        out.push_str(&match format {
            ReportFormat::Text => c.text_line(),
            ReportFormat::JsonLines => c.json_line(),
        });
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotAxis {
    Pps,
    Loss,
    Rssi,
}

impl FromStr for PlotAxis {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pps" => Ok(PlotAxis::Pps),
            "loss" => Ok(PlotAxis::Loss),
            "rssi" => Ok(PlotAxis::Rssi),
            other => Err(HarnessError::Config(format!("unknown axis {other:?}"))),
        }
    }
}

impl PlotAxis {
    fn name(self) -> &'static str {
        match self {
            PlotAxis::Pps => "pps",
            PlotAxis::Loss => "loss",
            PlotAxis::Rssi => "rssi",
        }
    }
}

/// One figure panel: rows are payload sizes, columns are (tx, rx) series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub name: String,
    pub distance_m: f64,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl PlotTable {
    pub fn to_csv(&self) -> Vec<u8> {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        csv_bytes(&header, self.rows.iter().cloned())
    }
}

/// Tables for `axis`, one per distance. `receivers` narrows the series.
pub fn export_plotdata(
    records: &[MetricsRecord],
    axis: PlotAxis,
    receivers: Option<&[PlatformId]>,
) -> Result<Vec<PlotTable>, HarnessError> {
    check_complete(records)?;
    let mut txs = Vec::new();
    let mut rxs = Vec::new();
    let mut distances = Vec::new();
    let mut payloads = Vec::new();
    for r in records {
        if !txs.contains(&r.tx_platform) {
            txs.push(r.tx_platform);
        }
        if !rxs.contains(&r.rx_platform) && receivers.is_none_or(|f| f.contains(&r.rx_platform)) {
            rxs.push(r.rx_platform);
        }
        if !distances.contains(&r.distance_m) {
            distances.push(r.distance_m);
        }
        if !payloads.contains(&r.payload_bytes) {
            payloads.push(r.payload_bytes);
        }
    }
    payloads.sort_unstable();
    let index: BTreeMap<_, _> = records
        .iter()
        .map(|r| {
            (
                (
                    r.tx_platform,
                    r.rx_platform,
                    r.distance_m.to_bits(),
                    r.payload_bytes,
                ),
                r,
            )
        })
        .collect();

    let mut tables = Vec::new();
    for &d in &distances {
        let mut header = vec!["payload_bytes".to_owned()];
        for &tx in &txs {
            for &rx in &rxs {
                match axis {
                    PlotAxis::Rssi => {
                        header.push(format!("{tx}>{rx}:dbm"));
                        header.push(format!("{tx}>{rx}:raw"));
                    }
                    _ => header.push(format!("{tx}>{rx}")),
                }
            }
        }
        let rows = payloads
            .iter()
            .map(|&p| {
                let mut row = vec![p.to_string()];
                for &tx in &txs {
                    for &rx in &rxs {
                        let r = index[&(tx, rx, d.to_bits(), p)];
                        match axis {
                            PlotAxis::Pps => row.push(fmt_sig(r.rx_pps)),
                            PlotAxis::Loss => row.push(fmt_sig(r.loss_pct)),
                            PlotAxis::Rssi => {
                                row.push(opt(r.rssi_mean_dbm));
                                row.push(opt(r.rssi_raw_mean));
                            }
                        }
                    }
                }
                row
            })
            .collect();
        tables.push(PlotTable {
            name: format!("{}_{}m.csv", axis.name(), fmt_sig(d)),
            distance_m: d,
            header,
            rows,
        });
    }
    Ok(tables)
}

/// Frame fields accepted by `codec encode` and printed by `codec decode`,
/// as whitespace-separated `key=value` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodecFields {
    pub seq: Option<u8>,
    pub pan: Option<u16>,
    pub dest: Option<u16>,
    pub src: Option<u16>,
    pub ack: Option<bool>,
    pub panc: Option<bool>,
    pub payload: Vec<u8>,
}

fn parse_hex_u16(s: &str) -> Result<u16, HarnessError> {
    let t = s.trim_start_matches("0x");
    u16::from_str_radix(t, 16).map_err(|_| HarnessError::Parse(format!("bad 16-bit hex {s:?}")))
}

fn parse_bool(s: &str) -> Result<bool, HarnessError> {
    match s {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(HarnessError::Parse(format!("bad flag {s:?}"))),
    }
}

impl FromStr for CodecFields {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = CodecFields::default();
        for tok in s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| HarnessError::Parse(format!("expected key=value, got {tok:?}")))?;
            match k {
                "seq" => {
                    f.seq = Some(
                        if let Some(h) = v.strip_prefix("0x") {
                            u8::from_str_radix(h, 16)
                        } else {
                            v.parse()
                        }
                        .map_err(|_| HarnessError::Parse(format!("bad seq {v:?}")))?,
                    )
                }
                "pan" => f.pan = Some(parse_hex_u16(v)?),
                "dest" => f.dest = Some(parse_hex_u16(v)?),
                "src" => f.src = Some(parse_hex_u16(v)?),
                "ack" => f.ack = Some(parse_bool(v)?),
                "panc" => f.panc = Some(parse_bool(v)?),
                "payload" => {
                    f.payload =
                        hex::decode(v).map_err(|e| HarnessError::Parse(format!("payload: {e}")))?
                }
                // Informational keys printed by decode.
                "envelope" | "fcs" | "checksum" | "dispatch" | "frame_id" | "rssi" => {}
                other => return Err(HarnessError::Parse(format!("unknown field {other:?}"))),
            }
        }
        Ok(f)
    }
}

/// Result of `codec decode`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodecDump {
    pub envelope: &'static str,
    pub fields: CodecFields,
    /// Extra lines such as `checksum=ok`.
    pub notes: Vec<(String, String)>,
}

impl fmt::Display for CodecDump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "envelope={}", self.envelope)?;
        for (k, v) in &self.notes {
            writeln!(f, "{k}={v}")?;
        }
        let c = &self.fields;
        if let Some(v) = c.seq {
            writeln!(f, "seq={v}")?;
        }
        if let Some(v) = c.pan {
            writeln!(f, "pan={v:04x}")?;
        }
        if let Some(v) = c.dest {
            writeln!(f, "dest={v:04x}")?;
        }
        if let Some(v) = c.src {
            writeln!(f, "src={v:04x}")?;
        }
        if let Some(v) = c.ack {
            writeln!(f, "ack={}", v as u8)?;
        }
        if let Some(v) = c.panc {
            writeln!(f, "panc={}", v as u8)?;
        }
        writeln!(f, "payload={}", hex::encode(&c.payload))
    }
}

/// Build the host-side bytes `platform` would emit for `fields`.
pub fn codec_encode(
    platform: PlatformId,
    fields: &CodecFields,
    cfg: &InteropConfig,
) -> Result<String, HarnessError> {
    let panc = fields.panc.unwrap_or(cfg.pan_id_compression);
    let pan = fields.pan.unwrap_or(cfg.pan_id);
    let mut fc = FrameControl::data(AddressMode::Short16, AddressMode::Short16);
    fc.ack_request = fields.ack.unwrap_or(false);
    fc.pan_id_compression = panc;
    let frame = MacFrame {
        fc,
        seq: fields.seq.unwrap_or(0),
        dest_pan: pan,
        dest: Address::Short(fields.dest.unwrap_or(BROADCAST_ADDR)),
        src_pan: (!panc).then_some(pan),
        src: Address::Short(fields.src.unwrap_or(cfg.node_addr(platform))),
        payload: fields.payload.clone(),
    };
    Ok(hex::encode(wrap(platform, &frame, cfg)?))
}

/// Decode host-side or air bytes for `platform`, verifying the envelope
/// checksum or FCS and the dispatch prefix.
pub fn codec_decode(
    platform: PlatformId,
    hex_in: &str,
    cfg: &InteropConfig,
) -> Result<CodecDump, HarnessError> {
    let cleaned: String = hex_in.chars().filter(|c| !c.is_whitespace()).collect();
    let bytes = hex::decode(&cleaned).map_err(|e| HarnessError::Parse(format!("hex: {e}")))?;
    let note = |k: &str, v: String| (k.to_owned(), v);
    if caps(platform).envelope == Envelope::XBeeApi && bytes.first() == Some(&xbee::START) {
        return match xbee::ApiFrame::parse(&bytes)? {
            xbee::ApiFrame::Tx16(req) => {
                let payload = cfg.dispatch.strip(&req.data)?.to_vec();
                let unicast = req.dest != BROADCAST_ADDR;
                Ok(CodecDump {
                    envelope: "xbee-tx16",
                    fields: CodecFields {
                        dest: Some(req.dest),
                        ack: Some(unicast && req.options & xbee::TX_OPT_DISABLE_ACK == 0),
                        payload,
                        ..CodecFields::default()
                    },
                    notes: vec![
                        note("checksum", "ok".into()),
                        note("dispatch", "ok".into()),
                        note("frame_id", req.frame_id.to_string()),
                    ],
                })
            }
            xbee::ApiFrame::Rx16(ind) => {
                let payload = cfg.dispatch.strip(&ind.data)?.to_vec();
                Ok(CodecDump {
                    envelope: "xbee-rx16",
                    fields: CodecFields {
                        src: Some(ind.src),
                        payload,
                        ..CodecFields::default()
                    },
                    notes: vec![
                        note("checksum", "ok".into()),
                        note("dispatch", "ok".into()),
                        note("rssi", format!("-{}", ind.rssi)),
                    ],
                })
            }
        };
    }
    let frame = decode_frame(&bytes)?;
    let payload = cfg.dispatch.strip(&frame.payload)?.to_vec();
    let short = |a: Address| match a {
        Address::Short(v) => Ok(v),
        Address::Extended(_) => Err(CodecError::AddressingUnsupported {
            platform,
            mode: AddressMode::Extended64,
        }),
    };
    Ok(CodecDump {
        envelope: "mac",
        fields: CodecFields {
            seq: Some(frame.seq),
            pan: Some(frame.dest_pan),
            dest: Some(short(frame.dest)?),
            src: Some(short(frame.src)?),
            ack: Some(frame.fc.ack_request),
            panc: Some(frame.fc.pan_id_compression),
            payload,
        },
        notes: vec![note("fcs", "ok".into()), note("dispatch", "ok".into())],
    })
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<MetricsRecord>,
    pub checks: Vec<FindingCheck>,
    pub report: String,
}

impl RunSummary {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(FindingCheck::passed)
    }
}

pub fn load_profiles(path: Option<&Path>) -> Result<ProfileSet, HarnessError> {
    match path {
        Some(p) => ProfileSet::load(p).map_err(HarnessError::ProfileLoad),
        None => Ok(ProfileSet::default_calibrated()),
    }
}

/// Resolve the scenario a run config describes.
pub fn resolve_scenario(config: &RunConfig) -> Result<Scenario, HarnessError> {
    let file = match &config.scenario {
        Some(p) => ScenarioFile::load(p)?,
        None => ScenarioFile::default(),
    };
    let profile_path = config.profiles.as_deref().or(file.profiles.as_deref());
    let mut sc = file.to_scenario(load_profiles(profile_path)?);
    if let Some(seed) = config.seed {
        sc.seed = seed;
    }
    Ok(sc)
}

pub fn findings_file(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Text => "findings.txt",
        ReportFormat::JsonLines => "findings.jsonl",
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Run the matrix and write `metrics.csv`, `drops.csv` and the findings
/// report into `config.out`.
pub fn run(config: &RunConfig) -> Result<RunSummary, HarnessError> {
    let sc = resolve_scenario(config)?;
    let records = run_scenario(&sc)?;
    std::fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
    write(&config.out.join(METRICS_FILE), &metrics_csv(&records))?;
    write(&config.out.join(DROPS_FILE), &drops_csv(&records))?;
    let checks = check_findings(&records)?;
    let report = findings_report(&checks, config.format);
    write(
        &config.out.join(findings_file(config.format)),
        report.as_bytes(),
    )?;
    Ok(RunSummary {
        records,
        checks,
        report,
    })
}

/// Write plot tables for `axis` under `dir`.
pub fn write_plotdata(dir: &Path, tables: &[PlotTable]) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(&t.name);
        write(&path, &t.to_csv())?;
        written.push(path);
    }
    Ok(written)
}

/// Describe the resolved scenario in one line.
pub fn scenario_summary(sc: &Scenario) -> String {
    format!(
        "tx=[{}] rx=[{}] distances={} payloads={} beacons={} reps={} seed={}",
        platform_list(&sc.transmitters),
        platform_list(&sc.receivers),
        sc.distances_m.len(),
        sc.payload_sizes.len(),
        sc.beacons_per_run,
        sc.repetitions,
        sc.seed
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(8.5), "8.5");
        assert_eq!(fmt_sig(100.0), "100");
        assert_eq!(fmt_sig(103.6023), "103.602");
        assert_eq!(fmt_sig(-65.0943109943), "-65.0943");
        assert_eq!(fmt_sig(123456.5), "123456");
        assert_eq!(fmt_sig(123457.5), "123458");
        assert_eq!(fmt_sig(0.125), "0.125");
        assert_eq!(fmt_sig(1234565.0), "1.23456e6");
        assert_eq!(fmt_sig(0.000012345678), "1.23457e-5");
        assert_eq!(fmt_sig(0.00012345678), "0.000123457");
        assert_eq!(fmt_sig(999999.5), "1e6");
        assert_eq!(fmt_sig(33.333333333), "33.3333");
    }

    #[test]
    fn codec_fields_parse() {
        let f: CodecFields = "seq=0x09 dest=ffff src=0001 pan=1234 ack=0 payload=0102"
            .parse()
            .unwrap();
        assert_eq!(f.seq, Some(9));
        assert_eq!(f.dest, Some(0xFFFF));
        assert_eq!(f.payload, vec![1, 2]);
        assert!(matches!(
            "seq=300".parse::<CodecFields>(),
            Err(HarnessError::Parse(_))
        ));
        assert!(matches!(
            "bogus=1".parse::<CodecFields>(),
            Err(HarnessError::Parse(_))
        ));
        assert!(matches!(
            "payload=0g".parse::<CodecFields>(),
            Err(HarnessError::Parse(_))
        ));
    }

    #[test]
    fn empty_records_incomplete() {
        assert!(matches!(
            check_findings(&[]),
            Err(HarnessError::IncompleteMatrix(_))
        ));
        assert!(matches!(
            export_plotdata(&[], PlotAxis::Pps, None),
            Err(HarnessError::IncompleteMatrix(_))
        ));
    }

    #[test]
    fn scenario_file_rejects_unknown_keys() {
        assert!(matches!(
            ScenarioFile::parse("speed = 3"),
            Err(HarnessError::Config(_))
        ));
        let f = ScenarioFile::parse("distances_m = [1.0]\ndisable_restart = [\"arduino-xbee\"]")
            .unwrap();
        let sc = f.to_scenario(ProfileSet::default_calibrated());
        assert_eq!(sc.distances_m, vec![1.0]);
        assert_eq!(
            sc.profiles
                .get(ArduinoXBee)
                .unwrap()
                .rx
                .overload_pps_threshold,
            None
        );
    }
}
