//! C ABI over the `hetnet` crate.
//!
//! Every fallible call returns a [`HetnetStatus`]; the message of the most
//! recent failure on the calling thread is available from
//! [`hetnet_last_error`]. Frames and simulations are opaque handles that
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hetnet::frame::{crc16, Address, MacFrame, BROADCAST_ADDR};
use hetnet::harness::{self, HarnessError, RunConfig};
use hetnet::platform::{self, InteropConfig, PlatformId};
use hetnet::rssi::{self, RawRssiReading, RssiConfig, RssiDbm, RssiOffset};
use hetnet::sim::{run_scenario, MetricsRecord, Scenario, SimError};
use hetnet::CodecError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HetnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    PayloadTooLarge = 4,
    TruncatedFrame = 5,
    BadFcs = 6,
    DispatchMismatch = 7,
    BadChecksum = 8,
    Unsupported = 9,
    Malformed = 10,
    InvalidScenario = 11,
    Io = 12,
    NotRun = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HetnetPlatform {
    ArduinoXbee = 0,
    Sunspot = 1,
    Telosb = 2,
    Isense = 3,
}

impl From<HetnetPlatform> for PlatformId {
    fn from(p: HetnetPlatform) -> Self {
        match p {
            HetnetPlatform::ArduinoXbee => PlatformId::ArduinoXBee,
            HetnetPlatform::Sunspot => PlatformId::SunSpot,
            HetnetPlatform::Telosb => PlatformId::TelosB,
            HetnetPlatform::Isense => PlatformId::ISense,
        }
    }
}

impl From<PlatformId> for HetnetPlatform {
    fn from(p: PlatformId) -> Self {
        match p {
            PlatformId::ArduinoXBee => HetnetPlatform::ArduinoXbee,
            PlatformId::SunSpot => HetnetPlatform::Sunspot,
            PlatformId::TelosB => HetnetPlatform::Telosb,
            PlatformId::ISense => HetnetPlatform::Isense,
        }
    }
}

/// One row of simulation output. Absent RSSI means are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HetnetMetrics {
    pub tx_platform: HetnetPlatform,
    pub rx_platform: HetnetPlatform,
    pub distance_m: f64,
    pub payload_bytes: u32,
    pub sent: u64,
    pub received: u64,
    pub rx_pps: f64,
    pub loss_pct: f64,
    pub rssi_mean_dbm: f64,
    pub rssi_raw_mean: f64,
    pub tx_pps: f64,
    pub channel_drops: u64,
    pub overload_drops: u64,
    pub restart_drops: u64,
}

impl From<&MetricsRecord> for HetnetMetrics {
    fn from(r: &MetricsRecord) -> Self {
        HetnetMetrics {
            tx_platform: r.tx_platform.into(),
            rx_platform: r.rx_platform.into(),
            distance_m: r.distance_m,
            payload_bytes: r.payload_bytes as u32,
            sent: r.sent,
            received: r.received,
            rx_pps: r.rx_pps,
            loss_pct: r.loss_pct,
            rssi_mean_dbm: r.rssi_mean_dbm.unwrap_or(f64::NAN),
            rssi_raw_mean: r.rssi_raw_mean.unwrap_or(f64::NAN),
            tx_pps: r.tx_pps,
            channel_drops: r.channel_drops,
            overload_drops: r.overload_drops,
            restart_drops: r.restart_drops,
        }
    }
}

/// A logical MAC frame; the payload excludes the dispatch prefix.
pub struct HetnetFrame {
    frame: MacFrame,
}

pub struct HetnetSim {
    scenario: Scenario,
    records: Option<Vec<MetricsRecord>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(HetnetStatus, String);

impl Failure {
    fn new(status: HetnetStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        let status = match e {
            CodecError::PayloadTooLarge { .. } => HetnetStatus::PayloadTooLarge,
            CodecError::TruncatedFrame { .. } => HetnetStatus::TruncatedFrame,
            CodecError::BadFcs { .. } => HetnetStatus::BadFcs,
            CodecError::DispatchMismatch => HetnetStatus::DispatchMismatch,
            CodecError::BadChecksum { .. } => HetnetStatus::BadChecksum,
            CodecError::UnsupportedFrameType(_) | CodecError::AddressingUnsupported { .. } => {
                HetnetStatus::Unsupported
            }
            CodecError::InconsistentAddressing
            | CodecError::MalformedApiFrame(_)
            | CodecError::AckOnBroadcast => HetnetStatus::Malformed,
        };
        Failure(status, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Codec(c) => c.into(),
            other => Failure(HetnetStatus::InvalidScenario, other.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Sim(s) => s.into(),
            HarnessError::Codec(c) => c.into(),
            HarnessError::Io { .. } => Failure(HetnetStatus::Io, e.to_string()),
            HarnessError::ProfileLoad(ref d)
                if matches!(d, hetnet::device::DeviceError::Io { .. }) =>
            {
                Failure(HetnetStatus::Io, e.to_string())
            }
            other => Failure(HetnetStatus::InvalidScenario, other.to_string()),
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HetnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HetnetStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HetnetStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure::new(HetnetStatus::NullPointer, "null pointer argument")
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn path(s: *const c_char) -> Result<Option<PathBuf>, Failure> {
    if s.is_null() {
        return Ok(None);
    }
    let s = CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::new(HetnetStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(Some(PathBuf::from(s)))
}

/// Copy `src` into the caller's buffer. `out_len` always receives the
/// full length, so a too-small buffer tells the caller what to allocate.
unsafe fn emit(src: &[u8], buf: *mut u8, cap: usize, out_len: *mut usize) -> Result<(), Failure> {
    if out_len.is_null() {
        return Err(null());
    }
    *out_len = src.len();
    if src.len() > cap {
        return Err(Failure::new(
            HetnetStatus::BufferTooSmall,
            format!("need {} octets, buffer holds {cap}", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Static description of a status code. Never NULL.
#[no_mangle]
pub extern "C" fn hetnet_status_str(status: HetnetStatus) -> *const c_char {
    let s: &'static CStr = match status {
        HetnetStatus::Ok => c"ok",
        HetnetStatus::NullPointer => c"null pointer",
        HetnetStatus::InvalidArgument => c"invalid argument",
        HetnetStatus::BufferTooSmall => c"buffer too small",
        HetnetStatus::PayloadTooLarge => c"payload too large",
        HetnetStatus::TruncatedFrame => c"truncated frame",
        HetnetStatus::BadFcs => c"bad FCS",
        HetnetStatus::DispatchMismatch => c"dispatch prefix mismatch",
        HetnetStatus::BadChecksum => c"bad XBee API checksum",
        HetnetStatus::Unsupported => c"unsupported frame or addressing",
        HetnetStatus::Malformed => c"malformed frame",
        HetnetStatus::InvalidScenario => c"invalid scenario or profile",
        HetnetStatus::Io => c"I/O error",
        HetnetStatus::NotRun => c"simulation has not been run",
        HetnetStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hetnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// CRC-16/KERMIT as used for the 802.15.4 FCS.
///
/// # Safety
/// `data` must point to `len` readable octets (or `len` must be 0).
#[no_mangle]
pub unsafe extern "C" fn hetnet_crc16(data: *const u8, len: usize) -> u16 {
    match bytes(data, len) {
        Ok(b) => crc16(b),
        Err(_) => 0,
    }
}

/// dBm for a raw RSSI octet reported by `platform`.
#[no_mangle]
pub extern "C" fn hetnet_rssi_normalize(platform: HetnetPlatform, raw: u8, offset_db: f64) -> f64 {
    let cfg = RssiConfig {
        offset: RssiOffset(offset_db),
    };
    rssi::normalize(
        RawRssiReading {
            platform: platform.into(),
            raw,
        },
        &cfg,
    )
    .value()
}

/// Raw octet `platform` would report for `dbm`.
#[no_mangle]
pub extern "C" fn hetnet_rssi_encode(platform: HetnetPlatform, dbm: f64, offset_db: f64) -> u8 {
    let cfg = RssiConfig {
        offset: RssiOffset(offset_db),
    };
    rssi::encode_raw(platform.into(), RssiDbm(dbm), &cfg).raw
}

/// Broadcast beacon from `tx` under the default interop settings.
///
/// # Safety
/// `payload` must point to `len` readable octets; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_frame_new_beacon(
    tx: HetnetPlatform,
    seq: u8,
    payload: *const u8,
    len: usize,
    out: *mut *mut HetnetFrame,
) -> HetnetStatus {
    guard(|| {
        let cfg = InteropConfig::default();
        let payload = bytes(payload, len)?.to_vec();
        platform::validate_payload_with(tx.into(), payload.len(), &cfg)?;
        let frame = MacFrame::short_data(
            seq,
            cfg.pan_id,
            BROADCAST_ADDR,
            cfg.node_addr(tx.into()),
            payload,
        );
        store(out, HetnetFrame { frame })
    })
}

/// Host-side bytes `platform` emits for `frame`.
///
/// # Safety
/// `frame` must be a live handle; `buf` must hold `cap` writable octets;
/// `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_frame_wrap(
    frame: *const HetnetFrame,
    platform: HetnetPlatform,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> HetnetStatus {
    guard(|| {
        let frame = frame.as_ref().ok_or_else(null)?;
        let host = platform::wrap(platform.into(), &frame.frame, &InteropConfig::default())?;
        emit(&host, buf, cap, out_len)
    })
}

/// Air frame the radio of `platform` sends for host bytes from
/// [`hetnet_frame_wrap`].
///
/// # Safety
/// As for [`hetnet_frame_wrap`]; `host` must point to `len` octets.
#[no_mangle]
pub unsafe extern "C" fn hetnet_to_air(
    platform: HetnetPlatform,
    host: *const u8,
    len: usize,
    seq: u8,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> HetnetStatus {
    guard(|| {
        let air = platform::to_air(
            platform.into(),
            bytes(host, len)?,
            &InteropConfig::default(),
            seq,
        )?;
        emit(&air, buf, cap, out_len)
    })
}

/// What the radio of `platform` hands its host for an air frame.
///
/// # Safety
/// As for [`hetnet_to_air`].
#[no_mangle]
pub unsafe extern "C" fn hetnet_from_air(
    platform: HetnetPlatform,
    air: *const u8,
    len: usize,
    rssi_raw: u8,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> HetnetStatus {
    guard(|| {
        let host = platform::from_air(platform.into(), bytes(air, len)?, rssi_raw)?;
        emit(&host, buf, cap, out_len)
    })
}

/// Decode bytes received by `platform` into a new frame handle.
///
/// # Safety
/// `data` must point to `len` readable octets; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_frame_unwrap(
    platform: HetnetPlatform,
    data: *const u8,
    len: usize,
    out: *mut *mut HetnetFrame,
) -> HetnetStatus {
    guard(|| {
        let frame = platform::unwrap(
            platform.into(),
            bytes(data, len)?,
            &InteropConfig::default(),
        )?;
        store(out, HetnetFrame { frame })
    })
}

/// # Safety
/// `frame` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hetnet_frame_seq(frame: *const HetnetFrame) -> u8 {
    frame.as_ref().map_or(0, |f| f.frame.seq)
}

/// Short source address, or 0xFFFF if the handle is NULL or extended.
///
/// # Safety
/// `frame` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hetnet_frame_src(frame: *const HetnetFrame) -> u16 {
    match frame.as_ref().map(|f| f.frame.src) {
        Some(Address::Short(a)) => a,
        _ => BROADCAST_ADDR,
    }
}

/// Borrowed view of the payload, valid while the handle lives.
///
/// # Safety
/// `frame` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_frame_payload(
    frame: *const HetnetFrame,
    out_len: *mut usize,
) -> *const u8 {
    let (Some(f), false) = (frame.as_ref(), out_len.is_null()) else {
        return ptr::null();
    };
    *out_len = f.frame.payload.len();
    f.frame.payload.as_ptr()
}

/// # Safety
/// `frame` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hetnet_frame_free(frame: *mut HetnetFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// New simulation. `scenario_path` and `profiles_path` may each be NULL
/// for the built-in defaults.
///
/// # Safety
/// Non-NULL paths must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_sim_new(
    scenario_path: *const c_char,
    profiles_path: *const c_char,
    out: *mut *mut HetnetSim,
) -> HetnetStatus {
    guard(|| {
        let config = RunConfig {
            scenario: path(scenario_path)?,
            profiles: path(profiles_path)?,
            out: PathBuf::new(),
            seed: None,
            format: Default::default(),
        };
        let scenario = harness::resolve_scenario(&config)?;
        scenario.validate()?;
        store(
            out,
            HetnetSim {
                scenario,
                records: None,
            },
        )
    })
}

/// Override seed, beacons per run and repetitions. Zero leaves the last
/// two unchanged. Discards earlier results.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hetnet_sim_configure(
    sim: *mut HetnetSim,
    seed: u64,
    beacons_per_run: u32,
    repetitions: u32,
) -> HetnetStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(null)?;
        sim.scenario.seed = seed;
        if beacons_per_run > 0 {
            sim.scenario.beacons_per_run = beacons_per_run;
        }
        if repetitions > 0 {
            sim.scenario.repetitions = repetitions;
        }
        sim.records = None;
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hetnet_sim_run(sim: *mut HetnetSim) -> HetnetStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(null)?;
        sim.records = Some(run_scenario(&sim.scenario)?);
        Ok(())
    })
}

/// Number of result rows; 0 before a successful run.
///
/// # Safety
/// `sim` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hetnet_sim_record_count(sim: *const HetnetSim) -> usize {
    sim.as_ref()
        .and_then(|s| s.records.as_ref())
        .map_or(0, Vec::len)
}

/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hetnet_sim_record(
    sim: *const HetnetSim,
    index: usize,
    out: *mut HetnetMetrics,
) -> HetnetStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        let records = sim
            .records
            .as_ref()
            .ok_or_else(|| Failure::new(HetnetStatus::NotRun, "run the simulation first"))?;
        let r = records.get(index).ok_or_else(|| {
            Failure::new(
                HetnetStatus::InvalidArgument,
                format!("record {index} out of {}", records.len()),
            )
        })?;
        *out = r.into();
        Ok(())
    })
}

/// Write `metrics.csv` and `drops.csv` into `dir`, creating it.
///
/// # Safety
/// `sim` must be a live handle; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hetnet_sim_write_csv(
    sim: *const HetnetSim,
    dir: *const c_char,
) -> HetnetStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(null)?;
        let dir = path(dir)?.ok_or_else(null)?;
        let records = sim
            .records
            .as_ref()
            .ok_or_else(|| Failure::new(HetnetStatus::NotRun, "run the simulation first"))?;
        let io =
            |e: std::io::Error| Failure::new(HetnetStatus::Io, format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(&dir).map_err(io)?;
        std::fs::write(
            dir.join(harness::METRICS_FILE),
            harness::metrics_csv(records),
        )
        .map_err(io)?;
        std::fs::write(dir.join(harness::DROPS_FILE), harness::drops_csv(records)).map_err(io)?;
        Ok(())
    })
}

/// # Safety
/// `sim` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hetnet_sim_free(sim: *mut HetnetSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
