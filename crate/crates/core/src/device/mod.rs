//! Behavioural models of each platform: how fast it broadcasts, how fast
//! its host can take frames off the radio, how much it can buffer, and the
//! Arduino's habit of resetting when its XBee floods the UART.

mod calibration;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::CodecError;
use crate::frame::{AddressMode, DispatchPrefix, FrameControl, FCS_LEN};
use crate::platform::{caps, validate_payload, xbee, Envelope, PlatformCaps, PlatformId};

pub use calibration::{
    calibrate, default_constraints, payload_sweep, Calibration, CalibrationInputs, Constraint,
    RxDefaults,
};

/// Baud rate of the Arduino-XBee UART link.
pub const XBEE_UART_BAUD: f64 = 38_400.0;
/// 250 kb/s O-QPSK: one octet every 32 us.
pub const AIR_BYTE_TIME_S: f64 = 32e-6;
/// Preamble, SFD and PHR ahead of every MPDU.
pub const PHY_OVERHEAD: usize = 6;
/// Sliding window over which the Arduino arrival rate is judged.
pub const RESTART_WINDOW_S: f64 = 1.0;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error(transparent)]
    Payload(#[from] CodecError),
    #[error("invalid profile for {platform}: {reason}")]
    InvalidProfile {
        platform: PlatformId,
        reason: String,
    },
    #[error("profile set has no entry for {0}")]
    MissingProfile(PlatformId),
    #[error("cannot read profile file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse profile file: {0}")]
    Parse(String),
    #[error("calibration infeasible: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxRateModel {
    /// Fixed per-packet cost in seconds.
    pub t_base: f64,
    /// Additional seconds per payload octet.
    pub t_byte: f64,
}

impl TxRateModel {
    pub fn interval(&self, payload: usize) -> f64 {
        self.t_base + self.t_byte * payload as f64
    }

    pub fn pps(&self, payload: usize) -> f64 {
        1.0 / self.interval(payload)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxCapacityModel {
    pub service_base: f64,
    pub service_byte: f64,
    /// Frames that may wait while one is being served.
    pub buffer_capacity: usize,
    /// Arrival rate above which the host resets. `None` disables resets.
    pub overload_pps_threshold: Option<f64>,
    pub restart_duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformProfile {
    pub id: PlatformId,
    pub caps: PlatformCaps,
    pub tx: TxRateModel,
    pub rx: RxCapacityModel,
    pub tx_power_dbm: f64,
    /// Effective sensitivity, antenna and orientation included.
    pub sensitivity_dbm: f64,
    pub rssi_bias_db: f64,
}

impl PlatformProfile {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let fail = |reason: &str| {
            Err(DeviceError::InvalidProfile {
                platform: self.id,
                reason: reason.to_owned(),
            })
        };
        let finite = [
            self.tx.t_base,
            self.tx.t_byte,
            self.rx.service_base,
            self.rx.service_byte,
            self.rx.restart_duration,
            self.tx_power_dbm,
            self.sensitivity_dbm,
            self.rssi_bias_db,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return fail("non-finite parameter");
        }
        if !(self.tx.t_base > 0.0) {
            return fail("tx t_base must be > 0");
        }
        if self.tx.t_byte < 0.0 || self.rx.service_byte < 0.0 || self.rx.service_base < 0.0 {
            return fail("per-byte and base service times must be >= 0");
        }
        if self.rx.restart_duration < 0.0 {
            return fail("restart duration must be >= 0");
        }
        if let Some(t) = self.rx.overload_pps_threshold {
            if !(t > 0.0 && t.is_finite()) {
                return fail("restart threshold must be positive");
            }
        }
        if !(self.sensitivity_dbm < self.tx_power_dbm) {
            return fail("sensitivity must be below transmit power");
        }
        Ok(())
    }
}

/// Seconds between successive broadcasts of a `payload`-octet beacon.
pub fn tx_interval(profile: &PlatformProfile, payload: usize) -> Result<f64, DeviceError> {
    validate_payload(profile.id, payload)?;
    Ok(profile.tx.interval(payload))
}

/// Time to clock `total_bytes` through an 8N1 UART.
pub fn uart_drain_time(total_bytes: usize, baud: f64) -> f64 {
    total_bytes as f64 * 10.0 / baud
}

/// Octets the receiving host has to move for one frame: the RX16 indicator
/// for XBee, the MAC frame otherwise.
pub fn rx_host_bytes(platform: PlatformId, payload: usize) -> usize {
    let mac_payload = payload + DispatchPrefix::LEN;
    match caps(platform).envelope {
        Envelope::XBeeApi => xbee::rx16_len(mac_payload),
        Envelope::Plain | Envelope::LowPanBypass => mac_frame_len(mac_payload),
    }
}

/// MAC frame length with the interop header (short addresses, no PAN id
/// compression).
pub fn mac_frame_len(mac_payload: usize) -> usize {
    FrameControl::data(AddressMode::Short16, AddressMode::Short16).header_len()
        + mac_payload
        + FCS_LEN
}

pub fn rx_service_time(profile: &PlatformProfile, host_bytes: usize) -> f64 {
    profile.rx.service_base + profile.rx.service_byte * host_bytes as f64
}

/// Service time for a beacon carrying `payload` application octets.
pub fn rx_service_time_for_payload(profile: &PlatformProfile, payload: usize) -> f64 {
    rx_service_time(profile, rx_host_bytes(profile.id, payload))
}

/// One profile per platform.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    profiles: BTreeMap<PlatformId, PlatformProfile>,
}

pub const PROFILE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ProfileFile {
    format_version: u32,
    platform: BTreeMap<PlatformId, ProfileEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileEntry {
    tx_t_base: f64,
    tx_t_byte: f64,
    rx_service_base: f64,
    rx_service_byte: f64,
    rx_buffer_capacity: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rx_restart_threshold_pps: Option<f64>,
    rx_restart_duration: f64,
    tx_power_dbm: f64,
    sensitivity_dbm: f64,
    #[serde(default)]
    rssi_bias_db: f64,
}

const DEFAULT_PROFILES: &str = include_str!("../../profiles/default.toml");

impl ProfileSet {
    pub fn new(profiles: impl IntoIterator<Item = PlatformProfile>) -> Result<Self, DeviceError> {
        let profiles: BTreeMap<_, _> = profiles.into_iter().map(|p| (p.id, p)).collect();
        for p in profiles.values() {
            p.validate()?;
        }
        Ok(ProfileSet { profiles })
    }

    /// The shipped calibration.
    pub fn default_calibrated() -> Self {
        Self::from_toml(DEFAULT_PROFILES).expect("shipped profile file is valid")
    }

    pub fn get(&self, platform: PlatformId) -> Result<&PlatformProfile, DeviceError> {
        self.profiles
            .get(&platform)
            .ok_or(DeviceError::MissingProfile(platform))
    }

    pub fn get_mut(&mut self, platform: PlatformId) -> Option<&mut PlatformProfile> {
        self.profiles.get_mut(&platform)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PlatformProfile> {
        self.profiles.values()
    }

    pub fn from_toml(text: &str) -> Result<Self, DeviceError> {
        let file: ProfileFile =
            toml::from_str(text).map_err(|e| DeviceError::Parse(e.to_string()))?;
        if file.format_version != PROFILE_FORMAT_VERSION {
            return Err(DeviceError::Parse(format!(
                "unsupported format_version {} (expected {PROFILE_FORMAT_VERSION})",
                file.format_version
            )));
        }
        Self::new(file.platform.into_iter().map(|(id, e)| PlatformProfile {
            id,
            caps: caps(id),
            tx: TxRateModel {
                t_base: e.tx_t_base,
                t_byte: e.tx_t_byte,
            },
            rx: RxCapacityModel {
                service_base: e.rx_service_base,
                service_byte: e.rx_service_byte,
                buffer_capacity: e.rx_buffer_capacity,
                overload_pps_threshold: e.rx_restart_threshold_pps,
                restart_duration: e.rx_restart_duration,
            },
            tx_power_dbm: e.tx_power_dbm,
            sensitivity_dbm: e.sensitivity_dbm,
            rssi_bias_db: e.rssi_bias_db,
        }))
    }

    pub fn to_toml(&self) -> String {
        let file = ProfileFile {
            format_version: PROFILE_FORMAT_VERSION,
            platform: self
                .profiles
                .values()
                .map(|p| {
                    (
                        p.id,
                        ProfileEntry {
                            tx_t_base: p.tx.t_base,
                            tx_t_byte: p.tx.t_byte,
                            rx_service_base: p.rx.service_base,
                            rx_service_byte: p.rx.service_byte,
                            rx_buffer_capacity: p.rx.buffer_capacity,
                            rx_restart_threshold_pps: p.rx.overload_pps_threshold,
                            rx_restart_duration: p.rx.restart_duration,
                            tx_power_dbm: p.tx_power_dbm,
                            sensitivity_dbm: p.sensitivity_dbm,
                            rssi_bias_db: p.rssi_bias_db,
                        },
                    )
                })
                .collect(),
        };
        toml::to_string(&file).expect("profile set serializes")
    }

    pub fn load(path: &Path) -> Result<Self, DeviceError> {
        let text = std::fs::read_to_string(path).map_err(|source| DeviceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }
}
