//! RSSI interpretation for the four receive paths, and the log-distance
//! channel used to synthesize readings.
//!
//! The CC2420 keeps RSSI_VAL as a signed 8-bit register; received power is
//! `RSSI_VAL + RSSI_OFFSET` dBm with an offset of about -45. SunSPOT applies
//! that correctly. The stock TelosB accessor hands back the register octet
//! unsigned and without the offset, so it has to be fixed up here. The XBee
//! RX indicator reports the magnitude of a negative dBm value, and iSense
//! reports signed dBm directly.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::platform::PlatformId;

pub const PLAUSIBLE_MIN_DBM: f64 = -130.0;
pub const PLAUSIBLE_MAX_DBM: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RssiDbm(pub f64);

impl RssiDbm {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_plausible(self) -> bool {
        self.0.is_finite() && (PLAUSIBLE_MIN_DBM..=PLAUSIBLE_MAX_DBM).contains(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssiOffset(pub f64);

impl Default for RssiOffset {
    fn default() -> Self {
        RssiOffset(-45.0)
    }
}

/// Settings shared by every receive path. Only the CC2420 offset so far.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RssiConfig {
    pub offset: RssiOffset,
}

/// An RSSI octet as a device's receive path reports it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RawRssiReading {
    pub platform: PlatformId,
    pub raw: u8,
}

/// A raw reading together with its dBm interpretation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssiReading {
    pub raw: RawRssiReading,
    pub dbm: RssiDbm,
    /// False when the interpretation lands outside [-130, +10] dBm.
    pub plausible: bool,
}

impl RssiReading {
    pub fn new(raw: RawRssiReading, cfg: &RssiConfig) -> Self {
        let dbm = normalize(raw, cfg);
        RssiReading {
            raw,
            dbm,
            plausible: dbm.is_plausible(),
        }
    }
}

pub fn cc2420_to_dbm(rssi_val: i8, offset: RssiOffset) -> RssiDbm {
    RssiDbm(rssi_val as f64 + offset.0)
}

/// Undo the TelosB accessor: reinterpret the octet as two's complement and
/// add the offset it forgot.
pub fn telosb_fix(raw: u8, offset: RssiOffset) -> RssiDbm {
    cc2420_to_dbm(raw as i8, offset)
}

pub fn normalize(reading: RawRssiReading, cfg: &RssiConfig) -> RssiDbm {
    match reading.platform {
        PlatformId::SunSpot => cc2420_to_dbm(reading.raw as i8, cfg.offset),
        PlatformId::TelosB => telosb_fix(reading.raw, cfg.offset),
        PlatformId::ArduinoXBee => RssiDbm(-(reading.raw as f64)),
        PlatformId::ISense => RssiDbm(reading.raw as i8 as f64),
    }
}

/// The octet `platform` would report for a received power of `dbm`,
/// rounded to the nearest representable step and clamped to the octet's
/// range. Inverse of [`normalize`] up to that quantization.
pub fn encode_raw(platform: PlatformId, dbm: RssiDbm, cfg: &RssiConfig) -> RawRssiReading {
    let signed = |v: f64| v.round().clamp(i8::MIN as f64, i8::MAX as f64) as i8 as u8;
    let raw = match platform {
        PlatformId::SunSpot | PlatformId::TelosB => signed(dbm.0 - cfg.offset.0),
        PlatformId::ArduinoXBee => (-dbm.0).round().clamp(0.0, 255.0) as u8,
        PlatformId::ISense => signed(dbm.0),
    };
    RawRssiReading { platform, raw }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RssiError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("invalid path-loss model: {0}")]
    InvalidModel(&'static str),
}

/// Log-distance path loss with log-normal shadowing, referenced to 1 m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub ref_loss_db: f64,
    pub exponent: f64,
    pub shadowing_sigma: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        PathLossModel {
            ref_loss_db: 40.0,
            exponent: 2.7,
            shadowing_sigma: 0.5,
        }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<(), RssiError> {
        if !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(RssiError::InvalidModel("exponent must be finite and >= 0"));
        }
        if !(self.shadowing_sigma >= 0.0 && self.shadowing_sigma.is_finite()) {
            return Err(RssiError::InvalidModel(
                "shadowing sigma must be finite and >= 0",
            ));
        }
        if !self.ref_loss_db.is_finite() {
            return Err(RssiError::InvalidModel("reference loss must be finite"));
        }
        Ok(())
    }

    /// Mean loss in dB at `distance_m`.
    pub fn mean_loss_db(&self, distance_m: f64) -> Result<f64, RssiError> {
        if !(distance_m > 0.0) {
            return Err(RssiError::NonPositiveDistance(distance_m));
        }
        Ok(self.ref_loss_db + 10.0 * self.exponent * distance_m.log10())
    }

    /// Mean received power for a transmitter at `tx_power_dbm`.
    pub fn mean_rx_dbm(&self, tx_power_dbm: f64, distance_m: f64) -> Result<f64, RssiError> {
        Ok(tx_power_dbm - self.mean_loss_db(distance_m)?)
    }
}

/// One shadowed received-power sample. Always consumes exactly one normal
/// draw from `rng`, even when sigma is zero.
pub fn synth_rssi<R: Rng + ?Sized>(
    tx_power_dbm: f64,
    distance_m: f64,
    model: &PathLossModel,
    rng: &mut R,
) -> Result<RssiDbm, RssiError> {
    model.validate()?;
    let mean = model.mean_rx_dbm(tx_power_dbm, distance_m)?;
    let shadow = Normal::new(0.0, model.shadowing_sigma)
        .map_err(|_| RssiError::InvalidModel("shadowing sigma"))?
        .sample(rng);
    Ok(RssiDbm(mean + shadow))
}

/// Probability that a frame received at `rx_dbm` is lost: 1 below
/// `sensitivity - margin`, 0 above `sensitivity + margin`, linear between.
/// A zero margin gives a hard threshold at the sensitivity.
pub fn packet_error_rate(rx_dbm: f64, sensitivity_dbm: f64, margin_db: f64) -> f64 {
    if margin_db <= 0.0 {
        return if rx_dbm < sensitivity_dbm { 1.0 } else { 0.0 };
    }
    ((sensitivity_dbm + margin_db - rx_dbm) / (2.0 * margin_db)).clamp(0.0, 1.0)
}
