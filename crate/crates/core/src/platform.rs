//! Per-platform radio stack adapters.
//!
//! Each of the four stacks speaks a slightly different dialect of
//! 802.15.4. The adapters here put every stack on the same footing: short
//! addressing, a fixed two-octet dispatch prefix in front of every payload,
//! and (for the Arduino) the XBee serial API envelope between host and
//! module.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CodecError;
use crate::frame::{
    decode_frame, encode_frame, Address, AddressMode, DispatchPrefix, FrameControl, MacFrame,
    BROADCAST_ADDR, BROADCAST_PAN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PlatformId {
    #[serde(rename = "arduino-xbee")]
    ArduinoXBee,
    #[serde(rename = "sunspot")]
    SunSpot,
    #[serde(rename = "telosb")]
    TelosB,
    #[serde(rename = "isense")]
    ISense,
}

impl PlatformId {
    pub const ALL: [PlatformId; 4] = [
        PlatformId::ArduinoXBee,
        PlatformId::SunSpot,
        PlatformId::TelosB,
        PlatformId::ISense,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            PlatformId::ArduinoXBee => "arduino-xbee",
            PlatformId::SunSpot => "sunspot",
            PlatformId::TelosB => "telosb",
            PlatformId::ISense => "isense",
        }
    }

    /// Stable small integer, used for tie-breaking and across the C ABI.
    pub const fn index(self) -> u8 {
        match self {
            PlatformId::ArduinoXBee => 0,
            PlatformId::SunSpot => 1,
            PlatformId::TelosB => 2,
            PlatformId::ISense => 3,
        }
    }

    pub fn from_index(index: u8) -> Option<Self> {
        Self::ALL.get(index as usize).copied()
    }
}

impl fmt::Display for PlatformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPlatform(pub String);

impl fmt::Display for UnknownPlatform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown platform {:?} (expected arduino-xbee, sunspot, telosb or isense)",
            self.0
        )
    }
}

impl std::error::Error for UnknownPlatform {}

impl FromStr for PlatformId {
    type Err = UnknownPlatform;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlatformId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownPlatform(s.to_owned()))
    }
}

/// How a stack's host-side bytes relate to the frame on the air.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    /// Host talks to an XBee module over its serial API.
    XBeeApi,
    /// Custom 16-bit stack that keeps the LowPAN layer out of the way via
    /// the dispatch prefix.
    LowPanBypass,
    /// Host bytes are the MAC frame.
    Plain,
}

/// Hardware summary, informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardwareInfo {
    pub processor: &'static str,
    pub mips: u32,
    pub ram_kb: u32,
    pub flash_kb: u32,
    pub radio: &'static str,
    pub language: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlatformCaps {
    /// Largest MAC payload the stack accepts, dispatch prefix included.
    pub max_payload: usize,
    /// Native 16-bit addressing in the vendor stack.
    pub supports_addr16: bool,
    pub supports_addr64: bool,
    pub auto_ack: bool,
    pub envelope: Envelope,
    pub info: HardwareInfo,
}

pub const fn caps(platform: PlatformId) -> PlatformCaps {
    match platform {
        PlatformId::ArduinoXBee => PlatformCaps {
            max_payload: 100,
            supports_addr16: true,
            supports_addr64: true,
            auto_ack: true,
            envelope: Envelope::XBeeApi,
            info: HardwareInfo {
                processor: "ATmega328 (16 MHz)",
                mips: 16,
                ram_kb: 16,
                flash_kb: 32,
                radio: "XBee Series 1",
                language: "Wiring (C++)",
            },
        },
        PlatformId::SunSpot => PlatformCaps {
            max_payload: 113,
            supports_addr16: false,
            supports_addr64: true,
            auto_ack: true,
            envelope: Envelope::LowPanBypass,
            info: HardwareInfo {
                processor: "ARM920T (180 MHz)",
                mips: 200,
                ram_kb: 512,
                flash_kb: 4096,
                radio: "CC2420",
                language: "J2ME",
            },
        },
        PlatformId::TelosB => PlatformCaps {
            max_payload: 128,
            supports_addr16: true,
            supports_addr64: false,
            auto_ack: false,
            envelope: Envelope::Plain,
            info: HardwareInfo {
                processor: "MSP430 (16 MHz)",
                mips: 16,
                ram_kb: 10,
                flash_kb: 48,
                radio: "CC2420",
                language: "nesC",
            },
        },
        PlatformId::ISense => PlatformCaps {
            max_payload: 116,
            supports_addr16: true,
            supports_addr64: true,
            auto_ack: true,
            envelope: Envelope::Plain,
            info: HardwareInfo {
                processor: "JN5139 (16 MHz)",
                mips: 16,
                ram_kb: 96,
                flash_kb: 128,
                radio: "JN5139",
                language: "C++",
            },
        },
    }
}

/// Deployment-wide settings every adapter agrees on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteropConfig {
    pub dispatch: DispatchPrefix,
    pub pan_id: u16,
    pub pan_id_compression: bool,
    /// Whether each stack acknowledges unicast frames it receives.
    pub ack_mode: BTreeMap<PlatformId, bool>,
    /// Short address of each node. The XBee module stamps its own on
    /// every frame it builds.
    pub node_addrs: BTreeMap<PlatformId, u16>,
    pub xbee_frame_id: u8,
}

pub const DEFAULT_PAN_ID: u16 = 0x1234;

impl InteropConfig {
    /// Addressing is fixed: every stack can do 16-bit once SunSPOT runs
    /// the replacement stack.
    pub const fn addressing(&self) -> AddressMode {
        AddressMode::Short16
    }

    pub fn ack(&self, platform: PlatformId) -> bool {
        self.ack_mode
            .get(&platform)
            .copied()
            .unwrap_or(caps(platform).auto_ack)
    }

    pub fn node_addr(&self, platform: PlatformId) -> u16 {
        self.node_addrs
            .get(&platform)
            .copied()
            .unwrap_or(platform.index() as u16 + 1)
    }

    fn frame_control(&self) -> FrameControl {
        let mut fc = FrameControl::data(self.addressing(), self.addressing());
        fc.pan_id_compression = self.pan_id_compression;
        fc
    }
}

impl Default for InteropConfig {
    fn default() -> Self {
        negotiate(&PlatformId::ALL)
    }
}

/// Settle the common configuration for a set of platforms.
pub fn negotiate(platforms: &[PlatformId]) -> InteropConfig {
    InteropConfig {
        dispatch: DispatchPrefix::default(),
        pan_id: DEFAULT_PAN_ID,
        pan_id_compression: false,
        ack_mode: platforms.iter().map(|&p| (p, caps(p).auto_ack)).collect(),
        node_addrs: platforms
            .iter()
            .map(|&p| (p, p.index() as u16 + 1))
            .collect(),
        xbee_frame_id: 0x01,
    }
}

/// Largest application payload (dispatch excluded) every listed platform
/// accepts.
pub fn common_payload_limit(platforms: &[PlatformId]) -> usize {
    platforms
        .iter()
        .map(|&p| caps(p).max_payload)
        .min()
        .unwrap_or(0)
        .saturating_sub(DispatchPrefix::LEN)
}

/// Prefixed-payload limit of a platform: its stack cap, further bounded by
/// what fits in a PHY packet with the interop header.
pub fn payload_limit(platform: PlatformId, cfg: &InteropConfig) -> usize {
    caps(platform)
        .max_payload
        .min(cfg.frame_control().max_payload())
}

pub fn validate_payload(platform: PlatformId, size: usize) -> Result<(), CodecError> {
    validate_payload_with(platform, size, &InteropConfig::default())
}

pub fn validate_payload_with(
    platform: PlatformId,
    size: usize,
    cfg: &InteropConfig,
) -> Result<(), CodecError> {
    let len = size + DispatchPrefix::LEN;
    let limit = payload_limit(platform, cfg);
    if len > limit {
        return Err(CodecError::PayloadTooLarge { len, limit });
    }
    Ok(())
}

/// Host-side bytes for sending `frame` through `platform`'s stack.
///
/// `frame.payload` is the application payload; the dispatch prefix is added
/// here. XBee output is a TX16 API request; every other stack hands the
/// MAC frame itself to its radio.
pub fn wrap(
    platform: PlatformId,
    frame: &MacFrame,
    cfg: &InteropConfig,
) -> Result<Vec<u8>, CodecError> {
    for addr in [frame.dest, frame.src] {
        if addr.mode() != cfg.addressing() {
            return Err(CodecError::AddressingUnsupported {
                platform,
                mode: addr.mode(),
            });
        }
    }
    if frame.fc.ack_request && frame.dest.is_broadcast() {
        return Err(CodecError::AckOnBroadcast);
    }
    let limit = payload_limit(platform, cfg);
    let payload = cfg.dispatch.add(&frame.payload, limit)?;

    match caps(platform).envelope {
        Envelope::Plain | Envelope::LowPanBypass => encode_frame(&MacFrame {
            payload,
            ..frame.clone()
        }),
        Envelope::XBeeApi => {
            // Everything but destination and payload is filled in by the
            // module, so the frame has to already agree with it.
            let expected_src_pan = (!cfg.pan_id_compression).then_some(cfg.pan_id);
            if frame.dest_pan != cfg.pan_id
                || frame.fc.pan_id_compression != cfg.pan_id_compression
                || frame.src_pan != expected_src_pan
                || frame.src != Address::Short(cfg.node_addr(platform))
            {
                return Err(CodecError::InconsistentAddressing);
            }
            let Address::Short(dest) = frame.dest else {
                unreachable!("checked above")
            };
            let unicast = dest != BROADCAST_ADDR;
            let options = if unicast && !frame.fc.ack_request {
                xbee::TX_OPT_DISABLE_ACK
            } else {
                0x00
            };
            Ok(xbee::Tx16Request {
                frame_id: cfg.xbee_frame_id,
                dest,
                options,
                data: payload,
            }
            .to_bytes())
        }
    }
}

/// What the sending radio puts on the air given the host-side bytes from
/// [`wrap`]. `seq` is the sequence number an XBee module would stamp; the
/// other stacks already carry it in the frame.
pub fn to_air(
    platform: PlatformId,
    host_bytes: &[u8],
    cfg: &InteropConfig,
    seq: u8,
) -> Result<Vec<u8>, CodecError> {
    match caps(platform).envelope {
        Envelope::Plain | Envelope::LowPanBypass => {
            decode_frame(host_bytes)?;
            Ok(host_bytes.to_vec())
        }
        Envelope::XBeeApi => {
            let request = match xbee::ApiFrame::parse(host_bytes)? {
                xbee::ApiFrame::Tx16(req) => req,
                xbee::ApiFrame::Rx16(_) => {
                    return Err(CodecError::MalformedApiFrame(
                        "RX indicator is not a transmit request",
                    ))
                }
            };
            let unicast = request.dest != BROADCAST_ADDR;
            let mut fc = cfg.frame_control();
            fc.ack_request = unicast && request.options & xbee::TX_OPT_DISABLE_ACK == 0;
            encode_frame(&MacFrame {
                fc,
                seq,
                dest_pan: cfg.pan_id,
                dest: Address::Short(request.dest),
                src_pan: (!cfg.pan_id_compression).then_some(cfg.pan_id),
                src: Address::Short(cfg.node_addr(platform)),
                payload: request.data,
            })
        }
    }
}

/// What the receiving radio hands its host for an air frame. For XBee this
/// is an RX16 indicator carrying `rssi_raw`; other stacks pass the frame
/// through.
pub fn from_air(platform: PlatformId, air: &[u8], rssi_raw: u8) -> Result<Vec<u8>, CodecError> {
    let frame = decode_frame(air)?;
    match caps(platform).envelope {
        Envelope::Plain | Envelope::LowPanBypass => Ok(air.to_vec()),
        Envelope::XBeeApi => {
            let Address::Short(src) = frame.src else {
                return Err(CodecError::AddressingUnsupported {
                    platform,
                    mode: frame.src.mode(),
                });
            };
            let mut options = 0;
            if frame.dest.is_broadcast() {
                options |= xbee::RX_OPT_ADDR_BROADCAST;
            }
            if frame.dest_pan == BROADCAST_PAN {
                options |= xbee::RX_OPT_PAN_BROADCAST;
            }
            Ok(xbee::Rx16Indicator {
                src,
                rssi: rssi_raw,
                options,
                data: frame.payload,
            }
            .to_bytes())
        }
    }
}

/// Recover the logical frame (dispatch stripped).
///
/// Accepts an air frame for every platform and, for XBee, also the RX16
/// indicator produced by [`from_air`]. The RX16 indicator carries no MAC
/// sequence number, so frames recovered from it report `seq == 0`; the
/// destination is the broadcast address or this node's own.
pub fn unwrap(
    platform: PlatformId,
    bytes: &[u8],
    cfg: &InteropConfig,
) -> Result<MacFrame, CodecError> {
    if caps(platform).envelope == Envelope::XBeeApi && bytes.first() == Some(&xbee::START) {
        let ind = match xbee::ApiFrame::parse(bytes)? {
            xbee::ApiFrame::Rx16(ind) => ind,
            xbee::ApiFrame::Tx16(_) => {
                return Err(CodecError::MalformedApiFrame(
                    "TX request is not a received frame",
                ))
            }
        };
        let payload = cfg.dispatch.strip(&ind.data)?.to_vec();
        let dest = if ind.options & xbee::RX_OPT_ADDR_BROADCAST != 0 {
            BROADCAST_ADDR
        } else {
            cfg.node_addr(platform)
        };
        let dest_pan = if ind.options & xbee::RX_OPT_PAN_BROADCAST != 0 {
            BROADCAST_PAN
        } else {
            cfg.pan_id
        };
        return Ok(MacFrame {
            fc: cfg.frame_control(),
            seq: 0,
            dest_pan,
            dest: Address::Short(dest),
            src_pan: (!cfg.pan_id_compression).then_some(cfg.pan_id),
            src: Address::Short(ind.src),
            payload,
        });
    }

    let mut frame = decode_frame(bytes)?;
    for addr in [frame.dest, frame.src] {
        if addr.mode() != cfg.addressing() {
            return Err(CodecError::AddressingUnsupported {
                platform,
                mode: addr.mode(),
            });
        }
    }
    frame.payload = cfg.dispatch.strip(&frame.payload)?.to_vec();
    Ok(frame)
}

/// XBee Series 1 serial API, mode 1 (unescaped).
pub mod xbee {
    use crate::error::CodecError;

    pub const START: u8 = 0x7E;
    pub const API_TX16: u8 = 0x01;
    pub const API_RX16: u8 = 0x81;
    pub const TX_OPT_DISABLE_ACK: u8 = 0x01;
    pub const RX_OPT_ADDR_BROADCAST: u8 = 0x02;
    pub const RX_OPT_PAN_BROADCAST: u8 = 0x04;

    /// Start delimiter, length and checksum around the frame data.
    pub const ENVELOPE_OVERHEAD: usize = 4;
    /// API id + frame id + destination + options.
    pub const TX16_HEADER: usize = 5;
    /// API id + source + RSSI + options.
    pub const RX16_HEADER: usize = 5;

    /// 0xFF minus the low byte of the sum of the frame data.
    pub fn checksum(frame_data: &[u8]) -> u8 {
        0xFF - frame_data.iter().fold(0u8, |acc, &b| acc.wrapping_add(b))
    }

    pub fn envelope(frame_data: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(frame_data.len() + ENVELOPE_OVERHEAD);
        out.push(START);
        out.extend_from_slice(&(frame_data.len() as u16).to_be_bytes());
        out.extend_from_slice(frame_data);
        out.push(checksum(frame_data));
        out
    }

    /// Validate delimiter, length and checksum; return the frame data.
    pub fn open(bytes: &[u8]) -> Result<&[u8], CodecError> {
        if bytes.len() < ENVELOPE_OVERHEAD + 1 {
            return Err(CodecError::TruncatedFrame {
                len: bytes.len(),
                needed: ENVELOPE_OVERHEAD + 1,
            });
        }
        if bytes[0] != START {
            return Err(CodecError::MalformedApiFrame("missing start delimiter"));
        }
        let len = u16::from_be_bytes([bytes[1], bytes[2]]) as usize;
        let total = len + ENVELOPE_OVERHEAD;
        if bytes.len() < total {
            return Err(CodecError::TruncatedFrame {
                len: bytes.len(),
                needed: total,
            });
        }
        if bytes.len() > total {
            return Err(CodecError::MalformedApiFrame(
                "trailing octets after checksum",
            ));
        }
        let data = &bytes[3..3 + len];
        let carried = bytes[3 + len];
        let computed = checksum(data);
        if carried != computed {
            return Err(CodecError::BadChecksum { computed, carried });
        }
        Ok(data)
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct Tx16Request {
        pub frame_id: u8,
        pub dest: u16,
        pub options: u8,
        pub data: Vec<u8>,
    }

    impl Tx16Request {
        pub fn to_bytes(&self) -> Vec<u8> {
            let mut body = Vec::with_capacity(TX16_HEADER + self.data.len());
            body.push(API_TX16);
            body.push(self.frame_id);
            body.extend_from_slice(&self.dest.to_be_bytes());
            body.push(self.options);
            body.extend_from_slice(&self.data);
            envelope(&body)
        }
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct Rx16Indicator {
        pub src: u16,
        /// Magnitude of the received power, i.e. -dBm.
        pub rssi: u8,
        pub options: u8,
        pub data: Vec<u8>,
    }

    impl Rx16Indicator {
        pub fn to_bytes(&self) -> Vec<u8> {
            let mut body = Vec::with_capacity(RX16_HEADER + self.data.len());
            body.push(API_RX16);
            body.extend_from_slice(&self.src.to_be_bytes());
            body.push(self.rssi);
            body.push(self.options);
            body.extend_from_slice(&self.data);
            envelope(&body)
        }
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub enum ApiFrame {
        Tx16(Tx16Request),
        Rx16(Rx16Indicator),
    }

    impl ApiFrame {
        pub fn parse(bytes: &[u8]) -> Result<Self, CodecError> {
            let data = open(bytes)?;
            match data[0] {
                API_TX16 if data.len() >= TX16_HEADER => Ok(ApiFrame::Tx16(Tx16Request {
                    frame_id: data[1],
                    dest: u16::from_be_bytes([data[2], data[3]]),
                    options: data[4],
                    data: data[TX16_HEADER..].to_vec(),
                })),
                API_RX16 if data.len() >= RX16_HEADER => Ok(ApiFrame::Rx16(Rx16Indicator {
                    src: u16::from_be_bytes([data[1], data[2]]),
                    rssi: data[3],
                    options: data[4],
                    data: data[RX16_HEADER..].to_vec(),
                })),
                API_TX16 | API_RX16 => Err(CodecError::MalformedApiFrame("frame data too short")),
                _ => Err(CodecError::MalformedApiFrame("unsupported API identifier")),
            }
        }
    }

    /// Octets crossing the host UART for an RX16 indicator carrying
    /// `data_len` octets of RF data.
    pub const fn rx16_len(data_len: usize) -> usize {
        ENVELOPE_OVERHEAD + RX16_HEADER + data_len
    }

    /// Octets crossing the host UART for a TX16 request.
    pub const fn tx16_len(data_len: usize) -> usize {
        ENVELOPE_OVERHEAD + TX16_HEADER + data_len
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beacon_from(platform: PlatformId, cfg: &InteropConfig, len: usize) -> MacFrame {
        MacFrame::short_data(
            9,
            cfg.pan_id,
            BROADCAST_ADDR,
            cfg.node_addr(platform),
            (0..len as u8).collect(),
        )
    }

    #[test]
    fn caps_table() {
        let telosb = caps(PlatformId::TelosB);
        assert_eq!(telosb.max_payload, 128);
        assert!(!telosb.auto_ack);
        assert!(!telosb.supports_addr64);
        assert!(!caps(PlatformId::SunSpot).supports_addr16);
        let isense = caps(PlatformId::ISense);
        assert!(isense.supports_addr16 && isense.supports_addr64);
        assert_eq!(caps(PlatformId::ArduinoXBee).max_payload, 100);
        assert_eq!(caps(PlatformId::SunSpot).max_payload, 113);
        assert_eq!(isense.max_payload, 116);
        assert_eq!(caps(PlatformId::ArduinoXBee).envelope, Envelope::XBeeApi);
        assert_eq!(caps(PlatformId::SunSpot).envelope, Envelope::LowPanBypass);
        assert_eq!(caps(PlatformId::SunSpot).info.mips, 200);
    }

    #[test]
    fn platform_names_round_trip() {
        for p in PlatformId::ALL {
            assert_eq!(p.name().parse::<PlatformId>().unwrap(), p);
            assert_eq!(PlatformId::from_index(p.index()), Some(p));
        }
        assert!("zigduino".parse::<PlatformId>().is_err());
    }

    #[test]
    fn xbee_checksum_example() {
        assert_eq!(xbee::checksum(&[0x01, 0x01, 0x12, 0x34, 0x00]), 0xB7);
    }

    #[test]
    fn payload_limits() {
        assert_eq!(common_payload_limit(&PlatformId::ALL), 98);
        assert_eq!(
            common_payload_limit(&[
                PlatformId::ArduinoXBee,
                PlatformId::SunSpot,
                PlatformId::ISense
            ]),
            98
        );
        assert_eq!(
            common_payload_limit(&[PlatformId::SunSpot, PlatformId::TelosB, PlatformId::ISense]),
            111
        );
        assert!(validate_payload(PlatformId::ArduinoXBee, 96).is_ok());
        assert_eq!(
            validate_payload(PlatformId::ArduinoXBee, 99),
            Err(CodecError::PayloadTooLarge {
                len: 101,
                limit: 100
            })
        );
        assert!(validate_payload(PlatformId::SunSpot, 111).is_ok());
        assert!(validate_payload(PlatformId::SunSpot, 112).is_err());
    }

    #[test]
    fn telosb_limit_bounded_by_phy() {
        // The 128-octet TinyOS buffer admits 127 prefixed octets, but a PHY
        // packet with the interop header only has room for 114.
        assert!(127 <= caps(PlatformId::TelosB).max_payload);
        let cfg = InteropConfig::default();
        assert_eq!(payload_limit(PlatformId::TelosB, &cfg), 114);
        let frame = beacon_from(PlatformId::TelosB, &cfg, 125);
        assert_eq!(
            wrap(PlatformId::TelosB, &frame, &cfg),
            Err(CodecError::PayloadTooLarge {
                len: 127,
                limit: 114
            })
        );
        assert!(wrap(
            PlatformId::TelosB,
            &beacon_from(PlatformId::TelosB, &cfg, 112),
            &cfg
        )
        .is_ok());
    }

    #[test]
    fn negotiate_short_addressing() {
        let all = negotiate(&PlatformId::ALL);
        assert_eq!(all.addressing(), AddressMode::Short16);
        assert!(!all.ack(PlatformId::TelosB));
        assert!(all.ack(PlatformId::ArduinoXBee));
        let solo = negotiate(&[PlatformId::SunSpot]);
        assert_eq!(solo.addressing(), AddressMode::Short16);
    }

    #[test]
    fn sunspot_air_frame_starts_with_dispatch() {
        let cfg = InteropConfig::default();
        let frame = beacon_from(PlatformId::SunSpot, &cfg, 6);
        let air = wrap(PlatformId::SunSpot, &frame, &cfg).unwrap();
        let raw = decode_frame(&air).unwrap();
        assert_eq!(&raw.payload[..2], &[0x41, 0x00]);
        assert_eq!(&raw.payload[2..], &frame.payload[..]);
    }

    #[test]
    fn xbee_wrap_layout() {
        let cfg = InteropConfig::default();
        let frame = beacon_from(PlatformId::ArduinoXBee, &cfg, 3);
        let bytes = wrap(PlatformId::ArduinoXBee, &frame, &cfg).unwrap();
        assert_eq!(bytes, {
            let body = [0x01, 0x01, 0xFF, 0xFF, 0x00, 0x41, 0x00, 0, 1, 2];
            let mut v = vec![0x7E, 0x00, body.len() as u8];
            v.extend_from_slice(&body);
            v.push(xbee::checksum(&body));
            v
        });
    }

    #[test]
    fn extended_toward_telosb_unsupported() {
        let cfg = InteropConfig::default();
        let mut frame = beacon_from(PlatformId::TelosB, &cfg, 4);
        frame.dest = Address::Extended(0xDEAD_BEEF);
        frame.fc.dest_mode = AddressMode::Extended64;
        assert_eq!(
            wrap(PlatformId::TelosB, &frame, &cfg),
            Err(CodecError::AddressingUnsupported {
                platform: PlatformId::TelosB,
                mode: AddressMode::Extended64
            })
        );
    }

    #[test]
    fn ack_on_broadcast_rejected() {
        let cfg = InteropConfig::default();
        let mut frame = beacon_from(PlatformId::ISense, &cfg, 4);
        frame.fc.ack_request = true;
        assert_eq!(
            wrap(PlatformId::ISense, &frame, &cfg),
            Err(CodecError::AckOnBroadcast)
        );
    }

    #[test]
    fn xbee_rx_indicator_round_trip() {
        let cfg = InteropConfig::default();
        let frame = beacon_from(PlatformId::TelosB, &cfg, 20);
        let air = to_air(
            PlatformId::TelosB,
            &wrap(PlatformId::TelosB, &frame, &cfg).unwrap(),
            &cfg,
            0,
        )
        .unwrap();
        let rx = from_air(PlatformId::ArduinoXBee, &air, 72).unwrap();
        match xbee::ApiFrame::parse(&rx).unwrap() {
            xbee::ApiFrame::Rx16(ind) => {
                assert_eq!(ind.rssi, 72);
                assert_eq!(ind.src, cfg.node_addr(PlatformId::TelosB));
                assert_eq!(ind.options, xbee::RX_OPT_ADDR_BROADCAST);
            }
            other => panic!("unexpected {other:?}"),
        }
        let got = unwrap(PlatformId::ArduinoXBee, &rx, &cfg).unwrap();
        assert_eq!(got, MacFrame { seq: 0, ..frame });
    }

    #[test]
    fn corrupted_xbee_checksum() {
        let cfg = InteropConfig::default();
        let air = wrap(
            PlatformId::ISense,
            &beacon_from(PlatformId::ISense, &cfg, 8),
            &cfg,
        )
        .unwrap();
        let mut rx = from_air(PlatformId::ArduinoXBee, &air, 40).unwrap();
        *rx.last_mut().unwrap() = rx.last().unwrap().wrapping_add(1);
        assert!(matches!(
            unwrap(PlatformId::ArduinoXBee, &rx, &cfg),
            Err(CodecError::BadChecksum { .. })
        ));
    }

    #[test]
    fn missing_dispatch_rejected() {
        let cfg = InteropConfig::default();
        let bare = encode_frame(&beacon_from(PlatformId::TelosB, &cfg, 8)).unwrap();
        for p in PlatformId::ALL {
            assert_eq!(unwrap(p, &bare, &cfg), Err(CodecError::DispatchMismatch));
        }
    }

    #[test]
    fn xbee_unicast_ack_flag_survives() {
        let cfg = InteropConfig::default();
        for ack in [false, true] {
            let mut frame = beacon_from(PlatformId::ArduinoXBee, &cfg, 5);
            frame.dest = Address::Short(cfg.node_addr(PlatformId::ISense));
            frame.fc.ack_request = ack;
            let host = wrap(PlatformId::ArduinoXBee, &frame, &cfg).unwrap();
            let air = to_air(PlatformId::ArduinoXBee, &host, &cfg, frame.seq).unwrap();
            assert_eq!(unwrap(PlatformId::ISense, &air, &cfg).unwrap(), frame);
        }
    }

    #[test]
    fn xbee_rejects_foreign_source() {
        let cfg = InteropConfig::default();
        let frame = beacon_from(PlatformId::TelosB, &cfg, 5);
        assert_eq!(
            wrap(PlatformId::ArduinoXBee, &frame, &cfg),
            Err(CodecError::InconsistentAddressing)
        );
    }
}
