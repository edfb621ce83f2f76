use thiserror::Error;

use crate::frame::AddressMode;
use crate::platform::PlatformId;

/// Failures of the frame codec and the per-platform adapters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("payload of {len} octets exceeds the {limit}-octet limit")]
    PayloadTooLarge { len: usize, limit: usize },
    #[error("frame control addressing modes disagree with the address fields")]
    InconsistentAddressing,
    #[error("truncated frame: {len} octets, need at least {needed}")]
    TruncatedFrame { len: usize, needed: usize },
    #[error("bad FCS: computed {computed:#06x}, frame carries {carried:#06x}")]
    BadFcs { computed: u16, carried: u16 },
    #[error("unsupported frame: {0}")]
    UnsupportedFrameType(&'static str),
    #[error("payload does not start with the configured dispatch prefix")]
    DispatchMismatch,
    #[error("bad XBee API checksum: computed {computed:#04x}, frame carries {carried:#04x}")]
    BadChecksum { computed: u8, carried: u8 },
    #[error("{platform} cannot use {mode:?} addressing under the interop configuration")]
    AddressingUnsupported {
        platform: PlatformId,
        mode: AddressMode,
    },
    #[error("malformed XBee API frame: {0}")]
    MalformedApiFrame(&'static str),
    #[error("ack request set on a broadcast frame")]
    AckOnBroadcast,
}
