//! IEEE 802.15.4-2003 MAC data frames.
//!
//! Only data frames with both addresses present are modelled. The frame
//! control field is serialized little-endian; the FCS is a CRC-16/KERMIT
//! (polynomial x^16 + x^12 + x^5 + 1, reflected, zero initial value) sent
//! low octet first.

use crate::error::CodecError;

/// aMaxPHYPacketSize: the largest MPDU the PHY carries.
pub const MAX_PHY_PACKET: usize = 127;
/// Length of the trailing frame check sequence.
pub const FCS_LEN: usize = 2;
/// Frame control + sequence number + FCS.
pub const MIN_FRAME_LEN: usize = 5;
/// Short address reserved for broadcast.
pub const BROADCAST_ADDR: u16 = 0xFFFF;
/// PAN id reserved for broadcast.
pub const BROADCAST_PAN: u16 = 0xFFFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AddressMode {
    Short16,
    Extended64,
}

impl AddressMode {
    pub const fn len(self) -> usize {
        match self {
            AddressMode::Short16 => 2,
            AddressMode::Extended64 => 8,
        }
    }

    const fn bits(self) -> u16 {
        match self {
            AddressMode::Short16 => 0b10,
            AddressMode::Extended64 => 0b11,
        }
    }

    fn from_bits(bits: u16) -> Result<Self, CodecError> {
        match bits {
            0b10 => Ok(AddressMode::Short16),
            0b11 => Ok(AddressMode::Extended64),
            0b00 => Err(CodecError::UnsupportedFrameType("address field absent")),
            _ => Err(CodecError::UnsupportedFrameType("reserved address mode")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Address {
    Short(u16),
    Extended(u64),
}

impl Address {
    pub const BROADCAST: Address = Address::Short(BROADCAST_ADDR);

    pub const fn mode(&self) -> AddressMode {
        match self {
            Address::Short(_) => AddressMode::Short16,
            Address::Extended(_) => AddressMode::Extended64,
        }
    }

    pub fn is_broadcast(&self) -> bool {
        *self == Address::BROADCAST
    }

    fn write(&self, out: &mut Vec<u8>) {
        match self {
            Address::Short(a) => out.extend_from_slice(&a.to_le_bytes()),
            Address::Extended(a) => out.extend_from_slice(&a.to_le_bytes()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameType {
    Beacon,
    Data,
    Ack,
    MacCommand,
}

impl FrameType {
    const fn bits(self) -> u16 {
        match self {
            FrameType::Beacon => 0,
            FrameType::Data => 1,
            FrameType::Ack => 2,
            FrameType::MacCommand => 3,
        }
    }
}

const FC_SECURITY: u16 = 1 << 3;
const FC_FRAME_PENDING: u16 = 1 << 4;
const FC_ACK_REQUEST: u16 = 1 << 5;
const FC_PAN_ID_COMPRESSION: u16 = 1 << 6;
const FC_DEST_MODE_SHIFT: u16 = 10;
const FC_VERSION_SHIFT: u16 = 12;
const FC_SRC_MODE_SHIFT: u16 = 14;

/// Frame control field. Security and frame-pending are never set by any of
/// the stacks this crate talks to, so they are not representable here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameControl {
    pub frame_type: FrameType,
    pub ack_request: bool,
    pub pan_id_compression: bool,
    pub dest_mode: AddressMode,
    pub src_mode: AddressMode,
}

impl FrameControl {
    /// Data frame control with the given addressing and no flags.
    pub const fn data(dest_mode: AddressMode, src_mode: AddressMode) -> Self {
        FrameControl {
            frame_type: FrameType::Data,
            ack_request: false,
            pan_id_compression: false,
            dest_mode,
            src_mode,
        }
    }

    pub fn to_bits(&self) -> u16 {
        let mut fcf = self.frame_type.bits();
        if self.ack_request {
            fcf |= FC_ACK_REQUEST;
        }
        if self.pan_id_compression {
            fcf |= FC_PAN_ID_COMPRESSION;
        }
        fcf |= self.dest_mode.bits() << FC_DEST_MODE_SHIFT;
        fcf |= self.src_mode.bits() << FC_SRC_MODE_SHIFT;
        fcf
    }

    pub fn from_bits(fcf: u16) -> Result<Self, CodecError> {
        let frame_type = match fcf & 0b111 {
            1 => FrameType::Data,
            0 => return Err(CodecError::UnsupportedFrameType("beacon frame")),
            2 => return Err(CodecError::UnsupportedFrameType("ack frame")),
            3 => return Err(CodecError::UnsupportedFrameType("MAC command frame")),
            _ => return Err(CodecError::UnsupportedFrameType("reserved frame type")),
        };
        if fcf & FC_SECURITY != 0 {
            return Err(CodecError::UnsupportedFrameType("security enabled"));
        }
        if fcf & FC_FRAME_PENDING != 0 {
            return Err(CodecError::UnsupportedFrameType("frame pending"));
        }
        if (fcf >> FC_VERSION_SHIFT) & 0b11 != 0 {
            return Err(CodecError::UnsupportedFrameType(
                "frame version newer than 2003",
            ));
        }
        Ok(FrameControl {
            frame_type,
            ack_request: fcf & FC_ACK_REQUEST != 0,
            pan_id_compression: fcf & FC_PAN_ID_COMPRESSION != 0,
            dest_mode: AddressMode::from_bits((fcf >> FC_DEST_MODE_SHIFT) & 0b11)?,
            src_mode: AddressMode::from_bits((fcf >> FC_SRC_MODE_SHIFT) & 0b11)?,
        })
    }

    /// MAC header length implied by this frame control.
    pub fn header_len(&self) -> usize {
        let src_pan = if self.pan_id_compression { 0 } else { 2 };
        2 + 1 + 2 + self.dest_mode.len() + src_pan + self.src_mode.len()
    }

    /// Largest MAC payload that still fits a PHY packet.
    pub fn max_payload(&self) -> usize {
        MAX_PHY_PACKET - self.header_len() - FCS_LEN
    }
}

/// A decoded MAC data frame. The FCS is not stored; it is a function of the
/// other fields (see [`MacFrame::fcs`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MacFrame {
    pub fc: FrameControl,
    pub seq: u8,
    pub dest_pan: u16,
    pub dest: Address,
    /// `None` exactly when `fc.pan_id_compression` is set.
    pub src_pan: Option<u16>,
    pub src: Address,
    pub payload: Vec<u8>,
}

impl MacFrame {
    /// Data frame between short addresses without PAN id compression.
    pub fn short_data(seq: u8, pan: u16, dest: u16, src: u16, payload: Vec<u8>) -> Self {
        MacFrame {
            fc: FrameControl::data(AddressMode::Short16, AddressMode::Short16),
            seq,
            dest_pan: pan,
            dest: Address::Short(dest),
            src_pan: Some(pan),
            src: Address::Short(src),
            payload,
        }
    }

    pub fn encoded_len(&self) -> usize {
        self.fc.header_len() + self.payload.len() + FCS_LEN
    }

    pub fn fcs(&self) -> Result<u16, CodecError> {
        let bytes = encode_frame(self)?;
        let n = bytes.len();
        Ok(u16::from_le_bytes([bytes[n - 2], bytes[n - 1]]))
    }
}

/// Serialize a frame as header ‖ payload ‖ FCS.
pub fn encode_frame(frame: &MacFrame) -> Result<Vec<u8>, CodecError> {
    let fc = &frame.fc;
    if fc.frame_type != FrameType::Data {
        return Err(CodecError::UnsupportedFrameType(
            "only data frames are encoded",
        ));
    }
    if fc.dest_mode != frame.dest.mode()
        || fc.src_mode != frame.src.mode()
        || fc.pan_id_compression != frame.src_pan.is_none()
    {
        return Err(CodecError::InconsistentAddressing);
    }
    let limit = fc.max_payload();
    if frame.payload.len() > limit {
        return Err(CodecError::PayloadTooLarge {
            len: frame.payload.len(),
            limit,
        });
    }

    let mut out = Vec::with_capacity(frame.encoded_len());
    out.extend_from_slice(&fc.to_bits().to_le_bytes());
    out.push(frame.seq);
    out.extend_from_slice(&frame.dest_pan.to_le_bytes());
    frame.dest.write(&mut out);
    if let Some(pan) = frame.src_pan {
        out.extend_from_slice(&pan.to_le_bytes());
    }
    frame.src.write(&mut out);
    out.extend_from_slice(&frame.payload);
    let fcs = crc16(&out);
    out.extend_from_slice(&fcs.to_le_bytes());
    Ok(out)
}

/// Parse and FCS-check a frame produced by [`encode_frame`] or any
/// conforming 2003 radio.
pub fn decode_frame(bytes: &[u8]) -> Result<MacFrame, CodecError> {
    if bytes.len() < MIN_FRAME_LEN {
        return Err(CodecError::TruncatedFrame {
            len: bytes.len(),
            needed: MIN_FRAME_LEN,
        });
    }
    if bytes.len() > MAX_PHY_PACKET {
        return Err(CodecError::PayloadTooLarge {
            len: bytes.len(),
            limit: MAX_PHY_PACKET,
        });
    }

    let (body, trailer) = bytes.split_at(bytes.len() - FCS_LEN);
    let carried = u16::from_le_bytes([trailer[0], trailer[1]]);
    let computed = crc16(body);
    if computed != carried {
        return Err(CodecError::BadFcs { computed, carried });
    }

    let fc = FrameControl::from_bits(u16::from_le_bytes([body[0], body[1]]))?;
    let header_len = fc.header_len();
    if body.len() < header_len {
        return Err(CodecError::TruncatedFrame {
            len: bytes.len(),
            needed: header_len + FCS_LEN,
        });
    }

    let mut reader = Reader { buf: body, pos: 3 };
    let dest_pan = reader.u16();
    let dest = reader.address(fc.dest_mode);
    let src_pan = if fc.pan_id_compression {
        None
    } else {
        Some(reader.u16())
    };
    let src = reader.address(fc.src_mode);

    Ok(MacFrame {
        fc,
        seq: body[2],
        dest_pan,
        dest,
        src_pan,
        src,
        payload: body[header_len..].to_vec(),
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u16(&mut self) -> u16 {
        let v = u16::from_le_bytes([self.buf[self.pos], self.buf[self.pos + 1]]);
        self.pos += 2;
        v
    }

    fn address(&mut self, mode: AddressMode) -> Address {
        match mode {
            AddressMode::Short16 => Address::Short(self.u16()),
            AddressMode::Extended64 => {
                let mut raw = [0u8; 8];
                raw.copy_from_slice(&self.buf[self.pos..self.pos + 8]);
                self.pos += 8;
                Address::Extended(u64::from_le_bytes(raw))
            }
        }
    }
}

const CRC16_REFLECTED_POLY: u16 = 0x8408;

const CRC16_TABLE: [u16; 256] = {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u16;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ CRC16_REFLECTED_POLY
            } else {
                crc >> 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
};

/// 802.15.4 frame check sequence (CRC-16/KERMIT).
pub fn crc16(data: &[u8]) -> u16 {
    data.iter().fold(0u16, |crc, &b| {
        (crc >> 8) ^ CRC16_TABLE[((crc ^ b as u16) & 0xFF) as usize]
    })
}

/// The two constant octets every stack puts in front of its payload so the
/// SunSPOT LowPAN layer sees "not fragmented, not meshed".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DispatchPrefix {
    pub byte0: u8,
    pub byte1: u8,
}

impl Default for DispatchPrefix {
    fn default() -> Self {
        DispatchPrefix {
            byte0: 0x41,
            byte1: 0x00,
        }
    }
}

impl DispatchPrefix {
    pub const LEN: usize = 2;

    pub const fn new(byte0: u8, byte1: u8) -> Self {
        DispatchPrefix { byte0, byte1 }
    }

    /// `byte0 ‖ byte1 ‖ payload`, provided the result fits in `limit` octets.
    pub fn add(&self, payload: &[u8], limit: usize) -> Result<Vec<u8>, CodecError> {
        add_dispatch(payload, *self, limit)
    }

    pub fn strip<'a>(&self, payload: &'a [u8]) -> Result<&'a [u8], CodecError> {
        strip_dispatch(payload, *self)
    }
}

pub fn add_dispatch(
    payload: &[u8],
    prefix: DispatchPrefix,
    limit: usize,
) -> Result<Vec<u8>, CodecError> {
    let len = payload.len() + DispatchPrefix::LEN;
    if len > limit {
        return Err(CodecError::PayloadTooLarge { len, limit });
    }
    let mut out = Vec::with_capacity(len);
    out.push(prefix.byte0);
    out.push(prefix.byte1);
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn strip_dispatch(payload: &[u8], prefix: DispatchPrefix) -> Result<&[u8], CodecError> {
    match payload {
        [b0, b1, rest @ ..] if *b0 == prefix.byte0 && *b1 == prefix.byte1 => Ok(rest),
        _ => Err(CodecError::DispatchMismatch),
    }
}
