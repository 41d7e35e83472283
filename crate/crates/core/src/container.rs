//! The `.plfc` container: a fixed 30-byte big-endian header followed by
//! the codec payload.
//!
//! ```text
//! offset size field
//!      0    4 magic "PLFC"
//!      4    1 version (1)
//!      5    1 codec id
//!      6    4 carved rows
//!     10    4 carved cols
//!     14    4 original rows
//!     18    4 original cols
//!     22    8 payload length in bits
//!     30    - payload, ceil(bits / 8) bytes, zero-padded
//! ```
//!
//! LZW payloads are variable-width codes packed MSB-first; see [`pack_codes`].

use std::io::Read;

use thiserror::Error;

use crate::bitio::{BitReader, BitWriter};
use crate::codecs::CodecId;
use crate::lzw::{CodeStream, ALPHABET_SIZE, DICT_CAP};

pub const MAGIC: [u8; 4] = *b"PLFC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 30;

/// Starting width of packed LZW codes.
pub const MIN_CODE_WIDTH: u32 = 9;
/// Widest packed LZW code.
pub const MAX_CODE_WIDTH: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContainerError {
    #[error("not a PLFC container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown codec id {0}")]
    UnknownCodec(u8),
    #[error("invalid header: {0}")]
    InvalidHeader(&'static str),
    #[error("container length mismatch: expected {expected} bytes, found {actual}")]
    LengthMismatch { expected: u64, actual: u64 },
    #[error("payload ends inside a code ({remaining} bits left, {width} needed)")]
    TruncatedPayload { remaining: u64, width: u32 },
    #[error("payload has non-zero padding or extra bytes")]
    TrailingGarbage,
    #[error("code {code} at position {index} does not fit the {width}-bit schedule")]
    CodeTooWide { index: usize, code: u16, width: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub codec: CodecId,
    pub carved_rows: u32,
    pub carved_cols: u32,
    pub orig_rows: u32,
    pub orig_cols: u32,
    pub payload_bit_length: u64,
}

impl ContainerHeader {
    pub fn validate(&self) -> Result<(), ContainerError> {
        if self.carved_rows == 0 || self.carved_cols == 0 {
            return Err(ContainerError::InvalidHeader(
                "carved dimensions must be non-zero",
            ));
        }
        if self.carved_rows != self.orig_rows {
            return Err(ContainerError::InvalidHeader(
                "carved rows differ from original rows",
            ));
        }
        if self.carved_cols > self.orig_cols {
            return Err(ContainerError::InvalidHeader(
                "carved cols exceed original cols",
            ));
        }
        Ok(())
    }

    pub fn payload_byte_len(&self) -> u64 {
        self.payload_bit_length.div_ceil(8)
    }

    /// Total size of the container file this header describes.
    pub fn container_len(&self) -> u64 {
        HEADER_LEN as u64 + self.payload_byte_len()
    }

    pub fn carved_pixels(&self) -> u64 {
        u64::from(self.carved_rows) * u64::from(self.carved_cols)
    }

    pub fn orig_pixels(&self) -> u64 {
        u64::from(self.orig_rows) * u64::from(self.orig_cols)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = self.codec as u8;
        out[6..10].copy_from_slice(&self.carved_rows.to_be_bytes());
        out[10..14].copy_from_slice(&self.carved_cols.to_be_bytes());
        out[14..18].copy_from_slice(&self.orig_rows.to_be_bytes());
        out[18..22].copy_from_slice(&self.orig_cols.to_be_bytes());
        out[22..30].copy_from_slice(&self.payload_bit_length.to_be_bytes());
        out
    }

    /// Parses and validates a header. Short input is a length mismatch,
    /// except that the magic is checked first on whatever bytes exist.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        let magic_len = bytes.len().min(4);
        if bytes[..magic_len] != MAGIC[..magic_len] {
            return Err(ContainerError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(ContainerError::LengthMismatch {
                expected: HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        if bytes[4] != VERSION {
            return Err(ContainerError::UnsupportedVersion(bytes[4]));
        }
        let codec = CodecId::from_u8(bytes[5]).ok_or(ContainerError::UnknownCodec(bytes[5]))?;
        let be32 = |at: usize| u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap());
        let header = Self {
            codec,
            carved_rows: be32(6),
            carved_cols: be32(10),
            orig_rows: be32(14),
            orig_cols: be32(18),
            payload_bit_length: u64::from_be_bytes(bytes[22..30].try_into().unwrap()),
        };
        header.validate()?;
        Ok(header)
    }

    /// Reads only the header bytes from a stream.
    pub fn read_from<R: Read>(reader: &mut R) -> Result<Self, ContainerError> {
        let mut buf = Vec::with_capacity(HEADER_LEN);
        // Io errors surface as a short header.
        let _ = reader.take(HEADER_LEN as u64).read_to_end(&mut buf);
        Self::from_bytes(&buf)
    }
}

pub fn write_container(
    header: &ContainerHeader,
    payload: &[u8],
) -> Result<Vec<u8>, ContainerError> {
    header.validate()?;
    if payload.len() as u64 != header.payload_byte_len() {
        return Err(ContainerError::LengthMismatch {
            expected: header.payload_byte_len(),
            actual: payload.len() as u64,
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&header.to_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn read_container(bytes: &[u8]) -> Result<(ContainerHeader, &[u8]), ContainerError> {
    let header = ContainerHeader::from_bytes(bytes)?;
    if bytes.len() as u64 != header.container_len() {
        return Err(ContainerError::LengthMismatch {
            expected: header.container_len(),
            actual: bytes.len() as u64,
        });
    }
    Ok((header, &bytes[HEADER_LEN..]))
}

/// Tracks the LZW code width as the decoder's dictionary grows.
///
/// The width starts at 9 bits and becomes `w + 1` right after the code whose
/// decoding brings the dictionary to `2^w` entries, capped at 16.
#[derive(Debug, Clone)]
pub struct WidthSchedule {
    width: u32,
    dict_len: u32,
    emitted: usize,
}

impl Default for WidthSchedule {
    fn default() -> Self {
        Self {
            width: MIN_CODE_WIDTH,
            dict_len: ALPHABET_SIZE,
            emitted: 0,
        }
    }
}

impl WidthSchedule {
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Advances past one code.
    pub fn advance(&mut self) {
        // the decoder adds an entry for every code except the first
        if self.emitted > 0 && self.dict_len < DICT_CAP {
            self.dict_len += 1;
            if self.dict_len == 1 << self.width && self.width < MAX_CODE_WIDTH {
                self.width += 1;
            }
        }
        self.emitted += 1;
    }
}

/// Packs LZW codes at their scheduled widths. Returns bytes and exact bit count.
pub fn pack_codes(cs: &CodeStream) -> Result<(Vec<u8>, u64), ContainerError> {
    let mut writer = BitWriter::new();
    let mut schedule = WidthSchedule::default();
    for (index, &code) in cs.codes().iter().enumerate() {
        let width = schedule.width();
        if u32::from(code) >= crate::lzw::encoder_dict_len(index) || u32::from(code) >> width != 0 {
            return Err(ContainerError::CodeTooWide { index, code, width });
        }
        writer.write(code.into(), width);
        schedule.advance();
    }
    Ok(writer.finish())
}

/// Reads codes until exactly `bit_len` bits are consumed.
pub fn unpack_codes(bytes: &[u8], bit_len: u64) -> Result<CodeStream, ContainerError> {
    let needed = bit_len.div_ceil(8);
    if (bytes.len() as u64) < needed {
        return Err(ContainerError::TruncatedPayload {
            remaining: bytes.len() as u64 * 8,
            width: MIN_CODE_WIDTH,
        });
    }
    if bytes.len() as u64 > needed {
        return Err(ContainerError::TrailingGarbage);
    }
    let mut reader = BitReader::new(bytes, bit_len);
    if !reader.padding_is_zero() {
        return Err(ContainerError::TrailingGarbage);
    }
    let mut schedule = WidthSchedule::default();
    let mut cs = CodeStream::new();
    while reader.remaining() > 0 {
        let width = schedule.width();
        let code = reader.read(width).ok_or(ContainerError::TruncatedPayload {
            remaining: reader.remaining(),
            width,
        })?;
        cs.push(code as u16);
        schedule.advance();
    }
    Ok(cs)
}
