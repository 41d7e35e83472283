//! Lossless byte codecs behind one interface: store, LZW, Huffman, LZ77.

pub mod huffman;
pub mod lz77;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::{pack_codes, unpack_codes, ContainerError};
use crate::lzw::{
    lzw_decode_stats, lzw_encode_stats, LzwError, DECODER_ENTRY_BYTES as LZW_DECODER_ENTRY_BYTES,
};

pub use huffman::HuffmanError;
pub use lz77::{Lz77Error, Lz77Params, Lz77Token};

/// Codec identifier; the numeric value is written into container headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum CodecId {
    Store = 0,
    Lzw = 1,
    Huffman = 2,
    Lz77 = 3,
}

impl CodecId {
    pub const ALL: [CodecId; 4] = [
        CodecId::Store,
        CodecId::Lzw,
        CodecId::Huffman,
        CodecId::Lz77,
    ];

    pub fn from_u8(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Store => "store",
            CodecId::Lzw => "lzw",
            CodecId::Huffman => "huffman",
            CodecId::Lz77 => "lz77",
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown codec {0:?} (expected store, lzw, huffman or lz77)")]
pub struct UnknownCodecName(pub String);

impl FromStr for CodecId {
    type Err = UnknownCodecName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownCodecName(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error(transparent)]
    Lzw(#[from] LzwError),
    #[error(transparent)]
    Packing(#[from] ContainerError),
    #[error(transparent)]
    Huffman(#[from] HuffmanError),
    #[error(transparent)]
    Lz77(#[from] Lz77Error),
    #[error("byte-aligned payload declares {bits} bits for {bytes} bytes")]
    UnalignedPayload { bits: u64, bytes: usize },
}

/// Encoded bytes plus the exact number of meaningful bits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Payload {
    pub bytes: Vec<u8>,
    pub bit_len: u64,
}

impl Payload {
    pub fn byte_aligned(bytes: Vec<u8>) -> Self {
        let bit_len = bytes.len() as u64 * 8;
        Self { bytes, bit_len }
    }
}

pub fn encode(codec: CodecId, data: &[u8]) -> Payload {
    encode_measured(codec, data).0
}

/// Encodes and also returns the logical size in bytes of the codec's
/// working state (dictionaries, tables, intermediate token/code buffers),
/// excluding the input and the returned payload.
pub fn encode_measured(codec: CodecId, data: &[u8]) -> (Payload, usize) {
    match codec {
        CodecId::Store => (store_encode(data), 0),
        CodecId::Lzw => {
            let (cs, stats) = lzw_encode_stats(data);
            let (bytes, bit_len) = pack_codes(&cs).expect("encoder output fits the width schedule");
            let scratch = stats.dictionary_len as usize * LZW_ENCODER_ENTRY_BYTES + cs.len() * 2;
            (Payload { bytes, bit_len }, scratch)
        }
        CodecId::Huffman => (huffman::to_payload(data), HUFFMAN_SCRATCH_BYTES),
        CodecId::Lz77 => {
            let tokens = lz77::lz77_encode(data, Lz77Params::default());
            let scratch = lz77::finder_bytes(data.len()) + tokens.len() * lz77::TOKEN_LEN;
            (
                Payload::byte_aligned(lz77::tokens_to_bytes(&tokens)),
                scratch,
            )
        }
    }
}

/// Decodes a payload. `symbol_count` is the number of bytes the payload
/// encodes; Huffman needs it to know where the bitstream ends.
pub fn decode(
    codec: CodecId,
    bytes: &[u8],
    bit_len: u64,
    symbol_count: usize,
) -> Result<Vec<u8>, CodecError> {
    decode_measured(codec, bytes, bit_len, symbol_count).map(|(d, _)| d)
}

/// Like [`decode`], also returning working-state bytes as in [`encode_measured`].
pub fn decode_measured(
    codec: CodecId,
    bytes: &[u8],
    bit_len: u64,
    symbol_count: usize,
) -> Result<(Vec<u8>, usize), CodecError> {
    match codec {
        CodecId::Store => {
            check_aligned(bytes, bit_len)?;
            Ok((store_decode(bytes), 0))
        }
        CodecId::Lzw => {
            let cs = unpack_codes(bytes, bit_len)?;
            let (data, dict_len) = lzw_decode_stats(&cs)?;
            let scratch = dict_len as usize * LZW_DECODER_ENTRY_BYTES + cs.len() * 2;
            Ok((data, scratch))
        }
        CodecId::Huffman => Ok((
            huffman::from_payload(bytes, bit_len, symbol_count)?,
            HUFFMAN_SCRATCH_BYTES,
        )),
        CodecId::Lz77 => {
            check_aligned(bytes, bit_len)?;
            let tokens = lz77::tokens_from_bytes(bytes)?;
            let scratch = tokens.len() * lz77::TOKEN_LEN;
            Ok((lz77::lz77_decode(&tokens)?, scratch))
        }
    }
}

// Accounting sizes for working state.
const LZW_ENCODER_ENTRY_BYTES: usize = 8;
const HUFFMAN_SCRATCH_BYTES: usize = 256 * 8 + 511 * 16;

fn check_aligned(bytes: &[u8], bits: u64) -> Result<(), CodecError> {
    if bits != bytes.len() as u64 * 8 {
        return Err(CodecError::UnalignedPayload {
            bits,
            bytes: bytes.len(),
        });
    }
    Ok(())
}

pub fn store_encode(data: &[u8]) -> Payload {
    Payload::byte_aligned(data.to_vec())
}

pub fn store_decode(bytes: &[u8]) -> Vec<u8> {
    bytes.to_vec()
}
