//! Canonical Huffman coding over bytes.
//!
//! Payload layout: a 256-byte code-length table (one length per byte value,
//! 0 for absent symbols) followed by the MSB-first code bits. Empty input
//! encodes to an empty payload with no table.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use super::Payload;
use crate::bitio::{BitReader, BitWriter};

pub const TABLE_LEN: usize = 256;
/// Longest code the decoder accepts. A tree this deep needs more than 10^13
/// input symbols, so the encoder never gets near it.
pub const MAX_CODE_LEN: u8 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HuffmanError {
    #[error("code length table is not a complete prefix code")]
    BadLengthTable,
    #[error("bitstream ended before all symbols were decoded")]
    TruncatedBits,
    #[error("bitstream has bits left over after the last symbol")]
    TrailingBits,
}

/// Code lengths for the given symbol frequencies.
///
/// Builds the tree by repeatedly merging the two lightest nodes. Equal
/// weights are ordered by symbol value for leaves and by creation order for
/// internal nodes (which always sort after leaves). A single present
/// symbol gets length 1.
pub fn code_lengths(freqs: &[u64; 256]) -> [u8; 256] {
    let mut lengths = [0u8; 256];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = freqs
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(sym, &f)| Reverse((f, sym)))
        .collect();
    match heap.len() {
        0 => return lengths,
        1 => {
            let Reverse((_, sym)) = heap.pop().unwrap();
            lengths[sym] = 1;
            return lengths;
        }
        _ => {}
    }

    // node ids: 0..256 leaves, 256.. internal nodes in creation order
    let mut parent = vec![usize::MAX; 256];
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        let id = parent.len();
        parent.push(usize::MAX);
        parent[a] = id;
        parent[b] = id;
        heap.push(Reverse((wa + wb, id)));
    }

    let mut depth = vec![0u32; parent.len()];
    for id in (0..parent.len()).rev() {
        if parent[id] != usize::MAX {
            depth[id] = depth[parent[id]] + 1;
        }
    }
    for sym in 0..256 {
        if freqs[sym] > 0 {
            lengths[sym] = u8::try_from(depth[sym]).expect("tree depth fits in u8");
        }
    }
    lengths
}

/// Canonical codes derived from a length table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanCodebook {
    lengths: [u8; 256],
    codes: [u64; 256],
}

impl HuffmanCodebook {
    /// Assigns canonical codes: shorter codes first, and ascending symbol
    /// order within one length. The table must be a complete prefix code,
    /// or a single symbol of length 1.
    pub fn from_lengths(lengths: &[u8; 256]) -> Result<Self, HuffmanError> {
        if !kraft_ok(lengths) {
            return Err(HuffmanError::BadLengthTable);
        }
        let mut order: Vec<usize> = (0..256).filter(|&s| lengths[s] > 0).collect();
        order.sort_by_key(|&s| (lengths[s], s));
        let mut codes = [0u64; 256];
        let mut code = 0u64;
        let mut prev_len = order.first().map_or(0, |&s| lengths[s]);
        for (i, &sym) in order.iter().enumerate() {
            let len = lengths[sym];
            if i > 0 {
                code = (code + 1) << (len - prev_len);
            }
            codes[sym] = code;
            prev_len = len;
        }
        Ok(Self {
            lengths: *lengths,
            codes,
        })
    }

    pub fn lengths(&self) -> &[u8; 256] {
        &self.lengths
    }

    /// `(code, length)` for a symbol, or `None` if absent.
    pub fn code(&self, symbol: u8) -> Option<(u64, u8)> {
        let len = self.lengths[usize::from(symbol)];
        (len > 0).then(|| (self.codes[usize::from(symbol)], len))
    }
}

fn kraft_ok(lengths: &[u8; 256]) -> bool {
    let present: Vec<u8> = lengths.iter().copied().filter(|&l| l > 0).collect();
    if present.iter().any(|&l| l > MAX_CODE_LEN) {
        return false;
    }
    if present == [1] {
        return true;
    }
    let sum: u128 = present.iter().map(|&l| 1u128 << (MAX_CODE_LEN - l)).sum();
    !present.is_empty() && sum == 1u128 << MAX_CODE_LEN
}

/// Result of [`huffman_encode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanEncoded {
    pub lengths: [u8; 256],
    pub bits: Vec<u8>,
    pub bit_len: u64,
}

pub fn huffman_encode(data: &[u8]) -> HuffmanEncoded {
    let mut freqs = [0u64; 256];
    for &b in data {
        freqs[usize::from(b)] += 1;
    }
    let lengths = code_lengths(&freqs);
    if data.is_empty() {
        return HuffmanEncoded {
            lengths,
            bits: Vec::new(),
            bit_len: 0,
        };
    }
    let book = HuffmanCodebook::from_lengths(&lengths).expect("huffman lengths are complete");
    let mut w = BitWriter::new();
    for &b in data {
        let (code, len) = book.code(b).expect("symbol present");
        write_wide(&mut w, code, u32::from(len));
    }
    let (bits, bit_len) = w.finish();
    HuffmanEncoded {
        lengths,
        bits,
        bit_len,
    }
}

fn write_wide(w: &mut BitWriter, code: u64, len: u32) {
    if len > 32 {
        w.write((code >> 32) as u32, len - 32);
        w.write(code as u32, 32);
    } else {
        w.write(code as u32, len);
    }
}

/// Decodes exactly `count` symbols, consuming exactly `bit_len` bits.
pub fn huffman_decode(
    lengths: &[u8; 256],
    bits: &[u8],
    bit_len: u64,
    count: usize,
) -> Result<Vec<u8>, HuffmanError> {
    if count == 0 {
        return if bit_len == 0 {
            Ok(Vec::new())
        } else {
            Err(HuffmanError::TrailingBits)
        };
    }
    if bits.len() as u64 != bit_len.div_ceil(8) {
        return Err(if (bits.len() as u64) < bit_len.div_ceil(8) {
            HuffmanError::TruncatedBits
        } else {
            HuffmanError::TrailingBits
        });
    }
    // validates the table
    HuffmanCodebook::from_lengths(lengths)?;

    let max_len = usize::from(*lengths.iter().max().unwrap());
    let mut per_len = vec![0u128; max_len + 1];
    let mut sorted: Vec<u8> = (0..=255u8)
        .filter(|&s| lengths[usize::from(s)] > 0)
        .collect();
    sorted.sort_by_key(|&s| (lengths[usize::from(s)], s));
    for &s in &sorted {
        per_len[usize::from(lengths[usize::from(s)])] += 1;
    }

    let mut reader = BitReader::new(bits, bit_len);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (mut code, mut first, mut index) = (0u128, 0u128, 0u128);
        let mut symbol = None;
        for &n in &per_len[1..] {
            let bit = reader.read_bit().ok_or(HuffmanError::TruncatedBits)?;
            code |= u128::from(bit);
            if code < first + n {
                symbol = Some(sorted[(index + code - first) as usize]);
                break;
            }
            index += n;
            first = (first + n) << 1;
            code <<= 1;
        }
        // only reachable with the single-symbol table and a 1 bit
        out.push(symbol.ok_or(HuffmanError::BadLengthTable)?);
    }
    if reader.remaining() != 0 || !reader.padding_is_zero() {
        return Err(HuffmanError::TrailingBits);
    }
    Ok(out)
}

/// Table-plus-bits payload used inside containers.
pub fn to_payload(data: &[u8]) -> Payload {
    if data.is_empty() {
        return Payload::default();
    }
    let enc = huffman_encode(data);
    let mut bytes = Vec::with_capacity(TABLE_LEN + enc.bits.len());
    bytes.extend_from_slice(&enc.lengths);
    bytes.extend_from_slice(&enc.bits);
    Payload {
        bytes,
        bit_len: TABLE_LEN as u64 * 8 + enc.bit_len,
    }
}

pub fn from_payload(bytes: &[u8], bit_len: u64, count: usize) -> Result<Vec<u8>, HuffmanError> {
    if count == 0 && bytes.is_empty() && bit_len == 0 {
        return Ok(Vec::new());
    }
    let table_bits = TABLE_LEN as u64 * 8;
    if bytes.len() < TABLE_LEN || bit_len < table_bits {
        return Err(HuffmanError::TruncatedBits);
    }
    let lengths: [u8; 256] = bytes[..TABLE_LEN].try_into().unwrap();
    huffman_decode(&lengths, &bytes[TABLE_LEN..], bit_len - table_bits, count)
}
