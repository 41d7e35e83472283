//! MSB-first bit packing.

/// Accumulates bit fields, most significant bit first. The final partial
/// byte is zero-padded.
#[derive(Debug, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    acc: u64,
    pending: u32,
    bits: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`. `width` must be in `1..=32`
    /// and `value` must fit.
    #[inline]
    pub fn write(&mut self, value: u32, width: u32) {
        debug_assert!((1..=32).contains(&width));
        debug_assert!(width == 32 || value >> width == 0);
        self.acc = (self.acc << width) | u64::from(value);
        self.pending += width;
        self.bits += u64::from(width);
        while self.pending >= 8 {
            self.pending -= 8;
            self.buf.push((self.acc >> self.pending) as u8);
        }
        self.acc &= (1u64 << self.pending) - 1;
    }

    pub fn write_bit(&mut self, bit: bool) {
        self.write(u32::from(bit), 1);
    }

    pub fn bit_len(&self) -> u64 {
        self.bits
    }

    /// Returns the packed bytes and the exact number of bits written.
    pub fn finish(mut self) -> (Vec<u8>, u64) {
        if self.pending > 0 {
            self.buf.push((self.acc << (8 - self.pending)) as u8);
        }
        (self.buf, self.bits)
    }
}

/// Reads MSB-first bit fields from at most `bit_len` bits of a buffer.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: u64,
    bit_len: u64,
}

impl<'a> BitReader<'a> {
    /// `bit_len` is clamped to the bits actually present in `data`.
    pub fn new(data: &'a [u8], bit_len: u64) -> Self {
        Self {
            data,
            pos: 0,
            bit_len: bit_len.min(data.len() as u64 * 8),
        }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.bit_len - self.pos
    }

    /// Reads `width` bits (`1..=32`), or `None` if fewer remain.
    #[inline]
    pub fn read(&mut self, width: u32) -> Option<u32> {
        debug_assert!((1..=32).contains(&width));
        if self.remaining() < u64::from(width) {
            return None;
        }
        let mut value = 0u32;
        let mut left = width;
        while left > 0 {
            let byte = self.data[(self.pos / 8) as usize];
            let offset = (self.pos % 8) as u32;
            let take = left.min(8 - offset);
            let chunk = (u32::from(byte) >> (8 - offset - take)) & ((1 << take) - 1);
            value = if take == 32 {
                chunk
            } else {
                (value << take) | chunk
            };
            left -= take;
            self.pos += u64::from(take);
        }
        Some(value)
    }

    pub fn read_bit(&mut self) -> Option<bool> {
        self.read(1).map(|b| b == 1)
    }

    /// True when every bit after `bit_len` up to the end of its byte is zero.
    pub fn padding_is_zero(&self) -> bool {
        let tail = self.bit_len % 8;
        if tail == 0 {
            return true;
        }
        let last = self.data[(self.bit_len / 8) as usize];
        last & (0xFFu8 >> tail) == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_layout() {
        let mut w = BitWriter::new();
        w.write(66, 9);
        w.write(65, 9);
        assert_eq!(w.finish(), (vec![0x21, 0x10, 0x40], 18));
    }

    #[test]
    fn single_bits() {
        let mut w = BitWriter::new();
        for b in [true, false, true, true] {
            w.write_bit(b);
        }
        let (bytes, n) = w.finish();
        assert_eq!((bytes.as_slice(), n), (&[0b1011_0000u8][..], 4));
        let mut r = BitReader::new(&bytes, n);
        assert_eq!(r.read(4), Some(0b1011));
        assert_eq!(r.read(1), None);
        assert!(r.padding_is_zero());
    }

    #[test]
    fn nonzero_padding_detected() {
        let r = BitReader::new(&[0b1010_0001], 3);
        assert!(!r.padding_is_zero());
    }

    #[test]
    fn exhaustive_small_widths() {
        for width in 1..=12u32 {
            let mut w = BitWriter::new();
            for v in 0..(1u32 << width) {
                w.write(v, width);
            }
            let (bytes, n) = w.finish();
            assert_eq!(n, u64::from(width) << width);
            let mut r = BitReader::new(&bytes, n);
            for v in 0..(1u32 << width) {
                assert_eq!(r.read(width), Some(v));
            }
            assert_eq!(r.remaining(), 0);
            assert!(r.padding_is_zero());
        }
    }

    proptest! {
        #[test]
        fn mixed_width_round_trip(fields in proptest::collection::vec((1u32..=32, any::<u32>()), 0..200)) {
            let fields: Vec<(u32, u32)> = fields
                .into_iter()
                .map(|(w, v)| (w, if w == 32 { v } else { v & ((1 << w) - 1) }))
                .collect();
            let mut w = BitWriter::new();
            for &(width, v) in &fields {
                w.write(v, width);
            }
            let (bytes, n) = w.finish();
            prop_assert_eq!(bytes.len() as u64, n.div_ceil(8));
            let mut r = BitReader::new(&bytes, n);
            for &(width, v) in &fields {
                prop_assert_eq!(r.read(width), Some(v));
            }
            prop_assert!(r.padding_is_zero());
        }
    }
}
