//! LZ77 with `(offset, length, next)` triples and greedy longest matching.
//!
//! Every token consumes `length + 1` bytes: a copy of `length` bytes from
//! `offset` bytes back, then one literal. Copies may overlap the bytes they
//! produce. When the input ends inside a match, the match is shortened by
//! one so its final byte becomes the literal.
//!
//! Wire format per token: offset `u16` big-endian, length `u8`, literal `u8`.

use thiserror::Error;

pub const TOKEN_LEN: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Lz77Error {
    #[error("token {index} copies from {offset} bytes back but only {available} are available")]
    BadOffset {
        index: usize,
        offset: usize,
        available: usize,
    },
    #[error("token {index} mixes a zero and a non-zero offset/length")]
    BadToken { index: usize },
    #[error("token stream length {0} is not a multiple of 4")]
    Truncated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lz77Token {
    pub offset: u16,
    pub length: u8,
    pub next: u8,
}

impl Lz77Token {
    pub fn literal(next: u8) -> Self {
        Self {
            offset: 0,
            length: 0,
            next,
        }
    }
}

/// Search window and lookahead limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lz77Params {
    window: u16,
    lookahead: u8,
}

impl Default for Lz77Params {
    fn default() -> Self {
        Self {
            window: 4096,
            lookahead: 18,
        }
    }
}

impl Lz77Params {
    /// Both limits must be at least 1; the wire format bounds them to
    /// 65535 and 255.
    pub fn new(window: u16, lookahead: u8) -> Option<Self> {
        (window >= 1 && lookahead >= 1).then_some(Self { window, lookahead })
    }

    pub fn window(&self) -> usize {
        usize::from(self.window)
    }

    pub fn lookahead(&self) -> usize {
        usize::from(self.lookahead)
    }
}

const HASH_BITS: u32 = 16;
const NONE: u32 = u32::MAX;

#[inline]
fn hash3(data: &[u8], pos: usize) -> usize {
    let v = u32::from(data[pos]) << 16 | u32::from(data[pos + 1]) << 8 | u32::from(data[pos + 2]);
    (v.wrapping_mul(0x9E37_79B1) >> (32 - HASH_BITS)) as usize
}

/// Candidate positions for match search.
///
/// Matches of three or more bytes come from hash chains over 3-byte
/// prefixes; shorter ones from the most recent occurrence of the pair or
/// byte. Chains are walked in full within the window, so the match found is
/// always maximal.
struct MatchFinder {
    head: Vec<u32>,
    prev: Vec<u32>,
    last_pair: Vec<u32>,
    last_byte: [u32; 256],
    window: usize,
}

impl MatchFinder {
    fn new(len: usize, window: usize) -> Self {
        Self {
            head: vec![NONE; 1 << HASH_BITS],
            prev: vec![NONE; len],
            last_pair: vec![NONE; 1 << 16],
            last_byte: [NONE; 256],
            window,
        }
    }

    fn insert(&mut self, data: &[u8], pos: usize) {
        if pos + 3 <= data.len() {
            let h = hash3(data, pos);
            self.prev[pos] = self.head[h];
            self.head[h] = pos as u32;
        }
        if pos + 2 <= data.len() {
            self.last_pair[pair_key(data, pos)] = pos as u32;
        }
        self.last_byte[usize::from(data[pos])] = pos as u32;
    }

    #[inline]
    fn in_window(&self, pos: usize, cand: u32) -> bool {
        cand != NONE && pos - cand as usize <= self.window
    }

    /// Longest match of at most `max_len` bytes as `(length, offset)`,
    /// nearest first among equal lengths.
    fn longest(&self, data: &[u8], pos: usize, max_len: usize) -> (usize, usize) {
        if max_len >= 3 {
            let (mut best_len, mut best_off) = (0, 0);
            let mut cand = self.head[hash3(data, pos)];
            while self.in_window(pos, cand) {
                let c = cand as usize;
                let len = data[c..]
                    .iter()
                    .zip(&data[pos..pos + max_len])
                    .take_while(|(a, b)| a == b)
                    .count();
                if len > best_len {
                    best_len = len;
                    best_off = pos - c;
                    if len == max_len {
                        break;
                    }
                }
                cand = self.prev[c];
            }
            if best_len >= 3 {
                return (best_len, best_off);
            }
        }
        if max_len >= 2 {
            let cand = self.last_pair[pair_key(data, pos)];
            if self.in_window(pos, cand) {
                return (2, pos - cand as usize);
            }
        }
        if max_len >= 1 {
            let cand = self.last_byte[usize::from(data[pos])];
            if self.in_window(pos, cand) {
                return (1, pos - cand as usize);
            }
        }
        (0, 0)
    }
}

/// Bytes held by the match finder for an input of `len` bytes.
pub(crate) fn finder_bytes(len: usize) -> usize {
    ((1 << HASH_BITS) + len + (1 << 16) + 256) * 4
}

#[inline]
fn pair_key(data: &[u8], pos: usize) -> usize {
    usize::from(data[pos]) << 8 | usize::from(data[pos + 1])
}

/// Greedy encoder: at each position take the longest match within the
/// window, the nearest one on ties.
pub fn lz77_encode(data: &[u8], params: Lz77Params) -> Vec<Lz77Token> {
    let n = data.len();
    let mut finder = MatchFinder::new(n, params.window());
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < n {
        let max_len = params.lookahead().min(n - pos - 1);
        let (len, offset) = finder.longest(data, pos, max_len);
        tokens.push(Lz77Token {
            offset: offset as u16,
            length: len as u8,
            next: data[pos + len],
        });
        for p in pos..=pos + len {
            finder.insert(data, p);
        }
        pos += len + 1;
    }
    tokens
}

pub fn lz77_decode(tokens: &[Lz77Token]) -> Result<Vec<u8>, Lz77Error> {
    let mut out: Vec<u8> = Vec::new();
    for (index, t) in tokens.iter().enumerate() {
        let offset = usize::from(t.offset);
        if (offset == 0) != (t.length == 0) {
            return Err(Lz77Error::BadToken { index });
        }
        if offset > out.len() {
            return Err(Lz77Error::BadOffset {
                index,
                offset,
                available: out.len(),
            });
        }
        let start = out.len() - offset;
        for i in 0..usize::from(t.length) {
            out.push(out[start + i]);
        }
        out.push(t.next);
    }
    Ok(out)
}

pub fn tokens_to_bytes(tokens: &[Lz77Token]) -> Vec<u8> {
    let mut out = Vec::with_capacity(tokens.len() * TOKEN_LEN);
    for t in tokens {
        out.extend_from_slice(&t.offset.to_be_bytes());
        out.push(t.length);
        out.push(t.next);
    }
    out
}

pub fn tokens_from_bytes(bytes: &[u8]) -> Result<Vec<Lz77Token>, Lz77Error> {
    if bytes.len() % TOKEN_LEN != 0 {
        return Err(Lz77Error::Truncated(bytes.len()));
    }
    Ok(bytes
        .chunks_exact(TOKEN_LEN)
        .map(|c| Lz77Token {
            offset: u16::from_be_bytes([c[0], c[1]]),
            length: c[2],
            next: c[3],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tok(offset: u16, length: u8, next: u8) -> Lz77Token {
        Lz77Token {
            offset,
            length,
            next,
        }
    }

    /// Reference greedy encoder: scan every offset in the window.
    fn brute_force_encode(data: &[u8], params: Lz77Params) -> Vec<Lz77Token> {
        let mut tokens = Vec::new();
        let mut pos = 0;
        while pos < data.len() {
            let max_len = params.lookahead().min(data.len() - pos - 1);
            let (mut best_len, mut best_off) = (0, 0);
            for off in 1..=params.window().min(pos) {
                let len = (0..max_len)
                    .take_while(|&j| data[pos - off + j] == data[pos + j])
                    .count();
                if len > best_len {
                    best_len = len;
                    best_off = off;
                }
            }
            tokens.push(tok(best_off as u16, best_len as u8, data[pos + best_len]));
            pos += best_len + 1;
        }
        tokens
    }

    #[test]
    fn self_referential_match() {
        let tokens = lz77_encode(b"aaaa", Lz77Params::default());
        assert_eq!(tokens, vec![tok(0, 0, b'a'), tok(1, 2, b'a')]);
        assert_eq!(lz77_decode(&tokens).unwrap(), b"aaaa");
    }

    #[test]
    fn no_repeats_all_literals() {
        assert_eq!(
            lz77_encode(b"abc", Lz77Params::default()),
            vec![tok(0, 0, b'a'), tok(0, 0, b'b'), tok(0, 0, b'c')]
        );
    }

    #[test]
    fn period_beyond_window_is_not_matched() {
        let params = Lz77Params::new(16, 18).unwrap();
        let period: Vec<u8> = (0..32).collect();
        let data: Vec<u8> = period.iter().cycle().take(32 * 5).copied().collect();
        let tokens = lz77_encode(&data, params);
        assert_eq!(tokens.len(), data.len());
        assert!(tokens.iter().all(|t| t.offset == 0 && t.length == 0));
        // the same data with a window covering the period compresses
        let wide = lz77_encode(&data, Lz77Params::new(32, 18).unwrap());
        assert!(wide.len() < data.len() / 4);
    }

    #[test]
    fn decode_errors() {
        assert_eq!(lz77_decode(&[]).unwrap(), b"");
        assert_eq!(
            lz77_decode(&[tok(5, 2, b'x')]),
            Err(Lz77Error::BadOffset {
                index: 0,
                offset: 5,
                available: 0
            })
        );
        assert_eq!(
            lz77_decode(&[tok(0, 3, b'x')]),
            Err(Lz77Error::BadToken { index: 0 })
        );
        assert_eq!(tokens_from_bytes(&[0, 0, 0]), Err(Lz77Error::Truncated(3)));
    }

    #[test]
    fn wire_format() {
        let bytes = tokens_to_bytes(&[tok(0x0102, 3, b'z')]);
        assert_eq!(bytes, vec![0x01, 0x02, 3, b'z']);
        assert_eq!(
            tokens_from_bytes(&bytes).unwrap(),
            vec![tok(0x0102, 3, b'z')]
        );
    }

    #[test]
    fn params_bounds() {
        assert!(Lz77Params::new(0, 18).is_none());
        assert!(Lz77Params::new(4096, 0).is_none());
    }

    fn arb_data() -> impl Strategy<Value = Vec<u8>> {
        prop_oneof![
            proptest::collection::vec(any::<u8>(), 0..600),
            proptest::collection::vec(0u8..3, 0..600),
            (proptest::collection::vec(any::<u8>(), 1..12), 0usize..60).prop_map(|(p, n)| p
                .iter()
                .cycle()
                .take(p.len() * n)
                .copied()
                .collect()),
        ]
    }

    proptest! {
        #[test]
        fn matches_reference_greedy(data in arb_data(), window in 1u16..80, lookahead in 1u8..24) {
            let params = Lz77Params::new(window, lookahead).unwrap();
            let tokens = lz77_encode(&data, params);
            prop_assert_eq!(&tokens, &brute_force_encode(&data, params));
            prop_assert_eq!(lz77_decode(&tokens).unwrap(), data);
        }

        #[test]
        fn tokens_are_maximal(data in arb_data()) {
            let params = Lz77Params::default();
            let tokens = lz77_encode(&data, params);
            let mut pos = 0;
            for t in &tokens {
                let len = usize::from(t.length);
                let want = len + 1;
                if want <= params.lookahead().min(data.len() - pos - 1) {
                    for off in 1..=params.window().min(pos) {
                        let extendable = (0..want).all(|j| data[pos - off + j] == data[pos + j]);
                        prop_assert!(!extendable, "token at {} extendable via offset {}", pos, off);
                    }
                }
                pos += len + 1;
            }
            prop_assert_eq!(pos, data.len());
        }
    }
}
