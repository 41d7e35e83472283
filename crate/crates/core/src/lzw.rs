//! LZW over bytes.
//!
//! The dictionary starts with the 256 single-byte strings and grows by one
//! entry per emitted code until it holds [`DICT_CAP`] entries, after which it
//! is frozen. There are no clear codes.

use std::collections::HashMap;

use thiserror::Error;

/// Size of the initial single-byte dictionary.
pub const ALPHABET_SIZE: u32 = 256;
/// Maximum number of dictionary entries; codes always fit in 16 bits.
pub const DICT_CAP: u32 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LzwError {
    #[error("code {code} at position {index} exceeds dictionary limit {limit}")]
    BadCode { index: usize, code: u32, limit: u32 },
}

/// Dictionary codes in emission order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeStream {
    codes: Vec<u16>,
}

impl CodeStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps codes without validation; see [`CodeStream::validate`].
    pub fn from_codes(codes: Vec<u16>) -> Self {
        Self { codes }
    }

    pub fn codes(&self) -> &[u16] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn push(&mut self, code: u16) {
        self.codes.push(code);
    }

    pub fn into_codes(self) -> Vec<u16> {
        self.codes
    }

    /// Checks that code `i` is below the encoder's dictionary size at the
    /// time it was emitted.
    pub fn validate(&self) -> Result<(), LzwError> {
        for (index, &code) in self.codes.iter().enumerate() {
            let limit = encoder_dict_len(index);
            if u32::from(code) >= limit {
                return Err(LzwError::BadCode {
                    index,
                    code: code.into(),
                    limit,
                });
            }
        }
        Ok(())
    }
}

/// Encoder dictionary size when code number `index` is emitted.
pub fn encoder_dict_len(index: usize) -> u32 {
    u32::try_from(index)
        .ok()
        .and_then(|i| i.checked_add(ALPHABET_SIZE))
        .map_or(DICT_CAP, |n| n.min(DICT_CAP))
}

/// One encoder step: the emitted code and the dictionary entry added after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub code: u16,
    pub inserted: Option<(u16, Vec<u8>)>,
}

/// Summary of an encoder run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeStats {
    pub dictionary_len: u32,
    pub insertions: u32,
}

/// Encodes bytes into dictionary codes.
pub fn lzw_encode(data: &[u8]) -> CodeStream {
    encode_with(data, |_, _| {}).0
}

/// Encodes and reports the final dictionary size.
pub fn lzw_encode_stats(data: &[u8]) -> (CodeStream, EncodeStats) {
    encode_with(data, |_, _| {})
}

/// Encodes while recording each emitted code with the string it inserted.
pub fn lzw_trace(data: &[u8]) -> Vec<TraceStep> {
    let mut strings: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut steps = Vec::new();
    encode_with(data, |code, inserted| {
        let inserted = inserted.map(|(index, prefix, byte)| {
            let mut s = strings[usize::from(prefix)].clone();
            s.push(byte);
            strings.push(s.clone());
            debug_assert_eq!(strings.len() - 1, usize::from(index));
            (index, s)
        });
        steps.push(TraceStep { code, inserted });
    });
    steps
}

/// Core encoder. `observe(code, inserted)` sees each emitted code together
/// with the `(index, prefix, byte)` entry inserted right after it, if any.
fn encode_with<F>(data: &[u8], mut observe: F) -> (CodeStream, EncodeStats)
where
    F: FnMut(u16, Option<(u16, u16, u8)>),
{
    let mut out = CodeStream::new();
    let mut dict: HashMap<u32, u16> = HashMap::new();
    let mut next = ALPHABET_SIZE;
    let Some((&first, rest)) = data.split_first() else {
        return (
            out,
            EncodeStats {
                dictionary_len: next,
                insertions: 0,
            },
        );
    };

    let mut phrase = u16::from(first);
    for &byte in rest {
        let key = (u32::from(phrase) << 8) | u32::from(byte);
        if let Some(&code) = dict.get(&key) {
            phrase = code;
            continue;
        }
        out.push(phrase);
        if next < DICT_CAP {
            let index = next as u16;
            dict.insert(key, index);
            next += 1;
            observe(phrase, Some((index, phrase, byte)));
        } else {
            observe(phrase, None);
        }
        phrase = u16::from(byte);
    }
    out.push(phrase);
    observe(phrase, None);

    (
        out,
        EncodeStats {
            dictionary_len: next,
            insertions: next - ALPHABET_SIZE,
        },
    )
}

#[derive(Clone, Copy)]
struct Entry {
    prefix: u16,
    byte: u8,
    first: u8,
    len: u32,
}

/// Bytes per decoder dictionary entry.
pub const DECODER_ENTRY_BYTES: usize = std::mem::size_of::<Entry>();

/// Decodes a code stream back to bytes.
pub fn lzw_decode(cs: &CodeStream) -> Result<Vec<u8>, LzwError> {
    lzw_decode_stats(cs).map(|(data, _)| data)
}

/// Decodes and reports the final dictionary size.
pub fn lzw_decode_stats(cs: &CodeStream) -> Result<(Vec<u8>, u32), LzwError> {
    let mut table: Vec<Entry> = (0..=255u8)
        .map(|b| Entry {
            prefix: 0,
            byte: b,
            first: b,
            len: 1,
        })
        .collect();
    let mut out = Vec::new();
    let mut prev: Option<u16> = None;

    for (index, &code) in cs.codes().iter().enumerate() {
        let dict_len = table.len() as u32;
        let code32 = u32::from(code);
        match prev {
            None if code32 >= ALPHABET_SIZE => {
                return Err(LzwError::BadCode {
                    index,
                    code: code32,
                    limit: ALPHABET_SIZE,
                })
            }
            None => {}
            Some(p) => {
                let known = code32 < dict_len;
                // code == dict_len is the entry being defined by this very step
                if !known && !(code32 == dict_len && dict_len < DICT_CAP) {
                    return Err(LzwError::BadCode {
                        index,
                        code: code32,
                        limit: dict_len.min(DICT_CAP - 1) + 1,
                    });
                }
                if dict_len < DICT_CAP {
                    let prev_entry = table[usize::from(p)];
                    let byte = if known {
                        table[usize::from(code)].first
                    } else {
                        prev_entry.first
                    };
                    table.push(Entry {
                        prefix: p,
                        byte,
                        first: prev_entry.first,
                        len: prev_entry.len + 1,
                    });
                }
            }
        }
        emit(&table, code, &mut out);
        prev = Some(code);
    }
    Ok((out, table.len() as u32))
}

fn emit(table: &[Entry], code: u16, out: &mut Vec<u8>) {
    let len = table[usize::from(code)].len as usize;
    let start = out.len();
    out.resize(start + len, 0);
    let mut cur = code;
    for slot in out[start..].iter_mut().rev() {
        let e = table[usize::from(cur)];
        *slot = e.byte;
        cur = e.prefix;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example_codes() {
        assert_eq!(
            lzw_encode(b"BABAABAAAA").codes(),
            &[66, 65, 256, 257, 65, 260, 65]
        );
    }

    #[test]
    fn one_byte_shorter_ends_on_aa() {
        // without the tenth byte the final phrase is AA and AAA is never inserted
        assert_eq!(
            lzw_encode(b"BABAABAAA").codes(),
            &[66, 65, 256, 257, 65, 260]
        );
    }

    #[test]
    fn worked_example_insertions() {
        let steps = lzw_trace(b"BABAABAAAA");
        let got: Vec<(u16, Option<(u16, &[u8])>)> = steps
            .iter()
            .map(|s| (s.code, s.inserted.as_ref().map(|(i, v)| (*i, v.as_slice()))))
            .collect();
        let want: Vec<(u16, Option<(u16, &[u8])>)> = vec![
            (66, Some((256, b"BA"))),
            (65, Some((257, b"AB"))),
            (256, Some((258, b"BAA"))),
            (257, Some((259, b"ABA"))),
            (65, Some((260, b"AA"))),
            (260, Some((261, b"AAA"))),
            (65, None),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn phrase_reuse() {
        // A, B, AB@256, then ABA is 258 which the decoder has not seen yet
        assert_eq!(lzw_encode(b"ABABABA").codes(), &[65, 66, 256, 258]);
        let cs = CodeStream::from_codes(vec![65, 66, 256, 258]);
        assert_eq!(lzw_decode(&cs).unwrap(), b"ABABABA");
    }

    #[test]
    fn empty() {
        assert!(lzw_encode(b"").is_empty());
        assert_eq!(lzw_decode(&CodeStream::new()).unwrap(), b"");
    }

    #[test]
    fn decodes_worked_example() {
        let cs = CodeStream::from_codes(vec![66, 65, 256, 257, 65, 260, 65]);
        assert_eq!(lzw_decode(&cs).unwrap(), b"BABAABAAAA");
    }

    #[test]
    fn bad_codes() {
        let cs = CodeStream::from_codes(vec![65, 300]);
        assert!(matches!(
            lzw_decode(&cs),
            Err(LzwError::BadCode {
                index: 1,
                code: 300,
                ..
            })
        ));
        assert!(matches!(
            lzw_decode(&CodeStream::from_codes(vec![256])),
            Err(LzwError::BadCode { index: 0, .. })
        ));
        assert!(CodeStream::from_codes(vec![65, 300]).validate().is_err());
        assert!(CodeStream::from_codes(vec![65, 255, 257])
            .validate()
            .is_ok());
    }

    #[test]
    fn repeated_byte_is_sublinear() {
        let data = vec![7u8; 10_000];
        let cs = lzw_encode(&data);
        // phrase lengths 1, 2, 3, ... so about sqrt(2n) codes
        assert!(cs.len() < 200, "{} codes", cs.len());
        assert_eq!(lzw_decode(&cs).unwrap(), data);
    }

    #[test]
    fn dictionary_freezes_at_cap() {
        // Pseudo-random bytes force an insertion per code until the cap.
        let mut x = 0x2545_f491_u32;
        let data: Vec<u8> = (0..400_000)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 17;
                x ^= x << 5;
                (x >> 24) as u8
            })
            .collect();
        let (cs, stats) = lzw_encode_stats(&data);
        assert_eq!(stats.dictionary_len, DICT_CAP);
        assert!(cs.len() > (DICT_CAP - ALPHABET_SIZE) as usize);
        assert!(cs.validate().is_ok());
        assert_eq!(lzw_decode(&cs).unwrap(), data);
    }

    fn arb_bytes() -> impl Strategy<Value = Vec<u8>> {
        prop_oneof![
            proptest::collection::vec(any::<u8>(), 0..4096),
            proptest::collection::vec(0u8..3, 0..4096),
            (any::<u8>(), 0usize..4096).prop_map(|(b, n)| vec![b; n]),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(data in arb_bytes()) {
            let (cs, stats) = lzw_encode_stats(&data);
            prop_assert!(cs.validate().is_ok());
            // one insertion per code except the last, until the cap
            let expected = (cs.len().saturating_sub(1) as u32).min(DICT_CAP - ALPHABET_SIZE);
            prop_assert_eq!(stats.insertions, expected);
            prop_assert_eq!(stats.dictionary_len, ALPHABET_SIZE + stats.insertions);
            prop_assert_eq!(lzw_decode(&cs).unwrap(), data);
        }
    }
}
