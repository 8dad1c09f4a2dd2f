//! Achievable code lengths for arbitrary quantized signals.
//!
//! Each estimator is the exact length of a decodable code for the signal
//! (8-bit header included), so each is an upper bound on description length
//! within its own coding scheme.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codebook::HEADER_BITS;
use crate::quantize::QuantizedSignal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Estimator {
    Lz78,
    Sparse,
    Raw,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Lz78 => "LZ78",
            Estimator::Sparse => "SPARSE",
            Estimator::Raw => "RAW",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub bits: u64,
    pub estimator: Estimator,
}

impl ComplexityEstimate {
    /// `bits / (n m)`.
    pub fn rate(&self, sig: &QuantizedSignal) -> f64 {
        self.bits as f64 / (sig.len() as f64 * sig.resolution().bits() as f64)
    }
}

fn ceil_log2(count: u64) -> u64 {
    if count <= 1 {
        0
    } else {
        (64 - (count - 1).leading_zeros()) as u64
    }
}

/// The `n m` expansion bits of a signal, coordinate by coordinate.
pub fn expansion_bits(sig: &QuantizedSignal) -> Vec<u8> {
    let m = sig.resolution().bits();
    (0..sig.len())
        .flat_map(|i| {
            let k = sig.code(i);
            (0..m).rev().map(move |b| ((k >> b) & 1) as u8)
        })
        .collect()
}

/// Uncompressed baseline: `n m + 8`.
pub fn raw_length(sig: &QuantizedSignal) -> ComplexityEstimate {
    ComplexityEstimate {
        bits: sig.len() as u64 * sig.resolution().bits() as u64 + HEADER_BITS as u64,
        estimator: Estimator::Raw,
    }
}

/// `8 + ceil(log2(n+1)) + k (ceil(log2 n) + m)` for `k` nonzero coordinates.
pub fn sparse_length(sig: &QuantizedSignal) -> ComplexityEstimate {
    let n = sig.len() as u64;
    let k = sig.values().iter().filter(|&&v| v != 0.0).count() as u64;
    ComplexityEstimate {
        bits: HEADER_BITS as u64 + ceil_log2(n + 1) + k * (ceil_log2(n) + sig.resolution().bits() as u64),
        estimator: Estimator::Sparse,
    }
}

/// Result of incremental parsing of a bit string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lz78Parse {
    /// Phrases, counting a trailing partial phrase.
    pub phrases: u64,
    /// Code length without the header.
    pub code_bits: u64,
}

/// Incremental (LZ78) parsing of a binary string with a trie-aware code.
///
/// Each new phrase is a dictionary node plus one bit. A node that already
/// has both children can never be extended again, so the pointer ranges
/// over the currently extendable nodes only; when the node already has one
/// child the appended bit is forced and costs nothing. A trailing partial
/// phrase is a pointer to any node. The dictionary is never reset.
pub fn lz78_parse(bits: &[u8]) -> Lz78Parse {
    let mut children: Vec<[u32; 2]> = vec![[0, 0]];
    let mut extendable: u64 = 1;
    let mut cur = 0usize;
    let mut phrases = 0;
    let mut code_bits = 0;
    for &b in bits {
        let b = (b & 1) as usize;
        let next = children[cur][b];
        if next != 0 {
            cur = next as usize;
            continue;
        }
        let degree = children[cur].iter().filter(|&&c| c != 0).count();
        code_bits += ceil_log2(extendable) + u64::from(degree == 0);
        let id = children.len() as u32;
        children.push([0, 0]);
        children[cur][b] = id;
        extendable += 1;
        if degree == 1 {
            extendable -= 1;
        }
        phrases += 1;
        cur = 0;
    }
    if cur != 0 {
        code_bits += ceil_log2(children.len() as u64);
        phrases += 1;
    }
    Lz78Parse { phrases, code_bits }
}

pub fn lz78_length(sig: &QuantizedSignal) -> ComplexityEstimate {
    let parse = lz78_parse(&expansion_bits(sig));
    ComplexityEstimate {
        bits: parse.code_bits + HEADER_BITS as u64,
        estimator: Estimator::Lz78,
    }
}

/// Shortest of all estimators; earlier estimators win ties.
pub fn best_estimate(sig: &QuantizedSignal) -> ComplexityEstimate {
    [sparse_length(sig), lz78_length(sig), raw_length(sig)]
        .into_iter()
        .min_by_key(|e| e.bits)
        .expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::Resolution;
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn signal(codes: &[u64], m: u32) -> QuantizedSignal {
        QuantizedSignal::from_codes(codes, Resolution::new(m).unwrap()).unwrap()
    }

    fn lz_bits(bits: &[u8]) -> u64 {
        lz78_parse(bits).code_bits + HEADER_BITS as u64
    }

    fn doubled(bits: &[u8]) -> Vec<u8> {
        bits.iter().chain(bits).copied().collect()
    }

    /// Textbook parse for the phrase count only.
    fn naive_phrases(bits: &[u8]) -> u64 {
        let mut dict = std::collections::HashSet::new();
        let mut cur = Vec::new();
        let mut count = 0;
        for &b in bits {
            cur.push(b);
            if dict.insert(cur.clone()) {
                count += 1;
                cur.clear();
            }
        }
        count + u64::from(!cur.is_empty())
    }

    #[test]
    fn raw_examples() {
        assert_eq!(raw_length(&signal(&[0, 1, 2, 3], 2)).bits, 16);
        assert_eq!(raw_length(&signal(&[1], 1)).bits, 9);
    }

    #[test]
    fn sparse_examples() {
        assert_eq!(sparse_length(&signal(&[0; 16], 4)).bits, 13);
        let mut one = [0; 16];
        one[3] = 7;
        assert_eq!(sparse_length(&signal(&one, 4)).bits, 21);
        let dense = signal(&[1; 16], 4);
        assert!(sparse_length(&dense).bits > raw_length(&dense).bits);
        assert_eq!(best_estimate(&dense).estimator, Estimator::Raw);
        let periodic = signal(&[1; 256], 4);
        assert_eq!(best_estimate(&periodic).estimator, Estimator::Lz78);
    }

    #[test]
    fn lz78_single_phrase() {
        // "1": one phrase from the root, pointer needs no bits, one literal bit.
        let e = lz78_length(&signal(&[1], 1));
        assert_eq!(e.bits, 9);
    }

    #[test]
    fn lz78_zero_run_hand_count() {
        // 512 zeros parse into phrases of lengths 1, 2, ..., 31 (496 bits) and a
        // trailing partial phrase of 16 bits. The trie is a chain, so every node
        // stays extendable: phrase i costs ceil(log2 i) pointer bits plus the
        // literal bit, 124 + 31 bits in total. The trailing pointer ranges over
        // 32 nodes and costs 5 bits.
        let zeros = signal(&[0; 64], 8);
        let parse = lz78_parse(&expansion_bits(&zeros));
        assert_eq!(parse.phrases, 32);
        assert_eq!(parse.code_bits, 124 + 31 + 5);
        assert_eq!(lz78_length(&zeros).bits, 168);
    }

    #[test]
    fn phrase_count_matches_naive_parse() {
        let mut s = Stream::new(3);
        for len in [1usize, 2, 7, 64, 1000] {
            let bits: Vec<u8> = (0..len).map(|_| (s.next_u64() & 1) as u8).collect();
            assert_eq!(lz78_parse(&bits).phrases, naive_phrases(&bits));
        }
    }

    #[test]
    fn zero_signal_prefers_sparse() {
        let z = signal(&[0; 32], 5);
        assert_eq!(best_estimate(&z).estimator, Estimator::Sparse);
    }

    /// Fraction of 500 strings of 64..400 bits, built from `motif_len`-bit
    /// motifs, whose doubling costs less than two copies.
    fn repetition_hold_rate(seed: u64, motif_len: Option<usize>) -> f64 {
        let mut s = Stream::new(seed);
        let mut holds = 0;
        for _ in 0..500 {
            let len = 64 + s.below(337) as usize;
            let period = motif_len.unwrap_or(len);
            let motif: Vec<u8> = (0..period).map(|_| (s.next_u64() & 1) as u8).collect();
            let bits: Vec<u8> = motif.iter().copied().cycle().take(len).collect();
            holds += u32::from(lz_bits(&doubled(&bits)) < 2 * lz_bits(&bits));
        }
        holds as f64 / 500.0
    }

    #[test]
    fn repetition_is_usually_cheaper_than_twice() {
        // Not universal: some strings gain less than a header from their
        // second copy.
        assert!(repetition_hold_rate(11, None) >= 0.95);
        for period in [1, 2, 5, 8, 16] {
            assert!(repetition_hold_rate(12 + period as u64, Some(period)) >= 0.95);
        }
    }

    proptest! {
        #[test]
        fn best_never_exceeds_raw(codes in proptest::collection::vec(0u64..16, 1..200)) {
            let sig = signal(&codes, 4);
            let best = best_estimate(&sig);
            prop_assert!(best.bits <= raw_length(&sig).bits);
            prop_assert!(best.bits >= 1);
        }
    }
}
