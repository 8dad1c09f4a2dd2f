//! Payload layouts of the built-in generator families.
//!
//! All fields are fixed width and most significant bit first. With
//! `p = ceil(log2 n)` position bits and `m` value bits:
//!
//! | family               | payload                                                        |
//! |----------------------|----------------------------------------------------------------|
//! | `CONSTANT`           | value (m)                                                      |
//! | `K_SPARSE`           | count k (ceil(log2(max_k+1))), k positions (p), k values (m)    |
//! | `PIECEWISE_CONSTANT` | breaks c (ceil(log2 max_pieces)), c breakpoints (p), c+1 levels (m) |
//! | `PRNG_EXPANSION`     | seed (seed_bits)                                               |
//!
//! Validity rules: sparse positions strictly increase and sparse values are
//! nonzero; breakpoints strictly increase within `1..n` and adjacent levels
//! differ. A payload must be consumed exactly.
//!
//! Valid payloads of one shape (family plus count field) all share a
//! length, and ranking them in lexicographic field order is the same as
//! ranking them as unsigned integers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bits::Bits;
use super::expander;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum Generator {
    Constant,
    KSparse { max_k: u32 },
    PiecewiseConstant { max_pieces: u32 },
    PrngExpansion { seed_bits: u32 },
}

/// Bits needed to index `count` distinct values.
pub(crate) fn index_width(count: u64) -> u32 {
    if count <= 1 {
        0
    } else {
        64 - (count - 1).leading_zeros()
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn pow(base: u64, exp: u32) -> u128 {
    (base as u128).checked_pow(exp).unwrap_or(u128::MAX)
}

fn mul(a: u128, b: u128) -> u128 {
    a.saturating_mul(b)
}

/// The `idx`-th strictly increasing `k`-tuple from `lo..hi` in lexicographic order.
fn unrank_combination(lo: u64, hi: u64, k: u32, mut idx: u128) -> Vec<u64> {
    let mut out = Vec::with_capacity(k as usize);
    let mut next = lo;
    for slot in 0..k {
        let left = (k - slot - 1) as u64;
        loop {
            let with_next = binomial(hi - next - 1, left);
            if idx < with_next {
                out.push(next);
                next += 1;
                break;
            }
            idx -= with_next;
            next += 1;
        }
    }
    out
}

impl Generator {
    /// The 8-bit header tag.
    pub fn id(self) -> u8 {
        match self {
            Generator::Constant => 0,
            Generator::KSparse { .. } => 1,
            Generator::PiecewiseConstant { .. } => 2,
            Generator::PrngExpansion { .. } => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::Constant => "CONSTANT",
            Generator::KSparse { .. } => "K_SPARSE",
            Generator::PiecewiseConstant { .. } => "PIECEWISE_CONSTANT",
            Generator::PrngExpansion { .. } => "PRNG_EXPANSION",
        }
    }

    pub(crate) fn validate(self) -> Result<()> {
        match self {
            Generator::KSparse { max_k: 0 } => Err(Error::Config("K_SPARSE needs max_k >= 1".into())),
            Generator::PiecewiseConstant { max_pieces: 0 } => {
                Err(Error::Config("PIECEWISE_CONSTANT needs max_pieces >= 1".into()))
            }
            Generator::PrngExpansion { seed_bits } if !(1..=64).contains(&seed_bits) => {
                Err(Error::Config("PRNG_EXPANSION needs 1..=64 seed bits".into()))
            }
            _ => Ok(()),
        }
    }

    fn count_width(self) -> u32 {
        match self {
            Generator::KSparse { max_k } => index_width(max_k as u64 + 1),
            Generator::PiecewiseConstant { max_pieces } => index_width(max_pieces as u64),
            _ => 0,
        }
    }

    /// Every shape this generator can emit at length `n`.
    pub(crate) fn shapes(self, n: usize) -> Vec<Shape> {
        let n = n as u64;
        let params = match self {
            Generator::Constant | Generator::PrngExpansion { .. } => 0..=0,
            Generator::KSparse { max_k } => 0..=(max_k as u64).min(n) as u32,
            Generator::PiecewiseConstant { max_pieces } => 0..=(max_pieces as u64 - 1).min(n - 1) as u32,
        };
        params.map(|param| Shape { generator: self, param }).collect()
    }

    /// Grid indices of the signal a payload prints.
    pub(crate) fn decode(self, payload: &Bits, n: usize, m: u32) -> Result<Vec<u64>> {
        let pos_width = index_width(n as u64);
        let mut r = payload.reader();
        let codes = match self {
            Generator::Constant => vec![r.read(m, "value")?; n],
            Generator::KSparse { max_k } => {
                let k = r.read(self.count_width(), "sparsity count")?;
                if k > max_k as u64 || k > n as u64 {
                    return Err(Error::MalformedPayload {
                        field: "sparsity count",
                    });
                }
                let mut positions = Vec::with_capacity(k as usize);
                for _ in 0..k {
                    let p = r.read(pos_width, "position")?;
                    if p >= n as u64 || positions.last().is_some_and(|&q| p <= q) {
                        return Err(Error::MalformedPayload { field: "position" });
                    }
                    positions.push(p);
                }
                let mut codes = vec![0; n];
                for &p in &positions {
                    let v = r.read(m, "value")?;
                    if v == 0 {
                        return Err(Error::MalformedPayload { field: "value" });
                    }
                    codes[p as usize] = v;
                }
                codes
            }
            Generator::PiecewiseConstant { max_pieces } => {
                let c = r.read(self.count_width(), "breakpoint count")?;
                if c >= max_pieces as u64 || c >= n as u64 {
                    return Err(Error::MalformedPayload {
                        field: "breakpoint count",
                    });
                }
                let mut breaks = Vec::with_capacity(c as usize + 1);
                for _ in 0..c {
                    let b = r.read(pos_width, "breakpoint")?;
                    if b == 0 || b >= n as u64 || breaks.last().is_some_and(|&q| b <= q) {
                        return Err(Error::MalformedPayload { field: "breakpoint" });
                    }
                    breaks.push(b);
                }
                breaks.push(n as u64);
                let mut codes = Vec::with_capacity(n);
                let mut prev: Option<u64> = None;
                for &end in &breaks {
                    let level = r.read(m, "level")?;
                    if prev == Some(level) {
                        return Err(Error::MalformedPayload { field: "level" });
                    }
                    prev = Some(level);
                    codes.resize(end as usize, level);
                }
                codes
            }
            Generator::PrngExpansion { seed_bits } => {
                let seed = r.read(seed_bits, "seed")?;
                expander::expand(seed, n, m)
            }
        };
        if r.remaining() != 0 {
            return Err(Error::MalformedPayload { field: "trailing bits" });
        }
        Ok(codes)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Constant => f.write_str("CONSTANT"),
            Generator::KSparse { max_k } => write!(f, "K_SPARSE:{max_k}"),
            Generator::PiecewiseConstant { max_pieces } => write!(f, "PIECEWISE_CONSTANT:{max_pieces}"),
            Generator::PrngExpansion { seed_bits } => write!(f, "PRNG_EXPANSION:{seed_bits}"),
        }
    }
}

/// Parses `CONSTANT`, `K_SPARSE:<max_k>`, `PIECEWISE_CONSTANT:<max_pieces>`
/// or `PRNG_EXPANSION:<seed_bits>`.
impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg)),
            None => (s, None),
        };
        let arg = |default: u32| -> Result<u32> {
            arg.map_or(Ok(default), |a| {
                a.parse()
                    .map_err(|_| Error::Config(format!("bad generator parameter in {s:?}")))
            })
        };
        let g = match name.to_ascii_uppercase().as_str() {
            "CONSTANT" => Generator::Constant,
            "K_SPARSE" => Generator::KSparse { max_k: arg(1)? },
            "PIECEWISE_CONSTANT" => Generator::PiecewiseConstant { max_pieces: arg(2)? },
            "PRNG_EXPANSION" => Generator::PrngExpansion { seed_bits: arg(8)? },
            _ => return Err(Error::Config(format!("unknown generator {s:?}"))),
        };
        g.validate()?;
        Ok(g)
    }
}

/// A generator with its count field fixed (sparsity or number of breakpoints).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Shape {
    pub generator: Generator,
    pub param: u32,
}

impl Shape {
    pub fn payload_len(&self, n: usize, m: u32) -> u32 {
        let pos_width = index_width(n as u64);
        let cw = self.generator.count_width();
        let p = self.param;
        match self.generator {
            Generator::Constant => m,
            Generator::KSparse { .. } => cw + p * (pos_width + m),
            Generator::PiecewiseConstant { .. } => cw + p * pos_width + (p + 1) * m,
            Generator::PrngExpansion { seed_bits } => seed_bits,
        }
    }

    fn value_tuples(&self, m: u32) -> u128 {
        let levels = 1u64 << m;
        match self.generator {
            Generator::KSparse { .. } => pow(levels - 1, self.param),
            Generator::PiecewiseConstant { .. } => mul(levels as u128, pow(levels - 1, self.param)),
            _ => 1,
        }
    }

    fn position_tuples(&self, n: usize) -> u128 {
        let n = n as u64;
        match self.generator {
            Generator::KSparse { .. } => binomial(n, self.param as u64),
            Generator::PiecewiseConstant { .. } => binomial(n - 1, self.param as u64),
            _ => 1,
        }
    }

    /// Number of valid payloads of this shape.
    pub fn count(&self, n: usize, m: u32) -> u128 {
        match self.generator {
            Generator::Constant => 1u128 << m,
            Generator::PrngExpansion { seed_bits } => 1u128 << seed_bits,
            _ => mul(self.position_tuples(n), self.value_tuples(m)),
        }
    }

    /// The `idx`-th valid payload in increasing integer order.
    pub fn unrank(&self, n: usize, m: u32, idx: u128) -> Bits {
        let pos_width = index_width(n as u64);
        let cw = self.generator.count_width();
        let k = self.param;
        let mut bits = Bits::new();
        match self.generator {
            Generator::Constant => bits.push_field(idx as u64, m),
            Generator::PrngExpansion { seed_bits } => bits.push_field(idx as u64, seed_bits),
            Generator::KSparse { .. } => {
                let tuples = self.value_tuples(m);
                let (comb, mut vals) = (idx / tuples, idx % tuples);
                bits.push_field(k as u64, cw);
                for p in unrank_combination(0, n as u64, k, comb) {
                    bits.push_field(p, pos_width);
                }
                let radix = (1u128 << m) - 1;
                let mut digits = vec![0u64; k as usize];
                for d in digits.iter_mut().rev() {
                    *d = (vals % radix) as u64 + 1;
                    vals /= radix;
                }
                for d in digits {
                    bits.push_field(d, m);
                }
            }
            Generator::PiecewiseConstant { .. } => {
                let tuples = self.value_tuples(m);
                let (comb, vals) = (idx / tuples, idx % tuples);
                bits.push_field(k as u64, cw);
                for b in unrank_combination(1, n as u64, k, comb) {
                    bits.push_field(b, pos_width);
                }
                let radix = (1u128 << m) - 1;
                let tail = pow(radix as u64, k);
                let (first, mut rest) = (vals / tail, vals % tail);
                let mut offsets = vec![0u64; k as usize];
                for d in offsets.iter_mut().rev() {
                    *d = (rest % radix) as u64;
                    rest /= radix;
                }
                let mut prev = first as u64;
                bits.push_field(prev, m);
                for r in offsets {
                    // Skip over the previous level to keep neighbours distinct.
                    let level = if r < prev { r } else { r + 1 };
                    bits.push_field(level, m);
                    prev = level;
                }
            }
        }
        bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(index_width(1), 0);
        assert_eq!(index_width(2), 1);
        assert_eq!(index_width(16), 4);
        assert_eq!(index_width(17), 5);
        assert_eq!(index_width(256), 8);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(256, 1), 256);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(40, 20), 137_846_528_820);
    }

    #[test]
    fn combinations_in_lex_order() {
        let all: Vec<_> = (0..binomial(5, 3)).map(|i| unrank_combination(0, 5, 3, i)).collect();
        assert_eq!(all.first().unwrap(), &vec![0, 1, 2]);
        assert_eq!(all.last().unwrap(), &vec![2, 3, 4]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn unrank_decodes_and_is_increasing() {
        let gens = [
            Generator::Constant,
            Generator::KSparse { max_k: 2 },
            Generator::PiecewiseConstant { max_pieces: 3 },
            Generator::PrngExpansion { seed_bits: 3 },
        ];
        let (n, m) = (5, 2);
        for g in gens {
            for shape in g.shapes(n) {
                let payloads: Vec<Bits> = (0..shape.count(n, m)).map(|i| shape.unrank(n, m, i)).collect();
                assert!(payloads.windows(2).all(|w| w[0] < w[1]), "{g} {shape:?}");
                for p in &payloads {
                    assert_eq!(p.len() as u32, shape.payload_len(n, m));
                    g.decode(p, n, m).unwrap();
                }
            }
        }
    }

    #[test]
    fn unrank_is_exhaustive() {
        // Brute force over every bit string of the shape's length.
        let (n, m) = (4, 2);
        for g in [
            Generator::KSparse { max_k: 2 },
            Generator::PiecewiseConstant { max_pieces: 3 },
        ] {
            for shape in g.shapes(n) {
                let len = shape.payload_len(n, m);
                let valid = (0..1u64 << len)
                    .filter(|&v| {
                        let bits = Bits::from_u64(v, len);
                        // Only strings whose count field selects this shape.
                        g.decode(&bits, n, m).is_ok()
                            && bits.reader().read(g.count_width(), "c").unwrap() == shape.param as u64
                    })
                    .count() as u128;
                assert_eq!(valid, shape.count(n, m), "{g} {shape:?}");
            }
        }
    }

    #[test]
    fn malformed_fields_are_named() {
        let n = 4;
        let g = Generator::KSparse { max_k: 1 };
        // count=1, position=2, value=0 -> value must be nonzero
        let mut b = Bits::new();
        b.push_field(1, 1);
        b.push_field(2, 2);
        b.push_field(0, 2);
        assert!(matches!(
            g.decode(&b, n, 2),
            Err(Error::MalformedPayload { field: "value" })
        ));

        let g = Generator::KSparse { max_k: 2 };
        let mut b = Bits::new();
        b.push_field(2, 2);
        b.push_field(3, 2);
        b.push_field(1, 2);
        b.push_field(1, 2);
        b.push_field(1, 2);
        assert!(matches!(
            g.decode(&b, n, 2),
            Err(Error::MalformedPayload { field: "position" })
        ));

        let mut short = Bits::new();
        short.push_field(1, 2);
        assert!(matches!(
            g.decode(&short, n, 2),
            Err(Error::MalformedPayload { field: "position" })
        ));

        let mut long = Bits::from_u64(1, 2);
        long.push_field(0, 2);
        long.push_field(1, 2);
        long.push_field(0, 1);
        assert!(matches!(
            g.decode(&long, n, 2),
            Err(Error::MalformedPayload { field: "trailing bits" })
        ));

        let pc = Generator::PiecewiseConstant { max_pieces: 2 };
        let mut b = Bits::from_u64(1, 1);
        b.push_field(2, 2);
        b.push_field(3, 2);
        b.push_field(3, 2);
        assert!(matches!(
            pc.decode(&b, n, 2),
            Err(Error::MalformedPayload { field: "level" })
        ));
    }

    #[test]
    fn parse_generators() {
        assert_eq!("CONSTANT".parse::<Generator>().unwrap(), Generator::Constant);
        assert_eq!(
            "k_sparse:3".parse::<Generator>().unwrap(),
            Generator::KSparse { max_k: 3 }
        );
        assert!("K_SPARSE:0".parse::<Generator>().is_err());
        assert!("WAVELET".parse::<Generator>().is_err());
        let g = Generator::PrngExpansion { seed_bits: 8 };
        assert_eq!(g.to_string().parse::<Generator>().unwrap(), g);
    }
}
