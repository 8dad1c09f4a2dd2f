//! Binary expansion and m-bit truncation on `[0, 1]`.
//!
//! `[x]_m` keeps the first `m` bits of the terminating binary expansion of
//! `x`. The endpoint is mapped onto the grid: `[1]_m = 1 - 2^-m`, so every
//! quantized value is `k * 2^-m` with `0 <= k < 2^m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest resolution for which every grid point is an exact `f64`.
pub const MAX_RESOLUTION: u32 = 53;

/// Bits per coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Resolution(u32);

impl Resolution {
    pub fn new(bits: u32) -> Result<Self> {
        if (1..=MAX_RESOLUTION).contains(&bits) {
            Ok(Self(bits))
        } else {
            Err(Error::domain("resolution", bits as f64))
        }
    }

    /// `m_n = ceil(ln n)`, clamped to at least one bit.
    pub fn for_length(n: usize) -> Self {
        let m = (n.max(1) as f64).ln().ceil().max(1.0) as u32;
        Self(m.min(MAX_RESOLUTION))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Grid spacing `2^-m`.
    pub fn step(self) -> f64 {
        libm::ldexp(1.0, -(self.0 as i32))
    }

    /// Number of grid points, `2^m`.
    pub fn levels(self) -> u64 {
        1u64 << self.0
    }
}

impl TryFrom<u32> for Resolution {
    type Error = Error;

    fn try_from(bits: u32) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<Resolution> for u32 {
    fn from(r: Resolution) -> u32 {
        r.0
    }
}

/// A length-`n` vector of values on the `2^-m` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedSignal {
    values: Vec<f64>,
    resolution: Resolution,
}

impl QuantizedSignal {
    /// Builds a signal from grid indices `k` (value `k * 2^-m`).
    pub fn from_codes(codes: &[u64], resolution: Resolution) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let step = resolution.step();
        let values = codes
            .iter()
            .enumerate()
            .map(|(index, &k)| {
                if k < resolution.levels() {
                    Ok(k as f64 * step)
                } else {
                    Err(Error::CoordinateDomain { index, value: k as f64 })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { values, resolution })
    }

    /// Validates that every value already lies on the grid.
    pub fn from_values(values: Vec<f64>, resolution: Resolution) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let scale = resolution.levels() as f64;
        for (index, &v) in values.iter().enumerate() {
            let k = v * scale;
            if !(0.0..scale).contains(&k) || k.fract() != 0.0 {
                return Err(Error::CoordinateDomain { index, value: v });
            }
        }
        Ok(Self { values, resolution })
    }

    pub fn zeros(n: usize, resolution: Resolution) -> Result<Self> {
        Self::from_codes(&vec![0; n], resolution)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid index of coordinate `i`.
    pub fn code(&self, i: usize) -> u64 {
        (self.values[i] * self.resolution.levels() as f64) as u64
    }

    pub fn codes(&self) -> Vec<u64> {
        (0..self.len()).map(|i| self.code(i)).collect()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_unit(x: f64) -> Result<f64> {
    // One ulp of slack above 1; anything below zero (other than -0.0) is rejected.
    if !(0.0..=1.0 + f64::EPSILON).contains(&x) {
        Err(Error::domain("x", x))
    } else {
        Ok(x.clamp(0.0, 1.0))
    }
}

/// Grid index `floor(2^m * x')`, with `x' = min(x, 1 - 2^{-m-1})`.
fn grid_index(x: f64, m: Resolution) -> Result<u64> {
    let x = check_unit(x)?;
    let capped = x.min(1.0 - libm::ldexp(1.0, -(m.bits() as i32) - 1));
    // Multiplying by a power of two is exact for m <= 53.
    Ok(libm::ldexp(capped, m.bits() as i32).floor() as u64)
}

/// First `m` bits of the binary expansion of `x`, most significant first.
pub fn binary_expansion(x: f64, m: Resolution) -> Result<Vec<u8>> {
    let k = grid_index(x, m)?;
    let bits = m.bits();
    Ok((0..bits).map(|i| ((k >> (bits - 1 - i)) & 1) as u8).collect())
}

/// `[x]_m`, the m-bit truncation of `x`.
pub fn truncate(x: f64, m: Resolution) -> Result<f64> {
    Ok(grid_index(x, m)? as f64 * m.step())
}

/// Coordinate-wise truncation.
pub fn quantize_vector(x: &[f64], m: Resolution) -> Result<QuantizedSignal> {
    let codes = x
        .iter()
        .enumerate()
        .map(|(index, &v)| grid_index(v, m).map_err(|_| Error::CoordinateDomain { index, value: v }))
        .collect::<Result<Vec<_>>>()?;
    QuantizedSignal::from_codes(&codes, m)
}

/// `sqrt(n * 2^{-2m+2})`, an upper bound on `||e_hat - e||_2` for the
/// quantization residuals `e = x - [x]_m` of any two signals.
pub fn quantization_error_bound(n: usize, m: Resolution) -> f64 {
    (n as f64 * libm::ldexp(1.0, 2 - 2 * m.bits() as i32)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn res(m: u32) -> Resolution {
        Resolution::new(m).unwrap()
    }

    #[test]
    fn expansion_examples() {
        assert_eq!(binary_expansion(0.625, res(3)).unwrap(), vec![1, 0, 1]);
        assert_eq!(binary_expansion(0.0, res(4)).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(binary_expansion(1.0, res(3)).unwrap(), vec![1, 1, 1]);
        // Terminating expansion for dyadic rationals.
        assert_eq!(binary_expansion(0.5, res(3)).unwrap(), vec![1, 0, 0]);
    }

    #[test]
    fn truncate_examples() {
        assert_eq!(truncate(0.625, res(2)).unwrap(), 0.5);
        assert_eq!(truncate(0.999, res(1)).unwrap(), 0.5);
        // 1/3 = 0.010101..._2, so four bits give 0.0101_2 = 5/16.
        assert_eq!(truncate(1.0 / 3.0, res(4)).unwrap(), 0.3125);
        assert_eq!(truncate(1.0, res(4)).unwrap(), 1.0 - 1.0 / 16.0);
    }

    #[test]
    fn quantize_examples() {
        let q = quantize_vector(&[0.625, 0.0], res(2)).unwrap();
        assert_eq!(q.values(), &[0.5, 0.0]);
        let q = quantize_vector(&[1.0 / 3.0, 2.0 / 3.0, 1.0], res(4)).unwrap();
        assert_eq!(q.values(), &[0.3125, 0.625, 0.9375]);
        let again = quantize_vector(q.values(), res(4)).unwrap();
        assert_eq!(again, q);
    }

    #[test]
    fn error_bound_examples() {
        assert_eq!(quantization_error_bound(4, res(1)), 2.0);
        assert_eq!(quantization_error_bound(1, res(1)), 1.0);
        assert_eq!(quantization_error_bound(256, res(8)), 0.125);
    }

    #[test]
    fn domain_errors() {
        assert!(truncate(-0.1, res(3)).is_err());
        assert!(truncate(1.1, res(3)).is_err());
        assert!(truncate(f64::NAN, res(3)).is_err());
        assert_eq!(truncate(1.0 + f64::EPSILON, res(2)).unwrap(), 0.75);
        match quantize_vector(&[0.2, 2.0], res(3)) {
            Err(Error::CoordinateDomain { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Resolution::new(0).is_err());
        assert!(Resolution::new(54).is_err());
        assert!(QuantizedSignal::from_values(vec![0.3], res(2)).is_err());
        assert!(QuantizedSignal::from_values(vec![1.0], res(2)).is_err());
    }

    #[test]
    fn resolution_for_length_uses_natural_log() {
        assert_eq!(Resolution::for_length(256).bits(), 6);
        assert_eq!(Resolution::for_length(64).bits(), 5);
        assert_eq!(Resolution::for_length(1).bits(), 1);
    }

    proptest! {
        #[test]
        fn truncation_gap(x in 0.0f64..1.0, m in 1u32..=53) {
            let m = res(m);
            let t = truncate(x, m).unwrap();
            prop_assert!(0.0 <= x - t);
            prop_assert!(x - t < m.step());
        }

        #[test]
        fn truncation_prefix(x in 0.0f64..=1.0, m in 1u32..=53, coarser in 1u32..=53) {
            let coarser = coarser.min(m);
            let fine = truncate(x, res(m)).unwrap();
            prop_assert_eq!(truncate(fine, res(coarser)).unwrap(), truncate(x, res(coarser)).unwrap());
        }

        #[test]
        fn expansion_matches_truncation(x in 0.0f64..=1.0, m in 1u32..=53) {
            let m = res(m);
            let bits = binary_expansion(x, m).unwrap();
            let sum: f64 = bits
                .iter()
                .enumerate()
                .map(|(i, &b)| b as f64 * libm::ldexp(1.0, -(i as i32) - 1))
                .sum();
            prop_assert_eq!(sum, truncate(x, m).unwrap());
        }

        #[test]
        fn residual_difference_bound(
            pairs in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..64),
            m in 1u32..=20,
        ) {
            let m = res(m);
            let (u, v): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let qu = quantize_vector(&u, m).unwrap();
            let qv = quantize_vector(&v, m).unwrap();
            let norm = u.iter().zip(qu.values()).zip(v.iter().zip(qv.values()))
                .map(|((a, qa), (b, qb))| ((a - qa) - (b - qb)).powi(2))
                .sum::<f64>()
                .sqrt();
            prop_assert!(norm <= quantization_error_bound(u.len(), m));
        }
    }
}
