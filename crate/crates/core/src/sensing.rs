//! Gaussian measurement ensembles and the additive noise channel.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Largest number of matrix entries `draw_ensemble` will allocate.
pub const MAX_ENTRIES: usize = 1 << 26;

/// Magic bytes of the binary matrix export.
pub const MATRIX_MAGIC: [u8; 8] = *b"MCPMAT01";

pub const POWER_ITERATION_TOL: f64 = 1e-10;
pub const POWER_ITERATION_CAP: usize = 10_000;
const MAX_SQUARINGS: usize = 64;

/// A `d x n` matrix of i.i.d. N(0, 1) entries, a pure function of `(d, n, seed)`.
///
/// Entries are drawn in row-major order from the seed's stream and stored
/// column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingEnsemble {
    d: usize,
    n: usize,
    seed: u64,
    cols: Vec<f64>,
}

impl SensingEnsemble {
    pub fn draw(d: usize, n: usize, seed: u64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        match d.checked_mul(n) {
            Some(size) if size <= MAX_ENTRIES => {}
            _ => {
                return Err(Error::SizeOverflow {
                    rows: d,
                    cols: n,
                    cap: MAX_ENTRIES,
                })
            }
        }
        let mut stream = Stream::new(seed);
        let mut cols = vec![0.0; d * n];
        for i in 0..d {
            for j in 0..n {
                cols[j * d + i] = stream.normal();
            }
        }
        Ok(Self { d, n, seed, cols })
    }

    /// Wraps explicit row-major entries. The seed is informational.
    pub fn from_row_major(d: usize, n: usize, seed: u64, rows: &[f64]) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if rows.len() != d * n {
            return Err(Error::DimensionMismatch {
                expected: d * n,
                got: rows.len(),
            });
        }
        let mut cols = vec![0.0; d * n];
        for i in 0..d {
            for j in 0..n {
                cols[j * d + i] = rows[i * n + j];
            }
        }
        Ok(Self { d, n, seed, cols })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols[j * self.d + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.d..(j + 1) * self.d]
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut rows = vec![0.0; self.d * self.n];
        for j in 0..self.n {
            for i in 0..self.d {
                rows[i * self.n + j] = self.cols[j * self.d + i];
            }
        }
        rows
    }

    /// Accumulates `sum_j values[j] * A[:, support[j]]` into `out`, in the
    /// given column order. Every row sees its terms added in that order, so
    /// for increasing supports the result is bit-identical to a dense
    /// row-by-row product.
    pub fn image_into(&self, support: &[u32], values: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&j, &v) in support.iter().zip(values) {
            for (o, &a) in out.iter_mut().zip(self.column(j as usize)) {
                *o += a * v;
            }
        }
    }

    /// `A x`.
    pub fn measure(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.d];
        for (j, &v) in x.iter().enumerate() {
            for (o, &a) in y.iter_mut().zip(self.column(j)) {
                *o += a * v;
            }
        }
        Ok(y)
    }

    /// `A^T v`.
    pub fn transpose_mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: v.len(),
            });
        }
        Ok((0..self.n)
            .map(|j| self.column(j).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `y = A x + sigma g`, with `g` standard normal from `noise_seed`.
    pub fn measure_noisy(&self, x: &[f64], sigma: f64, noise_seed: u64) -> Result<MeasurementRecord> {
        let mut y = self.measure(x)?;
        if sigma != 0.0 {
            for (yi, wi) in y.iter_mut().zip(noise(self.d, sigma, noise_seed)?) {
                *yi += wi;
            }
        }
        Ok(MeasurementRecord { y, sigma, noise_seed })
    }

    /// Largest singular value.
    pub fn sigma_max(&self) -> Result<f64> {
        sigma_max_with(self, POWER_ITERATION_TOL, POWER_ITERATION_CAP)
    }

    /// Writes the documented little-endian layout: magic, `d`, `n`, `seed`
    /// (u64 each), then `d * n` row-major f64 entries.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&MATRIX_MAGIC)?;
        for v in [self.d as u64, self.n as u64, self.seed] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.to_row_major() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_binary<R: Read>(mut r: R) -> std::io::Result<Self> {
        let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_owned());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != MATRIX_MAGIC {
            return Err(bad("bad matrix magic"));
        }
        let mut word = [0u8; 8];
        let mut header = [0u64; 3];
        for h in &mut header {
            r.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let [d, n, seed] = header;
        let (d, n) = (d as usize, n as usize);
        let len = d
            .checked_mul(n)
            .filter(|&l| l <= MAX_ENTRIES)
            .ok_or_else(|| bad("matrix too large"))?;
        let mut rows = vec![0.0; len];
        for v in &mut rows {
            r.read_exact(&mut word)?;
            *v = f64::from_le_bytes(word);
        }
        Self::from_row_major(d, n, seed, &rows).map_err(|e| bad(&e.to_string()))
    }
}

/// `sigma g` with `g` standard normal from `noise_seed`.
pub fn noise(d: usize, sigma: f64, noise_seed: u64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::domain("sigma", sigma));
    }
    let mut g = Stream::new(noise_seed).normal_vec(d);
    for v in &mut g {
        *v *= sigma;
    }
    Ok(g)
}

/// Power iteration on the smaller Gram matrix (`A A^T` or `A^T A`), stopping
/// when the eigenvalue estimate changes by at most `tol` relative. The start
/// vector comes from repeated squaring, so small spectral gaps cost a few
/// matrix products instead of thousands of iterations.
pub fn sigma_max_with(a: &SensingEnsemble, tol: f64, cap: usize) -> Result<f64> {
    let (d, n) = (a.d, a.n);
    let k = d.min(n);
    let mut gram = vec![0.0; k * k];
    if d <= n {
        // (A A^T)_{ik} = sum_j A_ij A_kj
        for j in 0..n {
            let col = a.column(j);
            for i in 0..d {
                let ai = col[i];
                for l in i..d {
                    gram[i * k + l] += ai * col[l];
                }
            }
        }
    } else {
        for i in 0..n {
            for l in i..n {
                gram[i * k + l] = a.column(i).iter().zip(a.column(l)).map(|(x, y)| x * y).sum();
            }
        }
    }
    for i in 0..k {
        for l in 0..i {
            gram[i * k + l] = gram[l * k + i];
        }
    }

    let mut v = leading_direction(&gram, k);
    if normalize(&mut v) == 0.0 {
        v = Stream::new(0x005E_ED0F_5EED).normal_vec(k);
        normalize(&mut v);
    }
    let mut w = vec![0.0; k];
    let mut lambda = 0.0;
    for _ in 0..cap {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = gram[i * k..(i + 1) * k].iter().zip(&v).map(|(g, x)| g * x).sum();
        }
        let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return Ok(0.0);
        }
        std::mem::swap(&mut v, &mut w);
        if (next - lambda).abs() <= tol * next.abs() {
            return Ok(next.max(0.0).sqrt());
        }
        lambda = next;
    }
    Err(Error::NonConvergence { iterations: cap })
}

/// Squares the trace-normalized Gram matrix until it is numerically rank
/// one and returns its largest column, which then points along the leading
/// eigenvector.
fn leading_direction(gram: &[f64], k: usize) -> Vec<f64> {
    let mut m = gram.to_vec();
    let mut next = vec![0.0; k * k];
    for _ in 0..MAX_SQUARINGS {
        let trace: f64 = (0..k).map(|i| m[i * k + i]).sum();
        if !(trace > 0.0 && trace.is_finite()) {
            break;
        }
        for x in &mut m {
            *x /= trace;
        }
        for i in 0..k {
            for l in i..k {
                let v: f64 = m[i * k..(i + 1) * k]
                    .iter()
                    .zip(&m[l * k..(l + 1) * k])
                    .map(|(a, b)| a * b)
                    .sum();
                next[i * k + l] = v;
                next[l * k + i] = v;
            }
        }
        std::mem::swap(&mut m, &mut next);
        // For unit trace, trace(M^2) = sum of squared eigenvalues, which
        // reaches 1 only when a single eigenvalue remains.
        let purity: f64 = (0..k)
            .map(|i| next[i * k..(i + 1) * k].iter().map(|x| x * x).sum::<f64>())
            .sum();
        if 1.0 - purity <= 1e-12 {
            break;
        }
    }
    let col_norm = |j: usize| (0..k).map(|i| m[i * k + j] * m[i * k + j]).sum::<f64>();
    let best = (0..k).max_by(|&a, &b| col_norm(a).total_cmp(&col_norm(b))).unwrap_or(0);
    (0..k).map(|i| m[i * k + best]).collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Noisy measurements `y = A x + w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub y: Vec<f64>,
    pub sigma: f64,
    pub noise_seed: u64,
}
