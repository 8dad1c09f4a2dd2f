//! Exhaustive minimum complexity pursuit over a codebook.
//!
//! Both programs scan every candidate within the budget:
//!
//! * noiseless: the shortest program whose image is within `delta` of `y`;
//! * noisy: the program of least residual `||A x - y||_2`.
//!
//! Ties go to the earlier candidate in canonical order. Residuals are a
//! function of the decoded signal alone (terms summed in increasing column
//! order), so programs that print the same signal always tie exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, ComplexityBudget, ProgramEntry};
use crate::error::{Error, Result};
use crate::quantize::{quantize_vector, QuantizedSignal, Resolution};
use crate::sensing::SensingEnsemble;

/// Refuse to materialize more candidates than this.
pub const MAX_CANDIDATES: u64 = 1 << 24;

/// A program together with its decoded signal in sparse form.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub entry: ProgramEntry,
    support: Vec<u32>,
    values: Vec<f64>,
}

impl Candidate {
    fn new(entry: ProgramEntry) -> Result<Self> {
        let signal = entry.decode()?;
        let (support, values) = signal
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (j as u32, v))
            .unzip();
        Ok(Self { entry, support, values })
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn signal(&self) -> QuantizedSignal {
        let mut dense = vec![0.0; self.entry.n];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            dense[j as usize] = v;
        }
        QuantizedSignal::from_values(dense, self.entry.m).expect("decoded signals lie on the grid")
    }

    /// `||A x - y||_2`.
    pub fn residual(&self, a: &SensingEnsemble, y: &[f64]) -> f64 {
        let d = a.d();
        let mut sum = 0.0;
        for (i, &yi) in y.iter().enumerate().take(d) {
            let mut acc = 0.0;
            for (&j, &v) in self.support.iter().zip(&self.values) {
                acc += a.column(j as usize)[i] * v;
            }
            let e = acc - yi;
            sum += e * e;
        }
        sum.sqrt()
    }
}

/// The decoded codebook within a budget, in canonical order.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    n: usize,
    m: Resolution,
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn build(codebook: &Codebook, budget: ComplexityBudget) -> Result<Self> {
        let count = codebook.count(budget);
        if count > MAX_CANDIDATES {
            return Err(Error::Config(format!(
                "{count} candidates exceed the solver limit of {MAX_CANDIDATES}"
            )));
        }
        let candidates = codebook
            .enumerate(budget)
            .map(Candidate::new)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: codebook.n(),
            m: codebook.m(),
            candidates,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> Resolution {
        self.m
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn get(&self, index: usize) -> Option<&Candidate> {
        self.candidates.get(index)
    }

    /// Candidates with description length at most `max_bits`: a prefix, since
    /// canonical order sorts by length first.
    pub fn within(&self, max_bits: u32) -> &[Candidate] {
        let end = self
            .candidates
            .partition_point(|c| c.entry.description_length() <= max_bits);
        &self.candidates[..end]
    }

    /// Canonical index of the first candidate printing `signal`, if any.
    pub fn position_of(&self, signal: &QuantizedSignal) -> Option<usize> {
        self.candidates.iter().position(|c| &c.signal() == signal)
    }
}

/// Slack `delta` on the equality constraint `A x = y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityTolerance {
    delta: f64,
}

impl FeasibilityTolerance {
    pub fn new(delta: f64) -> Result<Self> {
        if delta >= 0.0 && delta.is_finite() {
            Ok(Self { delta })
        } else {
            Err(Error::domain("delta", delta))
        }
    }

    /// `1e-9 * max(1, ||y||_2)`.
    pub fn relative_to(y: &[f64]) -> Self {
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            delta: 1e-9 * norm.max(1.0),
        }
    }

    pub fn delta(self) -> f64 {
        self.delta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub entry: ProgramEntry,
    /// Position of `entry` in canonical order.
    pub index: usize,
    pub x_hat: QuantizedSignal,
    pub residual: f64,
    pub complexity_bits: u32,
    pub candidates_scored: u64,
}

fn check_dims(a: &SensingEnsemble, y: &[f64], n: usize) -> Result<()> {
    if y.len() != a.d() {
        return Err(Error::DimensionMismatch {
            expected: a.d(),
            got: y.len(),
        });
    }
    if n != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: n,
        });
    }
    Ok(())
}

fn result(c: &Candidate, index: usize, residual: f64, scored: u64) -> RecoveryResult {
    RecoveryResult {
        entry: c.entry.clone(),
        index,
        x_hat: c.signal(),
        residual,
        complexity_bits: c.entry.description_length(),
        candidates_scored: scored,
    }
}

/// Shortest candidate with `||A x - y||_2 <= delta`.
pub fn solve_noiseless(
    a: &SensingEnsemble,
    y: &[f64],
    candidates: &[Candidate],
    tol: FeasibilityTolerance,
) -> Result<RecoveryResult> {
    let Some(first) = candidates.first() else {
        return Err(Error::EmptyCodebook);
    };
    check_dims(a, y, first.entry.n)?;
    let hit = candidates
        .par_iter()
        .map(|c| c.residual(a, y))
        .position_first(|r| r <= tol.delta());
    match hit {
        Some(i) => {
            let c = &candidates[i];
            Ok(result(c, i, c.residual(a, y), i as u64 + 1))
        }
        None => Err(Error::NoFeasibleCandidate { delta: tol.delta() }),
    }
}

/// Least-residual candidate.
pub fn solve_noisy(a: &SensingEnsemble, y: &[f64], candidates: &[Candidate]) -> Result<RecoveryResult> {
    let Some(first) = candidates.first() else {
        return Err(Error::EmptyCodebook);
    };
    check_dims(a, y, first.entry.n)?;
    let (residual, index) = candidates
        .par_iter()
        .enumerate()
        .map(|(i, c)| (c.residual(a, y), i))
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
        .expect("non-empty");
    Ok(result(&candidates[index], index, residual, candidates.len() as u64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionError {
    /// `||x - x_hat||_2`
    pub l2: f64,
    /// `||x - x_hat||_2 / sqrt(n)`
    pub l2_per_element: f64,
    /// `||[x_hat]_m - [x]_m||_2`
    pub quantized_l2: f64,
}

pub fn reconstruction_error(x_hat: &QuantizedSignal, truth: &[f64]) -> Result<ReconstructionError> {
    if truth.len() != x_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: x_hat.len(),
            got: truth.len(),
        });
    }
    let quantized = quantize_vector(truth, x_hat.resolution())?;
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
    let l2 = dist(x_hat.values(), truth);
    Ok(ReconstructionError {
        l2,
        l2_per_element: l2 / (truth.len() as f64).sqrt(),
        quantized_l2: dist(x_hat.values(), quantized.values()),
    })
}
