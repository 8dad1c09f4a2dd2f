use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{chi_square_bounds, TailCheckReport};
use crate::error::{Error, Result};
use crate::rng::{trial_seed, Purpose, Stream};
use crate::sensing::SensingEnsemble;

/// Fewest trials accepted by the Monte Carlo lemma checks.
pub const MIN_TRIALS: u64 = 10_000;

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::domain("trials", trials as f64));
    }
    Ok(())
}

/// Lower and upper tail frequencies of `sum_i Z_i^2` over `d` standard
/// normals, named `CHI2_LOWER` and `CHI2_UPPER`.
pub fn verify_chi_square(d: usize, tau: f64, trials: u64, seed: u64) -> Result<[TailCheckReport; 2]> {
    let (lower_bound, upper_bound) = chi_square_bounds(d, tau)?;
    check_trials(trials)?;
    let (lo, hi) = (d as f64 * (1.0 - tau), d as f64 * (1.0 + tau));
    let (lower, upper) = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut s = Stream::new(trial_seed(seed, k, Purpose::Sample));
            let sum: f64 = (0..d).map(|_| s.normal().powi(2)).sum();
            (u64::from(sum < lo), u64::from(sum > hi))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok([
        TailCheckReport::new("CHI2_LOWER", trials, lower, lower_bound),
        TailCheckReport::new("CHI2_UPPER", trials, upper, upper_bound),
    ])
}

/// Frequency of `sigma_max(A) >= (1 + t3) sqrt(d) + sqrt(n)`, named `E2`.
pub fn verify_sigma_max(d: usize, n: usize, t3: f64, trials: u64, seed: u64) -> Result<TailCheckReport> {
    if !(t3 > 0.0 && t3.is_finite()) {
        return Err(Error::domain("t3", t3));
    }
    if trials == 0 {
        return Err(Error::domain("trials", 0.0));
    }
    let threshold = (1.0 + t3) * (d as f64).sqrt() + (n as f64).sqrt();
    let hits = (0..trials)
        .into_par_iter()
        .map(|k| {
            let a = SensingEnsemble::draw(d, n, trial_seed(seed, k, Purpose::Ensemble))?;
            Ok(u64::from(a.sigma_max()? >= threshold))
        })
        .sum::<Result<u64>>()?;
    let bound = (-(d as f64) * t3 * t3 / 2.0).exp();
    Ok(TailCheckReport::new("E2", trials, hits, bound))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DotStatistic {
    /// `X^T Y / ||X||_2`, standard normal for every `n`.
    Normalized,
    /// `X^T Y`, not standard normal for `n > 1`.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDotReport {
    pub n: usize,
    pub trials: u64,
    pub statistic: DotStatistic,
    pub ks_statistic: f64,
    /// `1.63 / sqrt(trials)`, the asymptotic level-0.01 critical value.
    pub ks_critical: f64,
    /// Sample correlation of `|T|` and `||X||_2`.
    pub independence_corr: f64,
    /// `4 / sqrt(trials)`.
    pub corr_critical: f64,
    pub pass: bool,
}

/// One-sample Kolmogorov-Smirnov statistic against the standard normal.
/// Sorts `samples` in place.
pub fn ks_statistic(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let len = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / len).max((i + 1) as f64 / len - f)
        })
        .fold(0.0, f64::max)
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let len = x.len() as f64;
    let mx = x.iter().sum::<f64>() / len;
    let my = y.iter().sum::<f64>() / len;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Draws independent standard normal `X, Y` of length `n` per trial and
/// tests the chosen statistic against the standard normal, along with the
/// correlation between its magnitude and `||X||_2`.
pub fn gaussian_dot_check(n: usize, trials: u64, seed: u64, statistic: DotStatistic) -> Result<GaussianDotReport> {
    if n == 0 {
        return Err(Error::domain("n", 0.0));
    }
    check_trials(trials)?;
    let draws = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut s = Stream::new(trial_seed(seed, k, Purpose::Lemma));
            let x = s.normal_vec(n);
            let y = s.normal_vec(n);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Degenerate("zero-norm Gaussian vector"));
            }
            let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let t = match statistic {
                DotStatistic::Normalized => dot / norm,
                DotStatistic::Raw => dot,
            };
            Ok((t, norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut t, norms): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    let magnitudes: Vec<f64> = t.iter().map(|v| v.abs()).collect();
    let independence_corr = correlation(&magnitudes, &norms);
    let ks = ks_statistic(&mut t);
    let root = (trials as f64).sqrt();
    let (ks_critical, corr_critical) = (1.63 / root, 4.0 / root);
    Ok(GaussianDotReport {
        n,
        trials,
        statistic,
        ks_statistic: ks,
        ks_critical,
        independence_corr,
        corr_critical,
        pass: ks < ks_critical && independence_corr.abs() < corr_critical,
    })
}

pub fn verify_gaussian_dot(n: usize, trials: u64, seed: u64) -> Result<GaussianDotReport> {
    gaussian_dot_check(n, trials, seed, DotStatistic::Normalized)
}
