use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{theorem1_rhs, theorem2_bound, BoundInputs, Theorem1};
use super::config::{DRule, DSpec, ExperimentConfig, ExperimentKind};
use crate::concentration::{verify_events, EventParams, TailCheckReport};
use crate::error::{Error, Result};
use crate::rng::{trial_seed, Purpose};
use crate::sensing::{noise, SensingEnsemble};
use crate::solver::{reconstruction_error, solve_noiseless, solve_noisy, CandidateSet, FeasibilityTolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrialStatus {
    Recovered,
    NoFeasibleCandidate,
    SolverError,
}

/// One row of an experiment report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub d: usize,
    pub sigma: f64,
    pub truth_seed: u64,
    pub ensemble_seed: u64,
    pub noise_seed: u64,
    pub truth_id: String,
    pub kappa_bits: u32,
    pub status: TrialStatus,
    pub recovered_id: Option<String>,
    pub residual: Option<f64>,
    pub complexity_bits: Option<u32>,
    pub candidates_scored: u64,
    /// `||w||_2`, zero for noiseless runs.
    pub noise_norm: f64,
    pub l2: Option<f64>,
    pub l2_per_element: Option<f64>,
    pub quantized_l2: Option<f64>,
    /// The level `within_bound` compares against: epsilon for the noiseless
    /// experiments, the stability bound on the squared error otherwise.
    pub bound: f64,
    pub within_bound: bool,
}

/// Aggregates over one `(d, sigma)` grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    /// Fixed measurement count, absent when set per trial by a rule.
    pub d: Option<usize>,
    pub d_rule: Option<DRule>,
    pub sigma: f64,
    pub trials: u64,
    pub successes: u64,
    pub solver_failures: u64,
    pub success_fraction: f64,
    /// Over recovered trials; absent when none recovered.
    pub median_l2: Option<f64>,
    pub mean_l2: Option<f64>,
    /// Noiseless guarantee at the budget's complexity.
    pub theorem1: Option<Theorem1>,
    /// Stability level at the budget's complexity.
    pub theorem2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub points: Vec<GridSummary>,
    /// Least-squares slope of median error against sigma, for sigma grids.
    pub median_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment_id {
        ExperimentKind::NoiselessScaling | ExperimentKind::PerElement => run_noiseless_scaling(cfg),
        ExperimentKind::Stability => run_stability(cfg),
        ExperimentKind::Lemmas => Err(Error::Config(
            "LEMMAS configs produce tail reports; use run_lemmas".into(),
        )),
    }
}

pub fn run_noiseless_scaling(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if !matches!(
        cfg.experiment_id,
        ExperimentKind::NoiselessScaling | ExperimentKind::PerElement
    ) {
        return Err(Error::Config("expected NOISELESS_SCALING or PER_ELEMENT".into()));
    }
    run(cfg)
}

pub fn run_stability(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.experiment_id != ExperimentKind::Stability {
        return Err(Error::Config("expected STABILITY".into()));
    }
    run(cfg)
}

/// E1..E5 and UNION for a LEMMAS config.
pub fn run_lemmas(cfg: &ExperimentConfig) -> Result<Vec<TailCheckReport>> {
    cfg.validate()?;
    let (Some(d), Some(r)) = (cfg.d, cfg.r) else {
        return Err(Error::Config("LEMMAS needs d and r".into()));
    };
    let sigma = cfg.sigma.unwrap_or(0.0);
    let budget = cfg.budget()?;
    let params = EventParams::standard(r, sigma, d, budget.max_bits() as f64)?;
    verify_events(&params, &cfg.codebook()?, budget, d, sigma, cfg.trials, cfg.base_seed)
}

struct Point {
    d: DSpec,
    sigma: f64,
}

fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let codebook = cfg.codebook()?;
    let budget = cfg.budget()?;
    let candidates = CandidateSet::build(&codebook, budget)?;
    let epsilon = cfg.epsilon()?;
    let points: Vec<Point> = cfg
        .d_points()
        .into_iter()
        .flat_map(|d| cfg.sigma_points().into_iter().map(move |sigma| Point { d, sigma }))
        .collect();

    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials).map(move |k| (p, k)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(p, k)| run_trial(cfg, &codebook, &candidates, &points[p], k, epsilon))
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(cfg, &points, &records)?;
    Ok(ExperimentOutput { records, summary })
}

fn run_trial(
    cfg: &ExperimentConfig,
    codebook: &crate::codebook::Codebook,
    candidates: &CandidateSet,
    point: &Point,
    k: u64,
    epsilon: f64,
) -> Result<TrialRecord> {
    let m = codebook.m();
    let truth_seed = trial_seed(cfg.base_seed, k, Purpose::Truth);
    let ensemble_seed = trial_seed(cfg.base_seed, k, Purpose::Ensemble);
    let noise_seed = trial_seed(cfg.base_seed, k, Purpose::Noise);
    let entry = codebook.sample_entry(cfg.budget()?, truth_seed)?;
    let truth = entry.decode()?;
    let kappa_bits = entry.description_length();
    let d = match point.d {
        DSpec::Fixed(d) => d,
        DSpec::Rule(rule) => rule.measurements(kappa_bits, m, cfg.n, cfg.r)?,
    };
    let a = SensingEnsemble::draw(d, cfg.n, ensemble_seed)?;
    let noisy = cfg.experiment_id == ExperimentKind::Stability;

    let (outcome, noise_norm, bound) = if noisy {
        let record = a.measure_noisy(truth.values(), point.sigma, noise_seed)?;
        let w = noise(d, point.sigma, noise_seed)?;
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bound = theorem2_bound(kappa_bits as f64, point.sigma, d, cfg.r.expect("validated"))?;
        (solve_noisy(&a, &record.y, candidates.within(kappa_bits)), norm, bound)
    } else {
        let y = a.measure(truth.values())?;
        let tol = FeasibilityTolerance::relative_to(&y);
        (solve_noiseless(&a, &y, candidates.candidates(), tol), 0.0, epsilon)
    };

    let mut record = TrialRecord {
        trial: k,
        d,
        sigma: point.sigma,
        truth_seed,
        ensemble_seed,
        noise_seed,
        truth_id: entry.id(),
        kappa_bits,
        status: TrialStatus::Recovered,
        recovered_id: None,
        residual: None,
        complexity_bits: None,
        candidates_scored: 0,
        noise_norm,
        l2: None,
        l2_per_element: None,
        quantized_l2: None,
        bound,
        within_bound: false,
    };
    match outcome {
        Ok(result) => {
            let err = reconstruction_error(&result.x_hat, truth.values())?;
            record.recovered_id = Some(result.entry.id());
            record.residual = Some(result.residual);
            record.complexity_bits = Some(result.complexity_bits);
            record.candidates_scored = result.candidates_scored;
            record.within_bound = match cfg.experiment_id {
                ExperimentKind::Stability => err.l2 * err.l2 <= bound,
                ExperimentKind::PerElement => err.l2_per_element <= bound,
                _ => err.l2 <= bound,
            };
            record.l2 = Some(err.l2);
            record.l2_per_element = Some(err.l2_per_element);
            record.quantized_l2 = Some(err.quantized_l2);
        }
        Err(Error::NoFeasibleCandidate { .. }) => record.status = TrialStatus::NoFeasibleCandidate,
        Err(_) => record.status = TrialStatus::SolverError,
    }
    Ok(record)
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

fn summarize(cfg: &ExperimentConfig, points: &[Point], records: &[TrialRecord]) -> Result<ExperimentSummary> {
    let m = cfg.resolution()?;
    let trials = cfg.trials as usize;
    let mut summaries = Vec::with_capacity(points.len());
    for (p, point) in points.iter().enumerate() {
        let rows = &records[p * trials..(p + 1) * trials];
        let mut l2: Vec<f64> = rows.iter().filter_map(|r| r.l2).collect();
        let successes = rows.iter().filter(|r| r.within_bound).count() as u64;
        let failures = rows.iter().filter(|r| r.status != TrialStatus::Recovered).count() as u64;
        let mean_l2 = (!l2.is_empty()).then(|| l2.iter().sum::<f64>() / l2.len() as f64);
        let (d, d_rule) = match point.d {
            DSpec::Fixed(d) => (Some(d), None),
            DSpec::Rule(rule) => (None, Some(rule)),
        };
        let d_at_budget = match point.d {
            DSpec::Fixed(d) => d,
            DSpec::Rule(rule) => rule.measurements(cfg.budget, m, cfg.n, cfg.r)?,
        };
        let (theorem1, theorem2) = if cfg.experiment_id == ExperimentKind::Stability {
            (
                None,
                Some(theorem2_bound(
                    cfg.budget as f64,
                    point.sigma,
                    d_at_budget,
                    cfg.r.expect("validated"),
                )?),
            )
        } else {
            let inputs = BoundInputs {
                kappa_bits: cfg.budget as f64,
                m: m.bits(),
                n: cfg.n,
                d: d_at_budget,
                sigma: point.sigma,
                r: cfg.r.unwrap_or(f64::NAN),
                tau: cfg.tau,
                t: cfg.t,
            };
            (Some(theorem1_rhs(&inputs)?), None)
        };
        summaries.push(GridSummary {
            d,
            d_rule,
            sigma: point.sigma,
            trials: cfg.trials,
            successes,
            solver_failures: failures,
            success_fraction: successes as f64 / cfg.trials as f64,
            median_l2: median(&mut l2),
            mean_l2,
            theorem1,
            theorem2,
        });
    }
    let median_slope = slope(&summaries);
    Ok(ExperimentSummary {
        points: summaries,
        median_slope,
    })
}

fn slope(points: &[GridSummary]) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.median_l2.map(|m| (p.sigma, m)))
        .collect();
    let sigmas: std::collections::BTreeSet<u64> = xy.iter().map(|(s, _)| s.to_bits()).collect();
    if sigmas.len() < 2 {
        return None;
    }
    let len = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / len;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}
