use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, ComplexityBudget, Generator};
use crate::error::{Error, Result};
use crate::quantize::Resolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// Noiseless recovery, success when `||x - x_hat||_2 <= epsilon`.
    #[serde(rename = "NOISELESS_SCALING")]
    NoiselessScaling,
    /// Noiseless recovery, success when `||x - x_hat||_2 / sqrt(n) <= epsilon`.
    #[serde(rename = "PER_ELEMENT")]
    PerElement,
    /// Noisy recovery against the squared-error level of the stability bound.
    #[serde(rename = "STABILITY")]
    Stability,
    /// Event and singular-value tail checks.
    #[serde(rename = "LEMMAS")]
    Lemmas,
}

/// Measurement count as a function of the truth's complexity `kappa_bits`
/// (information dimension `kappa = kappa_bits / m`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DRule {
    /// `ceil(kappa ln n)`
    #[serde(rename = "D_EQ_KAPPA_LOG_N")]
    KappaLogN,
    /// `ceil(3 kappa)`
    #[serde(rename = "D_EQ_3KAPPA")]
    ThreeKappa,
    /// `ceil(8 r kappa m)`
    #[serde(rename = "D_EQ_8R_KAPPA_M")]
    EightRKappaM,
}

impl DRule {
    pub fn measurements(self, kappa_bits: u32, m: Resolution, n: usize, r: Option<f64>) -> Result<usize> {
        let d = match self {
            DRule::KappaLogN => (kappa_bits as f64 / m.bits() as f64 * (n as f64).ln()).ceil() as usize,
            DRule::ThreeKappa => (3 * kappa_bits).div_ceil(m.bits()) as usize,
            DRule::EightRKappaM => {
                let r = r
                    .filter(|&r| r > 1.0)
                    .ok_or_else(|| Error::Config("D_EQ_8R_KAPPA_M needs r > 1".into()))?;
                (8.0 * r * kappa_bits as f64).ceil() as usize
            }
        };
        Ok(d.max(1))
    }
}

/// One point of the measurement axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DSpec {
    Fixed(usize),
    Rule(DRule),
}

fn default_tau() -> f64 {
    0.1
}

fn default_t() -> f64 {
    1.0
}

/// A sweep, read from UTF-8 JSON. Exactly one of `d`, `d_rule` and `d_grid`
/// must be set; at most one of `sigma` and `sigma_grid`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: ExperimentKind,
    pub n: usize,
    /// Defaults to `ceil(ln n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_rule: Option<DRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_grid: Option<Vec<usize>>,
    pub generators: Vec<Generator>,
    pub budget: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub trials: u64,
    pub base_seed: u64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_t")]
    pub t: f64,
    /// Success threshold of the noiseless experiments; see [`Self::epsilon`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn resolution(&self) -> Result<Resolution> {
        match self.m {
            Some(m) => Resolution::new(m),
            None => Ok(Resolution::for_length(self.n)),
        }
    }

    pub fn budget(&self) -> Result<ComplexityBudget> {
        ComplexityBudget::new(self.budget)
    }

    pub fn codebook(&self) -> Result<Codebook> {
        Codebook::new(self.generators.clone(), self.n, self.resolution()?)
    }

    pub fn d_points(&self) -> Vec<DSpec> {
        match (&self.d, &self.d_rule, &self.d_grid) {
            (Some(d), _, _) => vec![DSpec::Fixed(*d)],
            (_, Some(rule), _) => vec![DSpec::Rule(*rule)],
            (_, _, Some(grid)) => grid.iter().map(|&d| DSpec::Fixed(d)).collect(),
            _ => Vec::new(),
        }
    }

    pub fn sigma_points(&self) -> Vec<f64> {
        match (&self.sigma, &self.sigma_grid) {
            (Some(s), _) => vec![*s],
            (_, Some(grid)) => grid.clone(),
            _ => vec![0.0],
        }
    }

    /// The configured threshold, or by default `max(0.1, sqrt(n) 2^(1-m))`,
    /// divided by `sqrt(n)` for PER_ELEMENT.
    pub fn epsilon(&self) -> Result<f64> {
        if let Some(e) = self.epsilon {
            return Ok(e);
        }
        let m = self.resolution()?;
        let root = (self.n as f64).sqrt();
        let eps = f64::max(0.1, root * libm::exp2(1.0 - m.bits() as f64));
        Ok(match self.experiment_id {
            ExperimentKind::PerElement => eps / root,
            _ => eps,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        self.budget()?;
        self.codebook()?;
        let d_fields = [self.d.is_some(), self.d_rule.is_some(), self.d_grid.is_some()];
        if d_fields.iter().filter(|&&x| x).count() != 1 {
            return bad("exactly one of d, d_rule, d_grid is required");
        }
        if self.d == Some(0) || self.d_grid.as_ref().is_some_and(|g| g.is_empty() || g.contains(&0)) {
            return bad("measurement counts must be positive");
        }
        if self.sigma.is_some() && self.sigma_grid.is_some() {
            return bad("set at most one of sigma and sigma_grid");
        }
        if self.sigma_grid.as_ref().is_some_and(|g| g.is_empty()) {
            return bad("sigma_grid is empty");
        }
        for s in self.sigma_points() {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::domain("sigma", s));
            }
        }
        if let Some(r) = self.r {
            if !(r > 1.0 && r.is_finite()) {
                return Err(Error::domain("r", r));
            }
        }
        if self.d_rule == Some(DRule::EightRKappaM) && self.r.is_none() {
            return bad("D_EQ_8R_KAPPA_M needs r");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::domain("tau", self.tau));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::domain("t", self.t));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::domain("epsilon", e));
            }
        }
        match self.experiment_id {
            ExperimentKind::NoiselessScaling | ExperimentKind::PerElement => {
                if self.sigma_points().iter().any(|&s| s != 0.0) {
                    return bad("noiseless experiments need sigma = 0");
                }
            }
            ExperimentKind::Stability => {
                if self.r.is_none() {
                    return bad("STABILITY needs r");
                }
            }
            ExperimentKind::Lemmas => {
                if self.d.is_none() || self.sigma_grid.is_some() || self.r.is_none() {
                    return bad("LEMMAS needs a fixed d, a single sigma and r");
                }
            }
        }
        Ok(())
    }
}
