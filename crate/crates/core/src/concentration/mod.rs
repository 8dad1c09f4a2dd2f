//! Analytic tail bounds and their Monte Carlo checks.

mod events;
mod lemmas;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use events::{distinct_signals, verify_events, MAX_DIFFERENCE_SET};
pub use lemmas::{
    gaussian_dot_check, ks_statistic, verify_chi_square, verify_gaussian_dot, verify_sigma_max, DotStatistic,
    GaussianDotReport, MIN_TRIALS,
};

/// Empirical tail frequency against an analytic bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheckReport {
    pub event_name: String,
    pub trials: u64,
    pub hits: u64,
    pub empirical_rate: f64,
    pub analytic_bound: f64,
    /// Binomial standard errors by which the rate sits below the bound
    /// (negative above it). Bounds above 1 are clamped to 1 first; a zero
    /// standard error is replaced by `1/trials`.
    pub slack_sigmas: f64,
    pub pass: bool,
}

impl TailCheckReport {
    pub fn new(event_name: impl Into<String>, trials: u64, hits: u64, analytic_bound: f64) -> Self {
        let t = trials as f64;
        let empirical_rate = if trials == 0 { 0.0 } else { hits as f64 / t };
        let p = analytic_bound.clamp(0.0, 1.0);
        let se = (p * (1.0 - p) / t).sqrt();
        let pass = empirical_rate <= analytic_bound + 3.0 * se + 3.0 / t;
        Self {
            event_name: event_name.into(),
            trials,
            hits,
            empirical_rate,
            analytic_bound,
            slack_sigmas: (p - empirical_rate) / se.max(1.0 / t),
            pass,
        }
    }
}

/// `(exp((d/2)(tau + ln(1-tau))), exp(-(d/2)(tau - ln(1+tau))))`: bounds on
/// `P(chi2_d < d(1-tau))` and `P(chi2_d > d(1+tau))`.
pub fn chi_square_bounds(d: usize, tau: f64) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::domain("d", 0.0));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::domain("tau", tau));
    }
    let half = d as f64 / 2.0;
    Ok((
        (half * (tau + (-tau).ln_1p())).exp(),
        (-half * (tau - tau.ln_1p())).exp(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Event {
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl Event {
    pub const ALL: [Event; 5] = [Event::E1, Event::E2, Event::E3, Event::E4, Event::E5];
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Free parameters of the events.
///
/// * E1: `|w^T A h| <= t1 ||h||` for all `h` in the difference set; `t2`
///   bounds `||w||` inside its proof.
/// * E2: `sigma_max(A) < (1 + t3) sqrt(d) + sqrt(n)`.
/// * E3: `||A h||^2 > (1 - t4) d ||h||^2`.
/// * E4: `||A h||^2 < (1 + t5) d ||h||^2`.
/// * E5: `||A^T w||^2 <= sigma^2 n d (1 + t6)` with `1 + t6 = (1 - t8)(1 + t7)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
    pub t7: f64,
    pub t8: f64,
    pub tau: f64,
    pub r: f64,
}

impl EventParams {
    /// `t2 = t4 = 1/sqrt(r)`, `t1 = 2 sigma sqrt(d (1 + t2) 2 kappa_bits)`,
    /// `t3 = t5 = t7 = 0.5`, `t8 = 0.2`, `t6` from the E5 constraint and
    /// `tau = 0.1`.
    pub fn standard(r: f64, sigma: f64, d: usize, kappa_bits: f64) -> Result<Self> {
        if r.is_nan() || r <= 1.0 {
            return Err(Error::domain("r", r));
        }
        let t2 = r.sqrt().recip();
        let (t7, t8) = (0.5, 0.2);
        let params = Self {
            t1: 2.0 * sigma * (d as f64 * (1.0 + t2) * 2.0 * kappa_bits).sqrt(),
            t2,
            t3: 0.5,
            t4: t2,
            t5: 0.5,
            t6: (1.0 - t8) * (1.0 + t7) - 1.0,
            t7,
            t8,
            tau: 0.1,
            r,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t2", self.t2),
            ("t3", self.t3),
            ("t4", self.t4),
            ("t5", self.t5),
            ("t6", self.t6),
            ("t7", self.t7),
            ("t8", self.t8),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(what, v));
            }
        }
        if !(self.t1 >= 0.0 && self.t1.is_finite()) {
            return Err(Error::domain("t1", self.t1));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::domain("tau", self.tau));
        }
        if self.t4 >= 1.0 {
            return Err(Error::domain("t4", self.t4));
        }
        if self.t8 >= 1.0 {
            return Err(Error::domain("t8", self.t8));
        }
        if self.r.is_nan() || self.r <= 1.0 {
            return Err(Error::domain("r", self.r));
        }
        let coupled = (1.0 - self.t8) * (1.0 + self.t7);
        if self.t6 >= self.t7 || ((1.0 + self.t6) - coupled).abs() > 1e-12 * coupled {
            return Err(Error::domain("t6", self.t6));
        }
        Ok(())
    }
}

/// Analytic bounds on the complement probability of each event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventBounds {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
}

impl EventBounds {
    pub fn get(&self, event: Event) -> f64 {
        match event {
            Event::E1 => self.e1,
            Event::E2 => self.e2,
            Event::E3 => self.e3,
            Event::E4 => self.e4,
            Event::E5 => self.e5,
        }
    }

    /// Union bound on any event failing.
    pub fn union(&self) -> f64 {
        Event::ALL.iter().map(|&e| self.get(e)).sum()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Closed-form bounds on `P(E_i^c)`. `kappa_bits` is the complexity budget
/// in bits; the difference set has at most `2^(2 kappa_bits)` elements.
///
/// E4 uses the upper chi-square tail `exp(-(d/2)(t5 - ln(1+t5)))`. With
/// `sigma = 0` the noise term of E1 vanishes.
pub fn event_bounds(params: &EventParams, d: usize, n: usize, kappa_bits: f64, sigma: f64) -> Result<EventBounds> {
    params.validate()?;
    if d == 0 {
        return Err(Error::domain("d", 0.0));
    }
    if n == 0 {
        return Err(Error::domain("n", 0.0));
    }
    if !(kappa_bits >= 0.0 && kappa_bits.is_finite()) {
        return Err(Error::domain("kappa_bits", kappa_bits));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain("sigma", sigma));
    }
    let p = params;
    let (d, n) = (d as f64, n as f64);
    let log_card = 2.0 * kappa_bits * std::f64::consts::LN_2;
    let norm_tail = -d * p.t2 * p.t2 / 2.0;
    let noise_tail = if sigma == 0.0 {
        f64::NEG_INFINITY
    } else {
        -(p.t1 * p.t1) / (2.0 * sigma * sigma * d * (1.0 + p.t2))
    };
    Ok(EventBounds {
        e1: (log_card + log_add_exp(norm_tail, noise_tail)).exp(),
        e2: (-d * p.t3 * p.t3 / 2.0).exp(),
        e3: (log_card + d / 2.0 * (p.t4 + (-p.t4).ln_1p())).exp(),
        e4: (log_card - d / 2.0 * (p.t5 - p.t5.ln_1p())).exp(),
        e5: (-n / 2.0 * (p.t7 - p.t7.ln_1p())).exp() + (d / 2.0 * (p.t8 + (-p.t8).ln_1p())).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn chi_square_examples() {
        let (lo, _) = chi_square_bounds(100, 0.5).unwrap();
        assert!(rel(lo, (50.0 * (0.5 + 0.5f64.ln())).exp()) < 1e-14);
        assert!(rel(lo, 6.43e-5) < 1e-2);
        let (lo1, hi1) = chi_square_bounds(1, 1e-9).unwrap();
        assert!((lo1 - 1.0).abs() < 1e-15 && (hi1 - 1.0).abs() < 1e-15);
        let (lo2, hi2) = chi_square_bounds(200, 0.5).unwrap();
        let (_, hi) = chi_square_bounds(100, 0.5).unwrap();
        assert!(rel(lo2, lo * lo) < 1e-12);
        assert!(rel(hi2, hi * hi) < 1e-12);
        for tau in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(chi_square_bounds(10, tau).is_err());
        }
        assert!(chi_square_bounds(0, 0.5).is_err());
    }

    #[test]
    fn report_slack_rule() {
        let r = TailCheckReport::new("X", 1000, 3, 0.0);
        assert_eq!(r.empirical_rate, 0.003);
        assert!(r.pass);
        assert!(!TailCheckReport::new("X", 1000, 4, 0.0).pass);
        // 0.1 + 3 * sqrt(0.09 / 100) + 0.03 = 0.22
        assert!(TailCheckReport::new("X", 100, 22, 0.1).pass);
        assert!(!TailCheckReport::new("X", 100, 23, 0.1).pass);
        let big = TailCheckReport::new("X", 10, 10, 5.0);
        assert!(big.pass && big.slack_sigmas == 0.0);
    }

    #[test]
    fn e2_example() {
        let mut p = EventParams::standard(4.0, 1.0, 100, 10.0).unwrap();
        p.t3 = 0.5;
        let b = event_bounds(&p, 100, 200, 10.0, 1.0).unwrap();
        assert!(rel(b.e2, (-12.5f64).exp()) < 1e-15);
        assert!(rel(b.e2, 3.73e-6) < 1e-3);
    }

    #[test]
    fn standard_t1_cancels_sigma() {
        for sigma in [0.01, 0.2, 3.0, 50.0] {
            let p = EventParams::standard(4.0, sigma, 64, 18.0).unwrap();
            let b = event_bounds(&p, 64, 32, 18.0, sigma).unwrap();
            let expected = (2.0f64.powi(36)) * ((-64.0 * 0.25 / 2.0f64).exp() + (-4.0 * 18.0f64).exp());
            assert!(rel(b.e1, expected) < 1e-12, "{sigma}");
        }
    }

    #[test]
    fn standard_params_satisfy_invariants() {
        let p = EventParams::standard(4.0, 0.2, 64, 18.0).unwrap();
        assert_eq!(p.t2, 0.5);
        assert_eq!(p.t4, 0.5);
        assert!(p.t6 < p.t7);
        assert!(((1.0 + p.t6) - (1.0 - p.t8) * (1.0 + p.t7)).abs() < 1e-15);
        assert!(EventParams::standard(1.0, 0.2, 64, 18.0).is_err());
        let mut bad = p;
        bad.t6 = 0.3;
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.tau = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.t4 = 1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn bounds_positive_and_decreasing_in_d() {
        let p = EventParams::standard(4.0, 0.0, 64, 4.0).unwrap();
        let mut prev: Option<EventBounds> = None;
        for d in [16, 32, 64, 128, 256] {
            let b = event_bounds(&p, d, 32, 4.0, 0.5).unwrap();
            for e in Event::ALL {
                assert!(b.get(e) > 0.0 && b.get(e).is_finite());
            }
            if let Some(q) = prev {
                for e in Event::ALL {
                    assert!(b.get(e) < q.get(e), "{e} at d={d}");
                }
            }
            prev = Some(b);
        }
    }

    #[test]
    fn e5_is_sum_of_two_chi_square_tails() {
        let p = EventParams::standard(4.0, 0.2, 64, 18.0).unwrap();
        let b = event_bounds(&p, 64, 32, 18.0, 0.2).unwrap();
        let (_, upper_n) = chi_square_bounds(32, p.t7).unwrap();
        let (lower_d, _) = chi_square_bounds(64, p.t8).unwrap();
        assert!(rel(b.e5, upper_n + lower_d) < 1e-14);
        assert!(rel(b.union(), b.e1 + b.e2 + b.e3 + b.e4 + b.e5) < 1e-15);
    }

    #[test]
    fn zero_sigma_drops_noise_term() {
        let p = EventParams::standard(4.0, 0.0, 64, 2.0).unwrap();
        let b = event_bounds(&p, 64, 32, 2.0, 0.0).unwrap();
        assert!(rel(b.e1, 16.0 * (-8.0f64).exp()) < 1e-14);
    }
}
