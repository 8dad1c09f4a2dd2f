//! Closed-form recovery guarantees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs shared by the theorem calculators. `kappa_bits` is the complexity
/// bound in bits (information dimension times `m`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub kappa_bits: f64,
    pub m: u32,
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub r: f64,
    pub tau: f64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1 {
    /// Error level `((sqrt(n/d + t + 1) + 1) / tau) sqrt(n 2^(2 - 2m))`.
    pub threshold: f64,
    /// Bound on the probability that the noiseless error exceeds `threshold`.
    pub probability_bound: f64,
}

fn positive(what: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(what, v))
    }
}

fn non_negative(what: &'static str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(what, v))
    }
}

/// `P(||x - x_hat|| > threshold) <= 2^(2 kappa_bits) e^((d/2)(1 - tau^2 + 2 ln tau)) + e^(-d t^2 / 2)`.
///
/// Accepts the closed endpoints `tau = 1` and `t = 0`.
pub fn theorem1_rhs(b: &BoundInputs) -> Result<Theorem1> {
    let tau = positive("tau", b.tau)?;
    if tau > 1.0 {
        return Err(Error::domain("tau", tau));
    }
    let t = non_negative("t", b.t)?;
    let kappa_bits = non_negative("kappa_bits", b.kappa_bits)?;
    let n = positive("n", b.n as f64)?;
    let d = positive("d", b.d as f64)?;
    if b.m == 0 {
        return Err(Error::domain("m", 0.0));
    }
    let quantization = (n * libm::exp2(2.0 - 2.0 * b.m as f64)).sqrt();
    let threshold = ((n / d + t + 1.0).sqrt() + 1.0) / tau * quantization;
    // 1 - tau^2 + 2 ln tau, written to stay accurate near tau = 1.
    let shape = (1.0 - tau) * (1.0 + tau) + 2.0 * tau.ln();
    let collision = (2.0 * kappa_bits * std::f64::consts::LN_2 + d / 2.0 * shape).exp();
    Ok(Theorem1 {
        threshold,
        probability_bound: collision + (-d * t * t / 2.0).exp(),
    })
}

/// `rho = (1 - r^(-1/2))^2 / 2`.
pub fn rho(r: f64) -> Result<f64> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::domain("r", r));
    }
    let gap = 1.0 - r.sqrt().recip();
    Ok(gap * gap / 2.0)
}

/// Squared-error level `2 kappa_bits sigma^2 / (rho d)`.
pub fn theorem2_bound(kappa_bits: f64, sigma: f64, d: usize, r: f64) -> Result<f64> {
    let rho = rho(r)?;
    let kappa_bits = non_negative("kappa_bits", kappa_bits)?;
    let sigma = non_negative("sigma", sigma)?;
    let d = positive("d", d as f64)?;
    Ok(2.0 * kappa_bits * sigma * sigma / (rho * d))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gammas {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
}

/// `gamma1 = sqrt(1+t5)(1+t3)/(1-t4)`, `gamma2 = sqrt(1+t5)/(1-t4)`,
/// `gamma3 = sqrt(1+t2)/(1-t4)`, `gamma4 = sqrt(1+t6)/(1-t4)`.
///
/// Zero parameters are accepted so the all-zero limit is defined.
pub fn gamma_constants(t2: f64, t3: f64, t4: f64, t5: f64, t6: f64) -> Result<Gammas> {
    for (what, v) in [("t2", t2), ("t3", t3), ("t4", t4), ("t5", t5), ("t6", t6)] {
        non_negative(what, v)?;
    }
    if t4 >= 1.0 {
        return Err(Error::domain("t4", t4));
    }
    let scale = 1.0 - t4;
    Ok(Gammas {
        gamma1: (1.0 + t5).sqrt() * (1.0 + t3) / scale,
        gamma2: (1.0 + t5).sqrt() / scale,
        gamma3: (1.0 + t2).sqrt() / scale,
        gamma4: (1.0 + t6).sqrt() / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(kappa_bits: f64, n: usize, d: usize, m: u32, tau: f64, t: f64) -> BoundInputs {
        BoundInputs {
            kappa_bits,
            m,
            n,
            d,
            sigma: 0.0,
            r: 4.0,
            tau,
            t,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn theorem1_example() {
        let out = theorem1_rhs(&inputs(10.0, 256, 200, 6, 0.1, 1.0)).unwrap();
        let expected = 2f64.powi(20) * (100.0 * (1.0 - 0.01 + 2.0 * 0.1f64.ln())).exp() + (-100.0f64).exp();
        assert!(rel(out.probability_bound, expected) < 1e-12);
        let threshold = ((256.0 / 200.0 + 2.0f64).sqrt() + 1.0) / 0.1 * (256.0 * 2f64.powi(-10)).sqrt();
        assert!(rel(out.threshold, threshold) < 1e-15);
    }

    #[test]
    fn theorem1_limits() {
        let out = theorem1_rhs(&inputs(3.0, 64, 64, 4, 1.0, 0.0)).unwrap();
        assert!(rel(out.threshold, (2f64.sqrt() + 1.0) * (64.0 * 2f64.powi(-6)).sqrt()) < 1e-15);
        assert!(rel(out.probability_bound, 2f64.powi(6) + 1.0) < 1e-14);
        let near = theorem1_rhs(&inputs(3.0, 64, 64, 4, 1.0 - 1e-9, 2.0)).unwrap();
        assert!(rel(near.probability_bound, 64.0 + (-128.0f64).exp()) < 1e-6);
    }

    #[test]
    fn theorem1_domain() {
        for (tau, t) in [(0.0, 1.0), (1.5, 1.0), (0.5, -1.0), (f64::NAN, 1.0)] {
            assert!(theorem1_rhs(&inputs(3.0, 64, 64, 4, tau, t)).is_err());
        }
    }

    #[test]
    fn theorem1_decreasing_in_d() {
        let mut prev = f64::INFINITY;
        for d in [50, 100, 200, 400] {
            let p = theorem1_rhs(&inputs(10.0, 256, d, 6, 0.1, 1.0))
                .unwrap()
                .probability_bound;
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn theorem2_examples() {
        assert_eq!(rho(4.0).unwrap(), 0.125);
        assert_eq!(theorem2_bound(10.0, 1.0, 320, 4.0).unwrap(), 0.5);
        assert_eq!(theorem2_bound(10.0, 0.0, 320, 4.0).unwrap(), 0.0);
        assert!(theorem2_bound(10.0, 1.0, 320, 1.0).is_err());
        let a = theorem2_bound(7.0, 0.3, 100, 9.0).unwrap();
        let b = theorem2_bound(7.0, 0.6, 100, 9.0).unwrap();
        assert!(rel(b, 4.0 * a) < 1e-15);
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_constants(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!((g.gamma1, g.gamma2, g.gamma3, g.gamma4), (1.0, 1.0, 1.0, 1.0));
        let g = gamma_constants(0.5, 0.5, 0.5, 0.5, 0.2).unwrap();
        assert!(rel(g.gamma3, 1.5f64.sqrt() / 0.5) < 1e-15);
        assert!(g.gamma3 < 2f64.sqrt() / 0.5);
        assert!(g.gamma2 <= g.gamma1);
        assert!(gamma_constants(0.5, 0.5, 1.0, 0.5, 0.2).is_err());
    }
}
