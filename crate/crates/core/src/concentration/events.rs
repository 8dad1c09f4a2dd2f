use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{event_bounds, Event, EventParams, TailCheckReport};
use crate::codebook::{Codebook, ComplexityBudget};
use crate::error::{Error, Result};
use crate::quantize::QuantizedSignal;
use crate::rng::{trial_seed, Purpose};
use crate::sensing::{noise, SensingEnsemble};

/// Largest difference set `verify_events` will scan.
pub const MAX_DIFFERENCE_SET: u64 = 1_000_000;

/// Distinct decoded signals within the budget, in canonical order of their
/// first program.
pub fn distinct_signals(codebook: &Codebook, budget: ComplexityBudget) -> Result<Vec<QuantizedSignal>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for entry in codebook.enumerate(budget) {
        let signal = entry.decode()?;
        if seen.insert(signal.codes()) {
            out.push(signal);
        }
    }
    Ok(out)
}

/// Complement frequencies of E1..E5 and of their intersection (`UNION`, any
/// event failing), over fresh `(A, w)` per trial.
///
/// The difference set is every `x_i - x_j` over distinct decoded signals;
/// `h` and `-h` test identically, so each unordered pair is scanned once and
/// `h = 0` (which satisfies every event) is skipped. Its size is counted as
/// `k (k - 1) + 1` for `k` distinct signals.
pub fn verify_events(
    params: &EventParams,
    codebook: &Codebook,
    budget: ComplexityBudget,
    d: usize,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<TailCheckReport>> {
    let n = codebook.n();
    let bounds = event_bounds(params, d, n, budget.max_bits() as f64, sigma)?;
    if trials == 0 {
        return Err(Error::domain("trials", 0.0));
    }
    let signals = distinct_signals(codebook, budget)?;
    let k = signals.len() as u64;
    let size = k * k.saturating_sub(1) + 1;
    if size > MAX_DIFFERENCE_SET {
        return Err(Error::DifferenceSetTooLarge {
            size,
            cap: MAX_DIFFERENCE_SET,
        });
    }
    let mut h_norms = Vec::with_capacity((k * k.saturating_sub(1) / 2) as usize);
    for (i, a) in signals.iter().enumerate() {
        for b in &signals[i + 1..] {
            let sq: f64 = a.values().iter().zip(b.values()).map(|(u, v)| (u - v) * (u - v)).sum();
            h_norms.push(sq);
        }
    }

    let p = *params;
    let df = d as f64;
    let e2_threshold = (1.0 + p.t3) * df.sqrt() + (n as f64).sqrt();
    let e5_threshold = sigma * sigma * n as f64 * df * (1.0 + p.t6);
    let failures = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[bool; 5]> {
            let a = SensingEnsemble::draw(d, n, trial_seed(seed, t, Purpose::Ensemble))?;
            let w = noise(d, sigma, trial_seed(seed, t, Purpose::Noise))?;
            let images: Vec<Vec<f64>> = signals.iter().map(|s| a.measure(s.values())).collect::<Result<_>>()?;
            let projections: Vec<f64> = images
                .iter()
                .map(|img| img.iter().zip(&w).map(|(u, v)| u * v).sum())
                .collect();

            let (mut e1, mut e3, mut e4) = (false, false, false);
            let mut pair = 0;
            'scan: for i in 0..images.len() {
                for j in i + 1..images.len() {
                    let h2 = h_norms[pair];
                    pair += 1;
                    let ah2: f64 = images[i].iter().zip(&images[j]).map(|(u, v)| (u - v) * (u - v)).sum();
                    e1 |= (projections[i] - projections[j]).abs() > p.t1 * h2.sqrt();
                    e3 |= ah2 <= (1.0 - p.t4) * df * h2;
                    e4 |= ah2 >= (1.0 + p.t5) * df * h2;
                    if e1 && e3 && e4 {
                        break 'scan;
                    }
                }
            }
            let e2 = a.sigma_max()? >= e2_threshold;
            let back: f64 = a.transpose_mul(&w)?.iter().map(|v| v * v).sum();
            let e5 = back > e5_threshold;
            Ok([e1, e2, e3, e4, e5])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reports: Vec<TailCheckReport> = Event::ALL
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let hits = failures.iter().filter(|f| f[i]).count() as u64;
            TailCheckReport::new(e.to_string(), trials, hits, bounds.get(*e))
        })
        .collect();
    let any = failures.iter().filter(|f| f.iter().any(|&x| x)).count() as u64;
    reports.push(TailCheckReport::new("UNION", trials, any, bounds.union()));
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Generator;
    use crate::quantize::Resolution;

    fn book(gens: Vec<Generator>, n: usize, m: u32) -> Codebook {
        Codebook::new(gens, n, Resolution::new(m).unwrap()).unwrap()
    }

    #[test]
    fn singleton_codebook_is_vacuous_for_difference_events() {
        let b = book(vec![Generator::KSparse { max_k: 1 }], 8, 2);
        let budget = ComplexityBudget::new(9).unwrap();
        assert_eq!(distinct_signals(&b, budget).unwrap().len(), 1);
        let p = EventParams::standard(4.0, 0.5, 16, 9.0).unwrap();
        let reports = verify_events(&p, &b, budget, 16, 0.5, 50, 3).unwrap();
        for name in ["E1", "E3", "E4"] {
            assert_eq!(reports.iter().find(|r| r.event_name == name).unwrap().hits, 0);
        }
    }

    #[test]
    fn duplicates_collapse() {
        // Zero is printed by K_SPARSE (k=0) and CONSTANT(0).
        let b = book(vec![Generator::Constant, Generator::KSparse { max_k: 1 }], 4, 2);
        let budget = ComplexityBudget::new(14).unwrap();
        let signals = distinct_signals(&b, budget).unwrap();
        assert_eq!(b.count(budget), 1 + 4 + 4 * 3);
        assert_eq!(signals.len(), 1 + 3 + 4 * 3);
    }

    #[test]
    fn union_counts_any_failure() {
        let b = book(vec![Generator::Constant], 8, 2);
        let budget = ComplexityBudget::new(10).unwrap();
        let mut p = EventParams::standard(4.0, 0.3, 8, 10.0).unwrap();
        p.t1 = 0.0;
        let reports = verify_events(&p, &b, budget, 8, 0.3, 40, 1).unwrap();
        let union = reports.last().unwrap();
        let max = reports[..5].iter().map(|r| r.hits).max().unwrap();
        let sum: u64 = reports[..5].iter().map(|r| r.hits).sum();
        assert!(union.hits >= max && union.hits <= sum);
        assert_eq!(reports[0].hits, 40);
    }

    #[test]
    fn difference_set_cap() {
        let b = book(vec![Generator::Constant, Generator::KSparse { max_k: 1 }], 256, 6);
        let budget = ComplexityBudget::new(23).unwrap();
        let p = EventParams::standard(4.0, 0.1, 8, 23.0).unwrap();
        assert!(matches!(
            verify_events(&p, &b, budget, 8, 0.1, 1, 0),
            Err(Error::DifferenceSetTooLarge { .. })
        ));
    }
}
