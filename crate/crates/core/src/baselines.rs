//! Comparison estimators: mean-constrained maximum entropy and the
//! Dirichlet posterior mode (MAP) under a Jeffreys prior.

use serde::Serialize;

use crate::dist::{log_sum_exp, CountVector, Distribution};
use crate::error::{Error, Result};

/// Dirichlet hyperparameter of the Jeffreys prior.
pub const JEFFREYS_ALPHA: f64 = 0.5;

const BOUNDARY_TOLERANCE: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;
const MAX_BRACKET_DOUBLINGS: usize = 1100;

fn gibbs_log_weights(lambda: f64, values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| -lambda * v).collect()
}

fn gibbs_mean(lambda: f64, values: &[f64]) -> f64 {
    let lw = gibbs_log_weights(lambda, values);
    let lse = log_sum_exp(&lw);
    lw.iter().zip(values).map(|(l, v)| (l - lse).exp() * v).sum()
}

/// Lagrange multiplier `λ` with `Σ v_k e^{-λ v_k} / Σ e^{-λ v_k} = mean`.
///
/// The constrained mean is strictly decreasing in `λ`, so a bracket found by
/// doubling `|λ|` from 1 is bisected until it collapses (at most 200 steps).
/// `mean` must lie strictly inside the value range.
pub fn solve_multiplier(mean: f64, values: &[f64]) -> Result<f64> {
    let (min, max) = (values[0], values[values.len() - 1]);
    if !(mean > min && mean < max) {
        return Err(Error::MeanOutOfRange { mean, min, max });
    }
    let mut lo = -1.0;
    let mut hi = 1.0;
    for _ in 0..MAX_BRACKET_DOUBLINGS {
        if gibbs_mean(lo, values) >= mean {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..MAX_BRACKET_DOUBLINGS {
        if gibbs_mean(hi, values) <= mean {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let m = gibbs_mean(mid, values);
        if m == mean {
            return Ok(mid);
        }
        if m > mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m_lo = gibbs_mean(lo, values);
    let m_hi = gibbs_mean(hi, values);
    Ok(if (m_lo - mean).abs() <= (m_hi - mean).abs() { lo } else { hi })
}

/// Maximum-entropy distribution over states with the given `values` whose
/// mean equals `sample_mean`: `P_k ∝ exp(-λ values[k])`.
///
/// Means within 1e-12 of either end of the range return the matching point
/// mass.
pub fn max_entropy_estimate(sample_mean: f64, values: &[f64]) -> Result<Distribution> {
    if values.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "state values must be finite and strictly increasing".into(),
        ));
    }
    let k = values.len();
    let (min, max) = (values[0], values[k - 1]);
    if !sample_mean.is_finite()
        || sample_mean < min - BOUNDARY_TOLERANCE
        || sample_mean > max + BOUNDARY_TOLERANCE
    {
        return Err(Error::MeanOutOfRange {
            mean: sample_mean,
            min,
            max,
        });
    }
    if (sample_mean - min).abs() <= BOUNDARY_TOLERANCE {
        return Ok(Distribution::point_mass(k, 0));
    }
    if (sample_mean - max).abs() <= BOUNDARY_TOLERANCE {
        return Ok(Distribution::point_mass(k, k - 1));
    }
    let lambda = solve_multiplier(sample_mean, values)?;
    Ok(Distribution::from_log_weights(&gibbs_log_weights(lambda, values)))
}

/// State values `0, 1, …, K-1`.
pub fn index_values(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapOutcome {
    Available(Distribution),
    /// The posterior mode is undefined; lists the states whose counts are too
    /// small for the prior.
    Unavailable { states: Vec<usize> },
}

impl MapOutcome {
    pub fn distribution(&self) -> Option<&Distribution> {
        match self {
            MapOutcome::Available(d) => Some(d),
            MapOutcome::Unavailable { .. } => None,
        }
    }

    pub fn is_available(&self) -> bool {
        matches!(self, MapOutcome::Available(_))
    }
}

/// Mode of the Dirichlet(`alpha`) posterior:
/// `(c_k + α - 1) / (N + K α - K)`, available only when every numerator is
/// non-negative and the denominator positive.
pub fn map_jeffreys(counts: &CountVector, alpha: f64) -> MapOutcome {
    let k = counts.len() as f64;
    let denom = counts.total() + k * alpha - k;
    let short: Vec<usize> = counts
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c + alpha - 1.0 < 0.0)
        .map(|(i, _)| i)
        .collect();
    if !short.is_empty() {
        return MapOutcome::Unavailable { states: short };
    }
    if !(denom > 0.0) {
        return MapOutcome::Unavailable {
            states: (0..counts.len()).collect(),
        };
    }
    match Distribution::new(
        counts
            .counts()
            .iter()
            .map(|c| (c + alpha - 1.0) / denom)
            .collect(),
    ) {
        Ok(d) => MapOutcome::Available(d),
        Err(_) => MapOutcome::Unavailable {
            states: (0..counts.len()).collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::entropy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn counts(c: &[f64]) -> CountVector {
        CountVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn max_entropy_examples() {
        let v = index_values(3);
        let u = max_entropy_estimate(1.0, &v).unwrap();
        for p in u.probs() {
            assert_abs_diff_eq!(*p, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_eq!(max_entropy_estimate(0.0, &v).unwrap(), Distribution::point_mass(3, 0));
        assert_eq!(max_entropy_estimate(2.0, &v).unwrap(), Distribution::point_mass(3, 2));

        // t = e^{-λ} solves 3t² + t - 1 = 0
        let t = (13f64.sqrt() - 1.0) / 6.0;
        let z = 1.0 + t + t * t;
        let p = max_entropy_estimate(0.5, &v).unwrap();
        for (x, e) in p.probs().iter().zip([1.0 / z, t / z, t * t / z]) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.probs()[0], 0.6162, epsilon = 1e-4);
        assert_abs_diff_eq!(p.probs()[1], 0.2676, epsilon = 1e-4);
        assert_abs_diff_eq!(p.probs()[2], 0.1162, epsilon = 1e-4);
    }

    #[test]
    fn max_entropy_rejects_bad_input() {
        let v = index_values(3);
        assert!(matches!(
            max_entropy_estimate(2.5, &v),
            Err(Error::MeanOutOfRange { .. })
        ));
        assert!(max_entropy_estimate(-0.1, &v).is_err());
        assert!(max_entropy_estimate(1.0, &[0.0, 2.0, 1.0]).is_err());
        assert!(max_entropy_estimate(1.0, &[]).is_err());
        assert!(max_entropy_estimate(f64::NAN, &v).is_err());
    }

    #[test]
    fn max_entropy_near_boundary() {
        let v = index_values(3);
        for mean in [1e-9, 1e-6, 1.999999, 2.0 - 1e-10] {
            let p = max_entropy_estimate(mean, &v).unwrap();
            assert!((p.expectation(&v) - mean).abs() <= 1e-10, "mean {mean}");
        }
    }

    #[test]
    fn map_examples() {
        let m = map_jeffreys(&counts(&[2.0, 1.0, 1.0]), JEFFREYS_ALPHA);
        let d = m.distribution().unwrap();
        for (x, e) in d.probs().iter().zip([0.6, 0.2, 0.2]) {
            assert_abs_diff_eq!(*x, e, epsilon = 1e-15);
        }
        assert_eq!(
            map_jeffreys(&counts(&[4.0, 0.0, 1.0]), JEFFREYS_ALPHA),
            MapOutcome::Unavailable { states: vec![1] }
        );
        let u = map_jeffreys(&counts(&[1.0, 1.0, 1.0]), JEFFREYS_ALPHA);
        for x in u.distribution().unwrap().probs() {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn map_with_flat_prior_is_ml() {
        let m = map_jeffreys(&counts(&[3.0, 0.0, 1.0]), 1.0);
        assert_eq!(m.distribution().unwrap().probs(), &[0.75, 0.0, 0.25]);
    }

    /// Grid search over the one-parameter family of K = 3 distributions with
    /// a fixed mean; returns the best entropy found after refinement.
    fn grid_max_entropy(mean: f64) -> f64 {
        // p2 = t, p1 = mean - 2t, p0 = 1 - p1 - p2
        let feasible = |t: f64| {
            let p1 = mean - 2.0 * t;
            let p0 = 1.0 - p1 - t;
            (t >= 0.0 && p1 >= 0.0 && p0 >= 0.0).then(|| {
                [p0, p1, t]
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|p| -p * p.ln())
                    .sum::<f64>()
            })
        };
        let (mut lo, mut hi) = (0.0f64, mean / 2.0);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for _ in 0..60 {
            let n = 200;
            for i in 0..=n {
                let t = lo + (hi - lo) * i as f64 / n as f64;
                if let Some(h) = feasible(t) {
                    if h > best.0 {
                        best = (h, t);
                    }
                }
            }
            let w = (hi - lo) / n as f64;
            lo = (best.1 - 2.0 * w).max(0.0);
            hi = (best.1 + 2.0 * w).min(mean / 2.0);
        }
        best.0
    }

    #[test]
    fn max_entropy_matches_grid_search() {
        let v = index_values(3);
        let mut mean = 0.05;
        while mean < 1.99 {
            let p = max_entropy_estimate(mean, &v).unwrap();
            let h_grid = grid_max_entropy(mean);
            assert!((entropy(&p) - h_grid).abs() <= 1e-8, "mean {mean}");
            mean += 0.05;
        }
    }

    proptest! {
        #[test]
        fn max_entropy_constraint_and_gibbs_form(k in 2usize..8, frac in 0.001f64..0.999) {
            let v = index_values(k);
            let mean = frac * (k - 1) as f64;
            let p = max_entropy_estimate(mean, &v).unwrap();
            prop_assert!((p.expectation(&v) - mean).abs() <= 1e-10);
            // log p_k affine in the state value
            let logs: Vec<f64> = p.probs().iter().map(|x| x.ln()).collect();
            let slope = logs[1] - logs[0];
            for i in 0..k {
                prop_assert!((logs[i] - (logs[0] + slope * i as f64)).abs() <= 1e-9);
            }
        }

        #[test]
        fn map_unavailable_iff_zero_count(c in prop::collection::vec(0u32..6, 2..6)) {
            let cv = CountVector::new(c.iter().map(|&x| x as f64).collect()).unwrap();
            let out = map_jeffreys(&cv, JEFFREYS_ALPHA);
            prop_assert_eq!(out.is_available(), c.iter().all(|&x| x >= 1));
        }
    }
}
