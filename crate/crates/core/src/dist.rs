//! Finite-alphabet distributions, counting, additive smoothing and seeded
//! sampling. States are dense indices `0..K`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `Σ p = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Pseudo-count added to every state before normalizing.
pub const DEFAULT_SMOOTHING: f64 = 1e-4;

/// A validated probability mass function over `K ≥ 1` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p >= 0.0) || !p.is_finite())
        {
            return Err(Error::NegativeEntry { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform distribution needs at least one state");
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, state: usize) -> Self {
        assert!(state < k, "state {state} outside alphabet of size {k}");
        let mut probs = vec![0.0; k];
        probs[state] = 1.0;
        Self { probs }
    }

    /// Normalizes non-negative weights with a positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
        {
            return Err(Error::NegativeEntry { index, value });
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NotNormalized { sum: total });
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Builds `exp(l_k - logsumexp(l))`. Entries equal to `-inf` get zero mass;
    /// at least one entry must be finite.
    pub(crate) fn from_log_weights(log_weights: &[f64]) -> Self {
        let lse = log_sum_exp(log_weights);
        debug_assert!(lse.is_finite(), "all log-weights are -inf");
        Self {
            probs: log_weights.iter().map(|l| (l - lse).exp()).collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// First state carrying zero mass, if any.
    pub fn first_zero(&self) -> Option<usize> {
        self.probs.iter().position(|&p| p == 0.0)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.first_zero().is_none()
    }

    /// Expectation of `values` under this distribution.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Mixes in `smoothing` pseudo-counts on top of `n` effective observations:
    /// `(n·p + ε) / (n + K·ε)`.
    pub fn smoothed_as_counts(&self, n: f64, smoothing: f64) -> Self {
        let k = self.len() as f64;
        let denom = n + k * smoothing;
        if denom <= 0.0 {
            return self.clone();
        }
        Self {
            probs: self
                .probs
                .iter()
                .map(|p| (n * p + smoothing) / denom)
                .collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

pub fn make_distribution(probs: &[f64]) -> Result<Distribution> {
    Distribution::new(probs.to_vec())
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Event counts per state. Real-valued so fractional pseudo-counts fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CountVector {
    counts: Vec<f64>,
    total: f64,
}

impl CountVector {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if let Some((index, &value)) = counts
            .iter()
            .enumerate()
            .find(|(_, c)| !(**c >= 0.0) || !c.is_finite())
        {
            return Err(Error::NegativeEntry { index, value });
        }
        let total = counts.iter().sum();
        Ok(Self { counts, total })
    }

    pub fn zeros(k: usize) -> Self {
        assert!(k > 0, "count vector needs at least one state");
        Self {
            counts: vec![0.0; k],
            total: 0.0,
        }
    }

    pub fn increment(&mut self, state: usize) {
        self.counts[state] += 1.0;
        self.total += 1.0;
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn zero_states(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Ordered i.i.d. observations over an alphabet of `K` states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSequence {
    states: Vec<usize>,
    k: usize,
}

impl SampleSequence {
    pub fn new(states: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyDistribution);
        }
        if let Some(&state) = states.iter().find(|&&s| s >= k) {
            return Err(Error::StateOutOfRange { state, k });
        }
        Ok(Self { states, k })
    }

    pub fn empty(k: usize) -> Self {
        assert!(k > 0);
        Self { states: Vec::new(), k }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn counts(&self) -> CountVector {
        let mut counts = CountVector::zeros(self.k);
        for &s in &self.states {
            counts.increment(s);
        }
        counts
    }

    /// Mean state index, `None` for an empty sequence.
    pub fn mean_state(&self) -> Option<f64> {
        if self.states.is_empty() {
            return None;
        }
        let sum: usize = self.states.iter().sum();
        Some(sum as f64 / self.states.len() as f64)
    }
}

/// Relative frequencies after adding `smoothing` to every count:
/// `(c_k + ε) / (N + K·ε)`.
pub fn ml_estimate(counts: &CountVector, smoothing: f64) -> Result<Distribution> {
    if !(smoothing >= 0.0) || !smoothing.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "smoothing must be a finite non-negative number, got {smoothing}"
        )));
    }
    let k = counts.len() as f64;
    let denom = counts.total() + k * smoothing;
    if denom <= 0.0 {
        return Err(Error::EmptySample);
    }
    Ok(Distribution {
        probs: counts
            .counts()
            .iter()
            .map(|c| (c + smoothing) / denom)
            .collect(),
    })
}

/// Draws `n` states by inverse-CDF lookup. The stream is ChaCha8 seeded from
/// `seed`; uniforms take the top 53 bits of each 64-bit output, so sequences
/// are identical across platforms.
pub fn sample(dist: &Distribution, n: usize, seed: u64) -> SampleSequence {
    let k = dist.len();
    let mut cdf = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &p in dist.probs() {
        acc += p;
        cdf.push(acc);
    }
    // rounding can leave cdf[K-1] slightly below 1
    let fallback = dist.probs().iter().rposition(|&p| p > 0.0).unwrap_or(k - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..n)
        .map(|_| {
            let u = unit_f64(rng.next_u64());
            cdf.iter().position(|&c| u < c).unwrap_or(fallback)
        })
        .collect();
    SampleSequence { states, k }
}

fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn make_distribution_accepts_preset() {
        let d = make_distribution(&[0.431, 0.337, 0.232]).unwrap();
        assert_eq!(d.len(), 3);
        make_distribution(&[1.0 / 3.0; 3]).unwrap();
    }

    #[test]
    fn make_distribution_rejects_bad_input() {
        assert!(matches!(
            make_distribution(&[0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            make_distribution(&[1.5, -0.5]),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        assert!(matches!(make_distribution(&[]), Err(Error::EmptyDistribution)));
        assert!(make_distribution(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn ml_relative_frequency() {
        let c = CountVector::new(vec![2.0, 1.0, 1.0]).unwrap();
        assert_eq!(ml_estimate(&c, 0.0).unwrap().probs(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn ml_single_observation_smoothed() {
        let c = CountVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let p = ml_estimate(&c, 1e-4).unwrap();
        // (c + ε) / (N + Kε) with N = 1, K = 3
        assert_abs_diff_eq!(p.probs()[0], 1.0001 / 1.0003, epsilon = 1e-15);
        assert_abs_diff_eq!(p.probs()[1], 1e-4 / 1.0003, epsilon = 1e-15);
        assert_abs_diff_eq!(p.probs()[0], 0.99980, epsilon = 1e-5);
        assert_abs_diff_eq!(p.probs()[1], 9.997e-5, epsilon = 1e-8);
    }

    #[test]
    fn ml_all_mass_from_smoothing() {
        let c = CountVector::zeros(3);
        let p = ml_estimate(&c, 1e-4).unwrap();
        for &x in p.probs() {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert!(matches!(ml_estimate(&c, 0.0), Err(Error::EmptySample)));
        assert!(ml_estimate(&c, -1.0).is_err());
    }

    #[test]
    fn sample_edge_cases() {
        let d = make_distribution(&[0.431, 0.337, 0.232]).unwrap();
        assert!(sample(&d, 0, 7).is_empty());
        let point = Distribution::point_mass(3, 2);
        assert_eq!(sample(&point, 5, 99).states(), &[2, 2, 2, 2, 2]);
    }

    #[test]
    fn sample_frequencies_converge() {
        let d = make_distribution(&[0.431, 0.337, 0.232]).unwrap();
        let s = sample(&d, 100_000, 42);
        let freq = ml_estimate(&s.counts(), 0.0).unwrap();
        for (f, p) in freq.probs().iter().zip(d.probs()) {
            assert!((f - p).abs() < 0.01, "{f} vs {p}");
        }
    }

    #[test]
    fn sample_is_reproducible() {
        let d = make_distribution(&[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(sample(&d, 50, 3), sample(&d, 50, 3));
        assert_ne!(sample(&d, 50, 3), sample(&d, 50, 4));
        // frozen prefix guards against generator drift across versions
        assert_eq!(
            sample(&d, 12, 42).states(),
            FROZEN_SEED_42.as_slice(),
            "sampler output changed"
        );
    }

    const FROZEN_SEED_42: [usize; 12] = [2, 2, 1, 2, 1, 0, 1, 2, 2, 1, 2, 2];

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        let v = [f64::NEG_INFINITY, 0.0, 0.0];
        assert_abs_diff_eq!(log_sum_exp(&v), 2f64.ln(), epsilon = 1e-15);
        let d = Distribution::from_log_weights(&v);
        assert_eq!(d.probs(), &[0.0, 0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn ml_with_smoothing_is_valid(counts in prop::collection::vec(0u32..50, 1..10), eps in 1e-6f64..1.0) {
            let c = CountVector::new(counts.iter().map(|&x| x as f64).collect()).unwrap();
            let p = ml_estimate(&c, eps).unwrap();
            Distribution::new(p.probs().to_vec()).unwrap();
            prop_assert!(p.is_strictly_positive());
        }

        #[test]
        fn ml_is_scale_consistent(counts in prop::collection::vec(1u32..50, 1..10)) {
            let c = CountVector::new(counts.iter().map(|&x| x as f64).collect()).unwrap();
            let c2 = CountVector::new(counts.iter().map(|&x| 2.0 * x as f64).collect()).unwrap();
            prop_assert_eq!(ml_estimate(&c, 0.0).unwrap(), ml_estimate(&c2, 0.0).unwrap());
        }
    }
}
