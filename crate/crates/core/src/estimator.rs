//! The minimum-free-energy estimator.
//!
//! For every prefix of the sample the estimator
//!
//! 1. forms the anchor `P̂_i` (smoothed ML, or a Dirichlet posterior point
//!    estimate for [`bayes_anchored_estimate`]),
//! 2. measures the data temperature from `D = KL(P^G_{i-1} || P̂_i)`, where
//!    `P^G_{i-1}` is the geometric mean of the uniform start `P_0` and all
//!    earlier estimates: `β0 = 1/D`, `β = β0 / (1 + β0)`,
//! 3. tempers the anchor into the canonical distribution
//!    `P_i(x) = P̂_i(x)^β / Σ P̂_i(x')^β`,
//! 4. folds `P_i` into the geometric mean.
//!
//! With no data the estimate is uniform and `β = β0 = 0`. A vanishing
//! divergence (`D ≤` [`DIVERGENCE_FLOOR`]) maps to `β0 = ∞`, `β = 1`.
//!
//! The recursion consumes samples in the order given; permuting a sample
//! changes the temperature trace.

use serde::{Deserialize, Serialize};

use crate::baselines::{map_jeffreys, MapOutcome};
use crate::dist::{ml_estimate, log_sum_exp, CountVector, Distribution, SampleSequence, DEFAULT_SMOOTHING};
use crate::error::{Error, Result};
use crate::info::{cross_entropy, entropy};

/// Divergences at or below this value count as zero fluctuation.
pub const DIVERGENCE_FLOOR: f64 = 1e-12;

/// How the geometric mean of past estimates enters the divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeoMeanMode {
    /// Renormalize the geometric mean to sum to one, so `D ≥ 0`.
    #[default]
    Normalized,
    /// Use the raw, sub-normalized geometric mean. The divergence can go
    /// negative and is clamped to the floor, i.e. `β = 1`.
    Raw,
}

/// Point estimate of the Dirichlet posterior used as the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    /// `(c_k + α) / (N + K α)`; always defined.
    #[default]
    PosteriorMean,
    /// `(c_k + α - 1) / (N + K α - K)`; unavailable for small counts.
    PosteriorMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfeeConfig {
    /// Pseudo-count added to each state of the ML anchor at every prefix.
    pub smoothing: f64,
    pub geomean: GeoMeanMode,
    /// Only used by [`bayes_anchored_estimate`].
    pub anchor: Anchor,
}

impl Default for MfeeConfig {
    fn default() -> Self {
        Self {
            smoothing: DEFAULT_SMOOTHING,
            geomean: GeoMeanMode::default(),
            anchor: Anchor::default(),
        }
    }
}

/// Running per-state sums of `log P_i`, seeded with the uniform `P_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoMeanAccumulator {
    log_sums: Vec<f64>,
    count: usize,
}

impl GeoMeanAccumulator {
    pub fn new(k: usize) -> Self {
        assert!(k > 0);
        Self {
            log_sums: vec![-(k as f64).ln(); k],
            count: 1,
        }
    }

    pub fn from_parts(log_sums: Vec<f64>, count: usize) -> Result<Self> {
        if log_sums.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if count == 0 {
            return Err(Error::InvalidArgument("accumulator count must be ≥ 1".into()));
        }
        if log_sums.iter().any(|s| !s.is_finite() || *s > 0.0) {
            return Err(Error::InvalidArgument(
                "log sums must be finite and non-positive".into(),
            ));
        }
        Ok(Self { log_sums, count })
    }

    pub fn update(&mut self, p: &Distribution) -> Result<()> {
        if p.len() != self.log_sums.len() {
            return Err(Error::DimensionMismatch {
                left: self.log_sums.len(),
                right: p.len(),
            });
        }
        if let Some(index) = p.first_zero() {
            return Err(Error::ZeroProbability { index });
        }
        for (s, &pk) in self.log_sums.iter_mut().zip(p.probs()) {
            *s += pk.ln();
        }
        self.count += 1;
        Ok(())
    }

    pub fn updated(&self, p: &Distribution) -> Result<Self> {
        let mut next = self.clone();
        next.update(p)?;
        Ok(next)
    }

    /// `exp(log_sums / count)`, optionally renormalized.
    pub fn geometric_mean(&self, normalize: bool) -> Vec<f64> {
        let n = self.count as f64;
        let logs: Vec<f64> = self.log_sums.iter().map(|s| s / n).collect();
        if normalize {
            let lse = log_sum_exp(&logs);
            logs.iter().map(|l| (l - lse).exp()).collect()
        } else {
            logs.iter().map(|l| l.exp()).collect()
        }
    }

    pub fn log_sums(&self) -> &[f64] {
        &self.log_sums
    }

    /// Number of estimates folded in, `P_0` included.
    pub fn count(&self) -> usize {
        self.count
    }
}

/// Data temperature at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature {
    pub divergence: f64,
    /// `+∞` when the divergence vanished.
    pub beta0: f64,
    pub beta: f64,
}

pub fn temperature_from_divergence(divergence: f64) -> Result<Temperature> {
    if divergence.is_nan() || divergence < -DIVERGENCE_FLOOR {
        return Err(Error::NegativeDivergence(divergence));
    }
    if divergence <= DIVERGENCE_FLOOR {
        return Ok(Temperature {
            divergence,
            beta0: f64::INFINITY,
            beta: 1.0,
        });
    }
    let beta0 = 1.0 / divergence;
    Ok(Temperature {
        divergence,
        beta0,
        beta: beta0 / (1.0 + beta0),
    })
}

fn fluctuation(geomean: &[f64], anchor: &Distribution) -> Result<f64> {
    if geomean.len() != anchor.len() {
        return Err(Error::DimensionMismatch {
            left: geomean.len(),
            right: anchor.len(),
        });
    }
    if let Some(index) = anchor.first_zero() {
        return Err(Error::ZeroProbability { index });
    }
    Ok(geomean
        .iter()
        .zip(anchor.probs())
        .filter(|(g, _)| **g > 0.0)
        .map(|(g, a)| g * (g / a).ln())
        .sum())
}

/// `(β0, β)` from the divergence between the previous geometric mean and the
/// current anchor.
pub fn temperature_step(geomean: &[f64], anchor: &Distribution) -> Result<Temperature> {
    temperature_from_divergence(fluctuation(geomean, anchor)?)
}

/// `P(x) ∝ anchor(x)^β`, evaluated in log space. `β = 1` returns the anchor
/// unchanged and `β = 0` the uniform distribution, both exactly.
pub fn canonical_estimate(anchor: &Distribution, beta: f64) -> Distribution {
    if beta == 1.0 {
        return anchor.clone();
    }
    if beta == 0.0 {
        return Distribution::uniform(anchor.len());
    }
    let log_weights: Vec<f64> = anchor
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { beta * p.ln() } else { f64::NEG_INFINITY })
        .collect();
    Distribution::from_log_weights(&log_weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureStep {
    /// Prefix length.
    #[serde(rename = "i")]
    pub step: usize,
    #[serde(rename = "D", with = "crate::report::extended_f64")]
    pub divergence: f64,
    #[serde(with = "crate::report::extended_f64")]
    pub beta0: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemperatureTrace(pub Vec<TemperatureStep>);

impl TemperatureTrace {
    pub fn steps(&self) -> &[TemperatureStep] {
        &self.0
    }

    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|s| s.beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfeeResult {
    pub estimate: Distribution,
    /// Anchor of the last step (smoothed ML or Bayesian point estimate).
    pub anchor: Distribution,
    pub beta: f64,
    /// `+∞` encodes zero fluctuation; `0` means no data.
    pub beta0: f64,
    pub trace: TemperatureTrace,
    /// `U - H/β`; `None` at `β = 0`.
    pub free_energy: Option<f64>,
    pub effective_information: f64,
    pub samples: usize,
}

fn temper_sequence<F>(samples: &SampleSequence, config: &MfeeConfig, mut anchor_at: F) -> Result<MfeeResult>
where
    F: FnMut(&CountVector) -> Result<Distribution>,
{
    let k = samples.alphabet_size();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "alphabet must have at least 2 states, got {k}"
        )));
    }
    let normalize = config.geomean == GeoMeanMode::Normalized;

    let mut acc = GeoMeanAccumulator::new(k);
    let mut counts = CountVector::zeros(k);
    let mut estimate = Distribution::uniform(k);
    let mut anchor = Distribution::uniform(k);
    let mut beta = 0.0;
    let mut beta0 = 0.0;
    let mut trace = Vec::with_capacity(samples.len());

    for (i, &state) in samples.states().iter().enumerate() {
        counts.increment(state);
        anchor = anchor_at(&counts)?;
        let geomean = acc.geometric_mean(normalize);
        let temp = if normalize {
            temperature_step(&geomean, &anchor)?
        } else {
            let d = fluctuation(&geomean, &anchor)?;
            Temperature {
                divergence: d,
                ..temperature_from_divergence(d.max(DIVERGENCE_FLOOR))?
            }
        };
        estimate = canonical_estimate(&anchor, temp.beta);
        acc.update(&estimate)?;
        beta = temp.beta;
        beta0 = temp.beta0;
        trace.push(TemperatureStep {
            step: i + 1,
            divergence: temp.divergence,
            beta0,
            beta,
        });
    }

    let free_energy = if beta > 0.0 {
        Some(cross_entropy(&estimate, &anchor)? - entropy(&estimate) / beta)
    } else {
        None
    };
    Ok(MfeeResult {
        effective_information: -entropy(&estimate),
        estimate,
        anchor,
        beta,
        beta0,
        trace: TemperatureTrace(trace),
        free_energy,
        samples: samples.len(),
    })
}

/// Runs the recursion with the additively smoothed ML estimate as anchor.
pub fn mfee_estimate(samples: &SampleSequence, config: &MfeeConfig) -> Result<MfeeResult> {
    let smoothing = config.smoothing;
    temper_sequence(samples, config, |counts| ml_estimate(counts, smoothing))
}

/// Same recursion with a Dirichlet(`prior_alpha`) posterior point estimate in
/// place of the ML anchor, both for tempering and inside the temperature step.
pub fn bayes_anchored_estimate(
    samples: &SampleSequence,
    prior_alpha: f64,
    config: &MfeeConfig,
) -> Result<MfeeResult> {
    if !(prior_alpha > 0.0) || !prior_alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "prior alpha must be positive, got {prior_alpha}"
        )));
    }
    match config.anchor {
        Anchor::PosteriorMean => temper_sequence(samples, config, |counts| {
            let k = counts.len() as f64;
            let denom = counts.total() + k * prior_alpha;
            Distribution::new(
                counts
                    .counts()
                    .iter()
                    .map(|c| (c + prior_alpha) / denom)
                    .collect(),
            )
        }),
        Anchor::PosteriorMode => temper_sequence(samples, config, |counts| {
            match map_jeffreys(counts, prior_alpha) {
                MapOutcome::Available(d) => Ok(d),
                MapOutcome::Unavailable { states } => Err(Error::MapUnavailable { states }),
            }
        }),
    }
}

/// `F = U - H/β` with `U` the cross entropy of the estimate against `ml`.
pub fn free_energy_of(result: &MfeeResult, ml: &Distribution) -> Result<f64> {
    if result.beta <= 0.0 {
        return Err(Error::UndefinedAtZeroTemperature);
    }
    Ok(cross_entropy(&result.estimate, ml)? - entropy(&result.estimate) / result.beta)
}

/// `Σ P log P` of the estimate, i.e. its negative entropy.
pub fn effective_information(result: &MfeeResult) -> f64 {
    -entropy(&result.estimate)
}
