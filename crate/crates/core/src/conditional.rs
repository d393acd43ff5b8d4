//! Conditional estimation `P(x | y)` and chain-rule joints.

use serde::{Deserialize, Serialize};

use crate::dist::{ml_estimate, CountVector, Distribution, SampleSequence};
use crate::error::{Error, Result};
use crate::estimator::{
    canonical_estimate, mfee_estimate, temperature_from_divergence, GeoMeanAccumulator,
    GeoMeanMode, MfeeConfig, TemperatureStep, TemperatureTrace, DIVERGENCE_FLOOR,
};
use crate::info::JointTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionalMode {
    /// Independent recursion per context, each with its own `β`.
    #[default]
    PerContext,
    /// One `β` shared by all contexts, driven by the conditional KL
    /// divergence between row-wise geometric means and the conditional ML.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalRow {
    pub distribution: Distribution,
    pub beta: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalTable {
    states: usize,
    rows: Vec<ConditionalRow>,
    /// Shared temperature trace in global mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<TemperatureTrace>,
}

impl ConditionalTable {
    pub fn new(states: usize, rows: Vec<ConditionalRow>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.distribution.len() != states) {
            return Err(Error::DimensionMismatch {
                left: states,
                right: bad.distribution.len(),
            });
        }
        Ok(Self {
            states,
            rows,
            trace: None,
        })
    }

    pub fn contexts(&self) -> usize {
        self.rows.len()
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn row(&self, context: usize) -> &ConditionalRow {
        &self.rows[context]
    }

    pub fn rows(&self) -> &[ConditionalRow] {
        &self.rows
    }

    pub fn trace(&self) -> Option<&TemperatureTrace> {
        self.trace.as_ref()
    }
}

fn validate_pairs(pairs: &[(usize, usize)], contexts: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "alphabet must have at least 2 states, got {k}"
        )));
    }
    for &(y, x) in pairs {
        if y >= contexts {
            return Err(Error::StateOutOfRange { state: y, k: contexts });
        }
        if x >= k {
            return Err(Error::StateOutOfRange { state: x, k });
        }
    }
    Ok(())
}

/// Estimates `P(x | y)` from `(context, state)` pairs over `contexts` contexts
/// and `k` states. Contexts without samples get the uniform row and `β = 0`.
pub fn mfee_conditional(
    pairs: &[(usize, usize)],
    contexts: usize,
    k: usize,
    mode: ConditionalMode,
    config: &MfeeConfig,
) -> Result<ConditionalTable> {
    validate_pairs(pairs, contexts, k)?;
    match mode {
        ConditionalMode::PerContext => per_context(pairs, contexts, k, config),
        ConditionalMode::Global => global(pairs, contexts, k, config),
    }
}

fn per_context(
    pairs: &[(usize, usize)],
    contexts: usize,
    k: usize,
    config: &MfeeConfig,
) -> Result<ConditionalTable> {
    let mut split = vec![Vec::new(); contexts];
    for &(y, x) in pairs {
        split[y].push(x);
    }
    let rows = split
        .into_iter()
        .map(|states| {
            let samples = states.len();
            let r = mfee_estimate(&SampleSequence::new(states, k)?, config)?;
            Ok(ConditionalRow {
                distribution: r.estimate,
                beta: r.beta,
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ConditionalTable::new(k, rows)
}

fn global(
    pairs: &[(usize, usize)],
    contexts: usize,
    k: usize,
    config: &MfeeConfig,
) -> Result<ConditionalTable> {
    let normalize = config.geomean == GeoMeanMode::Normalized;
    let mut accs = vec![GeoMeanAccumulator::new(k); contexts];
    let mut counts = vec![CountVector::zeros(k); contexts];
    let mut rows = vec![Distribution::uniform(k); contexts];
    let mut beta = 0.0;
    let mut trace = Vec::with_capacity(pairs.len());

    for (i, &(y, x)) in pairs.iter().enumerate() {
        counts[y].increment(x);
        let n = (i + 1) as f64;
        let anchors = counts
            .iter()
            .map(|c| ml_estimate(c, config.smoothing))
            .collect::<Result<Vec<_>>>()?;

        // Σ_y P̂(y) Σ_x G(x|y) log(G(x|y) / P̂(x|y)), with P̂(y) the context
        // frequency among the first i pairs
        let mut divergence = 0.0;
        for ((acc, anchor), c) in accs.iter().zip(&anchors).zip(&counts) {
            if c.total() == 0.0 {
                continue;
            }
            if let Some(index) = anchor.first_zero() {
                return Err(Error::ZeroProbability { index });
            }
            let g = acc.geometric_mean(normalize);
            let row_kl: f64 = g
                .iter()
                .zip(anchor.probs())
                .map(|(g, a)| g * (g / a).ln())
                .sum();
            divergence += c.total() / n * row_kl;
        }
        let temp = if normalize {
            temperature_from_divergence(divergence)?
        } else {
            temperature_from_divergence(divergence.max(DIVERGENCE_FLOOR))?
        };
        beta = temp.beta;
        for ((acc, anchor), row) in accs.iter_mut().zip(&anchors).zip(rows.iter_mut()) {
            *row = canonical_estimate(anchor, beta);
            acc.update(row)?;
        }
        trace.push(TemperatureStep {
            step: i + 1,
            divergence,
            beta0: temp.beta0,
            beta,
        });
    }

    let rows = rows
        .into_iter()
        .zip(&counts)
        .map(|(distribution, c)| {
            let samples = c.total() as usize;
            if samples == 0 {
                ConditionalRow {
                    distribution: Distribution::uniform(k),
                    beta: 0.0,
                    samples,
                }
            } else {
                ConditionalRow {
                    distribution,
                    beta,
                    samples,
                }
            }
        })
        .collect();
    let mut table = ConditionalTable::new(k, rows)?;
    table.trace = Some(TemperatureTrace(trace));
    Ok(table)
}

/// `P(x, y) = P(x | y) P(y)`.
pub fn joint_estimate(cond: &ConditionalTable, marginal: &Distribution) -> Result<JointTable> {
    if marginal.len() != cond.contexts() {
        return Err(Error::DimensionMismatch {
            left: cond.contexts(),
            right: marginal.len(),
        });
    }
    let probs = cond
        .rows()
        .iter()
        .zip(marginal.probs())
        .flat_map(|(row, py)| row.distribution.probs().iter().map(move |px| px * py))
        .collect();
    JointTable::from_flat(cond.contexts(), cond.states(), probs)
}
