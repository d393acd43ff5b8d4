//! Minimum free energy estimation (MFEE) of discrete probability mass
//! functions from small samples.
//!
//! The estimator tempers the (smoothed) maximum-likelihood distribution
//! `P̂` into the canonical form `P(x) ∝ P̂(x)^β`, where the data temperature
//! `β ∈ [0, 1]` is derived without free parameters from the KL divergence
//! between the running geometric mean of past estimates and the current
//! `P̂`. At `β = 0` the estimate is uniform (maximum entropy); at `β = 1` it
//! is the ML estimate.
//!
//! All logarithms are natural; entropies and divergences are in nats.
//!
//! ```
//! use mfee_core::{mfee_estimate, MfeeConfig, SampleSequence};
//!
//! let samples = SampleSequence::new(vec![0], 3).unwrap();
//! let result = mfee_estimate(&samples, &MfeeConfig::default()).unwrap();
//! assert!((result.beta - 0.16551).abs() < 1e-5);
//! assert!((result.estimate.probs()[0] - 0.69663).abs() < 1e-5);
//! ```

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod conditional;
pub mod dist;
pub mod error;
pub mod estimator;
pub mod info;
pub mod io;
pub mod report;
pub mod thermo;

pub use baselines::{map_jeffreys, max_entropy_estimate, MapOutcome, JEFFREYS_ALPHA};
pub use conditional::{
    joint_estimate, mfee_conditional, ConditionalMode, ConditionalRow, ConditionalTable,
};
pub use dist::{
    make_distribution, ml_estimate, sample, CountVector, Distribution, SampleSequence,
    DEFAULT_SMOOTHING, NORMALIZATION_TOLERANCE,
};
pub use error::{Error, Result};
pub use estimator::{
    bayes_anchored_estimate, canonical_estimate, effective_information, free_energy_of,
    mfee_estimate, temperature_from_divergence, temperature_step, Anchor, GeoMeanAccumulator,
    GeoMeanMode, MfeeConfig, MfeeResult, Temperature, TemperatureStep, TemperatureTrace,
    DIVERGENCE_FLOOR,
};
pub use info::{
    conditional_entropy, conditional_kl, cross_entropy, entropy, kl_divergence, JointTable,
};
pub use thermo::{
    energy_fluctuation, heat_capacity, identity_report, internal_energy, log_partition_function,
    mfe_fisher_information, partition_function, IdentityCheck, ThermoReport,
};
