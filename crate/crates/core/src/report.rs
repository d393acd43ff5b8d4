//! JSON reports.

use serde::{Deserialize, Serialize};

use crate::baselines::MapOutcome;
use crate::conditional::{ConditionalMode, ConditionalTable};
use crate::dist::Distribution;
use crate::estimator::{MfeeResult, TemperatureStep};

/// Serializes `f64` with non-finite values as the strings `"inf"`, `"-inf"`
/// and `"nan"`, which plain JSON numbers cannot carry.
pub mod extended_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            s.serialize_f64(*value)
        } else if value.is_nan() {
            s.serialize_str("nan")
        } else if *value > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = f64;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            #[derive(serde::Deserialize)]
            struct Wrap(#[serde(with = "super")] f64);
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// Output of a single estimator on one sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub method: String,
    pub alphabet: Vec<String>,
    pub sample_size: usize,
    /// `None` when the estimator has no answer (unavailable MAP).
    pub estimate: Option<Vec<f64>>,
    pub beta: Option<f64>,
    #[serde(with = "extended_f64::option", default)]
    pub beta0: Option<f64>,
    pub free_energy: Option<f64>,
    pub effective_information: Option<f64>,
    pub trace: Option<Vec<TemperatureStep>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unavailable_states: Option<Vec<String>>,
}

impl EstimationReport {
    pub fn plain(method: &str, alphabet: &[String], sample_size: usize, estimate: &Distribution) -> Self {
        Self {
            method: method.to_string(),
            alphabet: alphabet.to_vec(),
            sample_size,
            estimate: Some(estimate.probs().to_vec()),
            beta: None,
            beta0: None,
            free_energy: None,
            effective_information: None,
            trace: None,
            unavailable_states: None,
        }
    }

    pub fn from_mfee(method: &str, alphabet: &[String], result: &MfeeResult) -> Self {
        Self {
            method: method.to_string(),
            alphabet: alphabet.to_vec(),
            sample_size: result.samples,
            estimate: Some(result.estimate.probs().to_vec()),
            beta: Some(result.beta),
            beta0: Some(result.beta0),
            free_energy: result.free_energy,
            effective_information: Some(result.effective_information),
            trace: Some(result.trace.steps().to_vec()),
            unavailable_states: None,
        }
    }

    pub fn from_map(alphabet: &[String], sample_size: usize, outcome: &MapOutcome) -> Self {
        match outcome {
            MapOutcome::Available(d) => Self::plain("map", alphabet, sample_size, d),
            MapOutcome::Unavailable { states } => Self {
                estimate: None,
                unavailable_states: Some(states.iter().map(|&s| alphabet[s].clone()).collect()),
                ..Self::plain("map", alphabet, sample_size, &Distribution::uniform(alphabet.len()))
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRowReport {
    pub context: String,
    pub samples: usize,
    pub beta: f64,
    pub estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReport {
    pub mode: ConditionalMode,
    pub alphabet: Vec<String>,
    pub rows: Vec<ConditionalRowReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TemperatureStep>>,
}

impl ConditionalReport {
    pub fn new(
        mode: ConditionalMode,
        contexts: &[String],
        alphabet: &[String],
        table: &ConditionalTable,
    ) -> Self {
        Self {
            mode,
            alphabet: alphabet.to_vec(),
            rows: contexts
                .iter()
                .zip(table.rows())
                .map(|(c, r)| ConditionalRowReport {
                    context: c.clone(),
                    samples: r.samples,
                    beta: r.beta,
                    estimate: r.distribution.probs().to_vec(),
                })
                .collect(),
            trace: table.trace().map(|t| t.steps().to_vec()),
        }
    }
}
