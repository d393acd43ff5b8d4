//! Entropy, cross entropy and KL divergence, marginal and conditional.
//! Natural logarithms throughout; `0·log 0 = 0`.

use crate::conditional::ConditionalTable;
use crate::dist::{Distribution, NORMALIZATION_TOLERANCE};
use crate::error::{Error, Result};

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

pub fn entropy(p: &Distribution) -> f64 {
    -p.probs().iter().map(|&x| xlogx(x)).sum::<f64>()
}

fn check_same_len(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// `H(p, q) = -Σ p log q`.
pub fn cross_entropy(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_len(p, q)?;
    let mut acc = 0.0;
    for (index, (&pk, &qk)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pk == 0.0 {
            continue;
        }
        if qk == 0.0 {
            return Err(Error::SupportMismatch { index });
        }
        acc -= pk * qk.ln();
    }
    Ok(acc)
}

/// `D(p || q) = Σ p log(p / q)`. Round-off below zero is clamped.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_len(p, q)?;
    let mut acc = 0.0;
    for (index, (&pk, &qk)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pk == 0.0 {
            continue;
        }
        if qk == 0.0 {
            return Err(Error::SupportMismatch { index });
        }
        acc += pk * (pk / qk).ln();
    }
    Ok(acc.max(0.0))
}

/// Joint probabilities `P(x, y)` stored row-major by context `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    contexts: usize,
    states: usize,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let contexts = rows.len();
        let states = rows.first().map_or(0, Vec::len);
        if contexts == 0 || states == 0 {
            return Err(Error::EmptyDistribution);
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != states) {
            return Err(Error::DimensionMismatch {
                left: states,
                right: bad.len(),
            });
        }
        Self::from_flat(contexts, states, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(contexts: usize, states: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != contexts * states {
            return Err(Error::DimensionMismatch {
                left: contexts * states,
                right: probs.len(),
            });
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
        Ok(Self {
            contexts,
            states,
            probs,
        })
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn get(&self, context: usize, state: usize) -> f64 {
        self.probs[context * self.states + state]
    }

    pub fn row(&self, context: usize) -> &[f64] {
        &self.probs[context * self.states..(context + 1) * self.states]
    }

    /// `P(y)` for every context.
    pub fn context_marginal(&self) -> Vec<f64> {
        (0..self.contexts)
            .map(|y| self.row(y).iter().sum())
            .collect()
    }

    /// `P(x)` summed over contexts.
    pub fn state_marginal(&self) -> Distribution {
        let mut m = vec![0.0; self.states];
        for y in 0..self.contexts {
            for (acc, p) in m.iter_mut().zip(self.row(y)) {
                *acc += p;
            }
        }
        Distribution::from_weights(&m).expect("joint table has positive mass")
    }

    /// `P(x | y)`, or `None` when the context carries no mass.
    pub fn conditional_row(&self, context: usize) -> Option<Distribution> {
        let row = self.row(context);
        if row.iter().sum::<f64>() > 0.0 {
            Distribution::from_weights(row).ok()
        } else {
            None
        }
    }
}

/// `H(X | Y) = -Σ P(x, y) log P(x | y)`.
pub fn conditional_entropy(joint: &JointTable) -> f64 {
    let mut acc = 0.0;
    for y in 0..joint.contexts() {
        let row = joint.row(y);
        let py: f64 = row.iter().sum();
        if py <= 0.0 {
            continue;
        }
        for &pxy in row {
            if pxy > 0.0 {
                acc -= pxy * (pxy / py).ln();
            }
        }
    }
    acc
}

/// `Σ P(x, y) log(P(x | y) / Q(x | y))`.
pub fn conditional_kl(joint_p: &JointTable, q_cond: &ConditionalTable) -> Result<f64> {
    if joint_p.contexts() != q_cond.contexts() {
        return Err(Error::DimensionMismatch {
            left: joint_p.contexts(),
            right: q_cond.contexts(),
        });
    }
    if joint_p.states() != q_cond.states() {
        return Err(Error::DimensionMismatch {
            left: joint_p.states(),
            right: q_cond.states(),
        });
    }
    let mut acc = 0.0;
    for y in 0..joint_p.contexts() {
        let row = joint_p.row(y);
        let py: f64 = row.iter().sum();
        if py <= 0.0 {
            continue;
        }
        let q = q_cond.row(y).distribution.probs();
        for (x, (&pxy, &qx)) in row.iter().zip(q).enumerate() {
            if pxy == 0.0 {
                continue;
            }
            if qx == 0.0 {
                return Err(Error::SupportMismatch {
                    index: y * joint_p.states() + x,
                });
            }
            acc += pxy * (pxy / py / qx).ln();
        }
    }
    Ok(acc.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditional::ConditionalRow;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn d(p: &[f64]) -> Distribution {
        Distribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&Distribution::uniform(3)), 3f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&d(&[0.431, 0.337, 0.232])), 1.07, epsilon = 0.005);
        assert_eq!(entropy(&d(&[1.0, 0.0, 0.0])), 0.0);
    }

    #[test]
    fn cross_entropy_examples() {
        let p = d(&[0.5, 0.25, 0.25]);
        assert_abs_diff_eq!(cross_entropy(&p, &p).unwrap(), entropy(&p), epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&p), 1.0397207708399179, epsilon = 1e-12);

        let u = Distribution::uniform(3);
        let lhs = cross_entropy(&u, &p).unwrap();
        let rhs = kl_divergence(&u, &p).unwrap() + entropy(&u);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);

        let point = d(&[1.0, 0.0, 0.0]);
        let half = d(&[0.5, 0.5, 0.0]);
        assert_abs_diff_eq!(cross_entropy(&point, &half).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(matches!(
            cross_entropy(&half, &point),
            Err(Error::SupportMismatch { index: 1 })
        ));
    }

    #[test]
    fn kl_examples() {
        let p = d(&[0.5, 0.25, 0.25]);
        let u = Distribution::uniform(3);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        // three-term summation: (1/3)[log(2/3) + 2 log(4/3)] = (1/3) log(32/27)
        let oracle: f64 = [0.5f64, 0.25, 0.25]
            .iter()
            .map(|q| (1.0 / 3.0) * ((1.0 / 3.0) / q).ln())
            .sum();
        assert_abs_diff_eq!(kl_divergence(&u, &p).unwrap(), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(oracle, (32.0f64 / 27.0).ln() / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(oracle, 0.0566, epsilon = 1e-4);
        assert_abs_diff_eq!(
            kl_divergence(&d(&[1.0, 0.0, 0.0]), &u).unwrap(),
            3f64.ln(),
            epsilon = 1e-15
        );
        assert!(kl_divergence(&u, &d(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn conditional_entropy_examples() {
        let indep = JointTable::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert_abs_diff_eq!(conditional_entropy(&indep), 2f64.ln(), epsilon = 1e-15);
        let diag = JointTable::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(conditional_entropy(&diag), 0.0);
        let mixed = JointTable::new(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        // four terms: -2 [0.4 log 0.8 + 0.1 log 0.2]
        let oracle = -2.0 * (0.4 * 0.8f64.ln() + 0.1 * 0.2f64.ln());
        assert_abs_diff_eq!(conditional_entropy(&mixed), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(oracle, 0.5004, epsilon = 1e-4);
    }

    fn table(rows: Vec<Distribution>) -> ConditionalTable {
        let k = rows[0].len();
        ConditionalTable::new(
            k,
            rows.into_iter()
                .map(|distribution| ConditionalRow {
                    distribution,
                    beta: 0.0,
                    samples: 0,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn conditional_kl_examples() {
        let joint = JointTable::new(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let same = table(vec![d(&[0.8, 0.2]), d(&[0.2, 0.8])]);
        assert_abs_diff_eq!(conditional_kl(&joint, &same).unwrap(), 0.0, epsilon = 1e-15);

        let det = JointTable::new(vec![vec![0.3, 0.0], vec![0.0, 0.7]]).unwrap();
        let uniform_rows = table(vec![Distribution::uniform(2), Distribution::uniform(2)]);
        // per-row single terms: 0.3 log 2 + 0.7 log 2
        assert_abs_diff_eq!(
            conditional_kl(&det, &uniform_rows).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );

        let indep = JointTable::new(vec![vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        let marginal = indep.state_marginal();
        let q = table(vec![marginal.clone(), marginal]);
        assert_abs_diff_eq!(conditional_kl(&indep, &q).unwrap(), 0.0, epsilon = 1e-15);

        let zero_q = table(vec![d(&[1.0, 0.0]), d(&[0.0, 1.0])]);
        assert!(matches!(
            conditional_kl(&joint, &zero_q),
            Err(Error::SupportMismatch { .. })
        ));
    }

    fn dist_strategy(k: usize) -> impl Strategy<Value = Distribution> {
        prop::collection::vec(0.001f64..1.0, k).prop_map(|w| Distribution::from_weights(&w).unwrap())
    }

    fn pair_strategy() -> impl Strategy<Value = (Distribution, Distribution)> {
        (2usize..8).prop_flat_map(|k| (dist_strategy(k), dist_strategy(k)))
    }

    fn joint_strategy() -> impl Strategy<Value = JointTable> {
        (1usize..5, 2usize..5).prop_flat_map(|(c, s)| {
            prop::collection::vec(0.0f64..1.0, c * s).prop_filter_map("zero mass", move |w| {
                let total: f64 = w.iter().sum();
                (total > 0.0).then(|| {
                    JointTable::from_flat(c, s, w.iter().map(|x| x / total).collect()).unwrap()
                })
            })
        })
    }

    proptest! {
        #[test]
        fn kl_non_negative((p, q) in pair_strategy()) {
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        }

        #[test]
        fn gibbs_inequality((p, q) in pair_strategy()) {
            prop_assert!(cross_entropy(&p, &q).unwrap() >= entropy(&p) - 1e-12);
            prop_assert!((cross_entropy(&p, &p).unwrap() - entropy(&p)).abs() <= 1e-12);
        }

        #[test]
        fn kl_cross_entropy_relation((p, q) in pair_strategy()) {
            let lhs = cross_entropy(&p, &q).unwrap();
            let rhs = kl_divergence(&p, &q).unwrap() + entropy(&p);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn conditioning_reduces_entropy(joint in joint_strategy()) {
            let hx = entropy(&joint.state_marginal());
            prop_assert!(hx >= conditional_entropy(&joint) - 1e-12);
        }

        #[test]
        fn conditional_kl_non_negative(joint in joint_strategy(), seed in 0u64..1000) {
            let rows = (0..joint.contexts())
                .map(|y| {
                    let w: Vec<f64> = (0..joint.states())
                        .map(|x| 0.05 + ((seed as usize * 31 + y * 7 + x * 13) % 17) as f64)
                        .collect();
                    Distribution::from_weights(&w).unwrap()
                })
                .collect();
            let q = table(rows);
            prop_assert!(conditional_kl(&joint, &q).unwrap() >= 0.0);
        }
    }
}
