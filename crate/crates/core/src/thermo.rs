//! Partition-function thermodynamics of the canonical family
//! `P_β(x) = P̂(x)^β / Z(β)` with energies `ε(x) = -log P̂(x)`, and numerical
//! checks of the identities tying them together.

use serde::Serialize;

use crate::dist::{log_sum_exp, Distribution};
use crate::error::{Error, Result};

/// Step in `β` for central finite differences.
pub const FD_STEP: f64 = 1e-5;
/// Tolerance on `H = βU + log Z`.
pub const HUBZ_TOLERANCE: f64 = 1e-10;
/// Relative tolerance on first- and second-derivative identities.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-5;
/// Relative tolerance on `β = ∂H/∂U` (a ratio of two differences).
pub const TEMPERATURE_TOLERANCE: f64 = 1e-4;
/// Tolerance on `I(β) = Var(ε)` between two independent evaluations.
pub const FISHER_TOLERANCE: f64 = 1e-12;
/// Below this absolute error a derivative identity passes regardless of the
/// relative error; covers quantities that vanish identically.
pub const ABSOLUTE_FLOOR: f64 = 1e-9;
/// `|∂U/∂β|` below this makes `∂H/∂U` not identifiable.
pub const SLOPE_FLOOR: f64 = 1e-8;
/// `|∂H/∂β| = β·Var` below this is swamped by rounding in the entropy
/// difference at [`FD_STEP`], so `∂H/∂U` is not resolvable either.
pub const ENTROPY_SLOPE_FLOOR: f64 = 1e-6;

struct Canonical {
    probs: Vec<f64>,
    energies: Vec<f64>,
    log_z: f64,
}

impl Canonical {
    fn new(ml: &Distribution, beta: f64) -> Self {
        let energies: Vec<f64> = ml.probs().iter().map(|p| -p.ln()).collect();
        let log_weights: Vec<f64> = energies.iter().map(|e| -beta * e).collect();
        let log_z = log_sum_exp(&log_weights);
        let probs = log_weights.iter().map(|l| (l - log_z).exp()).collect();
        Self {
            probs,
            energies,
            log_z,
        }
    }

    fn mean_energy(&self) -> f64 {
        self.probs.iter().zip(&self.energies).map(|(p, e)| p * e).sum()
    }

    fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

pub fn log_partition_function(ml: &Distribution, beta: f64) -> f64 {
    Canonical::new(ml, beta).log_z
}

/// `Z = Σ P̂(x)^β`.
pub fn partition_function(ml: &Distribution, beta: f64) -> f64 {
    log_partition_function(ml, beta).exp()
}

/// `U = -Σ P_β(x) log P̂(x)`, the cross entropy of the canonical
/// distribution against `ml`.
pub fn internal_energy(ml: &Distribution, beta: f64) -> f64 {
    Canonical::new(ml, beta).mean_energy()
}

/// `⟨ε²⟩ - ⟨ε⟩²` under the canonical distribution.
pub fn energy_fluctuation(ml: &Distribution, beta: f64) -> f64 {
    let c = Canonical::new(ml, beta);
    let m1 = c.mean_energy();
    let m2: f64 = c.probs.iter().zip(&c.energies).map(|(p, e)| p * e * e).sum();
    (m2 - m1 * m1).max(0.0)
}

/// `Σ P_β (∂/∂β log P_β)²`, evaluated from the score
/// `∂/∂β log P_β(x) = log P̂(x) - Σ P_β log P̂`.
pub fn mfe_fisher_information(ml: &Distribution, beta: f64) -> f64 {
    let c = Canonical::new(ml, beta);
    let mean_log: f64 = c.probs.iter().zip(&c.energies).map(|(p, e)| -p * e).sum();
    c.probs
        .iter()
        .zip(&c.energies)
        .map(|(p, e)| {
            let score = -e - mean_log;
            p * score * score
        })
        .sum()
}

/// `C = β² Var(ε)`.
pub fn heat_capacity(ml: &Distribution, beta: f64) -> f64 {
    beta * beta * energy_fluctuation(ml, beta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    /// Whether `tolerance` bounds the relative (true) or absolute error.
    pub relative: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl IdentityCheck {
    fn absolute(name: &'static str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let abs_error = (lhs - rhs).abs();
        Self {
            name,
            lhs,
            rhs,
            abs_error,
            rel_error: relative_error(lhs, rhs),
            tolerance,
            relative: false,
            passed: abs_error <= tolerance,
            note: None,
        }
    }

    fn relative(name: &'static str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let abs_error = (lhs - rhs).abs();
        let rel_error = relative_error(lhs, rhs);
        Self {
            name,
            lhs,
            rhs,
            abs_error,
            rel_error,
            tolerance,
            relative: true,
            passed: rel_error <= tolerance || abs_error <= ABSOLUTE_FLOOR,
            note: None,
        }
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoReport {
    pub beta: f64,
    pub partition_function: f64,
    pub log_partition_function: f64,
    /// Cross entropy `U` in nats.
    pub internal_energy: f64,
    pub entropy: f64,
    pub free_energy: f64,
    pub fluctuation: f64,
    pub fisher_information: f64,
    pub heat_capacity: f64,
    pub checks: Vec<IdentityCheck>,
}

impl ThermoReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Evaluates the canonical quantities at `beta` and the residual of every
/// thermodynamic identity. Derivatives use central differences with step
/// [`FD_STEP`] around `β` clamped to `[h, 1 - h]`.
pub fn identity_report(ml: &Distribution, beta: f64) -> Result<ThermoReport> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    if let Some(index) = ml.first_zero() {
        return Err(Error::ZeroProbability { index });
    }

    let at = Canonical::new(ml, beta);
    let u = at.mean_energy();
    let h_ent = at.entropy();
    let log_z = at.log_z;
    let fluctuation = energy_fluctuation(ml, beta);
    let fisher = mfe_fisher_information(ml, beta);

    let mut checks = vec![
        IdentityCheck::absolute("entropy_energy_partition", h_ent, beta * u + log_z, HUBZ_TOLERANCE),
        IdentityCheck::absolute("fisher_equals_fluctuation", fisher, fluctuation, FISHER_TOLERANCE),
    ];

    let h = FD_STEP;
    let b = beta.clamp(h, 1.0 - h);
    let energy = |x: f64| Canonical::new(ml, x).mean_energy();
    let ent = |x: f64| Canonical::new(ml, x).entropy();
    let log_z_at = |x: f64| Canonical::new(ml, x).log_z;
    // F = U - H/β, computed directly rather than through log Z
    let free = |x: f64| {
        let c = Canonical::new(ml, x);
        c.mean_energy() - c.entropy() / x
    };
    // ∂ log Z / ∂β = Z'/Z = Σ P_β log P̂
    let score = |x: f64| {
        let c = Canonical::new(ml, x);
        c.probs.iter().zip(&c.energies).map(|(p, e)| -p * e).sum::<f64>()
    };

    let u_b = energy(b);
    let var_b = energy_fluctuation(ml, b);
    let du = central(energy, b, h);
    let dh = central(ent, b, h);

    let mut temperature = IdentityCheck::relative("temperature_dH_dU", dh / du, b, TEMPERATURE_TOLERANCE);
    let unresolved = if var_b < SLOPE_FLOOR {
        Some("not identifiable: dU/dβ vanishes")
    } else if b * var_b < ENTROPY_SLOPE_FLOOR {
        Some("not resolvable: dH/dβ is below rounding at this step")
    } else {
        None
    };
    if let Some(note) = unresolved {
        temperature = IdentityCheck {
            lhs: b,
            abs_error: 0.0,
            rel_error: 0.0,
            passed: true,
            note: Some(note.into()),
            ..temperature
        };
    }
    checks.push(temperature);
    checks.push(IdentityCheck::relative(
        "energy_log_partition_slope",
        u_b,
        -central(log_z_at, b, h),
        DERIVATIVE_TOLERANCE,
    ));
    checks.push(IdentityCheck::relative(
        "gibbs_helmholtz",
        u_b,
        central(
            |x| {
                // βF = βU - H; avoids 0·∞ when the step reaches β = 0
                let c = Canonical::new(ml, x);
                x * c.mean_energy() - c.entropy()
            },
            b,
            h,
        ),
        DERIVATIVE_TOLERANCE,
    ));
    // F carries a 1/β singularity, so a fixed step loses (h/β)² relative
    // accuracy near zero; the step is scaled by β for this slope only.
    checks.push(IdentityCheck::relative(
        "entropy_free_energy_slope",
        ent(b),
        b * b * central(free, b, h * b),
        DERIVATIVE_TOLERANCE,
    ));
    checks.push(IdentityCheck::relative(
        "fluctuation_energy_slope",
        var_b,
        -du,
        DERIVATIVE_TOLERANCE,
    ));
    let curvature = central(score, b, h);
    checks.push(IdentityCheck::relative(
        "fluctuation_log_partition_curvature",
        var_b,
        curvature,
        DERIVATIVE_TOLERANCE,
    ));
    checks.push(IdentityCheck::relative(
        "heat_capacity_curvature",
        heat_capacity(ml, b),
        b * b * curvature,
        DERIVATIVE_TOLERANCE,
    ));

    Ok(ThermoReport {
        beta,
        partition_function: log_z.exp(),
        log_partition_function: log_z,
        internal_energy: u,
        entropy: h_ent,
        free_energy: -log_z / beta,
        fluctuation,
        fisher_information: fisher,
        heat_capacity: beta * beta * fluctuation,
        checks,
    })
}
