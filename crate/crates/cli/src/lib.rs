//! Command-line front end: `estimate`, `condition`, `benchmark`, `diagnose`.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr. Exit codes:
//! 2 for unusable input or configuration, 3 when an estimator has no answer,
//! 4 when a thermodynamic identity check fails.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use mfee_core::bench::{self, BenchmarkConfig};
use mfee_core::io::{parse_pairs, parse_samples, Alphabet};
use mfee_core::report::{ConditionalReport, EstimationReport};
use mfee_core::{
    baselines::index_values, bayes_anchored_estimate, identity_report, map_jeffreys,
    max_entropy_estimate, mfee_conditional, mfee_estimate, ml_estimate, Anchor, ConditionalMode,
    GeoMeanMode, MapOutcome, MfeeConfig, SampleSequence, DEFAULT_SMOOTHING, JEFFREYS_ALPHA,
};

#[derive(Debug, Parser)]
#[command(name = "mfee", version, about = "Minimum free energy estimation of discrete distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a distribution from one state label per line.
    Estimate(EstimateArgs),
    /// Estimate P(state | context) from `context,state` CSV rows.
    Condition(ConditionArgs),
    /// Run the seeded small-sample benchmark and write aggregated CSV.
    Benchmark(BenchmarkArgs),
    /// Evaluate the thermodynamic identities for a sample at some β.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ml,
    Me,
    Map,
    Mfee,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnchorArg {
    Mean,
    Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PerContext,
    Global,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// JSON array of state labels fixing K and the state order.
    #[arg(long)]
    pub alphabet: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mfee")]
    pub method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    /// Dirichlet concentration. For `mfee` this switches to the Bayesian
    /// anchor; for `map` it replaces the Jeffreys value 1/2.
    #[arg(long)]
    pub prior_alpha: Option<f64>,
    /// Posterior point estimate used as the Bayesian anchor.
    #[arg(long, value_enum, default_value = "mean", requires = "prior_alpha")]
    pub anchor: AnchorArg,
    /// Use the unnormalized geometric mean of past estimates.
    #[arg(long)]
    pub raw_geomean: bool,
    /// Report an unavailable MAP estimate as null instead of failing.
    #[arg(long)]
    pub allow_unavailable: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "per-context")]
    pub mode: ModeArg,
    /// JSON array of state labels.
    #[arg(long)]
    pub alphabet: Option<PathBuf>,
    /// JSON array of context labels; contexts without rows get uniform rows.
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[arg(long)]
    pub raw_geomean: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// JSON config; omitted fields take the built-in defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub alphabet: Option<PathBuf>,
    /// Data temperature; defaults to the MFEE β of the sample.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Estimator(String),
    #[error("{0}")]
    Residual(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Estimator(_) => 3,
            CliError::Residual(_) => 4,
        }
    }
}

fn input_err(context: &str) -> impl FnOnce(mfee_core::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn estimator_err(e: mfee_core::Error) -> CliError {
    CliError::Estimator(e.to_string())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(a) => estimate(&a),
        Command::Condition(a) => condition(&a),
        Command::Benchmark(a) => benchmark(&a),
        Command::Diagnose(a) => diagnose(&a),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_alphabet(path: Option<&Path>) -> Result<Alphabet, CliError> {
    match path {
        Some(p) => Alphabet::read(p).map_err(input_err(&p.display().to_string())),
        None => Ok(Alphabet::open()),
    }
}

fn load_samples(input: &Path, alphabet: Option<&Path>) -> Result<(Vec<String>, SampleSequence), CliError> {
    let text = read_text(input)?;
    let (alpha, seq) =
        parse_samples(&text, load_alphabet(alphabet)?).map_err(input_err(&input.display().to_string()))?;
    if alpha.len() < 2 {
        return Err(CliError::Input(format!(
            "{}: need at least 2 states; supply --alphabet",
            input.display()
        )));
    }
    Ok((alpha.labels().to_vec(), seq))
}

fn check_smoothing(smoothing: f64) -> Result<(), CliError> {
    if smoothing > 0.0 && smoothing.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("--smoothing must be positive, got {smoothing}")))
    }
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Estimator(format!("cannot serialize report: {e}")))?;
    json.push('\n');
    match output {
        Some(p) => std::fs::write(p, json).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn mfee_config(smoothing: f64, raw_geomean: bool) -> MfeeConfig {
    MfeeConfig {
        smoothing,
        geomean: if raw_geomean { GeoMeanMode::Raw } else { GeoMeanMode::Normalized },
        ..MfeeConfig::default()
    }
}

fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    check_smoothing(a.smoothing)?;
    if let Some(alpha) = a.prior_alpha {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(CliError::Input(format!("--prior-alpha must be positive, got {alpha}")));
        }
    }
    let (labels, samples) = load_samples(&a.input, a.alphabet.as_deref())?;
    let counts = samples.counts();
    let n = samples.len();

    let methods: &[MethodArg] = match a.method {
        MethodArg::All => &[MethodArg::Ml, MethodArg::Me, MethodArg::Map, MethodArg::Mfee],
        ref m => std::slice::from_ref(m),
    };

    let mut reports = Vec::with_capacity(methods.len());
    for &m in methods {
        let report = match m {
            MethodArg::Ml => {
                let d = ml_estimate(&counts, a.smoothing).map_err(estimator_err)?;
                EstimationReport::plain("ml", &labels, n, &d)
            }
            MethodArg::Me => {
                let mean = samples
                    .mean_state()
                    .ok_or_else(|| CliError::Estimator("maximum entropy needs at least one sample".into()))?;
                let d = max_entropy_estimate(mean, &index_values(labels.len())).map_err(estimator_err)?;
                EstimationReport::plain("me", &labels, n, &d)
            }
            MethodArg::Map => {
                let outcome = map_jeffreys(&counts, a.prior_alpha.unwrap_or(JEFFREYS_ALPHA));
                if let MapOutcome::Unavailable { states } = &outcome {
                    let names: Vec<&str> = states.iter().map(|&s| labels[s].as_str()).collect();
                    let msg = format!("MAP estimate unavailable: the posterior mode is undefined for states {names:?}");
                    if !a.allow_unavailable {
                        return Err(CliError::Estimator(msg));
                    }
                    eprintln!("warning: {msg}");
                }
                EstimationReport::from_map(&labels, n, &outcome)
            }
            MethodArg::Mfee => {
                let mut config = mfee_config(a.smoothing, a.raw_geomean);
                let result = match a.prior_alpha {
                    Some(alpha) => {
                        config.anchor = match a.anchor {
                            AnchorArg::Mean => Anchor::PosteriorMean,
                            AnchorArg::Mode => Anchor::PosteriorMode,
                        };
                        bayes_anchored_estimate(&samples, alpha, &config)
                    }
                    None => mfee_estimate(&samples, &config),
                }
                .map_err(estimator_err)?;
                EstimationReport::from_mfee("mfee", &labels, &result)
            }
            MethodArg::All => unreachable!("expanded above"),
        };
        reports.push(report);
    }

    if a.method == MethodArg::All {
        emit(&reports, a.output.as_deref())
    } else {
        emit(&reports[0], a.output.as_deref())
    }
}

fn condition(a: &ConditionArgs) -> Result<(), CliError> {
    check_smoothing(a.smoothing)?;
    let text = read_text(&a.input)?;
    let data = parse_pairs(&text, load_alphabet(a.contexts.as_deref())?, load_alphabet(a.alphabet.as_deref())?)
        .map_err(input_err(&a.input.display().to_string()))?;
    if data.states.len() < 2 {
        return Err(CliError::Input("need at least 2 states; supply --alphabet".into()));
    }
    let mode = match a.mode {
        ModeArg::PerContext => ConditionalMode::PerContext,
        ModeArg::Global => ConditionalMode::Global,
    };
    let table = mfee_conditional(
        &data.pairs,
        data.contexts.len(),
        data.states.len(),
        mode,
        &mfee_config(a.smoothing, a.raw_geomean),
    )
    .map_err(estimator_err)?;
    let report = ConditionalReport::new(mode, data.contexts.labels(), data.states.labels(), &table);
    emit(&report, a.output.as_deref())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "n/a".into())
}

fn benchmark(a: &BenchmarkArgs) -> Result<(), CliError> {
    let config = match &a.config {
        Some(p) => BenchmarkConfig::read(p).map_err(input_err(&p.display().to_string()))?,
        None => BenchmarkConfig::default(),
    };
    let jobs = match a.jobs {
        Some(0) => return Err(CliError::Input("--jobs must be at least 1".into())),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let records = bench::run_benchmark(&config, jobs).map_err(input_err("benchmark"))?;
    let rows = bench::aggregate(&records);

    bench::write_csv(&rows, &a.csv).map_err(input_err(&a.csv.display().to_string()))?;
    if let Some(svg) = &a.svg {
        bench::write_svg_chart(&rows, svg).map_err(input_err(&svg.display().to_string()))?;
    }
    for r in &rows {
        println!(
            "{:<5} dist={} N={:<6} mean_kl={} stderr={} available={}/{}",
            r.method,
            r.dist_id,
            r.sample_size,
            fmt_opt(r.mean_kl),
            fmt_opt(r.stderr_kl),
            r.n_available,
            config.replicates
        );
    }
    Ok(())
}

fn diagnose(a: &DiagnoseArgs) -> Result<(), CliError> {
    check_smoothing(a.smoothing)?;
    let (_, samples) = load_samples(&a.input, a.alphabet.as_deref())?;
    let ml = ml_estimate(&samples.counts(), a.smoothing).map_err(estimator_err)?;
    let beta = match a.beta {
        Some(b) => b,
        None => mfee_estimate(&samples, &mfee_config(a.smoothing, false))
            .map_err(estimator_err)?
            .beta,
    };
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(CliError::Input(format!(
            "beta must lie in (0, 1], got {beta}{}",
            if a.beta.is_none() { " (empty sample; pass --beta)" } else { "" }
        )));
    }
    let report = identity_report(&ml, beta).map_err(input_err("diagnose"))?;
    emit(&report, a.output.as_deref())?;
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Residual(format!("identity residuals out of tolerance: {}", failed.join(", "))))
    }
}
