//! Seeded Monte-Carlo comparison of ML, ME, MAP and MFEE: sample from known
//! distributions, estimate with every method, score by `KL(true || estimate)`
//! and aggregate per (method, distribution, sample size) cell.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{index_values, map_jeffreys, max_entropy_estimate, JEFFREYS_ALPHA};
use crate::dist::{ml_estimate, sample, Distribution, DEFAULT_SMOOTHING};
use crate::error::{Error, Result};
use crate::estimator::{mfee_estimate, MfeeConfig};
use crate::info::kl_divergence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ml,
    Me,
    Map,
    Mfee,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ml, Method::Me, Method::Map, Method::Mfee];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ml => "ml",
            Method::Me => "me",
            Method::Map => "map",
            Method::Mfee => "mfee",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedDistribution {
    pub id: String,
    pub probs: Distribution,
}

/// The four three-state test distributions, ids `a` to `d`, in decreasing
/// entropy.
pub fn preset_distributions() -> Vec<NamedDistribution> {
    [
        ("a", [0.431, 0.337, 0.232]),
        ("b", [0.677, 0.206, 0.117]),
        ("c", [0.851, 0.117, 0.0320]),
        ("d", [0.9898, 0.00810, 0.00210]),
    ]
    .into_iter()
    .map(|(id, p)| NamedDistribution {
        id: id.to_string(),
        probs: Distribution::new(p.to_vec()).expect("preset is normalized"),
    })
    .collect()
}

pub const DEFAULT_SAMPLE_SIZES: [usize; 10] = [2, 3, 5, 10, 20, 50, 100, 200, 500, 1000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub distributions: Vec<NamedDistribution>,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub smoothing: f64,
    pub methods: Vec<Method>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            distributions: preset_distributions(),
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            replicates: 100,
            seed: 42,
            smoothing: DEFAULT_SMOOTHING,
            methods: Method::ALL.to_vec(),
        }
    }
}

impl BenchmarkConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidArgument(msg));
        if self.replicates == 0 {
            return invalid("replicates must be ≥ 1".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return invalid("sample sizes must be non-empty and ≥ 1".into());
        }
        if self.distributions.is_empty() {
            return invalid("at least one distribution is required".into());
        }
        if self.methods.is_empty() {
            return invalid("at least one method is required".into());
        }
        if !(self.smoothing > 0.0) || !self.smoothing.is_finite() {
            return invalid(format!("smoothing must be positive, got {}", self.smoothing));
        }
        for (i, d) in self.distributions.iter().enumerate() {
            if d.id.is_empty() || d.id.contains([',', '\n', '\r', '"', '<', '>', '&']) {
                return invalid(format!("distribution id {:?} is not CSV/SVG safe", d.id));
            }
            if self.distributions[..i].iter().any(|o| o.id == d.id) {
                return invalid(format!("duplicate distribution id {:?}", d.id));
            }
            if d.probs.len() < 2 {
                return invalid(format!("distribution {:?} needs at least 2 states", d.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRecord {
    pub method: Method,
    pub dist_id: String,
    /// Position of the distribution in the config; orders the output.
    pub dist_index: usize,
    pub sample_size: usize,
    pub replicate: usize,
    /// `None` when the method could not produce an estimate (MAP only).
    pub kl: Option<f64>,
}

impl BenchmarkRecord {
    pub fn available(&self) -> bool {
        self.kl.is_some()
    }

    fn sort_key(&self) -> (Method, usize, usize, usize) {
        (self.method, self.dist_index, self.sample_size, self.replicate)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Sampling seed of one replicate: FNV-1a of the distribution id chained
/// through SplitMix64 with the base seed, size and replicate index.
pub fn replicate_seed(base: u64, dist_id: &str, sample_size: usize, replicate: usize) -> u64 {
    let mut h = splitmix64(base);
    h = splitmix64(h ^ fnv1a(dist_id.as_bytes()));
    h = splitmix64(h ^ sample_size as u64);
    splitmix64(h ^ replicate as u64)
}

fn evaluate_cell(
    config: &BenchmarkConfig,
    dist_index: usize,
    sample_size: usize,
    replicate: usize,
) -> Result<Vec<BenchmarkRecord>> {
    let named = &config.distributions[dist_index];
    let truth = &named.probs;
    let k = truth.len();
    let seed = replicate_seed(config.seed, &named.id, sample_size, replicate);
    let samples = sample(truth, sample_size, seed);
    let counts = samples.counts();
    let n = samples.len() as f64;
    let eps = config.smoothing;

    config
        .methods
        .iter()
        .map(|&method| {
            let estimate = match method {
                Method::Ml => Some(ml_estimate(&counts, eps)?),
                Method::Me => {
                    let mean = samples.mean_state().expect("sample sizes are ≥ 1");
                    let me = max_entropy_estimate(mean, &index_values(k))?;
                    Some(me.smoothed_as_counts(n, eps))
                }
                Method::Map => map_jeffreys(&counts, JEFFREYS_ALPHA)
                    .distribution()
                    .map(|d| d.smoothed_as_counts(n, eps)),
                Method::Mfee => {
                    let cfg = MfeeConfig {
                        smoothing: eps,
                        ..MfeeConfig::default()
                    };
                    Some(mfee_estimate(&samples, &cfg)?.estimate)
                }
            };
            let kl = estimate.map(|e| kl_divergence(truth, &e)).transpose()?;
            Ok(BenchmarkRecord {
                method,
                dist_id: named.id.clone(),
                dist_index,
                sample_size,
                replicate,
                kl,
            })
        })
        .collect()
}

/// Runs every (distribution, size, replicate) cell on `jobs` worker threads.
/// The result is sorted by (method, distribution, size, replicate) and does
/// not depend on `jobs`.
pub fn run_benchmark(config: &BenchmarkConfig, jobs: usize) -> Result<Vec<BenchmarkRecord>> {
    config.validate()?;
    let cells: Vec<(usize, usize, usize)> = (0..config.distributions.len())
        .flat_map(|d| {
            config
                .sample_sizes
                .iter()
                .flat_map(move |&n| (0..config.replicates).map(move |r| (d, n, r)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let per_cell: Vec<Vec<BenchmarkRecord>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(d, n, r)| evaluate_cell(config, d, n, r))
            .collect::<Result<_>>()
    })?;

    let mut records: Vec<BenchmarkRecord> = per_cell.into_iter().flatten().collect();
    records.sort_by_key(BenchmarkRecord::sort_key);
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub method: Method,
    pub dist_id: String,
    pub sample_size: usize,
    /// Mean KL over available replicates; `None` if there were none.
    pub mean_kl: Option<f64>,
    pub stderr_kl: Option<f64>,
    pub n_available: usize,
}

/// Per-cell mean and standard error (sample standard deviation over
/// `sqrt(n)`) of the available records.
pub fn aggregate(records: &[BenchmarkRecord]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&BenchmarkRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());

    let mut rows = Vec::new();
    for group in sorted.chunk_by(|a, b| {
        (a.method, a.dist_index, a.sample_size) == (b.method, b.dist_index, b.sample_size)
    }) {
        let kls: Vec<f64> = group.iter().filter_map(|r| r.kl).collect();
        let n = kls.len();
        let (mean_kl, stderr_kl) = match n {
            0 => (None, None),
            1 => (Some(kls[0]), Some(0.0)),
            _ => {
                let mean = kls.iter().sum::<f64>() / n as f64;
                let var = kls.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (Some(mean), Some((var / n as f64).sqrt()))
            }
        };
        rows.push(AggregateRow {
            method: group[0].method,
            dist_id: group[0].dist_id.clone(),
            sample_size: group[0].sample_size,
            mean_kl,
            stderr_kl,
            n_available: n,
        });
    }
    rows
}

pub const CSV_HEADER: &str = "method,dist,sample_size,mean_kl,stderr_kl,n_available";

fn fmt_sig(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.11e}")).unwrap_or_default()
}

/// CSV text with a header row, LF line endings and 12 significant digits.
pub fn to_csv_string(rows: &[AggregateRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            r.dist_id,
            r.sample_size,
            fmt_sig(r.mean_kl),
            fmt_sig(r.stderr_kl),
            r.n_available
        );
    }
    out
}

pub fn write_csv(rows: &[AggregateRow], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse(format!("expected header `{CSV_HEADER}`")));
    }
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
        }
    };
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("row {}: expected 6 fields", i + 1)));
            }
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))
            };
            Ok(AggregateRow {
                method: f[0].parse()?,
                dist_id: f[1].to_string(),
                sample_size: int(f[2])?,
                mean_kl: opt(f[3])?,
                stderr_kl: opt(f[4])?,
                n_available: int(f[5])?,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    parse_csv(&std::fs::read_to_string(path)?)
}

fn method_color(m: Method) -> &'static str {
    match m {
        Method::Ml => "#1f77b4",
        Method::Me => "#ff7f0e",
        Method::Map => "#2ca02c",
        Method::Mfee => "#d62728",
    }
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 15.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;
const LEGEND_H: f64 = 30.0;

/// One panel per distribution (two per row), log-scaled sample size on x and
/// log-scaled mean KL on y, one polyline per method. Cells without a mean
/// (or with a zero mean) are skipped.
pub fn render_svg(rows: &[AggregateRow]) -> String {
    let mut dists: Vec<&str> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in rows {
        if !dists.contains(&r.dist_id.as_str()) {
            dists.push(&r.dist_id);
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods.sort();

    let cols = dists.len().clamp(1, 2);
    let panel_rows = dists.len().div_ceil(2).max(1);
    let width = cols as f64 * PANEL_W;
    let height = LEGEND_H + panel_rows as f64 * PANEL_H;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (i, m) in methods.iter().enumerate() {
        let x = 10.0 + i as f64 * 90.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="15" x2="{:.1}" y2="15" stroke="{}" stroke-width="2"/><text x="{:.1}" y="19">{}</text>"#,
            x,
            x + 20.0,
            method_color(*m),
            x + 25.0,
            m.name().to_uppercase()
        );
    }

    for (p, dist) in dists.iter().enumerate() {
        let ox = (p % 2) as f64 * PANEL_W;
        let oy = LEGEND_H + (p / 2) as f64 * PANEL_H;
        let cells: Vec<&AggregateRow> = rows.iter().filter(|r| r.dist_id == *dist).collect();
        render_panel(&mut svg, dist, &cells, &methods, ox, oy);
    }
    svg.push_str("</svg>\n");
    svg
}

fn decade_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::log10)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return None;
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    Some(if hi > lo { (lo, hi) } else { (lo, lo + 1.0) })
}

fn render_panel(
    svg: &mut String,
    dist: &str,
    cells: &[&AggregateRow],
    methods: &[Method],
    ox: f64,
    oy: f64,
) {
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let (x0, y0) = (ox + MARGIN_L, oy + MARGIN_T);

    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{dist}</text>"#,
        x0 + plot_w / 2.0,
        oy + 18.0
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{x0:.1}" y="{y0:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#444"/>"##
    );

    let Some((xlo, xhi)) = decade_range(cells.iter().map(|c| c.sample_size as f64)) else {
        return;
    };
    let Some((ylo, yhi)) = decade_range(cells.iter().filter_map(|c| c.mean_kl)) else {
        return;
    };
    let sx = |n: f64| x0 + (n.log10() - xlo) / (xhi - xlo) * plot_w;
    let sy = |v: f64| y0 + plot_h - (v.log10() - ylo) / (yhi - ylo) * plot_h;

    for d in xlo as i32..=xhi as i32 {
        let x = sx(10f64.powi(d));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"##,
            y0,
            y0 + plot_h,
            y0 + plot_h + 14.0
        );
    }
    for d in ylo as i32..=yhi as i32 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            svg,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
            x0 + plot_w,
            x0 - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">sample size</text>"#,
        x0 + plot_w / 2.0,
        y0 + plot_h + 30.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">mean KL (nats)</text>"#,
        ox + 14.0,
        y0 + plot_h / 2.0
    );

    for &m in methods {
        let mut pts: Vec<(usize, f64)> = cells
            .iter()
            .filter(|c| c.method == m)
            .filter_map(|c| c.mean_kl.filter(|v| *v > 0.0).map(|v| (c.sample_size, v)))
            .collect();
        pts.sort_by_key(|p| p.0);
        if pts.is_empty() {
            continue;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(n, v)| format!("{:.1},{:.1}", sx(n as f64), sy(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            method_color(m),
            coords.join(" ")
        );
    }
}

pub fn write_svg_chart(rows: &[AggregateRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(rows))?;
    Ok(())
}
