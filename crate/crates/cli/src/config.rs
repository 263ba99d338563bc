//! Command-line configuration.
//!
//! Every flag lands in a serializable struct. The JSON form of the parsed
//! command, without any file paths, is hashed into `config_sha256`; input
//! contents are fingerprinted separately.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use eerm_core::GaussianMoments;
use serde::Serialize;

use crate::error::CliError;

/// Environment variable that, when set, prefixes every relative output path.
pub const OUT_DIR_ENV: &str = "EERM_OUT_DIR";

#[derive(Debug, Parser, Serialize)]
#[command(name = "eerm", version, about = "Explainable empirical risk minimization")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample (x, y, u) rows from a Gaussian and write them as CSV.
    Synth(SynthArgs),
    /// Fit the penalized linear model for one lambda.
    FitLinear(FitLinearArgs),
    /// Sweep lambda and write the empirical tradeoff curve.
    CurveLinear(CurveLinearArgs),
    /// Evaluate the closed-form constrained solution over an eta grid.
    CurveDual(CurveDualArgs),
    /// Fit the signal-routed composite decision tree.
    FitTree(FitTreeArgs),
    /// Score a saved model on a dataset.
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::FitLinear(_) => "fit-linear",
            Command::CurveLinear(_) => "curve-linear",
            Command::CurveDual(_) => "curve-dual",
            Command::FitTree(_) => "fit-tree",
            Command::Evaluate(_) => "evaluate",
        }
    }
}

/// Tabular input and the columns to read from it.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    /// Header-first CSV file.
    #[arg(long)]
    #[serde(skip)]
    pub input: PathBuf,
    /// Comma-separated feature column names.
    #[arg(long, value_delimiter = ',', default_value = "x")]
    pub features: Vec<String>,
    #[arg(long, default_value = "y")]
    pub label: String,
    /// User signal column. Without it (and without --noise-std) u = 0.
    #[arg(long)]
    pub signal: Option<String>,
    /// Derive the signal as label + N(0, noise_std²) noise drawn with --seed.
    #[arg(long)]
    pub noise_std: Option<f64>,
}

/// Gaussian moments of (x, y, u); unset fields take the reference values.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct MomentArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu_x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_y: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_u: Option<f64>,
    #[arg(long)]
    pub var_x: Option<f64>,
    #[arg(long)]
    pub var_y: Option<f64>,
    #[arg(long)]
    pub var_u: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub cov_xy: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub cov_xu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub cov_yu: Option<f64>,
}

impl MomentArgs {
    pub fn moments(&self) -> GaussianMoments {
        let r = GaussianMoments::tradeoff_reference();
        GaussianMoments {
            mu_x: self.mu_x.unwrap_or(r.mu_x),
            mu_y: self.mu_y.unwrap_or(r.mu_y),
            mu_u: self.mu_u.unwrap_or(r.mu_u),
            var_x: self.var_x.unwrap_or(r.var_x),
            var_y: self.var_y.unwrap_or(r.var_y),
            var_u: self.var_u.unwrap_or(r.var_u),
            cov_xy: self.cov_xy.unwrap_or(r.cov_xy),
            cov_xu: self.cov_xu.unwrap_or(r.cov_xu),
            cov_yu: self.cov_yu.unwrap_or(r.cov_yu),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub moments: MomentArgs,
    /// Number of rows.
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FitLinearArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file (JSON).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// One-row metrics CSV; defaults to the model path with `.metrics.csv`.
    #[arg(long)]
    #[serde(skip)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveLinearArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Lambda grid: `a,b,c`, `start:step:stop` or `log:lo:hi:n`.
    #[arg(long, default_value = "log:0.001:1000:25")]
    pub lambdas: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveDualArgs {
    #[command(flatten)]
    pub moments: MomentArgs,
    /// Estimate the moments from this CSV (columns x, y, u by default)
    /// instead of passing them as flags.
    #[arg(long, conflicts_with_all = ["mu_x", "mu_y", "mu_u", "var_x", "var_y", "var_u", "cov_xy", "cov_xu", "cov_yu"])]
    #[serde(skip)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "x")]
    pub feature: String,
    #[arg(long, default_value = "y")]
    pub label: String,
    #[arg(long, default_value = "u")]
    pub signal: String,
    /// Eta grid: `a,b,c`, `start:step:stop` or `log:lo:hi:n`.
    #[arg(long, default_value = "0:0.05:1.5", allow_hyphen_values = true)]
    pub etas: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Text corpus given either as two line-aligned files or as CSV columns.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// One document per line.
    #[arg(long, requires = "labels")]
    #[serde(skip)]
    pub corpus: Option<PathBuf>,
    /// One 0/1 label per line, aligned with --corpus.
    #[arg(long, requires = "corpus")]
    #[serde(skip)]
    pub labels: Option<PathBuf>,
    /// CSV file holding a text and a label column.
    #[arg(long, conflicts_with_all = ["corpus", "labels"])]
    #[serde(skip)]
    pub corpus_csv: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    pub text_column: String,
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

impl CorpusArgs {
    pub fn paths(&self) -> Result<Vec<&Path>, CliError> {
        match (&self.corpus, &self.labels, &self.corpus_csv) {
            (Some(c), Some(l), None) => Ok(vec![c.as_path(), l.as_path()]),
            (None, None, Some(p)) => Ok(vec![p.as_path()]),
            _ => Err(CliError::config("give either --corpus with --labels, or --corpus-csv")),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FitTreeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Entropy bound; each branch gets ceil(eta) levels.
    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,
    /// Number of keywords defining the user signal.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,
    /// Keep only the most frequent tokens in the tf-idf vocabulary.
    #[arg(long)]
    pub max_features: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// JSON report; defaults to the model path with `.report.json`.
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    /// Tabular data for a linear model. Columns default to the ones the
    /// model was trained on.
    #[arg(long)]
    #[serde(skip)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub signal: Option<String>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Parses a grid: an explicit list `a,b,c`, an inclusive arithmetic range
/// `start:step:stop`, or `log:lo:hi:n` for `n` geometrically spaced values.
/// The result must be finite, nonempty and sorted ascending.
pub fn parse_grid(name: &str, spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::config(format!("--{name} {spec:?}: {why}"));
    let num = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(&format!("{s:?} is not a finite number")))
    };
    let values = if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected log:lo:hi:n"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad("n must be a positive integer"))?;
        if lo <= 0.0 || hi < lo || n == 0 {
            return Err(bad("need 0 < lo <= hi and n >= 1"));
        }
        if n == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i == n - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    } else if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:stop"));
        }
        let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > 10_000_000 {
            return Err(bad("too many grid points"));
        }
        (0..n).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(bad("grid is empty"));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(bad("grid must be sorted ascending"));
    }
    Ok(values)
}

/// Applies the output-directory override to a relative path.
pub fn output_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() && !dir.is_empty() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

pub fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    p.with_file_name(format!("{stem}{suffix}"))
}
