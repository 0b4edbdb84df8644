use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "freeprob",
    version,
    about = "Free cumulants, conditional expectations, maximal correlation and free entropy",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// File of `key = value` lines used as option defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Defaults to csv for `monotonicity` and `density`, json otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// A distribution: `semicircular`, `semicircular(mean,var)`, `bernoulli`,
/// `uniform`, `uniform(a,b)`, `atomic(FILE)` or a measure JSON file.
#[derive(Args, Debug, Clone, Serialize)]
pub struct DistArgs {
    #[arg(long, default_value = "semicircular")]
    pub dist: String,
    /// Free convolution with a centered semicircle of this variance.
    #[arg(long)]
    pub smooth: Option<String>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Free cumulants of a distribution or of given moments.
    #[command(args_override_self = true)]
    Cumulants(SequenceArgs),
    /// Moments of a distribution or of given free cumulants.
    #[command(args_override_self = true)]
    Moments(SequenceArgs),
    /// Free convolution with a second distribution, or a free power.
    #[command(args_override_self = true)]
    Convolve(ConvolveArgs),
    /// Density by Stieltjes inversion.
    #[command(args_override_self = true)]
    Density(DensityArgs),
    /// Conditional expectation onto letters or onto a partial sum.
    #[command(args_override_self = true)]
    Project(ProjectArgs),
    /// Efron–Stein components with decomposition and orthogonality checks.
    #[command(args_override_self = true)]
    EfronStein(EfronSteinArgs),
    /// Maximal correlation between partial sums.
    #[command(args_override_self = true)]
    Maxcorr(MaxcorrArgs),
    /// Free entropy.
    #[command(args_override_self = true)]
    Entropy(EntropyArgs),
    /// Free Fisher information and the conjugate variable.
    #[command(args_override_self = true)]
    Fisher(FisherArgs),
    /// Entropy and Fisher information along the free central limit theorem.
    #[command(args_override_self = true)]
    Monotonicity(MonotonicityArgs),
    /// Random-matrix cross-check of mixed moments and maximal correlation.
    #[command(args_override_self = true)]
    RmtCheck(RmtArgs),
    /// Run the invariant suite.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SequenceArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 10)]
    pub order: usize,
    /// Comma-separated input sequence, used instead of `--dist`.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ConvolveArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Second distribution.
    #[arg(long, conflicts_with = "power")]
    pub with: Option<String>,
    /// Free convolution power.
    #[arg(long)]
    pub power: Option<usize>,
    /// Rescale the result by this factor.
    #[arg(long)]
    pub dilate: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub order: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Jacobi,
    Rseries,
    /// Exact Cauchy model of the measure, no truncation.
    Model,
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Number of cumulants kept.
    #[arg(long, default_value_t = 16)]
    pub order: usize,
    #[arg(long, default_value_t = 2000)]
    pub cells: usize,
    /// `model` inverts the exact Cauchy transform; `jacobi` and `rseries` use
    /// only the first `--order` cumulants.
    #[arg(long, value_enum, default_value_t = Method::Model)]
    pub method: Method,
    /// Comma-separated heights for the extrapolation in ε.
    #[arg(long)]
    pub eps: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Polynomial, e.g. `x1*x2*x1 - 1/2*s3^2`, or a JSON term list (`@FILE` reads a file).
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
    /// Number of free letters; defaults to the largest letter in use.
    #[arg(long)]
    pub letters: Option<usize>,
    /// Comma-separated letters to project onto.
    #[arg(long, conflicts_with = "sum")]
    pub subset: Option<String>,
    /// Project onto the algebra of `s_k = x_1 + … + x_k`.
    #[arg(long)]
    pub sum: Option<usize>,
    /// Degree cap; defaults to the degree of the polynomial.
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct EfronSteinArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
    #[arg(long)]
    pub letters: Option<usize>,
    /// Comma-separated letters; defaults to all.
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct MaxcorrArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    /// Report every degree from 1 to `--degree`.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 2000)]
    pub cells: usize,
    /// Also evaluate the integral of Fisher information along the heat flow.
    #[arg(long)]
    pub via_fisher: bool,
    #[arg(long, default_value_t = 10)]
    pub fisher_degree: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct FisherArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 6)]
    pub degree: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct MonotonicityArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 6)]
    pub nmax: usize,
    #[arg(long, default_value_t = 8)]
    pub degree: usize,
    #[arg(long, default_value_t = 16)]
    pub order: usize,
    #[arg(long, default_value_t = 2000)]
    pub cells: usize,
    /// Largest `n` in the checks `Φ(s_n) ≤ (m/n)Φ(s_m)`.
    #[arg(long, default_value_t = 4)]
    pub intermediate_max: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rotation {
    Orthogonal,
    Unitary,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Diagonal {
    Quantiles,
    Iid,
}

#[derive(Args, Debug, Serialize)]
pub struct RmtArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Matrix size N.
    #[arg(long, default_value_t = 1024)]
    pub size: usize,
    /// Number of independent trials T.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Words as `1,2,1,2;1,1,2`; random words are drawn when absent.
    #[arg(long)]
    pub words: Option<String>,
    #[arg(long, default_value_t = 40)]
    pub random_words: usize,
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    #[arg(long, default_value_t = 2)]
    pub labels: u16,
    #[arg(long, value_enum, default_value_t = Rotation::Orthogonal)]
    pub rotation: Rotation,
    #[arg(long, value_enum, default_value_t = Diagonal::Quantiles)]
    pub diagonal: Diagonal,
    /// Fraction of words that must fall within three standard errors.
    #[arg(long, default_value_t = 0.95)]
    pub coverage: f64,
    /// Also estimate the maximal correlation for `m,n`.
    #[arg(long)]
    pub maxcorr: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub maxcorr_degree: usize,
    #[arg(long, default_value_t = 0.02)]
    pub maxcorr_tolerance: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    /// Smaller corpora and matrices.
    #[arg(long)]
    pub quick: bool,
    /// Skip the random-matrix checks.
    #[arg(long)]
    pub skip_rmt: bool,
}
