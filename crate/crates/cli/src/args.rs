use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "maxstream",
    version,
    about = "Simulate and verify extreme-value limits of stationary heavy-tailed sequences",
    after_help = "Exit status: 0 on success, 1 when a verification misses its thresholds, 2 on usage or input errors.\n\
                  MAXSTREAM_THREADS, when set, takes precedence over --threads."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
#[command(next_help_heading = "Global options")]
pub struct GlobalArgs {
    /// Master seed for all random streams.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// JSON model spec, e.g. {"model": "armax", "c": 0.5}; overrides inline model flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Record wall-clock runtime in reports and on stderr (makes output non-reproducible).
    #[arg(long, global = true, default_value_t = false)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Iid,
    Mm,
    Armax,
    Garch2,
}

/// Inline model choice; ignored when --config is given.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Iid)]
    pub model: ModelKind,

    #[command(flatten)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Args)]
pub struct ModelParams {
    /// Tail index of the i.i.d. model and of the extremal process.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Scale of the i.i.d. model.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,

    /// Moving-maxima coefficients, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.3,0.5")]
    pub coeffs: Vec<f64>,

    /// ARMAX coefficient.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,

    #[arg(long, default_value_t = 0.1)]
    pub alpha0: f64,

    #[arg(long, default_value_t = 0.1)]
    pub alpha1: f64,

    #[arg(long, default_value_t = 0.8)]
    pub beta1: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sequence, its partial-maxima path, or an extremal-process path.
    Simulate(SimulateArgs),
    /// Skorokhod distance between two serialized step functions.
    Metric(MetricArgs),
    /// M1 and J1 oscillations of a serialized step function.
    Oscillation(OscillationArgs),
    /// Monte Carlo verification experiments.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Estimators.
    #[command(subcommand)]
    Estimate(EstimateCommand),
    /// Squared GARCH(1,1) tail and extremal indices.
    #[command(subcommand)]
    Garch(GarchCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimModel {
    Iid,
    Mm,
    Armax,
    Garch2,
    Extremal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    /// The raw sequence X_1..X_n.
    Sequence,
    /// The normalized partial-maxima path M_n(t).
    Path,
    /// The time-space point measure of (i/n, X_i/a_n).
    Points,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SimModel::Iid)]
    pub model: SimModel,

    /// Sequence length.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    /// What to output for sequence models; the extremal model always yields a path.
    #[arg(long, value_enum, default_value_t = Emit::Sequence)]
    pub emit: Emit,

    /// Extremal index of the extremal process.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,

    /// Smallest simulated mark of the extremal process.
    #[arg(long, default_value_t = maxstream_core::extremal::DEFAULT_FLOOR)]
    pub floor: f64,

    #[command(flatten)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    M1,
    J1,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(value_enum)]
    pub kind: MetricKind,

    /// Step function as JSON ({"initial": .., "jumps": [[t, v], ..]}) or CSV (t,v rows).
    #[arg(long)]
    pub left: PathBuf,

    #[arg(long)]
    pub right: PathBuf,

    /// Absolute tolerance of the bisection.
    #[arg(long, default_value_t = maxstream_core::skorokhod::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct OscillationArgs {
    /// Step function as JSON or CSV.
    #[arg(long)]
    pub path: PathBuf,

    /// Window widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,0.5")]
    pub delta: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// KS distance of simulated M_n/a_n to the Fréchet limit.
    MaxLimit(MaxLimitArgs),
    /// Joint probability of the path at several times against the extremal process.
    Fidi(FidiArgs),
    /// The two-coefficient moving-maxima counterexample to J1 convergence.
    J1Failure(J1FailureArgs),
    /// Poisson law of block exceedance counts.
    ClusterPoisson(ClusterArgs),
    /// Karamata truncated-moment ratios.
    Karamata(KaramataArgs),
}

#[derive(Debug, Args)]
pub struct MaxLimitArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, default_value_t = 10_000)]
    pub n: usize,

    #[arg(long, default_value_t = 4000)]
    pub trials: usize,

    /// KS pass threshold; defaults to twice the 1% critical value.
    #[arg(long)]
    pub ks_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FidiArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, default_value_t = 10_000)]
    pub n: usize,

    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,

    #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
    pub times: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub levels: Vec<f64>,

    /// Allowed absolute deviation from the limit probability.
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct J1FailureArgs {
    #[arg(long, default_value_t = 0.2)]
    pub c0: f64,

    #[arg(long, default_value_t = 0.8)]
    pub c1: f64,

    #[arg(long, default_value_t = 10.0)]
    pub eps: f64,

    #[arg(long, default_value_t = 10_000)]
    pub n: usize,

    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,

    /// Allowed deviation of P(A) from its limit.
    #[arg(long, default_value_t = 0.005)]
    pub p_a_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, default_value_t = 10_000)]
    pub n: usize,

    /// Level in units of a_n.
    #[arg(long, default_value_t = 1.0)]
    pub u: f64,

    #[arg(long, default_value_t = 100)]
    pub block_len: usize,

    #[arg(long, default_value_t = 5000)]
    pub trials: usize,

    /// Allowed relative deviation of the mean count.
    #[arg(long, default_value_t = 0.15)]
    pub mean_tolerance: f64,

    #[arg(long, default_value_t = 0.8)]
    pub dispersion_min: f64,

    #[arg(long, default_value_t = 1.2)]
    pub dispersion_max: f64,
}

#[derive(Debug, Args)]
pub struct KaramataArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Moment orders s > alpha, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub orders: Vec<f64>,

    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,

    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,

    /// Allowed relative deviation from the limit.
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
}

#[derive(Debug, Subcommand)]
pub enum EstimateCommand {
    /// Extremal index by the conditional or the blocks estimator.
    Theta(ThetaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThetaMethod {
    Conditional,
    Blocks,
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    #[arg(long, value_enum, default_value_t = ThetaMethod::Conditional)]
    pub method: ThetaMethod,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Threshold quantile of the marginal.
    #[arg(long, default_value_t = 0.999)]
    pub quantile: f64,

    /// Conditional method: look-ahead length.
    #[arg(long, default_value_t = 50)]
    pub r: usize,

    /// Conditional method: number of simulated blocks.
    #[arg(long, default_value_t = 2_000_000)]
    pub trials: usize,

    /// Conditional method: also report r in {10, 50, 200} x quantile in {0.99, 0.999}.
    #[arg(long, default_value_t = false)]
    pub grid: bool,

    /// Blocks method: simulated series length.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,

    #[arg(long, default_value_t = 100)]
    pub block_len: usize,

    /// Blocks method: read the series from a file (JSON array, simulate output, or CSV) instead of simulating.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Allowed absolute deviation from the model's extremal index.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
}

#[derive(Debug, Subcommand)]
pub enum GarchCommand {
    /// Tail index kappa solving E(alpha1 Z^2 + beta1)^kappa = 1.
    Alpha(GarchAlphaArgs),
    /// Monte Carlo extremal index of the squared process.
    Theta(GarchThetaArgs),
}

#[derive(Debug, Args)]
pub struct GarchAlphaArgs {
    #[arg(long, default_value_t = 0.1)]
    pub alpha1: f64,

    #[arg(long, default_value_t = 0.8)]
    pub beta1: f64,

    /// Root-finding tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct GarchThetaArgs {
    #[arg(long, default_value_t = 0.1)]
    pub alpha1: f64,

    #[arg(long, default_value_t = 0.8)]
    pub beta1: f64,

    /// Truncation of the product inside the expectation.
    #[arg(long, default_value_t = 100)]
    pub k_max: usize,

    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
}
