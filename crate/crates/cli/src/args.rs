use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "strata",
    version,
    about = "Layered coded computation: allocation, finishing-time analytics, simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Choose the per-layer code dimensions (k_1, ..., k_r)
    Optimize(RunArgs),
    /// Finishing-time distribution on a time grid: scheme,t,analytic_cdf,analytic_tail,asymptotic_tail
    Cdf(RunArgs),
    /// Expected finishing time: k,scheme,expected_time
    Expected(RunArgs),
    /// Leading failure-exponent coefficients: k,L,L_p,L_u,ratio
    Exponents(RunArgs),
    /// Monte Carlo next to the analytic distribution (cdf columns plus empirical_cdf,empirical_cdf_se)
    Simulate(RunArgs),
    /// Run an encoded matrix-vector job on worker threads and verify it
    Demo(DemoArgs),
    /// Time layer decodes (informational)
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Hierarchical,
    #[value(name = "mds_baseline", alias = "baseline", alias = "mds")]
    MdsBaseline,
    Uncoded,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Real,
    Prime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// Number of workers
    #[arg(long)]
    pub n: Option<usize>,
    /// Total number of tasks
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of layers; chosen to maximize the exponent when omitted
    #[arg(long)]
    pub r: Option<usize>,
    /// Explicit allocation, e.g. 19,17,15
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Per-task exponential rate
    #[arg(long, conflicts_with = "mu")]
    pub rate: Option<f64>,
    /// Per-task deterministic shift
    #[arg(long, conflicts_with = "alpha")]
    pub shift: Option<f64>,
    /// Per-task rate given as an exact decimal or fraction (e.g. 0.1 or 1/10)
    #[arg(long)]
    pub mu: Option<String>,
    /// Alias of --shift
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Workers each layer must tolerate beyond its needs
    #[arg(long)]
    pub stragglers: Option<usize>,
    /// Evaluation times, comma separated
    #[arg(long, value_delimiter = ',', conflicts_with = "t_grid")]
    pub t: Option<Vec<f64>>,
    /// Evaluation grid start:stop:step
    #[arg(long)]
    pub t_grid: Option<String>,
    /// Monte Carlo trials
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// JSON run configuration; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Largest layer count considered when r is chosen automatically
    #[arg(long)]
    pub r_max: Option<usize>,
    /// Optimize the exact failure probability at this time instead of the exponent
    #[arg(long)]
    pub exact_at: Option<f64>,
    /// Write every Monte Carlo trial to this CSV file
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Draw every task's duration independently (sensitivity studies only)
    #[arg(long)]
    pub per_task_iid: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DemoArgs {
    /// Matrix CSV; the three-worker (3,2) example runs when omitted
    #[arg(long, requires = "vector")]
    pub matrix: Option<PathBuf>,
    /// Input vector CSV (one row or one column)
    #[arg(long)]
    pub vector: Option<PathBuf>,
    /// Number of workers (required with --matrix)
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of tasks; defaults to one row per task
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of layers; chosen to maximize the exponent when omitted
    #[arg(long)]
    pub r: Option<usize>,
    /// Explicit allocation, e.g. 3,1
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Per-task exponential rate [default: 1]
    #[arg(long, conflicts_with = "mu")]
    pub rate: Option<f64>,
    /// Per-task deterministic shift [default: 0]
    #[arg(long, conflicts_with = "alpha")]
    pub shift: Option<f64>,
    /// Per-task rate as an exact decimal or fraction
    #[arg(long)]
    pub mu: Option<String>,
    /// Alias of --shift
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FieldArg::Prime)]
    pub field: FieldArg,
    /// Worker that stops early, as worker:layers_finished (1-based worker)
    #[arg(long, value_parser = parse_crash)]
    pub crash: Vec<(usize, usize)>,
    /// Virtual-time deadline for every layer
    #[arg(long)]
    pub deadline: Option<f64>,
    /// Sleep this many wall seconds per unit of virtual time
    #[arg(long)]
    pub wall_clock_scale: Option<f64>,
    /// Write the decoded output vector here
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

fn parse_crash(s: &str) -> Result<(usize, usize), String> {
    let (w, l) = s.split_once(':').ok_or("expected worker:layers")?;
    let w: usize = w.trim().parse().map_err(|e| format!("worker: {e}"))?;
    let l: usize = l.trim().parse().map_err(|e| format!("layers: {e}"))?;
    if w == 0 {
        return Err("workers are numbered from 1".into());
    }
    Ok((w - 1, l))
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Layer sizes to time
    #[arg(long, value_delimiter = ',', default_values_t = vec![5, 10, 19])]
    pub k1: Vec<usize>,
    /// Entries per task result
    #[arg(long, default_value_t = 4096)]
    pub width: usize,
    #[arg(long, default_value_t = 15)]
    pub repetitions: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
