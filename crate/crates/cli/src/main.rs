use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod verbs;

/// Partial traces, dilations and partial-trace norm inequalities.
///
/// Reports are written to stdout as JSON lines. Exit status is 0 when every
/// verdict passes, 1 when a verdict fails and 2 on a usage or input error.
#[derive(Debug, Parser)]
#[command(name = "ptrace-lab", version)]
struct Cli {
    /// Also print a table of verdicts to stderr.
    #[arg(long, global = true)]
    summary: bool,

    /// Worker threads for sweeps and searches (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Partial trace over a set of factors.
    Ptrace(PtraceArgs),
    /// Build a dilation with prescribed partial trace(s).
    Dilate(DilateArgs),
    /// Evaluate one inequality on a matrix.
    Check(CheckArgs),
    /// Compute the template constant κ(c).
    Kappa(KappaArgs),
    /// Weak submajorization for vectors or Kronecker sums.
    Majorize(MajorizeArgs),
    /// Search rank-two matrices for a two-copy violation.
    WernerSearch(WernerSearchArgs),
    /// Schmidt-number witness value or matrix.
    Witness(WitnessArgs),
    /// Run checkers over seeded random instances.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct PtraceArgs {
    /// Matrix JSON file, `-` for stdin.
    #[arg(long)]
    input: String,
    /// Local dimensions `d1,d2[,d3…]`; defaults to the file's `dims`.
    #[arg(long)]
    space: Option<String>,
    /// Zero-based factors to trace out.
    #[arg(long, value_delimiter = ',', conflicts_with = "keep")]
    trace: Vec<usize>,
    /// Keep only this factor.
    #[arg(long)]
    keep: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DilationKind {
    Normal,
    Unitary,
    Nilpotent,
    Idempotent,
    Purify,
    RankOne,
    RankTwo,
    AdjustRank,
}

#[derive(Debug, Args)]
struct DilateArgs {
    #[arg(long, value_enum)]
    kind: DilationKind,
    /// Target matrix (the first target for two-sided dilations).
    #[arg(long)]
    input: Option<String>,
    /// Second target for `rank-two` and `adjust-rank`.
    #[arg(long)]
    input_b: Option<String>,
    /// Jordan data for `rank-one`.
    #[arg(long)]
    jordan_a: Option<String>,
    #[arg(long)]
    jordan_b: Option<String>,
    /// Ancilla dimension (`unitary`, `purify`).
    #[arg(long)]
    ancilla: Option<usize>,
    /// Target rank for `adjust-rank`.
    #[arg(long)]
    rank: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ineq {
    Individual,
    Template,
    Kyfan,
    Audenaert,
    LargeRank,
    RankOneGamma,
    NormalRankR,
    Dimension,
    TwoCopy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    General,
    N2,
    Lowrank,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum)]
    ineq: Ineq,
    #[arg(long)]
    input: String,
    #[arg(long)]
    space: Option<String>,
    /// Schatten exponent (`inf` allowed).
    #[arg(long, default_value = "2")]
    p: String,
    /// Norm as `schatten:P` or `kyfan:K` for `individual` and `template`.
    #[arg(long)]
    norm: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    /// Template constant; computed when absent.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "general")]
    variant: Variant,
    /// Exponent of the rank-weighted Audenaert bound and the rank-one bound.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormKind {
    Schatten,
    Kyfan,
}

#[derive(Debug, Args)]
struct KappaArgs {
    #[arg(long, value_enum)]
    norm: NormKind,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c: f64,
    /// Number of factors, each of dimension `--d`.
    #[arg(long, requires = "d", conflicts_with = "dims")]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Explicit local dimensions `d1,d2[,…]`.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    /// Rank restriction; unrestricted when absent.
    #[arg(long)]
    r: Option<usize>,
    /// Force the multistart search (reports a lower bound).
    #[arg(long)]
    bruteforce: bool,
    #[arg(long, default_value_t = ptrace_lab::kappa::DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct MajorizeArgs {
    /// Factor matrices `C_i` of a Kronecker sum, in order.
    #[arg(long = "factor")]
    factors: Vec<String>,
    /// Vector `x` in `x ≺_w y`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "y")]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Vec<f64>,
}

#[derive(Debug, Args)]
struct WernerSearchArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Where to write a violation certificate.
    #[arg(long)]
    certificate: Option<String>,
}

#[derive(Debug, Args)]
struct WitnessArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Evaluate `<ψ, W_k ψ>` for `ψ = (M ⊗ 1)|Ω>`.
    #[arg(long, conflicts_with = "matrix")]
    input: Option<String>,
    /// Emit the witness matrix itself.
    #[arg(long)]
    matrix: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated checker names or `all`.
    #[arg(long, default_value = "all")]
    ineq: String,
    #[arg(long, default_value = "2x2,2x3,3x3,2x2x2")]
    shapes: String,
    /// Instances per checker and shape.
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    match verbs::run(&cli.verb) {
        Ok(out) => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            for line in &out.lines {
                if writeln!(lock, "{line}").is_err() {
                    return ExitCode::from(2);
                }
            }
            if cli.summary {
                eprint!("{}", out.summary());
            }
            if out.failed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
