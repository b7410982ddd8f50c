use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use gaeq::group::Group;
use gaeq::layers::{AttnKind, NormVariant};
use gaeq::transformer::Variant;
use gaeq::AlgebraKind;

mod cmd;
mod output;

#[derive(Debug, Parser)]
#[command(name = "gaeq", version, about = "Verification workflows for equivariant geometric-algebra layers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Global {
    /// ega, pga or cga.
    #[arg(long, global = true)]
    pub algebra: Option<AlgebraKind>,
    /// se3 or e3.
    #[arg(long, global = true)]
    pub group: Option<Group>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Pass/fail threshold of the check being run.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Allow long-running solver cases.
    #[arg(long, global = true)]
    pub long: bool,
    /// Machine-readable JSON instead of text tables.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Export Cayley tables (and the PGA join table) as JSON.
    Tables,
    /// Solve for the equivariant linear maps and compare with the closed form.
    SolveBasis {
        /// Relative singular-value threshold of the rank decision.
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Compare constructible multilinear maps with all equivariant ones.
    VerifyConjecture {
        #[arg(long, default_value_t = 3)]
        l_max: usize,
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Measure end-to-end model equivariance under random group elements.
    CheckEquivariance {
        /// E, P, iP or C.
        #[arg(long, default_value = "C")]
        variant: Variant,
        /// Model config JSON; replaces --variant.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        tokens: usize,
    },
    /// Print attention logits between points next to their distances.
    DemoAttention {
        /// plain_inner, ega_distance, cga_inner or ip_pga_to_cga.
        #[arg(long, default_value = "ega_distance")]
        variant: AttnKind,
        /// CSV or JSON point file; random points when absent.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Apply one normalization repeatedly and track the largest coefficient.
    NormProbe {
        /// plain, abs or per_grade_abs.
        #[arg(long, default_value = "plain")]
        variant: NormVariant,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        /// Start from an embedded point even in the CGA.
        #[arg(long)]
        point: bool,
    },
}

/// Outcome of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("GAEQ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("GAEQ_THREADS must be a positive integer, got {raw:?}"))?;
    anyhow::ensure!(n > 0, "GAEQ_THREADS must be positive");
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    init_threads()?;
    let g = &cli.global;
    match cli.command {
        Command::Tables => cmd::tables::run(g),
        Command::SolveBasis { rank_tol } => cmd::solve::run(g, rank_tol),
        Command::VerifyConjecture { l_max, rank_tol } => cmd::conjecture::run(g, l_max, rank_tol),
        Command::CheckEquivariance { variant, config, samples, tokens } => {
            cmd::equivariance::run(g, variant, config.as_deref(), samples, tokens)
        }
        Command::DemoAttention { variant, points, count } => {
            cmd::attention::run(g, variant, points.as_deref(), count)
        }
        Command::NormProbe { variant, epsilon, iterations, point } => {
            cmd::norm::run(g, variant, epsilon, iterations, point)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
