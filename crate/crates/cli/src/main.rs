//! Command-line front end: sampling, bijection checks, invariance
//! experiments, continuum simulation and GHP bounds.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "looptree", version, about = "Random looptrees and bipartite maps with prescribed degrees")]
#[command(args_override_self = true)]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// File of `key=value` lines overriding the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample an object uniformly given the degrees.
    Sample {
        kind: SampleKind,
        #[command(flatten)]
        seq: SeqArgs,
    },
    /// Check the bijections on random or exhaustively enumerated instances.
    Roundtrip {
        #[command(flatten)]
        seq: SeqArgs,
        /// Number of random instances.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Enumerate every labelled looptree with at most this many edges
        /// instead of sampling.
        #[arg(long)]
        exhaustive: Option<usize>,
    },
    /// Rescaled statistics along a size ladder, with KS comparisons.
    Invariance(InvarianceArgs),
    /// Continuum objects.
    Continuum {
        #[command(subcommand)]
        cmd: ContinuumCmd,
    },
    /// Measured metric spaces.
    Mm {
        #[command(subcommand)]
        cmd: MmCmd,
    },
    /// Łukasiewicz paths.
    Luka {
        #[command(subcommand)]
        cmd: LukaCmd,
    },
    /// Good labellings.
    Labels {
        #[command(subcommand)]
        cmd: LabelsCmd,
    },
    /// Pointed bipartite maps.
    Map {
        #[command(subcommand)]
        cmd: MapCmd,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    Forest,
    Looptree,
    LabelledLooptree,
    Map,
}

/// Degree sequence from a file or a quadrangulation size.
#[derive(Args, Debug, Clone)]
pub struct SeqArgs {
    #[arg(long, conflicts_with = "quadrangulation")]
    pub degrees: Option<PathBuf>,
    /// Number of faces of degree 4.
    #[arg(long)]
    pub quadrangulation: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Quadrangulation,
    Theta,
    Template,
}

#[derive(Args, Debug, Clone)]
pub struct ThetaArgs {
    #[arg(long, default_value_t = 1.0)]
    pub theta0: f64,
    /// File of jump weights, or a comma-separated list.
    #[arg(long)]
    pub thetas: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Limit ratio of even parts to `sigma^2`, over `theta0^2`.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
}

#[derive(Args, Debug, Clone)]
pub struct InvarianceArgs {
    #[arg(long, value_enum, default_value = "quadrangulation")]
    pub model: ModelKind,
    /// Comma-separated, strictly increasing sizes.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    /// Comma-separated statistics (pair-distance, label-at-uniform, radius,
    /// spinal).
    #[arg(long, value_delimiter = ',', default_value = "pair-distance,label-at-uniform,radius,spinal")]
    pub stats: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Grid size of continuum samples; omit to skip the continuum.
    #[arg(long)]
    pub continuum_grid: Option<usize>,
    #[arg(long)]
    pub continuum_replicas: Option<usize>,
    /// Template degree file for `--model template`.
    #[arg(long)]
    pub degrees: Option<PathBuf>,
    #[command(flatten)]
    pub theta: ThetaArgs,
}

#[derive(Subcommand, Debug)]
pub enum ContinuumCmd {
    /// Excursion with exchangeable increments, its `C^delta` ladder, labels
    /// and loop structure.
    Sample {
        #[command(flatten)]
        theta: ThetaArgs,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Number of jumps kept (defaults to all given weights).
        #[arg(long)]
        jmax: Option<usize>,
        /// Comma-separated `delta` values of the ladder.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.2,0.1,0.05")]
        deltas: Vec<f64>,
        /// Variance parameter of the labels (defaults to 1/3).
        #[arg(long)]
        label_a: Option<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    IndexAligned,
    Greedy,
}

#[derive(Subcommand, Debug)]
pub enum MmCmd {
    /// Upper bound on the GHP distance between two spaces.
    Ghp {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value = "index-aligned")]
        strategy: Strategy,
    },
    /// Rescaled looptree distances on a parameter grid, as a space file.
    Looptree {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, default_value = "looptree.mm")]
        name: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum LukaCmd {
    /// Uniform excursion with the given parts.
    Sample {
        #[command(flatten)]
        seq: SeqArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum LabelsCmd {
    /// Uniform good labelling of a sampled or given looptree.
    Sample {
        #[command(flatten)]
        seq: SeqArgs,
        /// Path CSV of the looptree, instead of sampling one.
        #[arg(long, conflicts_with_all = ["degrees", "quadrangulation"])]
        path: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum MapCmd {
    /// Map of a labelled looptree given by a path CSV and an optional labels
    /// CSV (a uniform good labelling otherwise).
    FromLooptree {
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Map to labelled looptree and back.
    RoundtripCheck {
        #[arg(long)]
        map: PathBuf,
    },
    /// Distances from the distinguished vertex.
    Profile {
        #[arg(long)]
        map: PathBuf,
        /// Source vertex (defaults to the distinguished vertex).
        #[arg(long)]
        vstar: Option<usize>,
    },
}

fn main() -> ExitCode {
    let args = match config::merged_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
