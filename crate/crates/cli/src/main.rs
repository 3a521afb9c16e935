//! puzzleforge: sweeps and reports for quadratic-family puzzle machinery
//! and the Henon-family diagnostics.
//!
//! Subcommands: `puzzle`, `classify`, `select`, `measure`, `henon`. Each
//! writes CSV/JSON data files plus a manifest into its output directory.
//! Exit codes: 0 ok, 2 configuration error, 3 numerical failure,
//! 4 resource failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{parse_count, parse_window};

#[derive(Parser)]
#[command(name = "puzzleforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key=value config file; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: `out-<command>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker pool size; defaults to PUZZLEFORGE_WORKERS or all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Puzzle levels and the regular-interval cover for one parameter.
    Puzzle(PuzzleArgs),
    /// Strong-regularity classification sweep over a parameter window.
    Classify(ClassifyArgs),
    /// Parameter selection along critical curves.
    Select(SelectArgs),
    /// Invariant density and Lyapunov exponent of the 1-D family.
    Measure(MeasureArgs),
    /// Plane-family diagnostics: exponents, attractor cloud, boxes.
    Henon(HenonArgs),
}

#[derive(Args)]
struct PuzzleArgs {
    /// Map parameter a.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Puzzle level order to tabulate.
    #[arg(long)]
    order: Option<usize>,
    /// Highest order for the regular-interval cover.
    #[arg(long)]
    order_cap: Option<usize>,
    /// Extension factor for regularity.
    #[arg(long)]
    kappa: Option<f64>,
    /// Monte-Carlo membership cross-check sample count.
    #[arg(long, value_parser = parse_count)]
    mc_samples: Option<usize>,
    /// RNG seed (required when --mc-samples is given).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Parameter window lo:hi.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    /// Grid size across the window.
    #[arg(long, value_parser = parse_count)]
    count: Option<usize>,
    /// Itinerary depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Simplicity-ratio threshold.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    order_cap: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Also decompose the window into parapuzzle pieces at this prefix depth.
    #[arg(long)]
    parapuzzle_depth: Option<usize>,
}

#[derive(Args)]
struct SelectArgs {
    /// Parameter window lo:hi.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    /// Final time of the selection.
    #[arg(long = "Nmax", value_parser = parse_count)]
    n_max: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta_sep: Option<f64>,
    #[arg(long)]
    alpha_frac: Option<f64>,
    #[arg(long)]
    alpha_ba: Option<f64>,
    #[arg(long)]
    ell_min: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    max_k: Option<usize>,
    /// Parameter resolution floor for window tracking.
    #[arg(long)]
    resolution: Option<f64>,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Emit the orbit-histogram invariant density.
    #[arg(long)]
    density: bool,
    /// Emit the Lyapunov exponent.
    #[arg(long)]
    lyapunov: bool,
    #[arg(long, value_parser = parse_count)]
    bins: Option<usize>,
    /// Total orbit samples for the density.
    #[arg(long, value_parser = parse_count)]
    iterates: Option<usize>,
    /// Number of independent seeded starts.
    #[arg(long, value_parser = parse_count)]
    seeds: Option<usize>,
    /// RNG seed; mandatory for the stochastic density estimate.
    #[arg(long)]
    seed: Option<u64>,
    /// Orbit steps for the exponent.
    #[arg(short = 'n', long, value_parser = parse_count)]
    steps: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    burn_in: Option<usize>,
    /// Start point for the exponent orbit.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
}

#[derive(Args)]
struct HenonArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Compute the Lyapunov pair and Kaplan-Yorke dimension.
    #[arg(long)]
    lyapunov: bool,
    /// Sample the attractor cloud (and unstable-manifold sweep).
    #[arg(long)]
    attractor: bool,
    /// Build the base box and the simple pieces.
    #[arg(long)]
    boxes: bool,
    /// Check the classical trapping region first.
    #[arg(long)]
    trapping: bool,
    #[arg(short = 'n', long, value_parser = parse_count)]
    steps: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    burn_in: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    /// RNG seed; mandatory for certificate sampling (--boxes).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<f64>,
}

/// Failure classes mapped to exit codes.
pub enum Failure {
    Config(String),
    Numerical(String),
    Resource(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Resource(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Resource(m) => m,
        }
    }
}

fn main() {
    let cli = Cli::parse();

    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("PUZZLEFORGE_WORKERS").ok().and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if workers > 0 {
        // Worker count changes scheduling only; all merges are order-fixed.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }

    let result = match &cli.command {
        Command::Puzzle(args) => commands::puzzle::run(&cli, args),
        Command::Classify(args) => commands::classify::run(&cli, args),
        Command::Select(args) => commands::select::run(&cli, args),
        Command::Measure(args) => commands::measure::run(&cli, args),
        Command::Henon(args) => commands::henon::run(&cli, args),
    };

    match result {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            std::process::exit(failure.exit_code());
        }
    }
}
