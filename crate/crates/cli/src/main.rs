//! `sgrl`: experiments on independent learning in zero-sum stochastic games.

mod commands;
mod source;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input: bad flags, unreadable or unparsable files.
    #[error("{0}")]
    Input(String),
    /// The input was fine but a claim or invariant did not hold.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "sgrl",
    version,
    about = "Policy-gradient dynamics in two-player zero-sum stochastic games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a game file against the model invariants.
    Validate {
        /// Game file (alternative to --game).
        path: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Five-state game: finite minimax mismatch, infinite concentrability.
    Prop31 {
        /// Stopping probability of every action pair.
        #[arg(long, default_value_t = 0.2)]
        zeta: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Ratio game on which the Minty condition fails.
    Prop51 {
        eps: f64,
        s: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Reproduce one of the four ratio-game figures.
    Fig {
        #[arg(value_enum)]
        panel: FigPreset,
        /// Sign-grid resolution for panels a and c.
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Two-timescale (stochastic) gradient descent-ascent.
    Train {
        /// Also sample this many episodes at the final policies and write
        /// them to trajectories.tsv.
        #[arg(long)]
        dump_episodes: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Extragradient with exact gradients.
    Eg {
        #[command(flatten)]
        common: Common,
    },
    /// Sign grid of the Minty inner product for a 2×2 ratio game.
    MviGrid {
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        /// Anchor `x1,y1`; defaults to the Nash equilibrium.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        anchor: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Batch of random games: extragradient, SGDA, and invariant checks.
    RandomSuite {
        /// Number of games.
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, value_enum, default_value_t = SuiteKind::Ratio)]
        kind: SuiteKind,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigPreset {
    A,
    B,
    C,
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteKind {
    /// Single-state ratio games.
    Ratio,
    /// Multi-state games with `--states` states.
    Multi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// First experimental ratio game.
    Appd1,
    /// Second experimental ratio game.
    Appd2,
    /// Five-state mismatch game (ζ = 0.2).
    Prop31,
    /// Random game from --states, --actions-min, --actions-max, --zeta-min, --seed.
    Random,
    /// Random ratio game from --actions-min, --actions-max, --zeta-min, --seed.
    RandomRatio,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RatesArg {
    Theorem1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// Uniform policies.
    Center,
    /// Every state plays its first action: z0 = (1,0,…,1,0,…).
    First,
}

/// Flags shared by every command.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Game file (JSON).
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Built-in game instead of a file.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for CSV and SVG artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub log_every: Option<usize>,
    #[arg(long)]
    pub eta_x: Option<f64>,
    #[arg(long)]
    pub eta_y: Option<f64>,
    #[arg(long)]
    pub eps_x: Option<f64>,
    #[arg(long)]
    pub eps_y: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Fill step sizes, exploration, and iterations from the rate formulas.
    #[arg(long, value_enum, requires = "epsilon")]
    pub rates: Option<RatesArg>,
    /// Target accuracy for --rates.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Starting point of the dynamics.
    #[arg(long, value_enum, default_value_t = InitArg::Center)]
    pub init: InitArg,
    #[arg(long, default_value_t = 2)]
    pub states: usize,
    #[arg(long, default_value_t = 2)]
    pub actions_min: usize,
    #[arg(long, default_value_t = 2)]
    pub actions_max: usize,
    #[arg(long, default_value_t = 0.5)]
    pub zeta_min: f64,
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("SGRL_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Input(format!(
                "SGRL_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Validate { path, common } => commands::validate(path, &common),
        Command::Prop31 { zeta, .. } => commands::prop31(zeta),
        Command::Prop51 { eps, s, .. } => commands::prop51(eps, s),
        Command::Fig {
            panel,
            resolution,
            common,
        } => commands::fig(panel, resolution, &common),
        Command::Train {
            dump_episodes,
            common,
        } => commands::train(dump_episodes, &common),
        Command::Eg { common } => commands::eg(&common),
        Command::MviGrid {
            resolution,
            anchor,
            common,
        } => commands::mvi_grid(resolution, anchor, &common),
        Command::RandomSuite {
            count,
            kind,
            common,
        } => commands::random_suite(count, kind, &common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
