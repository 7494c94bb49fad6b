//! `brakesense`: batch front end for the offline braking-intention pipeline.

mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use brakesense::classifiers::ClassifierKind;
use brakesense::eval::ClassPair;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "brakesense", version, about = "Offline EEG braking-intention decoding")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Pipeline configuration (JSON). Built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the protocol seed of the config.
    #[arg(long, global = true, env = "BRAKESENSE_SEED")]
    pub seed: Option<u64>,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Treat soft numerical warnings (unconverged Riemannian means) as failures.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairArg {
    EmergencyVsNone,
    NormalVsNone,
    EmergencyVsNormal,
    All,
}

impl PairArg {
    pub fn pairs(self) -> Vec<ClassPair> {
        match self {
            PairArg::EmergencyVsNone => vec![ClassPair::EmergencyVsNone],
            PairArg::NormalVsNone => vec![ClassPair::NormalVsNone],
            PairArg::EmergencyVsNormal => vec![ClassPair::EmergencyVsNormal],
            PairArg::All => ClassPair::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClfArg {
    CspLda,
    Rmdm,
    Cnn,
    All,
}

impl ClfArg {
    pub fn kinds(self) -> Vec<ClassifierKind> {
        match self {
            ClfArg::CspLda => vec![ClassifierKind::CspLda],
            ClfArg::Rmdm => vec![ClassifierKind::Rmdm],
            ClfArg::Cnn => vec![ClassifierKind::Cnn],
            ClfArg::All => ClassifierKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate emergency and normal sessions for every subject.
    Simulate,
    /// Filter, epoch, reject and baseline-correct recordings, one epoch file per subject.
    Preprocess {
        /// `.rec` files or directories searched recursively; files sharing a
        /// directory form one subject.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Override the artifact threshold in µV (`inf` disables rejection).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Sliding-window accuracy curves, one run directory per pair and classifier.
    Evaluate {
        /// `.epo` files or directories searched recursively, one file per subject.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = PairArg::EmergencyVsNone)]
        pair: PairArg,
        /// Classifier; the config's protocol classifier when absent.
        #[arg(long, value_enum)]
        clf: Option<ClfArg>,
    },
    /// Summary table at 0 ms and -100 ms across finished runs.
    Report {
        /// Run directories, or directories holding run directories.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Grand-average difference maps, pooled over subjects.
    Topomap {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = PairArg::All)]
        pair: PairArg,
        /// Map times in ms relative to the pedal press.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              default_value = "-1000,-900,-800,-700,-600,-500,-400,-300,-200,-100,0")]
        times: Vec<f64>,
    },
    /// Emergency brake reaction time statistics from recording event logs.
    Ebrt {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = commands::Context::new(&cli.global)?;
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Preprocess { inputs, threshold } => commands::preprocess(&ctx, &inputs, threshold),
        Command::Evaluate { inputs, pair, clf } => commands::evaluate(&ctx, &inputs, pair, clf),
        Command::Report { runs } => commands::report(&ctx, &runs),
        Command::Topomap { inputs, pair, times } => commands::topomap(&ctx, &inputs, pair, &times),
        Command::Ebrt { inputs } => commands::ebrt(&ctx, &inputs),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(CliError::Usage(format!("cannot start {} worker threads: {e}", cli.global.jobs))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("brakesense: {e}");
            e.exit()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_times_parse() {
        let cli = Cli::try_parse_from(["brakesense", "topomap", "x", "--times", "-300,-200"]).unwrap();
        let Command::Topomap { times, .. } = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(times, vec![-300.0, -200.0]);
    }
}
