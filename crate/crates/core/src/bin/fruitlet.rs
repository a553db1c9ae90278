use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fruitlet_map::commands::{
    cmd_count, cmd_evaluate, cmd_report, cmd_simulate, load_pipeline_config, load_simulation_config, CommandError,
    SummaryThresholds,
};
use fruitlet_map::io::to_json;
use fruitlet_map::{FitMethod, PipelineConfig, SimulationConfig};

#[derive(Parser)]
#[command(name = "fruitlet", version, about = "Fruitlet counting from masked depth scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scan bundle with ground truth.
    Simulate {
        /// Simulation config, or a bundle manifest embedding one.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the scene seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "sim")]
        scan_id: String,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Count fruitlets in a bundle.
    Count(PipelineArgs),
    /// Count and score against the bundle's ground truth.
    Evaluate(PipelineArgs),
    /// Aggregate evaluation reports per fit method.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        min_precision: Option<f64>,
        #[arg(long)]
        min_recall: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fit {
    Ransac,
    Lsq,
}

#[derive(Args)]
struct PipelineArgs {
    /// Bundle directory.
    bundle: PathBuf,
    /// Pipeline config, or a report embedding one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the RANSAC base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    fit: Option<Fit>,
    #[arg(long)]
    merge_threshold: Option<f64>,
    /// Output report file.
    #[arg(long)]
    out: PathBuf,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig, CommandError> {
        let mut cfg = match &self.config {
            Some(p) => load_pipeline_config(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.fit.ransac.seed = seed;
        }
        if let Some(fit) = self.fit {
            cfg.fit.method = match fit {
                Fit::Ransac => FitMethod::Ransac,
                Fit::Lsq => FitMethod::LeastSquares,
            };
        }
        if let Some(t) = self.merge_threshold {
            cfg.matching.merge_threshold = t;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            scan_id,
            out,
        } => {
            let mut cfg = match &config {
                Some(p) => load_simulation_config(p)?,
                None => SimulationConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.scene.seed = seed;
            }
            cmd_simulate(&cfg, &scan_id, &out)?;
        }
        Command::Count(args) => {
            cmd_count(&args.bundle, &args.config()?, &args.out)?;
        }
        Command::Evaluate(args) => {
            cmd_evaluate(&args.bundle, &args.config()?, &args.out)?;
        }
        Command::Report {
            reports,
            min_precision,
            min_recall,
            out,
        } => {
            let inputs: Vec<&std::path::Path> = reports.iter().map(PathBuf::as_path).collect();
            cmd_report(&inputs, SummaryThresholds { min_precision, min_recall }, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{}", to_json(&e.record()));
            ExitCode::FAILURE
        }
    }
}
