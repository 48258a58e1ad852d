use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ris_feel_core::harness::{self, ExperimentConfig, PlotKind};
use ris_feel_core::{Error, Result};

#[derive(Parser)]
#[command(name = "ris-feel", version, about = "RIS-assisted over-the-air federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a configuration once.
    Run(Source),
    /// Run the configuration's [sweep] section.
    Sweep(Source),
    /// Render figures from a trace directory.
    Plot {
        /// Directory holding seed_*.csv or sweep.csv.
        traces: PathBuf,
        /// mse_vs_n, acc_vs_n, acc_vs_round, acc_vs_L or privacy_tradeoff (repeatable).
        #[arg(long, required = true)]
        kind: Vec<String>,
        /// Directory for the SVG files (default: the trace directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration without running it.
    Validate(Source),
}

#[derive(Args)]
struct Source {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    config: Option<PathBuf>,
    /// Built-in preset: A, B, C or D.
    #[arg(long)]
    scenario: Option<String>,
    /// Extra seed, appended to the configured list (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match (&self.config, &self.scenario) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(id)) => harness::preset(id)?,
            (None, None) => unreachable!("clap requires one source"),
        };
        for &s in &self.seeds {
            if !config.experiment.seeds.contains(&s) {
                config.experiment.seeds.push(s);
            }
        }
        config.validate()?;
        Ok(config)
    }

    fn out_dir(&self, config: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.experiment.output_dir.clone())
            .unwrap_or_else(|| Path::new("results").join(&config.experiment.scenario))
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(src) => {
            let config = src.load()?;
            let out = src.out_dir(&config);
            let result = harness::run(&config, &out)?;
            println!("wrote {} files to {}", result.files.len(), out.display());
        }
        Command::Sweep(src) => {
            let config = src.load()?;
            let out = src.out_dir(&config);
            let result = harness::scenario_sweep(&config, &out)?;
            println!(
                "swept {} points, wrote {} files to {}",
                result.points.len(),
                result.files.len(),
                out.display()
            );
        }
        Command::Plot { traces, kind, out } => {
            for k in &kind {
                let kind: PlotKind = k.parse()?;
                let target = out.as_ref().map(|d| d.join(format!("{}.svg", kind.name())));
                let path = harness::plot(&traces, kind, target.as_deref())?;
                println!("wrote {}", path.display());
            }
        }
        Command::Validate(src) => {
            let config = src.load()?;
            println!(
                "{}: valid (K={}, M={}, L={}, {} seeds)",
                config.experiment.scenario,
                config.system.devices,
                config.system.antennas,
                config.system.elements,
                config.experiment.seeds.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
