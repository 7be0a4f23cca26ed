use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fidac::experiment::{emit_plotdata, run_experiment, ExperimentConfig, ExperimentKind, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "fidac", version, about = "Frequency-interleaved DAC impairment compensation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file, or a resolved_config.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set adapt.ie_step=0.25`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment; exits non-zero if any check fails.
    #[command(after_help = format!("Worker threads: set {WORKERS_ENV} (default: all cores)."))]
    Run {
        experiment: Option<ExperimentKind>,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Results root; files go to <out>/<experiment>/.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Turn results under a root directory into plot-ready CSV files.
    EmitPlotdata {
        #[arg(long, default_value = "results")]
        results: PathBuf,
        /// Defaults to <results>/plotdata.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resolved configuration as JSON.
    ValidateConfig {
        experiment: Option<ExperimentKind>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    ListExperiments,
}

fn run(cli: Cli) -> fidac::Result<bool> {
    match cli.command {
        Command::Run { experiment, cfg, out } => {
            let c = ExperimentConfig::load(experiment, cfg.config.as_deref(), &cfg.overrides)?;
            let dir = out.join(c.experiment.name());
            let report = run_experiment(&c, &dir)?;
            for check in &report.checks {
                println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
            }
            println!("results in {}", report.out_dir.display());
            Ok(report.passed())
        }
        Command::EmitPlotdata { results, out } => {
            let out = out.unwrap_or_else(|| results.join("plotdata"));
            for f in emit_plotdata(&results, &out)? {
                println!("{}", f.display());
            }
            Ok(true)
        }
        Command::ValidateConfig { experiment, cfg } => {
            let c = ExperimentConfig::load(experiment, cfg.config.as_deref(), &cfg.overrides)?;
            println!("{}", c.to_json());
            Ok(true)
        }
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<18} {}", k.name(), k.description());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
