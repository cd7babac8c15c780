use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use giantstep::config::ExperimentConfig;
use giantstep::experiments::{run, staircase_report};
use giantstep::verify::{verify, Verdict};
use giantstep::CliError;
use giantstep_core::staircase::DEFAULT_T_MAX;

/// Giant-step feature-learning experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "GIANTSTEP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Re-check a finished run's criteria from its manifest.
    Verify { manifest: PathBuf },
    /// Print the staircase sequence of a polynomial link as JSON.
    Staircase {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = DEFAULT_T_MAX)]
        t_max: usize,
    },
    /// Run a `cget` config (same as `run`, checked to be of that kind).
    Cget {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    match cli.command {
        Command::Run { config, output_dir } => run_config(&config, output_dir, None),
        Command::Cget { config, output_dir } => run_config(&config, output_dir, Some(giantstep::ExperimentKind::Cget)),
        Command::Verify { manifest } => {
            let verdict = verify(&manifest)?;
            match &verdict {
                Verdict::NoCriteria(kind) => println!("no criteria attached to experiment kind `{kind}`"),
                Verdict::Checked(checks) => {
                    for c in checks {
                        println!("{}", c.line());
                    }
                }
            }
            Ok(verdict.passed())
        }
        Command::Staircase { target, t_max } => {
            let report = staircase_report(&target, t_max).map_err(|e| CliError::Config(format!("--target: {e}")))?;
            // A closed pipe (e.g. `| head`) is not an error for a report.
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&report).expect("json serializes"));
            Ok(true)
        }
    }
}

fn run_config(path: &std::path::Path, output_dir: Option<PathBuf>, kind: Option<giantstep::ExperimentKind>) -> Result<bool, CliError> {
    let cfg = ExperimentConfig::load(path)?;
    if let Some(k) = kind {
        if cfg.experiment != k {
            return Err(CliError::Config(format!("field `experiment`: expected `{k}`, found `{}`", cfg.experiment)));
        }
    }
    log::info!("running {} experiment from {}", cfg.experiment, path.display());
    let out = run(&cfg, output_dir.as_deref())?;
    println!("{}", out.manifest_path.display());
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
