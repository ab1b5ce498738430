use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use morreylab_cli::{corpus, run, CliError, Command, ExperimentConfig, Format};

/// Finite-space experiments for maximal operators, commutators and Morrey norms.
#[derive(Debug, Parser)]
#[command(name = "morreylab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config file, or `corpus:<name>` for a shipped one.
    #[arg(long)]
    config: Option<String>,
    /// Output directory; defaults to the config's `output`, then `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core. Falls back to MORREYLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
}

fn load(spec: &str) -> Result<ExperimentConfig, CliError> {
    match spec.strip_prefix("corpus:") {
        Some(name) => corpus::shipped(name),
        None => ExperimentConfig::load(spec.as_ref()),
    }
}

fn threads(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("MORREYLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("MORREYLAB_THREADS = {v:?} is not a thread count"))),
        Err(_) => Ok(0),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let threads = threads(cli.threads)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let config = match (&cli.config, cli.command) {
        (Some(spec), _) => Some(load(spec)?),
        (None, Command::Report) => None,
        (None, _) => return Err(CliError::Config("--config is required for this command".into())),
    };
    let out = cli
        .out
        .or_else(|| config.as_ref().and_then(|c| c.output.clone()))
        .or_else(|| config.as_ref().map(|c| PathBuf::from("out").join(&c.name)))
        .ok_or_else(|| CliError::Config("report needs --out or --config".into()))?;
    let outcome = match config {
        Some(mut config) => {
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            run(cli.command, config, &out, cli.format, rayon::current_num_threads())?
        }
        None => morreylab_cli::run::cmd_report(&out)?,
    };
    println!("{}", outcome.summary.trim_end());
    for path in &outcome.written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
