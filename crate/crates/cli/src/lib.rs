//! Batch front-end for the `nlre` library: TOML run configurations,
//! deterministic pipelines and schema-tagged JSON/CSV artifacts.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use error::CliError;
pub use run::Command;

#[derive(Debug, Parser)]
#[command(name = "nlre", version, about = "Non-linear reservoir engineering pipelines")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic step; overrides `seed` in the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Override a config value, e.g. `--set system.eta=0.4`.
    #[arg(long = "set", global = true, value_name = "K=V")]
    pub set: Vec<String>,
    /// Worker threads for the internal parallel loops.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// Parse the configuration, run the pipeline and return the written files.
pub fn run(cli: &Cli) -> Result<Vec<output::Artifact>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // a second call within one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = config::load(cli.config.as_deref(), &cli.set, cli.seed)?;
    log::info!("{} -> {}", cli.command.name(), cli.out.display());
    run::execute(cli.command, &cfg, &cli.out)
}
