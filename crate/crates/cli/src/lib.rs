//! Command-line front end of the `staloha` toolkit.
//!
//! ```text
//! staloha analyze  --config fig2.toml --out results/
//! staloha simulate --config fig2.toml --seed 7
//! staloha validate --config fig2.toml --set validate.ccdf_tol=0.05
//! staloha sweep    --config fig3.toml --set sweep.engine=simulation
//! ```
//!
//! Exit codes: 0 success, 1 runtime failure, 2 validation failure,
//! 3 non-convergence, 4 configuration error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{Report, Status};
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "staloha",
    version,
    about = "Deadline-constrained slotted Aloha: analysis and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Simulation seed (overrides sim.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override one config value; repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the analytical model.
    Analyze,
    /// Run the Monte Carlo simulator.
    Simulate,
    /// Run both engines and compare them.
    Validate,
    /// Evaluate KPIs over a parameter grid.
    Sweep,
}

impl Cli {
    /// Loads the config file with all command-line overrides applied.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config <PATH> is required".into()))?;
        let mut cfg = RunConfig::load(path, &self.set)?;
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match command {
        Command::Analyze => commands::analyze(cfg),
        Command::Simulate => commands::simulate_cmd(cfg),
        Command::Validate => commands::validate(cfg),
        Command::Sweep => commands::sweep(cfg),
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                error::EXIT_CONFIG
            } else {
                error::EXIT_OK
            };
        }
    };
    let cfg = match cli.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    eprintln!("resolved configuration:\n{}", cfg.to_toml());
    match execute(cli.command, &cfg) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
