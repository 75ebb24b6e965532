//! `fisc`: tax reports, chain/DeFi/validator simulations and attribution
//! scenarios from plain files.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::SimKind;

#[derive(Debug, Parser)]
#[command(name = "fisc", version, about = "Deterministic crypto-asset tax-event engine")]
struct Cli {
    /// Policy TOML for `report`/`attrib`, economic parameters for `simulate`.
    #[arg(long, global = true, env = "FISC_CONFIG", alias = "policy")]
    config: Option<PathBuf>,
    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a tax report from an event file.
    Report {
        #[arg(long)]
        events: PathBuf,
        /// fifo, lifo, hifo, specid, avg_total, avg_moving, periodic or pvct.
        #[arg(long, default_value = "fifo")]
        method: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a pool, chain or validator scenario into tax events.
    Simulate {
        #[arg(value_enum)]
        kind: SimKind,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a jurisdiction attribution scenario.
    Attrib {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = commands::config_path(cli.config);
    let config = config.as_deref();
    let result = match &cli.command {
        Command::Report { events, method, out } => commands::report(events, method, config, out),
        Command::Simulate { kind, scenario, out } => commands::simulate(*kind, scenario, config, cli.seed, out),
        Command::Attrib { scenario, out } => commands::attrib(scenario, config, cli.seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
