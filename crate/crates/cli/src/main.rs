//! `pileup`: design, analyze and simulate pulse-pileup links from a JSON
//! experiment file, writing every result as CSV/JSON.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pileup_core::link::SyncMode;

use config::{Experiment, Overrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Build the spreading kernel and report its diagnostics.
    Design,
    /// Statistics of seed- and spread-rendered trains, PAPR versus rate.
    Analyze,
    /// One BER trial with the link section of the config.
    Run,
    /// BER over the Cartesian product of the sweep axes.
    Sweep,
    /// Sync bins after every averaging step.
    SyncDemo,
    /// SNR limits and Shannon floors.
    Theory,
}

#[derive(Debug, Parser)]
#[command(name = "pileup", version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment JSON; omitted sections take their defaults.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// SNR values in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Samples between pulses, comma separated.
    #[arg(long = "np", value_delimiter = ',')]
    n_p: Option<Vec<usize>>,
    /// Averaging constants, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// ideal, mpa or mma.
    #[arg(long)]
    sync: Option<SyncMode>,
}

fn execute(cli: Cli) -> Result<(), String> {
    let mut exp = Experiment::load(&cli.config)?;
    exp.apply(&Overrides {
        seed: cli.seed,
        snr: cli.snr,
        n_p: cli.n_p,
        m: cli.m,
        sync: cli.sync,
    })?;
    let out = commands::Out::new(&cli.out, &exp)?;
    match cli.command {
        Command::Design => commands::design(&exp, &out),
        Command::Analyze => commands::analyze(&exp, &out),
        Command::Run => commands::run(&exp, &out),
        Command::Sweep => commands::sweep(&exp, &out),
        Command::SyncDemo => commands::sync_demo(&exp, &out),
        Command::Theory => commands::theory(&exp, &out),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
