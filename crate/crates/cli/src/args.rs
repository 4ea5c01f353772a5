use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "aerofed",
    version,
    about = "Aeronautical edge federation: admission, simulation and serving"
)]
pub struct Cli {
    /// Seed for the traffic generator; overrides the scenario's own seed.
    #[arg(long, global = true, env = "AEROFED_SEED")]
    pub seed: Option<u64>,

    /// More diagnostics on standard error (repeat for more).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce the built-in validation experiment and check its objectives.
    Validate {
        /// Emit a canonical JSON document instead of a table.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep cache budgets and write per-approach metrics as CSV.
    Sweep {
        /// Comma-separated cache budgets in GB (decimal).
        #[arg(long = "cache-gb", value_name = "LIST")]
        cache_gb: String,
        /// Scenario document to sweep; defaults to the validation scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve and simulate one scenario document.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        output: Output,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Drive a federation engine with one wire document per line on stdin.
    Serve {
        #[command(flatten)]
        engine: EngineArgs,
        /// Also write the engine event log, one JSON document per line.
        #[arg(long, value_name = "PATH")]
        event_log: Option<PathBuf>,
    },
    /// Replay documents through an engine and print the resulting catalog.
    Inspect {
        /// Line-delimited documents; standard input when absent or `-`.
        input: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Replace a scenario field, e.g. `satellite.bandwidth_bps=96000000` or
    /// `slices.*.zipf_exponent=0.8`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub items: Vec<String>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Accept offers greedily within this total price; accept all when absent.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Delay of a cache hit in seconds.
    #[arg(long, default_value_t = 0.0)]
    pub cached_hit_delay_s: f64,
}
