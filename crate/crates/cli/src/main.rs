use std::fmt;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod overrides;
mod serve;

use args::{Cli, Command};

/// Why a command did not succeed, and the exit code that goes with it.
#[derive(Debug)]
pub enum Failure {
    /// Results disagree with the asserted expectations.
    Mismatch,
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Mismatch => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Verbosity(u8);

impl Verbosity {
    pub fn info(self, msg: fmt::Arguments<'_>) {
        if self.0 >= 1 {
            eprintln!("aerofed: {msg}");
        }
    }

    pub fn debug(self, msg: fmt::Arguments<'_>) {
        if self.0 >= 2 {
            eprintln!("aerofed: {msg}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let v = Verbosity(cli.verbose);
    let result = match &cli.command {
        Command::Validate { json, overrides } => {
            commands::validate(*json, &overrides.items, cli.seed, v)
        }
        Command::Sweep {
            cache_gb,
            scenario,
            output,
            overrides,
        } => commands::sweep(
            cache_gb,
            scenario.as_deref(),
            output,
            &overrides.items,
            cli.seed,
            v,
        ),
        Command::Run {
            scenario,
            output,
            overrides,
        } => commands::run(scenario, output, &overrides.items, cli.seed, v),
        Command::Serve { engine, event_log } => commands::serve(engine, event_log.as_deref(), v),
        Command::Inspect { input, engine } => commands::inspect(input.as_deref(), engine, v),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Mismatch => {}
                Failure::Usage(msg) => eprintln!("aerofed: error: {msg}"),
                Failure::Io(msg) => eprintln!("aerofed: I/O error: {msg}"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
