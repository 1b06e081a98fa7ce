//! The `gaitbench` command line: `generate`, `run` and `report`.

pub mod args;
pub mod config;
pub mod generate;
pub mod report;
pub mod run;

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;

pub use args::{Arm, BackendKind, Cli, Command, GenerateArgs, ReportArgs, RunArgs};
pub use config::{LlmSpec, RunConfig, CONFIG_ECHO_FILE};

pub const EXIT_OK: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CREDENTIAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Credential(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Credential(_) => EXIT_CREDENTIAL,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Generate(a) => generate::cmd_generate(a),
        Command::Run(a) => run::cmd_run(a).map(|o| o.summary),
        Command::Report(a) => report::cmd_report(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
