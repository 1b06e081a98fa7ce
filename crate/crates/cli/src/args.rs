use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaitbench_core::llm::FaultMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "gaitbench", version, about = "Gait classification benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Write a synthetic cohort as JSON Lines.
    Generate(GenerateArgs),
    /// Run one experiment arm under leave-one-subject-out and write a results bundle.
    Run(RunArgs),
    /// Merge one or more results bundles into a comparison table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Knn,
    Ocsvm,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Generator config (TOML); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `rng_seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Run config (TOML or a `config_echo.json`); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub arm: Option<Arm>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Add NORMAL reference statistics to each prompt (llm arm).
    #[arg(long)]
    pub grounded: bool,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub model: Option<String>,
    /// Base URL of a chat-completions API.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (concurrent requests for the llm arm).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    /// Mock fault injection: none, truncate, bad-class, every-nth:N, flaky-first:K.
    #[arg(long, value_parser = parse_fault)]
    pub fault: Option<FaultMode>,
    /// OCSVM ν grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nu: Option<Vec<f64>>,
    /// OCSVM γ grid, comma separated, in units of the standardized features.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Confidence strata smaller than this report counts only.
    #[arg(long)]
    pub min_stratum: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(required = true, num_args = 1..)]
    pub bundles: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn parse_fault(s: &str) -> Result<FaultMode, String> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let number = |what: &str| -> Result<u64, String> {
        arg.ok_or(format!("`{name}` needs a count, e.g. `{name}:5`"))?
            .parse::<u64>()
            .ok()
            .filter(|v| *v > 0)
            .ok_or(format!("{what} must be a positive integer"))
    };
    let mode = match name {
        "none" => FaultMode::None,
        "truncate" => FaultMode::Truncate,
        "bad-class" => FaultMode::BadClass,
        "every-nth" => FaultMode::EveryNth { n: number("N")? },
        "flaky-first" => FaultMode::FlakyFirst {
            k: u32::try_from(number("K")?).map_err(|e| e.to_string())?,
        },
        _ => return Err(format!("unknown fault mode `{name}`")),
    };
    if arg.is_some() && !matches!(mode, FaultMode::EveryNth { .. } | FaultMode::FlakyFirst { .. }) {
        return Err(format!("`{name}` takes no argument"));
    }
    Ok(mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_syntax() {
        assert_eq!(parse_fault("none"), Ok(FaultMode::None));
        assert_eq!(parse_fault("every-nth:5"), Ok(FaultMode::EveryNth { n: 5 }));
        assert_eq!(parse_fault("flaky-first:2"), Ok(FaultMode::FlakyFirst { k: 2 }));
        assert!(parse_fault("every-nth").is_err());
        assert!(parse_fault("every-nth:0").is_err());
        assert!(parse_fault("truncate:3").is_err());
        assert!(parse_fault("explode").is_err());
    }

    #[test]
    fn grids_split_on_commas() {
        let cli = Cli::try_parse_from([
            "gaitbench",
            "run",
            "--arm",
            "ocsvm",
            "--dataset",
            "d",
            "--out",
            "o",
            "--nu",
            "0.1,0.2",
            "--gamma",
            "0.5",
        ])
        .unwrap();
        let Command::Run(a) = cli.command else { panic!() };
        assert_eq!(a.nu, Some(vec![0.1, 0.2]));
        assert_eq!(a.gamma, Some(vec![0.5]));
    }
}
