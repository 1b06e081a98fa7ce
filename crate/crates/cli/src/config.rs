//! Resolved run configuration and its echo file.

use std::path::{Path, PathBuf};

use gaitbench_core::classic::TuningGrid;
use gaitbench_core::eval::{KnnConfig, OcsvmConfig, DEFAULT_MIN_STRATUM};
use gaitbench_core::llm::{FaultMode, RetryPolicy};
use serde::{Deserialize, Serialize};

use crate::args::{Arm, BackendKind, RunArgs};
use crate::CliError;

pub const CONFIG_ECHO_FILE: &str = "config_echo.json";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_JOBS: usize = 1;
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";
pub const DEFAULT_TIMEOUT_SECS: u64 = 120;
const DEFAULT_INNER_FOLDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSpec {
    pub backend: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_fault")]
    pub fault: FaultMode,
    #[serde(default)]
    pub grounded: bool,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Hash of the prompt template the run used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_sha256: Option<String>,
}

fn default_endpoint() -> String {
    DEFAULT_ENDPOINT.to_string()
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

fn default_fault() -> FaultMode {
    FaultMode::None
}

/// Everything needed to re-execute a run; written as `config_echo.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub arm: Arm,
    pub dataset: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_sha256: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_min_stratum")]
    pub min_stratum: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knn: Option<KnnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ocsvm: Option<OcsvmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm: Option<LlmSpec>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_jobs() -> usize {
    DEFAULT_JOBS
}

fn default_min_stratum() -> usize {
    DEFAULT_MIN_STRATUM
}

/// Reads a run config; `.toml` files are TOML, anything else JSON.
pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn reject(flag: &str, set: bool, arm: Arm) -> Result<(), CliError> {
    if set {
        return Err(config_err(format!("{flag} is not valid with --arm {}", arm_name(arm))));
    }
    Ok(())
}

pub fn arm_name(arm: Arm) -> &'static str {
    match arm {
        Arm::Knn => "knn",
        Arm::Ocsvm => "ocsvm",
        Arm::Llm => "llm",
    }
}

/// Merges the optional config file with flags; flags win.
pub fn resolve(args: &RunArgs) -> Result<RunConfig, CliError> {
    let base = args.config.as_deref().map(load_run_config).transpose()?;
    let arm = args
        .arm
        .or(base.as_ref().map(|b| b.arm))
        .ok_or_else(|| config_err("--arm is required (knn, ocsvm or llm)"))?;
    let base = base.filter(|b| b.arm == arm);
    let dataset = args
        .dataset
        .clone()
        .or(base.as_ref().map(|b| b.dataset.clone()))
        .ok_or_else(|| config_err("--dataset is required"))?;
    // a recorded hash only binds the dataset it was recorded for
    let dataset_sha256 = base
        .as_ref()
        .filter(|b| b.dataset == dataset)
        .and_then(|b| b.dataset_sha256.clone());
    let seed = args.seed.or(base.as_ref().map(|b| b.seed)).unwrap_or(DEFAULT_SEED);
    let jobs = args.jobs.or(base.as_ref().map(|b| b.jobs)).unwrap_or(DEFAULT_JOBS);
    if jobs == 0 {
        return Err(config_err("jobs must be at least 1"));
    }
    let min_stratum = args
        .min_stratum
        .or(base.as_ref().map(|b| b.min_stratum))
        .unwrap_or(DEFAULT_MIN_STRATUM);

    let llm_flags = [
        ("--grounded", args.grounded),
        ("--backend", args.backend.is_some()),
        ("--model", args.model.is_some()),
        ("--endpoint", args.endpoint.is_some()),
        ("--max-retries", args.max_retries.is_some()),
        ("--timeout-secs", args.timeout_secs.is_some()),
        ("--fault", args.fault.is_some()),
    ];
    let grid_flags = [("--nu", args.nu.is_some()), ("--gamma", args.gamma.is_some())];

    let mut config = RunConfig {
        arm,
        dataset,
        dataset_sha256,
        seed,
        jobs,
        min_stratum,
        knn: None,
        ocsvm: None,
        llm: None,
    };
    match arm {
        Arm::Knn => {
            for (flag, set) in llm_flags.iter().chain(&grid_flags) {
                reject(flag, *set, arm)?;
            }
            let mut knn = base.and_then(|b| b.knn).unwrap_or_default();
            if let Some(k) = args.k {
                knn.k = k;
            }
            if knn.k == 0 {
                return Err(config_err("k must be at least 1"));
            }
            config.knn = Some(knn);
        }
        Arm::Ocsvm => {
            for (flag, set) in llm_flags {
                reject(flag, set, arm)?;
            }
            reject("--k", args.k.is_some(), arm)?;
            let mut ocsvm = base.and_then(|b| b.ocsvm).unwrap_or_default();
            ocsvm.seed = seed;
            if args.nu.is_some() || args.gamma.is_some() {
                let old = ocsvm.grid.take();
                let nu = args.nu.clone().or(old.as_ref().map(|g| g.nu_values.clone()));
                let gamma = args.gamma.clone().or(old.as_ref().map(|g| g.gamma_values.clone()));
                let (Some(nu_values), Some(gamma_values)) = (nu, gamma) else {
                    return Err(config_err(
                        "--nu and --gamma must be given together (the default γ grid is data-scaled)",
                    ));
                };
                ocsvm.grid = Some(TuningGrid {
                    gamma_values,
                    nu_values,
                    folds: old.map_or(DEFAULT_INNER_FOLDS, |g| g.folds),
                });
            }
            if let Some(g) = &ocsvm.grid {
                g.validate().map_err(|e| config_err(format!("ocsvm grid: {e}")))?;
            }
            config.ocsvm = Some(ocsvm);
        }
        Arm::Llm => {
            for (flag, set) in grid_flags {
                reject(flag, set, arm)?;
            }
            reject("--k", args.k.is_some(), arm)?;
            let old = base.and_then(|b| b.llm);
            let backend = args
                .backend
                .or(old.as_ref().map(|o| o.backend))
                .ok_or_else(|| config_err("--arm llm requires --backend (http or mock)"))?;
            let mut spec = match old {
                Some(o) if o.backend == backend => o,
                _ => LlmSpec {
                    backend,
                    model: None,
                    endpoint: default_endpoint(),
                    timeout_secs: DEFAULT_TIMEOUT_SECS,
                    fault: FaultMode::None,
                    grounded: false,
                    retry: RetryPolicy::default(),
                    template_sha256: None,
                },
            };
            if args.model.is_some() {
                spec.model = args.model.clone();
            }
            if let Some(e) = &args.endpoint {
                spec.endpoint = e.clone();
            }
            if let Some(t) = args.timeout_secs {
                spec.timeout_secs = t;
            }
            if let Some(f) = args.fault {
                spec.fault = f;
            }
            if let Some(r) = args.max_retries {
                spec.retry.max_retries = r;
            }
            if args.grounded && !spec.grounded {
                // a different template, so the recorded hash no longer applies
                spec.grounded = true;
                spec.template_sha256 = None;
            }
            match backend {
                BackendKind::Http => {
                    if spec.model.as_deref().is_none_or(str::is_empty) {
                        return Err(config_err("--backend http requires --model"));
                    }
                    if spec.fault != FaultMode::None {
                        return Err(config_err("--fault applies only to --backend mock"));
                    }
                    if spec.timeout_secs == 0 {
                        return Err(config_err("timeout_secs must be at least 1"));
                    }
                }
                BackendKind::Mock => {
                    // the mock needs no pauses between resubmissions
                    spec.retry.initial_backoff_ms = 0;
                    spec.retry.max_backoff_ms = 0;
                }
            }
            config.llm = Some(spec);
        }
    }
    Ok(config)
}
