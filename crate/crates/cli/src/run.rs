use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use gaitbench_core::domain::{read_dataset, Dataset};
use gaitbench_core::eval::LlmConfig;
use gaitbench_core::eval::{
    loso_split, run_knn_experiment, run_llm_experiment, run_ocsvm_experiment, BackendFactory, Diagnostics,
    MetricsReport, MockFactory, ResultsBundle, SharedBackend,
};
use gaitbench_core::llm::{sha256_hex, HttpBackend, HttpConfigError, PromptTemplate};

use crate::args::{Arm, BackendKind, RunArgs};
use crate::config::{arm_name, resolve, RunConfig, CONFIG_ECHO_FILE};
use crate::CliError;

const TERMINAL_KIND: &str = "transport-terminal";

#[derive(Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub report: MetricsReport,
    pub out: PathBuf,
    pub summary: String,
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Reads the dataset and returns it with the SHA-256 of its bytes.
fn load(path: &Path) -> Result<(Dataset, String), CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read dataset {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Config(format!("dataset {}: not UTF-8: {e}", path.display())))?;
    let dataset =
        read_dataset(text.as_bytes()).map_err(|e| CliError::Config(format!("dataset {}: {e}", path.display())))?;
    Ok((dataset, sha256_hex(text)))
}

fn http_backend(config: &RunConfig) -> Result<Option<Arc<HttpBackend>>, CliError> {
    let Some(spec) = config.llm.as_ref().filter(|s| s.backend == BackendKind::Http) else {
        return Ok(None);
    };
    let model = spec.model.clone().unwrap_or_default();
    HttpBackend::from_env(&spec.endpoint, model, Duration::from_secs(spec.timeout_secs))
        .map(|b| Some(Arc::new(b)))
        .map_err(|e| match e {
            HttpConfigError::MissingCredential => CliError::Credential(e.to_string()),
            other => CliError::Config(other.to_string()),
        })
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let mut config = resolve(args)?;
    // credentials before touching anything else
    let http = http_backend(&config)?;

    let (dataset, sha) = load(&config.dataset)?;
    if let Some(expected) = &config.dataset_sha256 {
        if *expected != sha {
            return Err(CliError::Config(format!(
                "dataset {} has sha256 {sha}, but the config was recorded for {expected}",
                config.dataset.display()
            )));
        }
    }
    config.dataset_sha256 = Some(sha);
    let plan = loso_split(&dataset).map_err(runtime)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(runtime)?;

    let bundle = match config.arm {
        Arm::Knn => {
            let knn = config.knn.clone().unwrap_or_default();
            let predictions = pool
                .install(|| run_knn_experiment(&dataset, &plan, &knn, None))
                .map_err(runtime)?;
            ResultsBundle {
                diagnostics: Diagnostics::for_set(&predictions),
                predictions,
                tuning: None,
                verdicts: None,
                min_stratum: config.min_stratum,
            }
        }
        Arm::Ocsvm => {
            let ocsvm = config.ocsvm.clone().unwrap_or_default();
            let run = pool
                .install(|| run_ocsvm_experiment(&dataset, &plan, &ocsvm, None))
                .map_err(runtime)?;
            let mut diagnostics = Diagnostics::for_set(&run.predictions);
            diagnostics.degenerate_folds = run.tuning.iter().filter(|t| t.degenerate).map(|t| t.fold).collect();
            ResultsBundle {
                predictions: run.predictions,
                tuning: Some(run.tuning),
                diagnostics,
                verdicts: None,
                min_stratum: config.min_stratum,
            }
        }
        Arm::Llm => {
            let spec = config.llm.as_mut().expect("resolved llm spec");
            let template = PromptTemplate::for_grounding(spec.grounded).sha256();
            if let Some(recorded) = &spec.template_sha256 {
                if *recorded != template {
                    return Err(CliError::Config(format!(
                        "prompt template hash {template} differs from the recorded {recorded}"
                    )));
                }
            }
            let factory: Box<dyn BackendFactory> = match http {
                Some(b) => Box::new(SharedBackend(b)),
                None => Box::new(MockFactory { fault: spec.fault }),
            };
            let llm = LlmConfig {
                grounded: spec.grounded,
                retry: spec.retry.clone(),
                jobs: config.jobs,
            };
            let run = run_llm_experiment(&dataset, &plan, factory.as_ref(), &llm, None).map_err(runtime)?;
            spec.template_sha256 = Some(run.template_sha256);
            ResultsBundle {
                predictions: run.predictions,
                tuning: None,
                diagnostics: run.diagnostics,
                verdicts: Some(run.verdicts),
                min_stratum: config.min_stratum,
            }
        }
    };

    let report = bundle.write(&args.out).map_err(runtime)?;
    let echo = args.out.join(CONFIG_ECHO_FILE);
    let text = serde_json::to_string_pretty(&config).map_err(runtime)?;
    std::fs::write(&echo, text + "\n").map_err(|e| runtime(format!("cannot write {}: {e}", echo.display())))?;

    let terminal = bundle
        .diagnostics
        .failure_kinds
        .get(TERMINAL_KIND)
        .copied()
        .unwrap_or(0);
    if terminal > 0 {
        return Err(CliError::Runtime(format!(
            "{terminal} trials failed with a terminal transport error; partial bundle written to {}",
            args.out.display()
        )));
    }
    let summary = summarize(&config, &report, &args.out);
    Ok(RunOutcome {
        config,
        report,
        out: args.out.clone(),
        summary,
    })
}

fn summarize(config: &RunConfig, report: &MetricsReport, out: &Path) -> String {
    let mut s = format!(
        "{} arm: {} records ({} failed) -> {}\n",
        arm_name(config.arm),
        report.n_records,
        report.n_failed,
        out.display()
    );
    if let Some(m) = &report.multiclass {
        s += &format!("  multiclass  MCC {:.3}  macro-F1 {:.3}\n", m.mcc, m.macro_f1);
    }
    s += &format!(
        "  binary      MCC {:.3}  macro-F1 {:.3}\n",
        report.binary.mcc, report.binary.macro_f1
    );
    s
}
