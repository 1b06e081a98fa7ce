use std::path::Path;

use gaitbench_core::domain::{generate_dataset, save_dataset, GeneratorConfig};

use crate::args::GenerateArgs;
use crate::CliError;

pub fn load_generator_config(path: &Path) -> Result<GeneratorConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<String, CliError> {
    let mut config = match &args.config {
        Some(p) => load_generator_config(p)?,
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    let dataset = generate_dataset(&config).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    save_dataset(&dataset, &args.out)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", args.out.display())))?;
    Ok(format!(
        "wrote {} cycles for {} subjects to {} (seed {})\n",
        dataset.len(),
        dataset.subjects().len(),
        args.out.display(),
        config.rng_seed
    ))
}
