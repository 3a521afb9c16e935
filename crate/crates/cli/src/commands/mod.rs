pub mod classify;
pub mod henon;
pub mod measure;
pub mod puzzle;
pub mod select;

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::config::FileConfig;
use crate::report::{fnv1a, OutputDir};
use crate::{Cli, Failure};

pub fn cfg_err(e: anyhow::Error) -> Failure {
    Failure::Config(format!("{e:#}"))
}

pub fn res_err(e: anyhow::Error) -> Failure {
    Failure::Resource(format!("{e:#}"))
}

pub fn num_err(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(format!("{e}"))
}

pub fn load_config(cli: &Cli) -> Result<FileConfig, Failure> {
    FileConfig::load(cli.config.as_deref()).map_err(cfg_err)
}

pub fn open_output(cli: &Cli, command: &str) -> Result<OutputDir, Failure> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("out-{command}")));
    OutputDir::create(&out).map_err(res_err)
}

/// Hash of the resolved configuration: the run's identity.
pub fn config_hash(command: &str, resolved: &BTreeMap<String, String>) -> u64 {
    let mut parts: Vec<String> = vec![command.to_string()];
    for (k, v) in resolved {
        parts.push(format!("{k}={v}"));
    }
    let refs: Vec<&str> = parts.iter().map(|s| s.as_str()).collect();
    fnv1a(&refs)
}

/// The 1-D modules need a below the orientation threshold.
pub fn validate_scalar_a(a: f64) -> Result<(), Failure> {
    if !(-2.0..=-0.75).contains(&a) {
        return Err(Failure::Config(format!(
            "parameter a = {a} outside the admissible range [-2, -0.75]"
        )));
    }
    Ok(())
}
