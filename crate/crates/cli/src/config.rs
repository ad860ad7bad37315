use std::path::{Path, PathBuf};

use clap::ValueEnum;
use condmetrics::Weighting;
use serde::Deserialize;
use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingMode {
    #[default]
    Empirical,
    Uniform,
}

impl From<WeightingMode> for Weighting {
    fn from(m: WeightingMode) -> Self {
        match m {
            WeightingMode::Empirical => Weighting::Empirical,
            WeightingMode::Uniform => Weighting::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingMode {
    #[default]
    Identity,
    /// Align conditioned classes to real classes from the probabilities.
    Hungarian,
}

impl PairingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PairingMode::Identity => "identity",
            PairingMode::Hungarian => "hungarian",
        }
    }
}

/// Inputs and options shared by every subcommand. Paths are optional; each
/// metric checks for the files it needs.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub real_features: Option<PathBuf>,
    pub gen_features: Option<PathBuf>,
    pub real_labels: Option<PathBuf>,
    pub gen_labels: Option<PathBuf>,
    pub probs: Option<PathBuf>,
    pub k: Option<usize>,
    pub subset_size: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub weighting: WeightingMode,
    pub pairing: PairingMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            real_features: None,
            gen_features: None,
            real_labels: None,
            gen_labels: None,
            probs: None,
            k: None,
            subset_size: None,
            trials: 1,
            seed: 0,
            weighting: WeightingMode::Empirical,
            pairing: PairingMode::Identity,
        }
    }
}

impl RunConfig {
    /// Reads a JSON config. Relative paths resolve against the file's
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.real_features,
            &mut cfg.gen_features,
            &mut cfg.real_labels,
            &mut cfg.gen_labels,
            &mut cfg.probs,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if self.subset_size == Some(0) {
            return Err(CliError::Config("subset size must be at least 1".into()));
        }
        if self.k.is_some_and(|k| k == 0) {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: [{}] {source}", path.display(), source.code())]
    Tensor { path: PathBuf, source: TensorError },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Metric(#[from] condmetrics::Error),
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 4,
            CliError::Metric(e) if e.is_numerical() => 3,
            CliError::Tensor { .. } | CliError::Input(_) | CliError::Metric(_) | CliError::Output { .. } => 2,
        }
    }

    pub fn tensor(path: &Path, source: TensorError) -> Self {
        CliError::Tensor {
            path: path.to_path_buf(),
            source,
        }
    }
}
