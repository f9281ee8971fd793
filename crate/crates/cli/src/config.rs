//! JSON config files whose keys mirror the long flag names.
//!
//! Any flag given on the command line wins over the file.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunFile {
    pub instance: Option<PathBuf>,
    pub policy: Option<String>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub gap_floor: Option<f64>,
    pub horizon: Option<u64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub checkpoints: Option<Vec<u64>>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct LpFile {
    pub instance: Option<PathBuf>,
    pub gap_floor: Option<f64>,
    pub epsilon: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct VerifyFile {
    pub lemma: Option<String>,
    #[serde(rename = "L")]
    pub lower: Option<f64>,
    #[serde(rename = "H")]
    pub upper: Option<f64>,
    pub t: Option<u64>,
    pub alpha: Option<f64>,
    pub r: Option<f64>,
    pub eps: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub sigma_min: Option<f64>,
}

pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("bad config {}", path.display()))
}
