//! Result files: CSV table, JSON with config echo, per-replication traces.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AggregateRow, HarnessError, RegretTrace, RunConfig};
use crate::io::InstanceFile;
use crate::policy::PolicyKind;

pub const CSV_HEADER: &str = "t,mean_regret,stderr,regret_over_logt";

/// Serializable copy of a [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub instance: InstanceFile,
    pub policy: PolicyKind,
    pub alpha: f64,
    pub gamma: f64,
    pub gap_floor: f64,
    pub horizon: u64,
    pub replications: usize,
    pub base_seed: u64,
    pub checkpoints: Vec<u64>,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        ConfigEcho {
            instance: InstanceFile::from_instance(&c.instance),
            policy: c.policy,
            alpha: c.params.alpha,
            gamma: c.params.gamma,
            gap_floor: c.params.gap_floor,
            horizon: c.horizon,
            replications: c.replications,
            base_seed: c.base_seed,
            checkpoints: c.checkpoints.clone(),
        }
    }
}

/// Contents of `results.json`. Floats are written with Rust's shortest
/// round-trip formatting, so equal inputs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResults {
    pub config: ConfigEcho,
    /// Stream index of each replication under `config.base_seed`.
    pub seeds: Vec<u64>,
    pub table: Vec<AggregateRow>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> HarnessError + '_ {
    move |source| HarnessError::Json {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_csv(rows: &[AggregateRow], path: &Path) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyResults);
    }
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.t, r.mean_regret, r.stderr, r.regret_over_logt
        ));
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_pretty<V: Serialize>(value: &V, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn write_json(results: &RunResults, path: &Path) -> Result<(), HarnessError> {
    if results.table.is_empty() {
        return Err(HarnessError::EmptyResults);
    }
    write_pretty(results, path)
}

pub fn read_json(path: &Path) -> Result<RunResults, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

/// Writes `config.json`, `results.csv`, `results.json` and
/// `traces/rep_XXXX.json` under `dir`, creating it if needed.
pub fn write_run_directory(
    dir: &Path,
    config: &RunConfig,
    traces: &[RegretTrace],
    table: &[AggregateRow],
) -> Result<Vec<PathBuf>, HarnessError> {
    let traces_dir = dir.join("traces");
    fs::create_dir_all(&traces_dir).map_err(io_err(&traces_dir))?;
    let echo = ConfigEcho::from(config);
    let mut written = Vec::new();

    let p = dir.join("config.json");
    write_pretty(&echo, &p)?;
    written.push(p);

    let p = dir.join("results.csv");
    write_csv(table, &p)?;
    written.push(p);

    let p = dir.join("results.json");
    write_json(
        &RunResults {
            config: echo,
            seeds: traces.iter().map(|t| t.rep_index).collect(),
            table: table.to_vec(),
        },
        &p,
    )?;
    written.push(p);

    for tr in traces {
        let p = traces_dir.join(format!("rep_{:04}.json", tr.rep_index));
        write_pretty(tr, &p)?;
        written.push(p);
    }
    Ok(written)
}
