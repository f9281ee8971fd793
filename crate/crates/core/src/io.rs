//! JSON instance files: `{"means": [...], "sigma": [[...], ...]}`.
//!
//! `sigma[i][j]` is the noise on arm `j` when arm `i` is pulled. Infinite
//! entries (no observation) are written as the string `"inf"`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{EnvError, FeedbackMatrix, Instance};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("sigma[{row}][{col}]: expected a positive number or \"inf\", got {found}")]
    BadEntry {
        row: usize,
        col: usize,
        found: String,
    },
    #[error(transparent)]
    Invalid(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaEntry {
    Finite(f64),
    Text(String),
}

impl SigmaEntry {
    fn of(v: f64) -> Self {
        if v.is_infinite() {
            SigmaEntry::Text("inf".into())
        } else {
            SigmaEntry::Finite(v)
        }
    }
}

/// On-disk shape of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub means: Vec<f64>,
    pub sigma: Vec<Vec<SigmaEntry>>,
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance<f64>) -> Self {
        InstanceFile {
            means: instance.means().to_vec(),
            sigma: instance
                .feedback()
                .rows()
                .iter()
                .map(|row| row.iter().copied().map(SigmaEntry::of).collect())
                .collect(),
        }
    }

    pub fn to_instance(&self) -> Result<Instance<f64>, IoError> {
        let mut rows = Vec::with_capacity(self.sigma.len());
        for (row, entries) in self.sigma.iter().enumerate() {
            let mut out = Vec::with_capacity(entries.len());
            for (col, e) in entries.iter().enumerate() {
                let v = match e {
                    SigmaEntry::Finite(v) => *v,
                    SigmaEntry::Text(s) if s.eq_ignore_ascii_case("inf") => f64::INFINITY,
                    SigmaEntry::Text(s) => {
                        return Err(IoError::BadEntry {
                            row,
                            col,
                            found: format!("{s:?}"),
                        })
                    }
                };
                out.push(v);
            }
            rows.push(out);
        }
        Ok(Instance::new(
            self.means.clone(),
            FeedbackMatrix::new(rows)?,
        )?)
    }
}

pub fn parse_instance(text: &str) -> Result<Instance<f64>, IoError> {
    serde_json::from_str::<InstanceFile>(text)?.to_instance()
}

pub fn instance_to_json(instance: &Instance<f64>) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(instance))
        .expect("instance serialization is infallible")
}

pub fn load_instance(path: &Path) -> Result<Instance<f64>, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

pub fn save_instance(instance: &Instance<f64>, path: &Path) -> Result<(), IoError> {
    fs::write(path, instance_to_json(instance) + "\n").map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_infinite_entries() {
        let inst =
            parse_instance(r#"{"means": [1, 0.5], "sigma": [[1, "inf"], [0.5, 2]]}"#).unwrap();
        assert_eq!(inst.feedback().sigma(0, 1), f64::INFINITY);
        assert_eq!(inst.feedback().sigma(1, 0), 0.5);
    }

    #[test]
    fn round_trip() {
        let inst =
            parse_instance(r#"{"means": [1, 0], "sigma": [[1, "inf"], ["inf", 1]]}"#).unwrap();
        assert_eq!(parse_instance(&instance_to_json(&inst)).unwrap(), inst);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            parse_instance(r#"{"means": [1, 0], "sigma": [[1, "x"], [1, 1]]}"#),
            Err(IoError::BadEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            parse_instance(r#"{"means": [1, 0], "sigma": [[1, -1], [1, 1]]}"#),
            Err(IoError::Invalid(_))
        ));
        assert!(matches!(
            parse_instance(r#"{"means": [1, 0], "sigma": [[1, 1]]}"#),
            Err(IoError::Invalid(_))
        ));
        assert!(matches!(parse_instance("{"), Err(IoError::Json(_))));
    }
}
