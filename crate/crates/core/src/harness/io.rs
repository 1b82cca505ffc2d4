//! Dataset CSV files, their JSON manifests, and JSON helpers.
//!
//! Values are written in scientific notation with 17 significant digits,
//! which round-trips every finite `f64` exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datagen::{GenConfig, GroundTruth};
use crate::error::{Error, Result};
use crate::model::Dataset;

pub const DATASET_FILE: &str = "dataset.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub columns: Vec<String>,
    pub n_obs: usize,
    #[serde(default)]
    pub config: Option<GenConfig>,
    #[serde(default)]
    pub truth: Option<GroundTruth>,
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn column_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Renders a dataset as CSV text with an `x1,...,xn` header.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = column_names(data.n_vars()).join(",");
    out.push('\n');
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses CSV text with a header row. Errors name the 1-based line.
pub fn dataset_from_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let width = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .len();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("'{field}' is not finite"),
                });
            }
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no observations".into(),
        });
    }
    Dataset::new(values, width)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dataset_from_csv(&text)
}

/// Writes `dataset.csv` and `manifest.json` into `dir`, returning the CSV path.
pub fn write_dataset(dir: &Path, data: &Dataset, config: Option<&GenConfig>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(DATASET_FILE);
    fs::write(&csv_path, dataset_to_csv(data)).map_err(|e| Error::io(&csv_path, e))?;
    let manifest = Manifest {
        columns: column_names(data.n_vars()),
        n_obs: data.n_obs(),
        config: config.cloned(),
        truth: data.truth.clone(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(csv_path)
}

/// Reads the CSV in `dir` and attaches ground truth from its manifest if present.
pub fn read_dataset_dir(dir: &Path) -> Result<(Dataset, Option<Manifest>)> {
    let data = read_dataset(&dir.join(DATASET_FILE))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Ok((data, None));
    }
    let manifest: Manifest = read_json(&manifest_path)?;
    let data = match &manifest.truth {
        Some(t) => data.with_truth(t.clone()),
        None => data,
    };
    Ok((data, Some(manifest)))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, to_json(value)?).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_value(0.1), "1.0000000000000001e-1");
        assert_eq!(format_value(-3.0), "-3.0000000000000000e0");
    }

    #[test]
    fn malformed_line_is_named() {
        let err = dataset_from_csv("x1,x2\n1,2\n3,abc\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let err = dataset_from_csv("x1,x2\n1,2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn empty_body_rejected() {
        assert!(dataset_from_csv("x1,x2\n").is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = Dataset::from_rows(&[[0.1, -1e-300], [std::f64::consts::PI, 123456789.12345679]]).unwrap();
        let back = dataset_from_csv(&dataset_to_csv(&d)).unwrap();
        assert_eq!(back.values(), d.values());
    }
}
