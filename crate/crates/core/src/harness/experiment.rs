use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_mixture_dataset, GenConfig, Mixing};
use crate::error::{Error, Result};
use crate::harness::io::{read_json, write_json};
use crate::inference::{decide_direction, InferenceConfig};
use crate::model::Direction;
use crate::priors::Hyperparams;
use crate::rngdist::{mix64, RngStream};

const INFER_STREAM: u64 = 1;
pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const JOURNAL_CONFIG_FILE: &str = "journal_config.json";
pub const RESULT_FILE: &str = "result.json";

/// Optional replacements for the default prior constants.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperOverrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub zeta: Option<f64>,
    pub chi: Option<f64>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
}

impl HyperOverrides {
    pub fn apply(&self, mut h: Hyperparams) -> Hyperparams {
        let fields = [
            (&mut h.alpha, self.alpha),
            (&mut h.beta, self.beta),
            (&mut h.eta, self.eta),
            (&mut h.zeta, self.zeta),
            (&mut h.chi, self.chi),
            (&mut h.epsilon, self.epsilon),
            (&mut h.tau, self.tau),
        ];
        for (slot, v) in fields {
            if let Some(v) = v {
                *slot = v;
            }
        }
        h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Sample sizes (table columns).
    pub sample_sizes: Vec<usize>,
    /// True class counts (table rows).
    pub class_counts: Vec<usize>,
    pub datasets_per_cell: usize,
    pub inference: InferenceConfig,
    pub hyper: HyperOverrides,
    pub class_mean_separation: f64,
    pub master_seed: u64,
    /// Journal and result directory; `None` keeps everything in memory.
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sample_sizes: vec![50, 100, 500],
            class_counts: vec![2, 4, 6],
            datasets_per_cell: 100,
            inference: InferenceConfig::default(),
            hyper: HyperOverrides::default(),
            class_mean_separation: 3.0,
            master_seed: 0,
            output_dir: None,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.datasets_per_cell == 0 {
            return Err(Error::invalid("datasets per cell must be at least 1"));
        }
        if self.sample_sizes.iter().chain(&self.class_counts).any(|&v| v == 0) {
            return Err(Error::invalid("grid entries must be positive"));
        }
        for &n in &self.sample_sizes {
            for &l in &self.class_counts {
                if n < l {
                    return Err(Error::invalid(format!("cell N={n}, l={l} has fewer rows than classes")));
                }
            }
        }
        if self.inference.draws < 2 {
            return Err(Error::invalid("need at least 2 Monte Carlo draws"));
        }
        self.hyper.apply(Hyperparams::default()).validate_scalars()
    }

    /// Cells in table order: class count major, sample size minor.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.class_counts
            .iter()
            .flat_map(|&l| self.sample_sizes.iter().map(move |&n| (n, l)))
            .collect()
    }

    /// Everything that influences results; journals from a different
    /// fingerprint are rejected.
    fn fingerprint(&self) -> ExperimentConfig {
        ExperimentConfig {
            output_dir: None,
            threads: 0,
            datasets_per_cell: 0,
            sample_sizes: Vec::new(),
            class_counts: Vec::new(),
            ..self.clone()
        }
    }
}

/// Seed for dataset `index` of cell `(n_obs, classes)`.
pub fn child_seed(master_seed: u64, n_obs: usize, classes: usize, index: usize) -> u64 {
    [n_obs as u64, classes as u64, index as u64]
        .iter()
        .fold(mix64(master_seed), |h, &k| mix64(h ^ mix64(k)))
}

/// Everything needed to rerun one dataset in isolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub n_obs: usize,
    pub classes: usize,
    pub index: usize,
    pub child_seed: u64,
    pub truth: Direction,
    pub decision: Direction,
    pub correct: bool,
    pub posterior_forward: f64,
    pub selected_classes: usize,
    pub concentrations: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n_obs: usize,
    pub classes: usize,
    pub correct: usize,
    pub total: usize,
}

impl CellSummary {
    pub fn proportion(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub cells: Vec<CellSummary>,
    #[serde(default)]
    pub records: Vec<DatasetRecord>,
    #[serde(default)]
    pub config: Option<ExperimentConfig>,
    pub version: String,
}

impl ExperimentResult {
    pub fn from_cells(cells: Vec<CellSummary>) -> Self {
        ExperimentResult {
            cells,
            records: Vec::new(),
            config: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Runs the grid on a dedicated pool sized by `config.threads`.
pub fn run_experiment_grid(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_experiment_grid_in(config, |_| {}))
}

/// Runs the grid on the current rayon pool, calling `on_cell` as each cell
/// completes.
pub fn run_experiment_grid_in(
    config: &ExperimentConfig,
    mut on_cell: impl FnMut(&CellSummary),
) -> Result<ExperimentResult> {
    config.validate()?;
    let hyper = config.hyper.apply(Hyperparams::default());
    let mut journal = match &config.output_dir {
        Some(dir) => Some(Journal::open(dir, config)?),
        None => None,
    };

    let mut cells = Vec::new();
    let mut records = Vec::new();
    for (n_obs, classes) in config.cells() {
        let done: BTreeMap<usize, DatasetRecord> = journal
            .as_ref()
            .map(|j| j.completed(n_obs, classes))
            .unwrap_or_default();
        let pending: Vec<usize> = (0..config.datasets_per_cell)
            .filter(|i| !done.contains_key(i))
            .collect();
        let fresh = pending
            .par_iter()
            .map(|&index| run_one(config, &hyper, n_obs, classes, index))
            .collect::<Result<Vec<_>>>()?;
        if let Some(j) = journal.as_mut() {
            j.append(&fresh)?;
        }
        let mut cell_records: Vec<DatasetRecord> = done
            .into_values()
            .filter(|r| r.index < config.datasets_per_cell)
            .chain(fresh)
            .collect();
        cell_records.sort_by_key(|r| r.index);
        let summary = CellSummary {
            n_obs,
            classes,
            correct: cell_records.iter().filter(|r| r.correct).count(),
            total: cell_records.len(),
        };
        on_cell(&summary);
        cells.push(summary);
        records.extend(cell_records);
    }
    let result = ExperimentResult {
        cells,
        records,
        config: Some(ExperimentConfig {
            output_dir: None,
            threads: 0,
            ..config.clone()
        }),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    if let Some(dir) = &config.output_dir {
        write_json(&dir.join(RESULT_FILE), &result)?;
    }
    Ok(result)
}

fn run_one(
    config: &ExperimentConfig,
    hyper: &Hyperparams,
    n_obs: usize,
    classes: usize,
    index: usize,
) -> Result<DatasetRecord> {
    let seed = child_seed(config.master_seed, n_obs, classes, index);
    let truth = Direction::X1ToX2;
    let data = generate_mixture_dataset(&GenConfig {
        n_obs,
        classes,
        direction: truth,
        class_mean_separation: config.class_mean_separation,
        mixing: Mixing::Equal,
        seed,
    })?;
    let decision = decide_direction(&data, hyper, &config.inference, &RngStream::new(seed, INFER_STREAM))?;
    Ok(DatasetRecord {
        n_obs,
        classes,
        index,
        child_seed: seed,
        truth,
        decision: decision.direction,
        correct: decision.direction == truth,
        posterior_forward: decision.posterior_forward(),
        selected_classes: decision.report.selected_classes,
        concentrations: decision.report.hyper.a.clone(),
    })
}

/// Append-only record of finished datasets.
struct Journal {
    path: PathBuf,
    records: Vec<DatasetRecord>,
}

impl Journal {
    fn open(dir: &Path, config: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let fp_path = dir.join(JOURNAL_CONFIG_FILE);
        let fingerprint = config.fingerprint();
        if fp_path.exists() {
            let existing: ExperimentConfig = read_json(&fp_path)?;
            if existing != fingerprint {
                return Err(Error::invalid(format!(
                    "{} was written by a different configuration",
                    dir.join(JOURNAL_FILE).display()
                )));
            }
        } else {
            write_json(&fp_path, &fingerprint)?;
        }
        let path = dir.join(JOURNAL_FILE);
        let mut records = Vec::new();
        if path.exists() {
            let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            for (k, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<DatasetRecord>(&line) {
                    Ok(r) => records.push(r),
                    // a torn final line from an interrupted write is dropped
                    Err(_) => log_torn_line(&path, k + 1),
                }
            }
        }
        Ok(Journal { path, records })
    }

    fn completed(&self, n_obs: usize, classes: usize) -> BTreeMap<usize, DatasetRecord> {
        self.records
            .iter()
            .filter(|r| r.n_obs == n_obs && r.classes == classes)
            .map(|r| (r.index, r.clone()))
            .collect()
    }

    fn append(&mut self, records: &[DatasetRecord]) -> Result<()> {
        let mut sorted = records.to_vec();
        sorted.sort_by_key(|r| r.index);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        let mut buf = String::new();
        for r in &sorted {
            buf.push_str(&serde_json::to_string(r)?);
            buf.push('\n');
        }
        file.write_all(buf.as_bytes())
            .and_then(|_| file.sync_data())
            .map_err(|e| Error::io(&self.path, e))?;
        self.records.extend(sorted);
        Ok(())
    }
}

fn log_torn_line(path: &Path, line: usize) {
    eprintln!("warning: ignoring unreadable journal line {line} in {}", path.display());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_seeds_differ_across_cells() {
        let a = child_seed(1, 100, 2, 0);
        assert_eq!(a, child_seed(1, 100, 2, 0));
        assert_ne!(a, child_seed(1, 100, 2, 1));
        assert_ne!(a, child_seed(1, 50, 2, 0));
        assert_ne!(a, child_seed(2, 100, 2, 0));
    }

    #[test]
    fn overrides_apply() {
        let h = HyperOverrides {
            tau: Some(2.0),
            ..HyperOverrides::default()
        }
        .apply(Hyperparams::default());
        assert_eq!(h.tau, 2.0);
        assert_eq!(h.alpha, 3.0);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::default();
        c.validate().unwrap();
        c.datasets_per_cell = 0;
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            sample_sizes: vec![3],
            class_counts: vec![4],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn cell_order_is_row_major() {
        let c = ExperimentConfig {
            sample_sizes: vec![50, 100],
            class_counts: vec![2, 4],
            ..ExperimentConfig::default()
        };
        assert_eq!(c.cells(), vec![(50, 2), (100, 2), (50, 4), (100, 4)]);
    }
}
