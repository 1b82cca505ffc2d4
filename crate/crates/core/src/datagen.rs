//! Synthetic two-variable LiNGAM mixtures with ground truth attached.
//!
//! Class `c` (zero-based) is centered at `(c * s, -c * s)` for separation
//! `s`, has its own coefficient with magnitude in `[0.5, 1.5]`, and draws each
//! variable's disturbance family uniformly from the unit-variance Laplace,
//! uniform and Student-t(5) families. Rows are shuffled after generation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Direction};
use crate::rngdist::{sample_disturbance, DisturbanceKind, RngStream};

const KEY_CLASS: u64 = 0xc1a5;
const KEY_SHUFFLE: u64 = 0x5f1e;

/// Class proportions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mixing {
    #[default]
    Equal,
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_obs: usize,
    pub classes: usize,
    pub direction: Direction,
    pub class_mean_separation: f64,
    #[serde(default)]
    pub mixing: Mixing,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_obs: 100,
            classes: 2,
            direction: Direction::X1ToX2,
            class_mean_separation: 3.0,
            mixing: Mixing::Equal,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::invalid("class count must be at least 1"));
        }
        if self.n_obs < self.classes {
            return Err(Error::invalid(format!(
                "{} rows cannot cover {} classes",
                self.n_obs, self.classes
            )));
        }
        if !(self.class_mean_separation >= 0.0 && self.class_mean_separation.is_finite()) {
            return Err(Error::invalid("class mean separation must be non-negative"));
        }
        if let Mixing::Explicit(w) = &self.mixing {
            if w.len() != self.classes {
                return Err(Error::invalid("mixing vector length must equal class count"));
            }
            if w.iter().any(|&p| !(p >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("mixing vector must lie on the simplex"));
            }
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        match &self.mixing {
            Mixing::Equal => vec![1.0 / self.classes as f64; self.classes],
            Mixing::Explicit(w) => w.clone(),
        }
    }
}

/// What generated a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub direction: Direction,
    pub coefficients: Vec<f64>,
    pub means: Vec<[f64; 2]>,
    pub families: Vec<[DisturbanceKind; 2]>,
    pub class_sizes: Vec<usize>,
    /// Class of each row, after shuffling.
    pub labels: Vec<usize>,
}

/// Uniform over `[-1.5, -0.5] U [0.5, 1.5]`.
pub fn sample_connection_strength(rng: &mut RngStream) -> f64 {
    let u = rng.open01();
    // the two halves of [0, 1) map onto the two bands
    if u < 0.5 {
        -(0.5 + 2.0 * u)
    } else {
        0.5 + 2.0 * (u - 0.5)
    }
}

fn check_coefficient(b: f64) -> Result<()> {
    if (0.5..=1.5).contains(&b.abs()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("coefficient magnitude must lie in [0.5, 1.5], got {b}")))
    }
}

/// `count` rows of a single basic LiNGAM over two variables.
pub fn generate_class(
    count: usize,
    direction: Direction,
    b: f64,
    mu: [f64; 2],
    families: [DisturbanceKind; 2],
    rng: &mut RngStream,
) -> Result<Vec<[f64; 2]>> {
    check_coefficient(b)?;
    let (cause, effect) = match direction {
        Direction::X1ToX2 => (0, 1),
        Direction::X2ToX1 => (1, 0),
    };
    let rows = (0..count)
        .map(|_| {
            let e_cause = sample_disturbance(families[cause], rng);
            let e_effect = sample_disturbance(families[effect], rng);
            let mut x = [0.0; 2];
            x[cause] = mu[cause] + e_cause;
            x[effect] = mu[effect] + b * (x[cause] - mu[cause]) + e_effect;
            x
        })
        .collect();
    Ok(rows)
}

/// Splits `total` by `weights` with largest-remainder rounding; ties go to
/// the lower index.
pub fn allocate_counts(total: usize, weights: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..weights.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in by_remainder.iter().take(total.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

pub fn generate_mixture_dataset(config: &GenConfig) -> Result<Dataset> {
    config.validate()?;
    let l = config.classes;
    let s = config.class_mean_separation;
    let counts = allocate_counts(config.n_obs, &config.weights());

    let mut rows: Vec<([f64; 2], usize)> = Vec::with_capacity(config.n_obs);
    let mut coefficients = Vec::with_capacity(l);
    let mut means = Vec::with_capacity(l);
    let mut families = Vec::with_capacity(l);
    for (c, &count) in counts.iter().enumerate() {
        let mut rng = RngStream::new(config.seed, KEY_CLASS).derive(c as u64);
        let b = sample_connection_strength(&mut rng);
        let fam = [pick_family(&mut rng), pick_family(&mut rng)];
        let mu = [c as f64 * s, 0.0 - c as f64 * s];
        let class_rows = generate_class(count, config.direction, b, mu, fam, &mut rng)?;
        rows.extend(class_rows.into_iter().map(|r| (r, c)));
        coefficients.push(b);
        means.push(mu);
        families.push(fam);
    }
    rows.shuffle(&mut RngStream::new(config.seed, KEY_SHUFFLE));

    let labels = rows.iter().map(|&(_, c)| c).collect();
    let values = rows.iter().flat_map(|(r, _)| *r).collect();
    let truth = GroundTruth {
        direction: config.direction,
        coefficients,
        means,
        families,
        class_sizes: counts,
        labels,
    };
    Ok(Dataset::new(values, 2)?.with_truth(truth))
}

fn pick_family(rng: &mut RngStream) -> DisturbanceKind {
    DisturbanceKind::ALL[((rng.open01() * 3.0) as usize).min(2)]
}
