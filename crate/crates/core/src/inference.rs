//! Bayesian comparison of DAG hypotheses with Monte Carlo marginal likelihoods.
//!
//! The evidence `p(D | G)` is estimated by plain Monte Carlo over prior
//! draws: `log p(D | G) ~ logsumexp_k L_k - log K` where `L_k` is the dataset
//! log-likelihood under the `k`-th draw.
//!
//! Draws are split into fixed-size blocks, each with its own derived
//! [`RngStream`]. Blocks are evaluated in parallel and reduced in block
//! order, so results do not depend on the thread count. Block streams are
//! keyed by class count and block only: every hypothesis sees the same
//! underlying random numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    enumerate_pairwise_hypotheses, log_sum_exp, DagHypothesis, Dataset, Direction, MixtureKernel,
};
use crate::priors::{fit_phi_with, sample_parameters_unchecked, GmmOptions, Hyperparams};
use crate::rngdist::RngStream;

/// Draws per parallel block. Changing it changes the random numbers used.
pub const BLOCK_SIZE: usize = 500;

const KEY_CONCENTRATION: u64 = 0xa11;
const KEY_PHI: u64 = 0xf1;
const KEY_MONTE_CARLO: u64 = 0x3c;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    pub dag_id: usize,
    pub classes: usize,
    pub draws: usize,
    pub log_value: f64,
    /// Delta-method standard error of `log_value`.
    pub std_error_log: f64,
}

impl MarginalEstimate {
    /// Summarizes per-draw log-likelihoods.
    pub fn from_log_likelihoods(dag_id: usize, classes: usize, lls: &[f64]) -> Result<Self> {
        let k = lls.len();
        if k < 2 {
            return Err(Error::invalid(format!("need at least 2 draws, got {k}")));
        }
        let m = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let kf = k as f64;
        if !m.is_finite() {
            return Ok(MarginalEstimate {
                dag_id,
                classes,
                draws: k,
                log_value: m,
                std_error_log: 0.0,
            });
        }
        let scaled: Vec<f64> = lls.iter().map(|&x| (x - m).exp()).collect();
        let mean = scaled.iter().sum::<f64>() / kf;
        let var = scaled.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (kf - 1.0);
        Ok(MarginalEstimate {
            dag_id,
            classes,
            draws: k,
            log_value: log_sum_exp(lls) - kf.ln(),
            std_error_log: (var / kf).sqrt() / mean,
        })
    }
}

/// How the class count is chosen across hypotheses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// The single (hypothesis, l) cell with the largest log evidence fixes
    /// `l*`; hypotheses are compared at `l*`.
    #[default]
    JointMax,
    /// Each hypothesis is scored at its own best class count.
    PerHypothesis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    /// Monte Carlo draws per (hypothesis, class count) cell.
    pub draws: usize,
    pub selection: Selection,
    /// Overrides the `ceil(2 ln N)` cap on candidate class counts.
    pub max_classes: Option<usize>,
    pub gmm: GmmOptions,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            draws: 10_000,
            selection: Selection::JointMax,
            max_classes: None,
            gmm: GmmOptions::default(),
        }
    }
}

/// Largest class count tried for `n_obs` rows: `ceil(2 ln N)`, at least 1.
pub fn class_count_cap(n_obs: usize) -> usize {
    let cap = (2.0 * (n_obs.max(1) as f64).ln()).ceil() as usize;
    cap.clamp(1, n_obs.max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    /// Posterior probability per hypothesis, in input order.
    pub posteriors: Vec<f64>,
    pub hypothesis_prior: Vec<f64>,
    pub selected: usize,
    pub selected_classes: usize,
    /// Every (hypothesis, l) estimate, hypothesis-major.
    pub grid: Vec<MarginalEstimate>,
    pub hyper: Hyperparams,
    /// `phi` fitted for each candidate class count `1..=max`.
    pub phi_by_classes: Vec<Vec<Vec<f64>>>,
    pub config: InferenceConfig,
    pub seed: u64,
    pub stream_id: u64,
}

/// Per-draw dataset log-likelihoods for `draws` prior draws.
///
/// The first `K` values are the same whatever the total, so estimates with
/// more draws extend estimates with fewer.
pub fn log_likelihood_draws(
    data: &Dataset,
    dag: &DagHypothesis,
    l: usize,
    hyper: &Hyperparams,
    draws: usize,
    rng: &RngStream,
) -> Result<Vec<f64>> {
    if data.n_vars() != dag.n_vars() {
        return Err(Error::invalid("dataset and hypothesis disagree on variable count"));
    }
    hyper.validate(l, dag.n_vars())?;
    let blocks = draws.div_ceil(BLOCK_SIZE);
    let per_block: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng.derive(b as u64);
            let count = BLOCK_SIZE.min(draws - b * BLOCK_SIZE);
            (0..count)
                .map(|_| {
                    let params = sample_parameters_unchecked(hyper, dag, l, &mut stream);
                    MixtureKernel::new_unchecked(dag, &params).log_likelihood(data)
                })
                .collect()
        })
        .collect();
    Ok(per_block.concat())
}

/// Monte Carlo estimate of `log p(D | dag)` with `l` latent classes.
pub fn log_marginal_likelihood(
    data: &Dataset,
    dag: &DagHypothesis,
    l: usize,
    hyper: &Hyperparams,
    draws: usize,
    rng: &RngStream,
) -> Result<MarginalEstimate> {
    if draws < 2 {
        return Err(Error::invalid(format!("need at least 2 draws, got {draws}")));
    }
    let lls = log_likelihood_draws(data, dag, l, hyper, draws, rng)?;
    MarginalEstimate::from_log_likelihoods(0, l, &lls)
}

/// Normalized `P(G_m | D)` from log evidences and a prior over hypotheses.
pub fn posterior_over_hypotheses(estimates: &[MarginalEstimate], prior: &[f64]) -> Result<Vec<f64>> {
    if estimates.len() != prior.len() || prior.is_empty() {
        return Err(Error::invalid(format!(
            "{} estimates for {} prior entries",
            estimates.len(),
            prior.len()
        )));
    }
    if prior.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::invalid("hypothesis prior must be non-negative"));
    }
    let total: f64 = prior.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("hypothesis prior has no mass"));
    }
    let log_post: Vec<f64> = estimates
        .iter()
        .zip(prior)
        .map(|(e, &p)| if p > 0.0 { e.log_value + p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let norm = log_sum_exp(&log_post);
    if !norm.is_finite() {
        return Err(Error::invalid("every hypothesis has zero posterior mass"));
    }
    let mut post: Vec<f64> = log_post.iter().map(|lp| (lp - norm).exp()).collect();
    let s: f64 = post.iter().sum();
    post.iter_mut().for_each(|p| *p /= s);
    Ok(post)
}

fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Scores every hypothesis at every class count `1..=cap` and reports the
/// posterior at the selected class count.
///
/// `hyper_base.a` must hold at least `cap` concentrations; `phi` is refit
/// for each class count and any value in `hyper_base.phi` is ignored.
pub fn select_model(
    data: &Dataset,
    hypotheses: &[DagHypothesis],
    hypothesis_prior: &[f64],
    hyper_base: &Hyperparams,
    config: &InferenceConfig,
    rng: &RngStream,
) -> Result<PosteriorReport> {
    if hypotheses.is_empty() {
        return Err(Error::invalid("no hypotheses to compare"));
    }
    if hypothesis_prior.len() != hypotheses.len() {
        return Err(Error::invalid("hypothesis prior length does not match hypotheses"));
    }
    if config.draws < 2 {
        return Err(Error::invalid(format!("need at least 2 draws, got {}", config.draws)));
    }
    if let Some(h) = hypotheses.iter().find(|h| h.n_vars() != data.n_vars()) {
        return Err(Error::invalid(format!(
            "hypothesis over {} variables for a {}-variable dataset",
            h.n_vars(),
            data.n_vars()
        )));
    }
    hyper_base.validate_scalars()?;
    let cap = config
        .max_classes
        .unwrap_or_else(|| class_count_cap(data.n_obs()));
    if cap == 0 || cap > data.n_obs() {
        return Err(Error::invalid(format!(
            "class cap {cap} must lie in 1..={}",
            data.n_obs()
        )));
    }
    if hyper_base.a.len() < cap {
        return Err(Error::invalid(format!(
            "{} dirichlet concentrations for up to {cap} classes",
            hyper_base.a.len()
        )));
    }

    let mut phi_by_classes = Vec::with_capacity(cap);
    // grid[h][l - 1]
    let mut grid = vec![Vec::with_capacity(cap); hypotheses.len()];
    for l in 1..=cap {
        let mut phi_rng = rng.derive_path(&[KEY_PHI, l as u64]);
        let phi = fit_phi_with(data, l, &config.gmm, &mut phi_rng)?;
        let hyper = hyper_base.clone().with_classes(hyper_base.a.clone(), phi.clone());
        phi_by_classes.push(phi);
        let mc = rng.derive_path(&[KEY_MONTE_CARLO, l as u64]);
        for (h, dag) in hypotheses.iter().enumerate() {
            let lls = log_likelihood_draws(data, dag, l, &hyper, config.draws, &mc)?;
            grid[h].push(MarginalEstimate::from_log_likelihoods(h, l, &lls)?);
        }
    }

    let (chosen, selected_classes): (Vec<MarginalEstimate>, usize) = match config.selection {
        Selection::JointMax => {
            let flat = grid.iter().flatten().map(|e| e.log_value);
            let best = argmax_first(flat);
            let l_star = best % cap + 1;
            (grid.iter().map(|row| row[l_star - 1].clone()).collect(), l_star)
        }
        Selection::PerHypothesis => {
            let chosen: Vec<MarginalEstimate> = grid
                .iter()
                .map(|row| row[argmax_first(row.iter().map(|e| e.log_value))].clone())
                .collect();
            (chosen, 0)
        }
    };
    let posteriors = posterior_over_hypotheses(&chosen, hypothesis_prior)?;
    let selected = argmax_first(posteriors.iter().copied());
    let selected_classes = if selected_classes == 0 {
        chosen[selected].classes
    } else {
        selected_classes
    };

    Ok(PosteriorReport {
        posteriors,
        hypothesis_prior: hypothesis_prior.to_vec(),
        selected,
        selected_classes,
        grid: grid.into_iter().flatten().collect(),
        hyper: Hyperparams {
            phi: Vec::new(),
            ..hyper_base.clone()
        },
        phi_by_classes,
        config: config.clone(),
        seed: rng.seed(),
        stream_id: rng.stream_id(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionDecision {
    pub direction: Direction,
    pub report: PosteriorReport,
}

impl DirectionDecision {
    /// Posterior probability of `x1 -> x2`.
    pub fn posterior_forward(&self) -> f64 {
        self.report.posteriors[0]
    }
}

/// Concentrations for up to `count` classes, each drawn uniformly from {3, 5, 7}.
pub fn draw_concentrations(count: usize, rng: &RngStream) -> Vec<f64> {
    let mut stream = rng.derive(KEY_CONCENTRATION);
    (0..count)
        .map(|_| [3.0, 5.0, 7.0][((stream.open01() * 3.0) as usize).min(2)])
        .collect()
}

/// Decides between `x1 -> x2` and `x2 -> x1` under equal prior odds.
///
/// Any concentrations in `hyper_base.a` are replaced by fresh draws from
/// {3, 5, 7}, recorded in the report.
pub fn decide_direction(
    data: &Dataset,
    hyper_base: &Hyperparams,
    config: &InferenceConfig,
    rng: &RngStream,
) -> Result<DirectionDecision> {
    if data.n_vars() != 2 {
        return Err(Error::invalid(format!(
            "direction inference needs exactly 2 variables, got {}",
            data.n_vars()
        )));
    }
    let cap = config
        .max_classes
        .unwrap_or_else(|| class_count_cap(data.n_obs()));
    let hyper = Hyperparams {
        a: draw_concentrations(cap, rng),
        ..hyper_base.clone()
    };
    let hypotheses = enumerate_pairwise_hypotheses();
    let report = select_model(data, &hypotheses, &[0.5, 0.5], &hyper, config, rng)?;
    let direction = hypotheses[report.selected]
        .direction()
        .expect("pairwise hypotheses have a direction");
    Ok(DirectionDecision { direction, report })
}
