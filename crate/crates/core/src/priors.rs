//! Prior hierarchy over mixture parameters and the EM fit that centers the
//! class-mean priors.
//!
//! One joint prior draw is:
//!
//! * `v^2 ~ InvGamma(chi, epsilon)`, shared by every coefficient
//! * `w ~ Dirichlet(a_1..a_l)`
//! * per class and variable: `mu ~ N(phi, tau^2)`, `sigma^2 ~ InvGamma(alpha, beta)`,
//!   `lambda ~ InvGamma(eta, zeta)`
//! * per class and edge: `b ~ N(0, v^2)`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_sum_exp, ClassParams, DagHypothesis, Dataset, MixtureParams};
use crate::rngdist::{
    sample_dirichlet, sample_gaussian, sample_inverse_gamma, RngStream,
};

/// Fixed prior constants plus the per-class Dirichlet concentrations and
/// mean-prior centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Dirichlet concentration per class. May be longer than the class
    /// count in use; the first `l` entries apply.
    pub a: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub zeta: f64,
    pub chi: f64,
    pub epsilon: f64,
    pub tau: f64,
    /// Prior centers `phi[c][i]` for the mean of variable `i` in class `c`.
    pub phi: Vec<Vec<f64>>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            a: Vec::new(),
            alpha: 3.0,
            beta: 3.0,
            eta: 3.0,
            zeta: 3.0,
            chi: 3.0,
            epsilon: 3.0,
            tau: 0.5,
            phi: Vec::new(),
        }
    }
}

impl Hyperparams {
    pub fn with_classes(mut self, a: Vec<f64>, phi: Vec<Vec<f64>>) -> Self {
        self.a = a;
        self.phi = phi;
        self
    }

    pub fn validate_scalars(&self) -> Result<()> {
        let named = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("eta", self.eta),
            ("zeta", self.zeta),
            ("chi", self.chi),
            ("epsilon", self.epsilon),
            ("tau", self.tau),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("hyperparameter {name} must be positive, got {v}")));
            }
        }
        if self.a.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("dirichlet concentrations must be positive"));
        }
        Ok(())
    }

    /// Checks the hyperparameters can drive an `l`-class draw over `n` variables.
    pub fn validate(&self, l: usize, n: usize) -> Result<()> {
        self.validate_scalars()?;
        if l == 0 {
            return Err(Error::invalid("class count must be at least 1"));
        }
        if self.a.len() < l {
            return Err(Error::invalid(format!(
                "{} dirichlet concentrations for {l} classes",
                self.a.len()
            )));
        }
        if self.phi.len() != l || self.phi.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!("phi must be {l} x {n}")));
        }
        if self.phi.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("phi must be finite"));
        }
        Ok(())
    }
}

/// EM settings for the diagonal Gaussian mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmOptions {
    /// Stop when the relative log-likelihood change drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    /// Variance floor as a fraction of each column's variance.
    pub variance_floor: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions {
            tol: 1e-6,
            max_iter: 500,
            restarts: 5,
            variance_floor: 1e-6,
        }
    }
}

/// Result of a diagonal-covariance Gaussian mixture fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Log-likelihood at the start of every iteration of the winning restart.
    pub log_likelihood_trace: Vec<f64>,
    /// Some variance hit the floor.
    pub clamped: bool,
}

impl GmmFit {
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Fits an `l`-component diagonal Gaussian mixture by EM with default options.
pub fn gmm_em(data: &Dataset, l: usize, tol: f64, max_iter: usize, rng: &mut RngStream) -> Result<GmmFit> {
    let opts = GmmOptions {
        tol,
        max_iter,
        ..GmmOptions::default()
    };
    gmm_em_with(data, l, &opts, rng)
}

/// EM with k-means++ seeding, keeping the best of `opts.restarts` runs.
pub fn gmm_em_with(data: &Dataset, l: usize, opts: &GmmOptions, rng: &mut RngStream) -> Result<GmmFit> {
    let n_obs = data.n_obs();
    if l == 0 {
        return Err(Error::invalid("class count must be at least 1"));
    }
    if n_obs < l {
        return Err(Error::invalid(format!("{n_obs} observations cannot support {l} components")));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("EM needs positive tolerance and iteration budget"));
    }
    let n = data.n_vars();
    let (col_mean, col_var) = column_moments(data);
    let floor: Vec<f64> = col_var
        .iter()
        .map(|v| (v * opts.variance_floor).max(1e-12))
        .collect();

    if l == 1 {
        let variances: Vec<f64> = col_var.iter().zip(&floor).map(|(v, f)| v.max(*f)).collect();
        let clamped = col_var.iter().zip(&floor).any(|(v, f)| v < f);
        let mut fit = GmmFit {
            means: vec![col_mean],
            variances: vec![variances],
            weights: vec![1.0],
            log_likelihood_trace: Vec::new(),
            clamped,
        };
        let ll = e_step(data, &fit, &mut vec![0.0; n_obs]);
        fit.log_likelihood_trace.push(ll);
        return Ok(fit);
    }

    let mut best: Option<GmmFit> = None;
    for _ in 0..opts.restarts.max(1) {
        let means = kmeans_pp_seeds(data, l, rng);
        let init = GmmFit {
            means,
            variances: vec![col_var.iter().zip(&floor).map(|(v, f)| v.max(*f)).collect(); l],
            weights: vec![1.0 / l as f64; l],
            log_likelihood_trace: Vec::new(),
            clamped: false,
        };
        let fit = run_em(data, init, &floor, opts);
        if best
            .as_ref()
            .is_none_or(|b| fit.log_likelihood() > b.log_likelihood())
        {
            best = Some(fit);
        }
    }
    debug_assert!(best.as_ref().is_some_and(|b| b.means.iter().all(|m| m.len() == n)));
    Ok(best.expect("at least one restart"))
}

fn column_moments(data: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let n = data.n_vars();
    let count = data.n_obs() as f64;
    let mut mean = vec![0.0; n];
    for r in data.rows() {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; n];
    for r in data.rows() {
        for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= count);
    (mean, var)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp_seeds(data: &Dataset, l: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
    let n_obs = data.n_obs();
    let first = (rng.open01() * n_obs as f64) as usize;
    let mut centers = vec![data.row(first.min(n_obs - 1)).to_vec()];
    let mut d2: Vec<f64> = data.rows().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < l {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.open01() * total;
            let mut acc = 0.0;
            let mut idx = n_obs - 1;
            for (s, &d) in d2.iter().enumerate() {
                acc += d;
                if acc >= target && d > 0.0 {
                    idx = s;
                    break;
                }
            }
            idx
        } else {
            ((rng.open01() * n_obs as f64) as usize).min(n_obs - 1)
        };
        let c = data.row(pick).to_vec();
        for (d, r) in d2.iter_mut().zip(data.rows()) {
            *d = d.min(sq_dist(r, &c));
        }
        centers.push(c);
    }
    centers
}

/// Fills `resp` (row-major N x l) with responsibilities and returns the
/// log-likelihood of the current parameters.
fn e_step(data: &Dataset, fit: &GmmFit, resp: &mut [f64]) -> f64 {
    let l = fit.weights.len();
    let consts: Vec<f64> = (0..l)
        .map(|c| {
            fit.weights[c].ln()
                - 0.5 * fit.variances[c].iter().map(|v| LN_2PI + v.ln()).sum::<f64>()
        })
        .collect();
    let mut total = 0.0;
    for (r, row_resp) in data.rows().zip(resp.chunks_exact_mut(l)) {
        for c in 0..l {
            let quad: f64 = r
                .iter()
                .zip(&fit.means[c])
                .zip(&fit.variances[c])
                .map(|((x, m), v)| (x - m) * (x - m) / v)
                .sum();
            row_resp[c] = consts[c] - 0.5 * quad;
        }
        let lse = log_sum_exp(row_resp);
        for v in row_resp.iter_mut() {
            *v = (*v - lse).exp();
        }
        total += lse;
    }
    total
}

fn m_step(data: &Dataset, resp: &[f64], floor: &[f64], fit: &mut GmmFit) {
    let l = fit.weights.len();
    let n = data.n_vars();
    let n_obs = data.n_obs() as f64;
    let mut nk = vec![0.0; l];
    let mut sums = vec![vec![0.0; n]; l];
    for (r, rr) in data.rows().zip(resp.chunks_exact(l)) {
        for c in 0..l {
            nk[c] += rr[c];
            for (s, x) in sums[c].iter_mut().zip(r) {
                *s += rr[c] * x;
            }
        }
    }
    for c in 0..l {
        if nk[c] <= f64::MIN_POSITIVE {
            // empty component keeps its previous location and shape
            fit.weights[c] = f64::MIN_POSITIVE;
            continue;
        }
        fit.weights[c] = nk[c] / n_obs;
        for (m, s) in fit.means[c].iter_mut().zip(&sums[c]) {
            *m = s / nk[c];
        }
    }
    let mut sq = vec![vec![0.0; n]; l];
    for (r, rr) in data.rows().zip(resp.chunks_exact(l)) {
        for c in 0..l {
            for ((acc, x), m) in sq[c].iter_mut().zip(r).zip(&fit.means[c]) {
                *acc += rr[c] * (x - m) * (x - m);
            }
        }
    }
    for c in 0..l {
        if nk[c] <= f64::MIN_POSITIVE {
            continue;
        }
        for ((v, acc), f) in fit.variances[c].iter_mut().zip(&sq[c]).zip(floor) {
            let raw = acc / nk[c];
            if raw < *f || raw.is_nan() {
                *v = *f;
                fit.clamped = true;
            } else {
                *v = raw;
            }
        }
    }
    let total: f64 = fit.weights.iter().sum();
    fit.weights.iter_mut().for_each(|w| *w /= total);
}

fn run_em(data: &Dataset, mut fit: GmmFit, floor: &[f64], opts: &GmmOptions) -> GmmFit {
    let mut resp = vec![0.0; data.n_obs() * fit.weights.len()];
    for _ in 0..opts.max_iter {
        let ll = e_step(data, &fit, &mut resp);
        let converged = fit
            .log_likelihood_trace
            .last()
            .is_some_and(|&prev| (ll - prev).abs() <= opts.tol * prev.abs().max(1.0));
        fit.log_likelihood_trace.push(ll);
        if converged {
            break;
        }
        m_step(data, &resp, floor, &mut fit);
    }
    fit
}

/// Prior centers for the class means: GMM component means sorted by
/// first coordinate (remaining coordinates break ties).
pub fn fit_phi(data: &Dataset, l: usize, rng: &mut RngStream) -> Result<Vec<Vec<f64>>> {
    fit_phi_with(data, l, &GmmOptions::default(), rng)
}

pub fn fit_phi_with(
    data: &Dataset,
    l: usize,
    opts: &GmmOptions,
    rng: &mut RngStream,
) -> Result<Vec<Vec<f64>>> {
    let mut means = gmm_em_with(data, l, opts, rng)?.means;
    means.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(means)
}

/// One joint draw of all mixture parameters from the prior.
///
/// Variables are visited in causal order so that mirrored hypotheses on
/// mirrored data consume identical random numbers for corresponding roles.
pub fn sample_parameters(
    hyper: &Hyperparams,
    dag: &DagHypothesis,
    l: usize,
    rng: &mut RngStream,
) -> Result<MixtureParams> {
    hyper.validate(l, dag.n_vars())?;
    Ok(sample_parameters_unchecked(hyper, dag, l, rng))
}

pub(crate) fn sample_parameters_unchecked(
    hyper: &Hyperparams,
    dag: &DagHypothesis,
    l: usize,
    rng: &mut RngStream,
) -> MixtureParams {
    let n = dag.n_vars();
    let tau2 = hyper.tau * hyper.tau;
    // validated upstream, so the samplers cannot fail
    let ok = |r: Result<f64>| r.expect("validated hyperparameters");
    let v2 = ok(sample_inverse_gamma(hyper.chi, hyper.epsilon, rng));
    let weights = sample_dirichlet(&hyper.a[..l], rng).expect("validated concentrations");
    let mut classes = Vec::with_capacity(l);
    for c in 0..l {
        let mut mu = vec![0.0; n];
        let mut sigma = vec![0.0; n];
        let mut lambda = vec![0.0; n];
        for &i in dag.order() {
            mu[i] = ok(sample_gaussian(hyper.phi[c][i], tau2, rng));
            sigma[i] = ok(sample_inverse_gamma(hyper.alpha, hyper.beta, rng)).sqrt();
            lambda[i] = ok(sample_inverse_gamma(hyper.eta, hyper.zeta, rng));
        }
        let b = (0..dag.n_edges())
            .map(|_| ok(sample_gaussian(0.0, v2, rng)))
            .collect();
        classes.push(ClassParams { b, mu, sigma, lambda });
    }
    MixtureParams { weights, classes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Direction;

    fn blobs(rng: &mut RngStream, per: usize) -> Dataset {
        let mut rows = Vec::new();
        for s in 0..2 * per {
            let c = if s < per { -5.0 } else { 5.0 };
            rows.push([
                c + rng.standard_normal(),
                -c + rng.standard_normal(),
            ]);
        }
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn one_component_is_closed_form() {
        let d = Dataset::from_rows(&[[1.0, 2.0], [3.0, 6.0], [5.0, 1.0]]).unwrap();
        let fit = gmm_em(&d, 1, 1e-6, 500, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(fit.weights, vec![1.0]);
        assert!((fit.means[0][0] - 3.0).abs() < 1e-12);
        assert!((fit.means[0][1] - 3.0).abs() < 1e-12);
        assert!((fit.variances[0][0] - 8.0 / 3.0).abs() < 1e-12);
        assert!((fit.variances[0][1] - 14.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_rows() {
        let d = Dataset::from_rows(&[[1.0, 2.0], [3.0, 6.0]]).unwrap();
        assert!(gmm_em(&d, 3, 1e-6, 500, &mut RngStream::new(0, 0)).is_err());
        assert!(gmm_em(&d, 0, 1e-6, 500, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn separated_blobs_recovered() {
        let mut rng = RngStream::new(11, 0);
        let d = blobs(&mut rng, 250);
        let phi = fit_phi(&d, 2, &mut RngStream::new(11, 1)).unwrap();
        assert!((phi[0][0] + 5.0).abs() < 0.2 && (phi[0][1] - 5.0).abs() < 0.2);
        assert!((phi[1][0] - 5.0).abs() < 0.2 && (phi[1][1] + 5.0).abs() < 0.2);
    }

    #[test]
    fn duplicate_points_do_not_produce_nan() {
        let d = Dataset::from_rows(&[[1.0, 1.0]; 10]).unwrap();
        let fit = gmm_em(&d, 3, 1e-6, 50, &mut RngStream::new(0, 0)).unwrap();
        assert!(fit.clamped);
        assert!(fit.means.iter().flatten().all(|v| v.is_finite()));
        assert!(fit.variances.iter().flatten().all(|v| *v > 0.0));
        assert!(fit.log_likelihood_trace.iter().all(|v| !v.is_nan()));
    }

    #[test]
    fn phi_deterministic_and_shaped() {
        let mut rng = RngStream::new(12, 0);
        let d = blobs(&mut rng, 40);
        let a = fit_phi(&d, 3, &mut RngStream::new(5, 5)).unwrap();
        let b = fit_phi(&d, 3, &mut RngStream::new(5, 5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|r| r.len() == 2));
        assert!(a.windows(2).all(|w| w[0][0] <= w[1][0]));
    }

    #[test]
    fn parameters_single_class_weight_is_one() {
        let dag = DagHypothesis::pair(Direction::X1ToX2);
        let h = Hyperparams::default().with_classes(vec![3.0], vec![vec![0.0, 0.0]]);
        let p = sample_parameters(&h, &dag, 1, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(p.weights, vec![1.0]);
        p.validate(&dag).unwrap();
    }

    #[test]
    fn pinned_means_follow_phi() {
        let dag = DagHypothesis::pair(Direction::X1ToX2);
        let mut h = Hyperparams::default().with_classes(vec![3.0, 5.0], vec![vec![1.0, -2.0], vec![4.0, 0.5]]);
        h.tau = 1e-8;
        let mut rng = RngStream::new(1, 0);
        for _ in 0..10_000 {
            let p = sample_parameters(&h, &dag, 2, &mut rng).unwrap();
            for (c, cls) in p.classes.iter().enumerate() {
                for i in 0..2 {
                    assert!((cls.mu[i] - h.phi[c][i]).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn sigma_squared_prior_mean() {
        let dag = DagHypothesis::pair(Direction::X1ToX2);
        let h = Hyperparams::default().with_classes(vec![3.0], vec![vec![0.0, 0.0]]);
        let mut rng = RngStream::new(2, 0);
        let k = 100_000;
        let mut acc = 0.0;
        for _ in 0..k {
            let p = sample_parameters(&h, &dag, 1, &mut rng).unwrap();
            acc += p.classes[0].sigma[0].powi(2);
        }
        assert!((acc / k as f64 - 1.5).abs() < 0.05);
    }

    #[test]
    fn hyperparams_validation() {
        let h = Hyperparams::default();
        assert!(h.validate(1, 2).is_err());
        let h = h.with_classes(vec![3.0], vec![vec![0.0, 0.0]]);
        h.validate(1, 2).unwrap();
        assert!(h.validate(2, 2).is_err());
        let mut bad = h.clone();
        bad.tau = 0.0;
        assert!(bad.validate(1, 2).is_err());
    }
}
