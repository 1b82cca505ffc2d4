//! Independent reference computations shared by the integration suites.
//!
//! Nothing here calls the likelihood kernels under test; each oracle takes a
//! separate route (matrix algebra, extended precision, deterministic quadrature).

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use lingam_mixture::model::{ClassParams, DagHypothesis, Dataset, MixtureParams};
use lingam_mixture::priors::Hyperparams;
use lingam_mixture::rngdist::ln_gamma;
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Gamma, Normal, StudentsT};

/// Generalized Gaussian log density written straight from its closed form
/// with `statrs` log-gamma.
pub fn ggd_reference(e: f64, sigma: f64, lambda: f64) -> f64 {
    use statrs::function::gamma::ln_gamma as lg;
    let log_r = 0.5 * (lg(3.0 / lambda) - lg(1.0 / lambda));
    lambda.ln() + log_r - (2.0 * sigma).ln() - lg(1.0 / lambda)
        - (log_r.exp() * e.abs() / sigma).powf(lambda)
}

/// Density of `x` by explicit change of variables: `e = (I - B)(x - mu)`
/// and `log p(x) = sum log p_i(e_i) - log |det J|` with `J = (I - B)^-1`.
pub fn change_of_variables_log_density(x: &[f64], dag: &DagHypothesis, p: &ClassParams) -> f64 {
    let n = dag.n_vars();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for ((j, i), coef) in dag.edges().zip(&p.b) {
        b[(i, j)] = *coef;
    }
    let i_minus_b = DMatrix::<f64>::identity(n, n) - &b;
    let jac = i_minus_b.clone().try_inverse().expect("I - B is unit triangular up to permutation");
    let centered = DVector::from_iterator(n, x.iter().zip(&p.mu).map(|(x, m)| x - m));
    let e = &i_minus_b * centered;
    let log_det = jac.determinant().abs().ln();
    (0..n)
        .map(|i| ggd_reference(e[i], p.sigma[i], p.lambda[i]))
        .sum::<f64>()
        - log_det
}

const BIG_P: usize = 192;

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, BIG_P)
}

/// `log prod_s sum_c w_c exp(class_log_density)` with every exponentiation,
/// sum and product carried out at ~57 decimal digits.
pub fn extended_precision_log_likelihood(
    data: &Dataset,
    dag: &DagHypothesis,
    params: &MixtureParams,
) -> f64 {
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().expect("constants cache");
    let mut product = big(1.0);
    for x in data.rows() {
        let mut sum = big(0.0);
        for (w, class) in params.weights.iter().zip(&params.classes) {
            let ld = class_log_density_reference(x, dag, class);
            let term = big(ld).exp(BIG_P, rm, &mut cc).mul(&big(*w), BIG_P, rm);
            sum = sum.add(&term, BIG_P, rm);
        }
        product = product.mul(&sum, BIG_P, rm);
    }
    let ln = product.ln(BIG_P, rm, &mut cc);
    big_to_f64(&ln)
}

fn big_to_f64(x: &BigFloat) -> f64 {
    let s = format!("{x}");
    s.parse::<f64>()
        .unwrap_or_else(|_| panic!("cannot parse extended-precision value {s}"))
}

/// Residual-product class density using the closed-form reference density.
pub fn class_log_density_reference(x: &[f64], dag: &DagHypothesis, p: &ClassParams) -> f64 {
    let mut e: Vec<f64> = x.iter().zip(&p.mu).map(|(x, m)| x - m).collect();
    let centered = e.clone();
    for ((j, i), coef) in dag.edges().zip(&p.b) {
        e[i] -= coef * centered[j];
    }
    (0..e.len()).map(|i| ggd_reference(e[i], p.sigma[i], p.lambda[i])).sum()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Quantile-space midpoint grid for a univariate prior.
fn quantile_grid(m: usize, quantile: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..m).map(|k| quantile((k as f64 + 0.5) / m as f64)).collect()
}

/// Deterministic quadrature of the one-class, two-variable evidence.
///
/// Each parameter is integrated on a midpoint grid in its prior's quantile
/// space, so the prior weights are implicit. The coefficient's prior is the
/// Student-t obtained by integrating `b ~ N(0, v^2)` against
/// `v^2 ~ InvGamma(chi, epsilon)`. The root variable's mean is the only
/// parameter shared by both variables' factors, so the integral splits as
/// `E_mu_r[ A(mu_r) B(mu_r) ]` and never needs the full 7-D tensor grid.
pub fn grid_log_evidence(data: &Dataset, dag: &DagHypothesis, hyper: &Hyperparams, m: usize) -> f64 {
    let root = dag.order()[0];
    let child = dag.order()[1];
    let phi = &hyper.phi[0];

    let normal_q = |center: f64| {
        let d = Normal::new(center, hyper.tau).unwrap();
        move |u: f64| d.inverse_cdf(u)
    };
    let inv_gamma_q = |shape: f64, scale: f64| {
        let g = Gamma::new(shape, scale).unwrap(); // rate parametrization
        move |u: f64| 1.0 / g.inverse_cdf(1.0 - u)
    };
    let t = StudentsT::new(0.0, (hyper.epsilon / hyper.chi).sqrt(), 2.0 * hyper.chi).unwrap();

    let mu_r = quantile_grid(m, normal_q(phi[root]));
    let mu_c = quantile_grid(m, normal_q(phi[child]));
    let sigma = quantile_grid(m, inv_gamma_q(hyper.alpha, hyper.beta))
        .into_iter()
        .map(f64::sqrt)
        .collect::<Vec<_>>();
    let lambda = quantile_grid(m, inv_gamma_q(hyper.eta, hyper.zeta));
    let coef = quantile_grid(m, |u| t.inverse_cdf(u));

    let xr: Vec<f64> = data.column(root).collect();
    let xc: Vec<f64> = data.column(child).collect();
    let log_m = (m as f64).ln();

    // log-normalizer and log-rate of each (sigma, lambda) pair
    let shapes: Vec<(f64, f64, f64)> = sigma
        .iter()
        .flat_map(|&s| lambda.iter().map(move |&l| (s, l)))
        .map(|(s, l)| {
            let log_r = 0.5 * (ln_gamma(3.0 / l) - ln_gamma(1.0 / l));
            (l.ln() + log_r - (2.0 * s).ln() - ln_gamma(1.0 / l), log_r - s.ln(), l)
        })
        .collect();
    let log_lik = |residuals: &[f64], (norm, log_rate, l): (f64, f64, f64)| -> f64 {
        residuals
            .iter()
            .map(|&e| {
                if e == 0.0 {
                    norm
                } else {
                    norm - (l * (log_rate + e.abs().ln())).exp()
                }
            })
            .sum()
    };
    // average over the (sigma, lambda) grid
    let shape_average = |residuals: &[f64], buf: &mut Vec<f64>| -> f64 {
        buf.clear();
        buf.extend(shapes.iter().map(|&s| log_lik(residuals, s)));
        log_sum_exp(buf) - 2.0 * log_m
    };

    let mut outer = Vec::with_capacity(m);
    let mut buf = Vec::with_capacity(shapes.len());
    let mut inner = Vec::with_capacity(m * m);
    let mut resid = vec![0.0; xr.len()];
    for &mr in &mu_r {
        let centered: Vec<f64> = xr.iter().map(|x| x - mr).collect();
        let a = shape_average(&centered, &mut buf);
        inner.clear();
        for &b in &coef {
            for &mc in &mu_c {
                for ((r, &xcv), &cr) in resid.iter_mut().zip(&xc).zip(&centered) {
                    *r = xcv - mc - b * cr;
                }
                inner.push(shape_average(&resid, &mut buf));
            }
        }
        outer.push(a + log_sum_exp(&inner) - 2.0 * log_m);
    }
    log_sum_exp(&outer) - log_m
}
