//! The LiNGAM mixture: DAG hypotheses, parameter containers and log-likelihoods.
//!
//! Within latent class `c` each variable is
//! `x_i = mu_i + sum_{j in pa(i)} b_ij (x_j - mu_j) + e_i` with a generalized
//! Gaussian disturbance `e_i`. Because the coefficient matrix is strictly
//! triangular in causal order the map `e -> x` has unit Jacobian, so the
//! class density of `x` is the product of disturbance densities evaluated at
//! the residuals. Observations are a weighted mixture over classes.
//!
//! Everything here is computed in log space.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::datagen::GroundTruth;
use crate::error::{Error, Result};
use crate::rngdist::GgdKernel;

/// `log(sum(exp(xs)))` with max subtraction. Empty input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Observations stored row-major: `values[s * n_vars + i]` is variable `i` of row `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    values: Vec<f64>,
    n_vars: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<GroundTruth>,
}

impl Dataset {
    pub fn new(values: Vec<f64>, n_vars: usize) -> Result<Self> {
        if n_vars < 2 {
            return Err(Error::invalid(format!("need at least 2 variables, got {n_vars}")));
        }
        if values.is_empty() || !values.len().is_multiple_of(n_vars) {
            return Err(Error::invalid(format!(
                "{} values do not form whole rows of {n_vars} variables",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / n_vars,
                pos % n_vars
            )));
        }
        Ok(Dataset {
            values,
            n_vars,
            truth: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_vars = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * n_vars);
        for (s, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_vars {
                return Err(Error::invalid(format!(
                    "row {s} has {} values, expected {n_vars}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Dataset::new(values, n_vars)
    }

    pub fn with_truth(mut self, truth: GroundTruth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_obs(&self) -> usize {
        self.values.len() / self.n_vars
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_vars..(s + 1) * self.n_vars]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_vars)
    }

    pub fn column(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[i])
    }

    /// Copy with columns `i` and `j` exchanged. Ground truth is dropped.
    pub fn swap_columns(&self, i: usize, j: usize) -> Dataset {
        let mut values = self.values.clone();
        for r in values.chunks_exact_mut(self.n_vars) {
            r.swap(i, j);
        }
        Dataset {
            values,
            n_vars: self.n_vars,
            truth: None,
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if other.n_vars != self.n_vars {
            return Err(Error::invalid("cannot concatenate datasets of different width"));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Dataset::new(values, self.n_vars)
    }
}

/// Causal direction between two variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "x1->x2")]
    X1ToX2,
    #[serde(rename = "x2->x1")]
    X2ToX1,
}

impl Direction {
    pub fn reversed(self) -> Direction {
        match self {
            Direction::X1ToX2 => Direction::X2ToX1,
            Direction::X2ToX1 => Direction::X1ToX2,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::X1ToX2 => "x1->x2",
            Direction::X2ToX1 => "x2->x1",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x1->x2" | "x1x2" | "forward" => Ok(Direction::X1ToX2),
            "x2->x1" | "x2x1" | "backward" => Ok(Direction::X2ToX1),
            _ => Err(Error::invalid(format!("unknown direction '{s}'"))),
        }
    }
}

/// A DAG over `n` variables shared by every latent class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagHypothesis {
    parents: Vec<Vec<usize>>,
    /// Variables listed causes-first.
    order: Vec<usize>,
}

impl DagHypothesis {
    /// Builds a hypothesis from parent lists, rejecting cycles. The causal
    /// order is the topological order that always emits the lowest ready index.
    pub fn from_parents(parents: Vec<Vec<usize>>) -> Result<Self> {
        let n = parents.len();
        let mut parents = parents;
        for (i, ps) in parents.iter_mut().enumerate() {
            ps.sort_unstable();
            ps.dedup();
            if ps.iter().any(|&j| j >= n || j == i) {
                return Err(Error::invalid(format!("bad parent list for variable {i}")));
            }
        }
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut order = Vec::with_capacity(n);
        let mut done = vec![false; n];
        while order.len() < n {
            let next = (0..n).find(|&i| !done[i] && indegree[i] == 0).ok_or_else(|| {
                Error::invalid("parent relation contains a cycle")
            })?;
            done[next] = true;
            order.push(next);
            for (i, ps) in parents.iter().enumerate() {
                if ps.contains(&next) {
                    indegree[i] -= 1;
                }
            }
        }
        // parents sorted by position in the causal order
        let mut rank = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            rank[v] = k;
        }
        for ps in &mut parents {
            ps.sort_by_key(|&j| rank[j]);
        }
        Ok(DagHypothesis { parents, order })
    }

    /// Edge `from -> to` over two variables.
    pub fn pair(direction: Direction) -> Self {
        let parents = match direction {
            Direction::X1ToX2 => vec![vec![], vec![0]],
            Direction::X2ToX1 => vec![vec![1], vec![]],
        };
        DagHypothesis::from_parents(parents).expect("two-node DAG is acyclic")
    }

    pub fn n_vars(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Edges `(parent, child)` in canonical order: children in causal order,
    /// then parents in causal order. Coefficient vectors follow this order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.order
            .iter()
            .flat_map(move |&i| self.parents[i].iter().map(move |&j| (j, i)))
    }

    pub fn n_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Direction of the single edge for a two-variable hypothesis.
    pub fn direction(&self) -> Option<Direction> {
        match (self.n_vars(), self.edges().next()) {
            (2, Some((0, 1))) => Some(Direction::X1ToX2),
            (2, Some((1, 0))) => Some(Direction::X2ToX1),
            _ => None,
        }
    }
}

/// The two candidate structures for a pair: `x1 -> x2` then `x2 -> x1`.
pub fn enumerate_pairwise_hypotheses() -> Vec<DagHypothesis> {
    vec![
        DagHypothesis::pair(Direction::X1ToX2),
        DagHypothesis::pair(Direction::X2ToX1),
    ]
}

/// Parameters of one latent class. `b` is aligned with [`DagHypothesis::edges`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub b: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ClassParams {
    pub fn validate(&self, dag: &DagHypothesis) -> Result<()> {
        let n = dag.n_vars();
        if self.mu.len() != n || self.sigma.len() != n || self.lambda.len() != n {
            return Err(Error::invalid(format!(
                "class parameters must have {n} entries per variable"
            )));
        }
        if self.b.len() != dag.n_edges() {
            return Err(Error::invalid(format!(
                "{} coefficients for {} edges",
                self.b.len(),
                dag.n_edges()
            )));
        }
        if self.sigma.iter().chain(&self.lambda).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("sigma and lambda must be positive"));
        }
        if self.b.iter().chain(&self.mu).any(|v| !v.is_finite()) {
            return Err(Error::invalid("coefficients and means must be finite"));
        }
        Ok(())
    }
}

/// One parameter draw for the whole mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub classes: Vec<ClassParams>,
}

impl MixtureParams {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn validate(&self, dag: &DagHypothesis) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.classes.len() {
            return Err(Error::invalid("need one weight per class and at least one class"));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("class weights must be positive"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("class weights sum to {total}")));
        }
        self.classes.iter().try_for_each(|c| c.validate(dag))
    }
}

fn check_row(x: &[f64], dag: &DagHypothesis) -> Result<()> {
    if x.len() != dag.n_vars() {
        return Err(Error::invalid(format!(
            "observation has {} values, hypothesis has {} variables",
            x.len(),
            dag.n_vars()
        )));
    }
    Ok(())
}

/// Disturbances `e_i = x_i - mu_i - sum_j b_ij (x_j - mu_j)`.
pub fn residuals(x: &[f64], dag: &DagHypothesis, params: &ClassParams) -> Result<Vec<f64>> {
    check_row(x, dag)?;
    params.validate(dag)?;
    let mut e: Vec<f64> = x.iter().zip(&params.mu).map(|(x, m)| x - m).collect();
    let centered = e.clone();
    for ((j, i), b) in dag.edges().zip(&params.b) {
        e[i] -= b * centered[j];
    }
    Ok(e)
}

/// Log density of `x` within one class.
pub fn class_log_density(x: &[f64], dag: &DagHypothesis, params: &ClassParams) -> Result<f64> {
    check_row(x, dag)?;
    Ok(ClassKernel::new(dag, params)?.log_density(x))
}

/// Log density of `x` under the mixture.
pub fn mixture_log_density(x: &[f64], dag: &DagHypothesis, params: &MixtureParams) -> Result<f64> {
    check_row(x, dag)?;
    let kernel = MixtureKernel::new(dag, params)?;
    let mut scratch = Vec::with_capacity(params.n_classes());
    Ok(kernel.log_density(x, &mut scratch))
}

/// Sum of per-row mixture log densities.
pub fn dataset_log_likelihood(
    data: &Dataset,
    dag: &DagHypothesis,
    params: &MixtureParams,
) -> Result<f64> {
    if data.n_vars() != dag.n_vars() {
        return Err(Error::invalid(format!(
            "dataset has {} variables, hypothesis has {}",
            data.n_vars(),
            dag.n_vars()
        )));
    }
    Ok(MixtureKernel::new(dag, params)?.log_likelihood(data))
}

/// A class with its disturbance densities precomputed.
#[derive(Clone, Debug)]
pub(crate) struct ClassKernel {
    mu: Vec<f64>,
    /// (parent, child, coefficient) in canonical edge order
    edges: Vec<(usize, usize, f64)>,
    ggd: Vec<GgdKernel>,
}

impl ClassKernel {
    pub(crate) fn new(dag: &DagHypothesis, params: &ClassParams) -> Result<Self> {
        params.validate(dag)?;
        Ok(Self::new_unchecked(dag, params))
    }

    pub(crate) fn new_unchecked(dag: &DagHypothesis, params: &ClassParams) -> Self {
        ClassKernel {
            mu: params.mu.clone(),
            edges: dag
                .edges()
                .zip(&params.b)
                .map(|((j, i), &b)| (j, i, b))
                .collect(),
            ggd: params
                .sigma
                .iter()
                .zip(&params.lambda)
                .map(|(&s, &l)| GgdKernel::new_unchecked(s, l))
                .collect(),
        }
    }

    #[inline]
    pub(crate) fn log_density(&self, x: &[f64]) -> f64 {
        if self.mu.len() == 2 {
            return self.log_density_pair(x);
        }
        let centered: Vec<f64> = x.iter().zip(&self.mu).map(|(x, m)| x - m).collect();
        let mut e = centered.clone();
        for &(j, i, b) in &self.edges {
            e[i] -= b * centered[j];
        }
        e.iter().zip(&self.ggd).map(|(&e, g)| g.log_pdf(e)).sum()
    }

    #[inline]
    fn log_density_pair(&self, x: &[f64]) -> f64 {
        let c = [x[0] - self.mu[0], x[1] - self.mu[1]];
        let mut e = c;
        for &(j, i, b) in &self.edges {
            e[i] -= b * c[j];
        }
        self.ggd[0].log_pdf(e[0]) + self.ggd[1].log_pdf(e[1])
    }
}

/// A mixture with log weights and class kernels precomputed.
#[derive(Clone, Debug)]
pub(crate) struct MixtureKernel {
    log_weights: Vec<f64>,
    classes: Vec<ClassKernel>,
}

impl MixtureKernel {
    pub(crate) fn new(dag: &DagHypothesis, params: &MixtureParams) -> Result<Self> {
        params.validate(dag)?;
        Ok(Self::new_unchecked(dag, params))
    }

    pub(crate) fn new_unchecked(dag: &DagHypothesis, params: &MixtureParams) -> Self {
        MixtureKernel {
            log_weights: params.weights.iter().map(|w| w.ln()).collect(),
            classes: params
                .classes
                .iter()
                .map(|c| ClassKernel::new_unchecked(dag, c))
                .collect(),
        }
    }

    #[inline]
    pub(crate) fn log_density(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        if self.classes.len() == 1 {
            return self.log_weights[0] + self.classes[0].log_density(x);
        }
        scratch.clear();
        scratch.extend(
            self.classes
                .iter()
                .zip(&self.log_weights)
                .map(|(c, lw)| lw + c.log_density(x)),
        );
        log_sum_exp(scratch)
    }

    pub(crate) fn log_likelihood(&self, data: &Dataset) -> f64 {
        let mut scratch = Vec::with_capacity(self.classes.len());
        data.rows().map(|x| self.log_density(x, &mut scratch)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_class(b: f64, mu: [f64; 2]) -> ClassParams {
        ClassParams {
            b: vec![b],
            mu: mu.to_vec(),
            sigma: vec![1.0, 1.0],
            lambda: vec![2.0, 2.0],
        }
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![1.0, 2.0], 1).is_err());
        assert!(Dataset::new(vec![], 2).is_err());
        assert!(Dataset::new(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN], 2).is_err());
        let d = Dataset::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(d.n_obs(), 2);
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.swap_columns(0, 1).row(0), &[2.0, 1.0]);
    }

    #[test]
    fn pairwise_hypotheses() {
        let hs = enumerate_pairwise_hypotheses();
        assert_eq!(hs.len(), 2);
        assert_eq!(hs[0].order(), &[0, 1]);
        assert_eq!(hs[1].order(), &[1, 0]);
        assert_eq!(hs[0].direction(), Some(Direction::X1ToX2));
        assert_eq!(hs[1].direction(), Some(Direction::X2ToX1));
        assert_eq!(hs[0].edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn cycles_rejected() {
        assert!(DagHypothesis::from_parents(vec![vec![1], vec![0]]).is_err());
        assert!(DagHypothesis::from_parents(vec![vec![0]]).is_err());
        let d = DagHypothesis::from_parents(vec![vec![2], vec![0, 2], vec![]]).unwrap();
        assert_eq!(d.order(), &[2, 0, 1]);
        assert_eq!(d.edges().collect::<Vec<_>>(), vec![(2, 0), (2, 1), (0, 1)]);
    }

    #[test]
    fn residual_hand_values() {
        let g = DagHypothesis::pair(Direction::X1ToX2);
        let e = residuals(&[2.0, 5.0], &g, &gauss_class(0.0, [0.0, 0.0])).unwrap();
        assert_eq!(e, vec![2.0, 5.0]);
        let e = residuals(&[2.0, 5.0], &g, &gauss_class(1.0, [0.0, 0.0])).unwrap();
        assert_eq!(e, vec![2.0, 3.0]);
        assert!(residuals(&[1.0], &g, &gauss_class(1.0, [0.0, 0.0])).is_err());
    }

    #[test]
    fn class_density_gaussian_origin() {
        let g = DagHypothesis::pair(Direction::X1ToX2);
        let v = class_log_density(&[0.0, 0.0], &g, &gauss_class(0.0, [0.0, 0.0])).unwrap();
        assert!((v - (-1.837_877_066_409_345_3)).abs() < 1e-12);
    }

    #[test]
    fn general_and_pair_paths_agree() {
        let g = DagHypothesis::pair(Direction::X2ToX1);
        let p = ClassParams {
            b: vec![0.7],
            mu: vec![0.3, -1.0],
            sigma: vec![0.8, 1.4],
            lambda: vec![1.3, 0.6],
        };
        let k = ClassKernel::new(&g, &p).unwrap();
        let x = [1.1, 0.4];
        let e = residuals(&x, &g, &p).unwrap();
        let direct: f64 = e
            .iter()
            .zip(p.sigma.iter().zip(&p.lambda))
            .map(|(&e, (&s, &l))| crate::rngdist::ggd_log_pdf(e, s, l).unwrap())
            .sum();
        assert!((k.log_density(&x) - direct).abs() < 1e-13);
    }

    #[test]
    fn mixture_degenerate_cases() {
        let g = DagHypothesis::pair(Direction::X1ToX2);
        let c = gauss_class(0.5, [1.0, -1.0]);
        let x = [0.2, 0.9];
        let single = MixtureParams {
            weights: vec![1.0],
            classes: vec![c.clone()],
        };
        let cd = class_log_density(&x, &g, &c).unwrap();
        assert_eq!(mixture_log_density(&x, &g, &single).unwrap(), cd);
        let twin = MixtureParams {
            weights: vec![0.5, 0.5],
            classes: vec![c.clone(), c],
        };
        assert!((mixture_log_density(&x, &g, &twin).unwrap() - cd).abs() < 1e-14);
    }

    #[test]
    fn mixture_dominated_term() {
        let g = DagHypothesis::pair(Direction::X1ToX2);
        let near = gauss_class(0.5, [0.0, 0.0]);
        let far = gauss_class(0.5, [40.0, -40.0]);
        let p = MixtureParams {
            weights: vec![0.3, 0.7],
            classes: vec![near.clone(), far],
        };
        let x = [0.1, -0.2];
        let expect = 0.3f64.ln() + class_log_density(&x, &g, &near).unwrap();
        assert!((mixture_log_density(&x, &g, &p).unwrap() - expect).abs() < 1e-6);
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let g = DagHypothesis::pair(Direction::X1ToX2);
        let c = gauss_class(0.0, [0.0, 0.0]);
        let p = MixtureParams {
            weights: vec![0.5, 0.6],
            classes: vec![c.clone(), c],
        };
        assert!(mixture_log_density(&[0.0, 0.0], &g, &p).is_err());
    }

    #[test]
    fn log_likelihood_of_duplicated_rows_doubles() {
        let g = DagHypothesis::pair(Direction::X1ToX2);
        let d = Dataset::from_rows(&[[0.1, 0.3], [-1.2, 2.0], [0.5, 0.5]]).unwrap();
        let p = MixtureParams {
            weights: vec![0.4, 0.6],
            classes: vec![gauss_class(0.5, [0.0, 0.0]), gauss_class(-1.0, [1.0, 1.0])],
        };
        let single = dataset_log_likelihood(&d, &g, &p).unwrap();
        let doubled = dataset_log_likelihood(&d.concat(&d).unwrap(), &g, &p).unwrap();
        assert!((doubled - 2.0 * single).abs() < 1e-12);
        let one = Dataset::from_rows(&[[0.1, 0.3]]).unwrap();
        assert_eq!(
            dataset_log_likelihood(&one, &g, &p).unwrap(),
            mixture_log_density(&[0.1, 0.3], &g, &p).unwrap()
        );
    }

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
