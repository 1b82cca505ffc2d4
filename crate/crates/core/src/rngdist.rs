//! Seeded random variates and the generalized Gaussian log-density.
//!
//! Every sampler draws from an explicit [`RngStream`]; nothing touches a
//! thread-local generator. A stream is identified by `(seed, stream_id)` and
//! is backed by ChaCha8, whose 64-bit stream counter gives independent,
//! non-overlapping sequences for distinct ids under the same seed.

use std::f64::consts::{LN_2, PI};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A reproducible random stream keyed by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream under the same seed whose id is a hash of this
    /// stream's id and `key`. The parent's position is irrelevant.
    pub fn derive(&self, key: u64) -> RngStream {
        RngStream::new(self.seed, mix64(self.stream_id ^ mix64(key)))
    }

    /// A fresh stream keyed by a sequence of integers.
    pub fn derive_path(&self, keys: &[u64]) -> RngStream {
        keys.iter().fold(self.clone(), |s, &k| s.derive(k)).rewound()
    }

    fn rewound(self) -> RngStream {
        RngStream::new(self.seed, self.stream_id)
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub(crate) fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Unit-variance, zero-mean disturbance families used to generate data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DisturbanceKind {
    Laplace,
    Uniform,
    StudentT5,
}

impl DisturbanceKind {
    pub const ALL: [DisturbanceKind; 3] = [
        DisturbanceKind::Laplace,
        DisturbanceKind::Uniform,
        DisturbanceKind::StudentT5,
    ];
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn sample_gaussian(mean: f64, variance: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("variance", variance)?;
    if !mean.is_finite() {
        return Err(Error::invalid(format!("mean must be finite, got {mean}")));
    }
    Ok(mean + variance.sqrt() * rng.standard_normal())
}

/// Gamma(shape, scale) by Marsaglia and Tsang's squeeze method. Shapes
/// below one are boosted: `G(a) = G(a + 1) * U^(1/a)`.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("shape", shape)?;
    check_positive("scale", scale)?;
    loop {
        let g = if shape < 1.0 {
            let boost = rng.open01().powf(1.0 / shape);
            standard_gamma_ge1(shape + 1.0, rng) * boost
        } else {
            standard_gamma_ge1(shape, rng)
        };
        // U^(1/a) can underflow for tiny shapes; keep the support strictly positive.
        if g > 0.0 {
            return Ok(g * scale);
        }
    }
}

fn standard_gamma_ge1(shape: f64, rng: &mut RngStream) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x = rng.standard_normal();
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = rng.open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Dirichlet draw built by normalizing independent Gamma(a_c, 1) variates.
pub fn sample_dirichlet(concentration: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    if concentration.is_empty() {
        return Err(Error::invalid("dirichlet concentration must be non-empty"));
    }
    for &a in concentration {
        check_positive("concentration", a)?;
    }
    if concentration.len() == 1 {
        return Ok(vec![1.0]);
    }
    let mut draws = concentration
        .iter()
        .map(|&a| sample_gamma(a, 1.0, rng))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = draws.iter().sum();
    for g in &mut draws {
        *g /= total;
    }
    Ok(draws)
}

/// InverseGamma(shape, scale) as the reciprocal of Gamma(shape, 1/scale).
pub fn sample_inverse_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("shape", shape)?;
    check_positive("scale", scale)?;
    loop {
        let y = 1.0 / sample_gamma(shape, 1.0 / scale, rng)?;
        if y.is_finite() {
            return Ok(y);
        }
    }
}

const SQRT_3: f64 = 1.732_050_807_568_877_2;

pub fn sample_disturbance(kind: DisturbanceKind, rng: &mut RngStream) -> f64 {
    match kind {
        DisturbanceKind::Laplace => {
            // scale 1/sqrt(2) gives unit variance
            let u = rng.open01() - 0.5;
            let mag = -(1.0 - 2.0 * u.abs()).ln() / std::f64::consts::SQRT_2;
            if u < 0.0 {
                -mag
            } else {
                mag
            }
        }
        DisturbanceKind::Uniform => {
            let u: f64 = rng.random();
            SQRT_3 * (2.0 * u - 1.0)
        }
        DisturbanceKind::StudentT5 => {
            let z = rng.standard_normal();
            // chi-square with 5 dof is Gamma(5/2, 2)
            let chi2 = standard_gamma_ge1(2.5, rng) * 2.0;
            let t = z / (chi2 / 5.0).sqrt();
            t / (5.0f64 / 3.0).sqrt()
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Natural log of the gamma function for positive arguments (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_2PI + (x + 0.5) * t.ln() - t + a.ln()
}

/// Precomputed generalized Gaussian density with standard deviation `sigma`
/// and shape `lambda`.
///
/// `log p(e) = log_norm - (rate * |e|)^lambda` where
/// `rate = sqrt(G(3/l) / G(1/l)) / sigma`, evaluated as
/// `exp(lambda * (log rate + log |e|))`.
#[derive(Clone, Copy, Debug)]
pub struct GgdKernel {
    log_norm: f64,
    log_rate: f64,
    lambda: f64,
}

impl GgdKernel {
    pub fn new(sigma: f64, lambda: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("lambda", lambda)?;
        Ok(Self::new_unchecked(sigma, lambda))
    }

    pub(crate) fn new_unchecked(sigma: f64, lambda: f64) -> Self {
        let lg1 = ln_gamma(1.0 / lambda);
        let lg3 = ln_gamma(3.0 / lambda);
        let log_ratio = 0.5 * (lg3 - lg1);
        GgdKernel {
            log_norm: lambda.ln() + log_ratio - LN_2 - sigma.ln() - lg1,
            log_rate: log_ratio - sigma.ln(),
            lambda,
        }
    }

    #[inline]
    pub fn log_pdf(&self, e: f64) -> f64 {
        if e == 0.0 {
            self.log_norm
        } else {
            self.log_norm - (self.lambda * (self.log_rate + e.abs().ln())).exp()
        }
    }
}

/// Log of the generalized Gaussian density at `e`.
pub fn ggd_log_pdf(e: f64, sigma: f64, lambda: f64) -> Result<f64> {
    Ok(GgdKernel::new(sigma, lambda)?.log_pdf(e))
}
