//! Monte Carlo for the centered compound-Poisson law `Z_Psi(u)`.
//!
//! For an atomic `Psi = sum_j w_j delta_{a_j}` the log characteristic
//! function is
//!
//! ```text
//!     u sum_j w_j (e^{i t a_j} - i t a_j - 1) / a_j^2
//!   = sum_j lambda_j (e^{i t a_j} - 1 - i t a_j),   lambda_j = u w_j / a_j^2,
//! ```
//!
//! which is the log characteristic function of `a_j (P_j - lambda_j)` with
//! `P_j ~ Poisson(lambda_j)` summed over independent `j`. Sampling therefore
//! needs one Poisson draw per atom. Non-atomic `Psi` is not supported.
//!
//! Samples are produced in chunks of [`CHUNK`]; chunk `c` draws from the
//! ChaCha20 stream `c` under the batch seed, so the output does not depend on
//! how chunks are scheduled across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::step::StepDistribution;
use crate::summation::Neumaier;

pub const CHUNK: usize = 1 << 16;

/// Intensities at or below this use inversion, above it PTRS.
const INVERSION_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Serialize)]
pub struct LevySampleBatch {
    pub u: f64,
    pub target: StepDistribution,
    pub seed: u64,
    pub n: usize,
    pub samples: Vec<f64>,
}

/// Per-atom `(a_j, lambda_j = u w_j / a_j^2)`.
pub fn intensities(target: &StepDistribution, u: f64) -> Result<Vec<(f64, f64)>> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::Domain(format!("intensity u = {u} must be positive")));
    }
    target
        .atoms()
        .iter()
        .map(|&(a, w)| {
            if !(a > 0.0) {
                return Err(Error::Domain(format!("atom at {a} has no finite intensity")));
            }
            Ok((a, u * w / (a * a)))
        })
        .collect()
}

fn poisson_inversion<R: Rng>(rng: &mut R, lambda: f64) -> f64 {
    let u: f64 = rng.gen();
    let mut k = 0.0;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf && p > 0.0 {
        k += 1.0;
        p *= lambda / k;
        cdf += p;
    }
    k
}

/// Hormann's transformed rejection with squeeze.
fn poisson_ptrs<R: Rng>(rng: &mut R, lambda: f64) -> f64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let invalpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + invalpha.ln() - (a / (us * us) + b).ln() <= -lambda + k * loglam - libm::lgamma(k + 1.0) {
            return k;
        }
    }
}

pub(crate) fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> f64 {
    if lambda <= INVERSION_LIMIT {
        poisson_inversion(rng, lambda)
    } else {
        poisson_ptrs(rng, lambda)
    }
}

/// `n` draws of `Z_Psi(u) = sum_j a_j (P_j - lambda_j)`.
pub fn sample(target: &StepDistribution, u: f64, n: usize, seed: u64) -> Result<LevySampleBatch> {
    if n == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    let rates = intensities(target, u)?;
    let chunks = n.div_ceil(CHUNK);
    let samples: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            let rates = &rates;
            (0..len)
                .map(move |_| {
                    let mut z = 0.0;
                    for &(a, lambda) in rates {
                        z += a * (poisson(&mut rng, lambda) - lambda);
                    }
                    z
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(LevySampleBatch {
        u,
        target: target.clone(),
        seed,
        n,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McTail {
    pub threshold: f64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
    pub seed: u64,
}

impl McTail {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_lo <= p && p <= self.ci_hi
    }
}

/// Wilson score interval at level `z`.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Proportion of samples `>= threshold` with a 95% Wilson interval.
pub fn mc_tail(batch: &LevySampleBatch, threshold: f64) -> Result<McTail> {
    if batch.samples.len() < 100 {
        return Err(Error::Domain(format!(
            "tail estimate needs at least 100 samples, got {}",
            batch.samples.len()
        )));
    }
    let hits = batch.samples.iter().filter(|&&z| z >= threshold).count();
    let (ci_lo, ci_hi) = wilson_interval(hits, batch.samples.len(), 1.959963984540054);
    Ok(McTail {
        threshold,
        estimate: hits as f64 / batch.samples.len() as f64,
        ci_lo,
        ci_hi,
        n: batch.n,
        seed: batch.seed,
    })
}

/// `exp(u sum_j w_j (e^{i t a_j} - i t a_j - 1)/a_j^2)`.
pub fn theoretical_char_function(target: &StepDistribution, u: f64, t: f64) -> Complex64 {
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    for &(a, w) in target.atoms() {
        let x = t * a;
        let scale = u * w / (a * a);
        re.add(scale * (x.cos() - 1.0));
        im.add(scale * (x.sin() - x));
    }
    Complex64::new(re.total(), im.total()).exp()
}

/// Max over `t_grid` of `|mean e^{itZ} - theoretical_char_function(t)|`.
pub fn char_function_check(batch: &LevySampleBatch, t_grid: &[f64]) -> Result<f64> {
    if batch.samples.len() < 10_000 {
        return Err(Error::Domain(format!(
            "characteristic function check needs at least 1e4 samples, got {}",
            batch.samples.len()
        )));
    }
    let n = batch.samples.len() as f64;
    let mut worst = 0.0f64;
    for &t in t_grid {
        let mut re = Neumaier::new();
        let mut im = Neumaier::new();
        for &z in &batch.samples {
            let (s, c) = (t * z).sin_cos();
            re.add(c);
            im.add(s);
        }
        let empirical = Complex64::new(re.total() / n, im.total() / n);
        worst = worst.max((empirical - theoretical_char_function(&batch.target, batch.u, t)).norm());
    }
    Ok(worst)
}

/// Sample mean and unbiased sample variance.
pub fn mean_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().copied().collect::<Neumaier>().total() / n;
    let ss = samples.iter().map(|z| (z - mean) * (z - mean)).collect::<Neumaier>().total();
    (mean, ss / (n - 1.0))
}

/// Standard deviation of the sample variance at size `n`: the fourth central
/// moment of `Z_Psi(u)` is `3u^2 + u sum_j w_j a_j^2`.
pub fn variance_sd(target: &StepDistribution, u: f64, n: usize) -> f64 {
    let m4 = 3.0 * u * u + u * target.moment(2);
    ((m4 - u * u) / n as f64).sqrt()
}
