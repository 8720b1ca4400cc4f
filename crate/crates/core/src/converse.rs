//! Pipelines for both directions of the prime/integer correspondence.
//!
//! Forward: a prime-side law close to `Psi` gives integer-side tails matching
//! the Levy tail of `Z_Psi(B^2)` ([`theorem3_check`]). Converse: coefficients
//! `lambda_f(x; k)` converging to `Lambda(Psi; k)` give prime-side moments
//! converging to those of `Psi`, hence `K_f(x; t) -> Psi(t)` at continuity
//! points ([`coefficient_convergence_report`], [`theorem1_check`]).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::additive::{empirical_tail, evaluate_summary, AdditiveFunctionSpec};
use crate::error::{Error, Result};
use crate::levy::{mc_tail, sample, McTail};
use crate::nnls::nnls;
use crate::prime_side::{kolmogorov_distance, prime_measure, sup_distance, StepDistribution};
use crate::saddle::{solve_eta, solve_rho, RangeGuard};
use crate::series::{coeffs_from_moments, lambda_coeffs, levy_lambda_coeffs, TruncatedSeries, DEFAULT_KMAX};
use crate::sieve::Sieve;
use crate::summation::Neumaier;
use crate::tails::{
    hwang_tail_saddle, hwang_tail_series, maciulis_tail_saddle, maciulis_tail_series, poisson_tail,
};

/// Schema version of the JSON reports.
pub const REPORT_VERSION: u32 = 1;

/// Largest `kmax` accepted by [`moments_from_lambda`] without override.
pub const MAX_CHECKED_KMAX: usize = 16;

pub const DEFAULT_GRID_SIZE: usize = 64;

/// Half-width of the excluded window around each target atom, as a
/// fraction of `alpha`.
pub const CONTINUITY_MARGIN: f64 = 0.02;

/// Largest moment-fit residual accepted by [`reconstruct_psi`].
pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 1e-4;

/// Weight on the mass row of the moment fit.
const MASS_ROW_WEIGHT: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentInversion {
    /// `M(0), ..., M(kmax-1)`.
    pub moments: Vec<f64>,
    /// Largest ratio of summed term magnitudes to the recovered moment.
    pub amplification: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Recovers `M(0..kmax-1)` from `lambda(0..=kmax)`.
///
/// Singling out `j = k+1` in the recurrence gives
/// `M(k) = -(k+1)! (lambda(k+1) + sum_{j=2}^{k} M(j-1)/j! [z^{k+1}] lambda^j)`.
pub fn moments_from_lambda(lambda: &[f64], kmax: usize) -> Result<MomentInversion> {
    if kmax > MAX_CHECKED_KMAX {
        return Err(Error::Contract(format!(
            "kmax {kmax} exceeds {MAX_CHECKED_KMAX}; the inversion amplifies error factorially (use the uncapped variant)"
        )));
    }
    moments_from_lambda_uncapped(lambda, kmax)
}

/// [`moments_from_lambda`] without the `kmax` cap.
pub fn moments_from_lambda_uncapped(lambda: &[f64], kmax: usize) -> Result<MomentInversion> {
    if lambda.len() < kmax + 1 {
        return Err(Error::Contract(format!(
            "need lambda(0..={kmax}), got {} coefficients",
            lambda.len()
        )));
    }
    if lambda[0].abs() > 1e-12 || (lambda[1] - 1.0).abs() > 1e-12 {
        return Err(Error::Contract(format!(
            "lambda(0) = {}, lambda(1) = {}; expected 0 and 1",
            lambda[0], lambda[1]
        )));
    }
    let series = TruncatedSeries::new(lambda[..=kmax].to_vec());
    // powers[j] = lambda^j, j >= 2
    let mut powers = vec![TruncatedSeries::zero(kmax), series.clone()];
    for j in 2..kmax {
        let next = &powers[j - 1] * &series;
        powers.push(next);
    }
    let mut m = vec![1.0];
    let mut amplification = 1.0f64;
    for k in 1..kmax {
        let mut acc = Neumaier::new();
        let mut size = lambda[k + 1].abs();
        acc.add(lambda[k + 1]);
        for j in 2..=k {
            let term = m[j - 1] / factorial(j) * powers[j].coeff(k + 1);
            size += term.abs();
            acc.add(term);
        }
        let mk = -factorial(k + 1) * acc.total();
        if !(mk > 0.0) {
            return Err(Error::Contract(format!(
                "recovered moment {k} = {mk} is not positive; the coefficients do not come from a measure"
            )));
        }
        amplification = amplification.max(factorial(k + 1) * size / mk);
        m.push(mk);
    }
    Ok(MomentInversion {
        moments: m,
        amplification,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub version: u32,
    pub spec: String,
    pub target: String,
    pub x_grid: Vec<u64>,
    pub b: Vec<f64>,
    /// Coefficient indices `2..=kmax`.
    pub k_range: Vec<usize>,
    /// `deltas[i][r] = lambda_f(x_i; k_r) - Lambda(Psi; k_r)`.
    pub deltas: Vec<Vec<f64>>,
    /// `B(f; x_i)^{-2^{-(k_r - 1)}}`, the rate claimed for index `k_r`.
    pub predicted_rates: Vec<Vec<f64>>,
    /// Per index `k`, max over `x` of `|lambda'(k) - lambda_f(x; k)|` where
    /// `lambda'` is recomputed from `moments_from_lambda(lambda_f)`.
    pub moments_roundtrip_error: Vec<f64>,
}

impl ConvergenceReport {
    /// `|deltas|` strictly decreasing along `x` for every `k <= k_last`
    /// (ignoring columns that vanish to rounding).
    pub fn decreasing_through(&self, k_last: usize) -> bool {
        self.k_range.iter().enumerate().filter(|(_, &k)| k <= k_last).all(|(r, _)| {
            self.deltas
                .windows(2)
                .all(|w| w[1][r].abs() < w[0][r].abs() || w[0][r].abs() < 1e-13)
        })
    }
}

fn check_grid(sieve: &Sieve, x_grid: &[u64]) -> Result<()> {
    if x_grid.is_empty() || x_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("x grid must be nonempty and strictly ascending".into()));
    }
    for &x in x_grid {
        sieve.check(x)?;
    }
    Ok(())
}

pub fn coefficient_convergence_report(
    spec: &AdditiveFunctionSpec,
    sieve: &Sieve,
    x_grid: &[u64],
    target: &StepDistribution,
    kmax: usize,
) -> Result<ConvergenceReport> {
    check_grid(sieve, x_grid)?;
    if kmax < 2 {
        return Err(Error::Contract("kmax must be at least 2".into()));
    }
    let big = levy_lambda_coeffs(target, kmax);
    let k_range: Vec<usize> = (2..=kmax).collect();
    let mut b = Vec::new();
    let mut deltas = Vec::new();
    let mut rates = Vec::new();
    let mut roundtrip = vec![0.0f64; kmax + 1];
    for &x in x_grid {
        let measure = prime_measure(spec, sieve, x)?;
        let lambda = lambda_coeffs(&measure, kmax);
        let bx = measure.b();
        b.push(bx);
        deltas.push(k_range.iter().map(|&k| lambda[k] - big[k]).collect());
        rates.push(k_range.iter().map(|&k| bx.powf(-(0.5f64).powi(k as i32 - 1))).collect());
        let recovered = moments_from_lambda_uncapped(&lambda, kmax)?.moments;
        let again = coeffs_from_moments(&recovered, kmax)?;
        for k in 0..=kmax {
            roundtrip[k] = roundtrip[k].max((again[k] - lambda[k]).abs());
        }
    }
    Ok(ConvergenceReport {
        version: REPORT_VERSION,
        spec: spec.name.clone(),
        target: target.to_spec_string(),
        x_grid: x_grid.to_vec(),
        b,
        k_range,
        deltas,
        predicted_rates: rates,
        moments_roundtrip_error: roundtrip,
    })
}

/// `size` equally spaced locations `alpha k / size`, `k = 1..=size`.
pub fn default_grid(alpha: f64, size: usize) -> Vec<f64> {
    (1..=size).map(|k| alpha * k as f64 / size as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Reconstruction {
    pub distribution: StepDistribution,
    /// `||A m - M||_2` over the fitted moments, mass row unweighted.
    pub residual: f64,
}

/// Nonnegative least-squares fit of grid masses to `moments`.
pub fn reconstruct_psi(moments: &[f64], grid: &[f64]) -> Result<Reconstruction> {
    reconstruct_psi_with(moments, grid, DEFAULT_RESIDUAL_THRESHOLD)
}

pub fn reconstruct_psi_with(moments: &[f64], grid: &[f64], threshold: f64) -> Result<Reconstruction> {
    if moments.is_empty() || (moments[0] - 1.0).abs() > 1e-9 {
        return Err(Error::Contract("moment 0 must equal 1".into()));
    }
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain("grid locations must be positive".into()));
    }
    let rows = moments.len();
    let a = DMatrix::from_fn(rows, grid.len(), |l, j| grid[j].powi(l as i32));
    let mut weighted = a.clone();
    weighted.row_mut(0).scale_mut(MASS_ROW_WEIGHT);
    let mut rhs = DVector::from_column_slice(moments);
    let target = rhs.clone();
    rhs[0] *= MASS_ROW_WEIGHT;
    let (masses, _) = nnls(&weighted, &rhs)?;
    let residual = (&a * &masses - target).norm();
    let total: f64 = masses.iter().sum();
    if residual > threshold || (total - 1.0).abs() > 1e-6 {
        return Err(Error::ReconstructionFailed { residual, threshold });
    }
    let atoms: Vec<(f64, f64)> = grid
        .iter()
        .zip(masses.iter())
        .filter(|(_, &w)| w >= 1e-10)
        .map(|(&t, &w)| (t, w))
        .collect();
    let kept: f64 = atoms.iter().map(|a| a.1).sum();
    let distribution = StepDistribution::new(atoms.into_iter().map(|(t, w)| (t, w / kept)).collect())?;
    Ok(Reconstruction { distribution, residual })
}

/// Open windows `(a - margin alpha, a + margin alpha)` around target atoms.
pub fn excluded_windows(target: &StepDistribution, margin: f64) -> Vec<(f64, f64)> {
    let h = margin * target.alpha();
    target.atoms().iter().map(|&(a, _)| (a - h, a + h)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Row {
    pub x: u64,
    pub b: f64,
    pub moments: Vec<f64>,
    pub amplification: f64,
    pub reconstruction: StepDistribution,
    pub residual: f64,
    /// Sup of `|reconstruction - Psi|` outside the excluded windows.
    pub distance: f64,
    /// Max of `|reconstruction - Psi|` over the admissible `t_grid` points.
    pub grid_distance: f64,
    /// `kolmogorov_distance(K_f(x), Psi)` computed directly, for reference.
    pub direct_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Report {
    pub version: u32,
    pub spec: String,
    pub target: StepDistribution,
    pub kmax: usize,
    pub margin: f64,
    pub grid_size: usize,
    pub rows: Vec<Theorem1Row>,
    pub convergence: ConvergenceReport,
}

impl Theorem1Report {
    pub fn distances(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.distance).collect()
    }

    pub fn distance_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].distance < w[0].distance)
    }
}

/// coefficients -> moments -> reconstruction -> distance to `Psi` at
/// continuity points.
pub fn theorem1_check(
    spec: &AdditiveFunctionSpec,
    sieve: &Sieve,
    x_grid: &[u64],
    target: &StepDistribution,
    kmax: usize,
    t_grid: &[f64],
) -> Result<Theorem1Report> {
    let convergence = coefficient_convergence_report(spec, sieve, x_grid, target, kmax)?;
    let windows = excluded_windows(target, CONTINUITY_MARGIN);
    let admissible: Vec<f64> = t_grid
        .iter()
        .copied()
        .filter(|&t| windows.iter().all(|&(lo, hi)| !(t > lo && t < hi)))
        .collect();
    let mut rows = Vec::new();
    for &x in x_grid {
        let measure = prime_measure(spec, sieve, x)?;
        let lambda = lambda_coeffs(&measure, kmax);
        let inversion = moments_from_lambda(&lambda, kmax)?;
        let alpha = target.alpha().max(measure.max_value());
        let grid = default_grid(alpha, DEFAULT_GRID_SIZE);
        let rec = reconstruct_psi(&inversion.moments, &grid)?;
        let distance = sup_distance(rec.distribution.steps(), target.steps(), &windows);
        let grid_distance = admissible
            .iter()
            .map(|&t| (rec.distribution.cdf(t) - target.cdf(t)).abs())
            .fold(0.0, f64::max);
        rows.push(Theorem1Row {
            x,
            b: measure.b(),
            moments: inversion.moments,
            amplification: inversion.amplification,
            reconstruction: rec.distribution,
            residual: rec.residual,
            distance,
            grid_distance,
            direct_distance: kolmogorov_distance(&measure, target),
        });
    }
    Ok(Theorem1Report {
        version: REPORT_VERSION,
        spec: spec.name.clone(),
        target: target.clone(),
        kmax,
        margin: CONTINUITY_MARGIN,
        grid_size: DEFAULT_GRID_SIZE,
        rows,
        convergence,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ForwardOptions {
    pub kmax: usize,
    pub guard: RangeGuard,
    pub mc_n: usize,
    pub seed: u64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            kmax: DEFAULT_KMAX,
            guard: RangeGuard::default(),
            mc_n: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReportRow {
    pub delta: f64,
    pub empirical: f64,
    /// `P(Poisson(B^2) >= B^2 + delta B)`, the reference for 0/1-valued `g`.
    pub poisson: f64,
    /// Set when `delta` fails the range guard; the saddle columns are then empty.
    pub range_skipped: bool,
    pub eta: Option<f64>,
    pub rho: Option<f64>,
    pub hwang_saddle: Option<f64>,
    pub hwang_series: Option<f64>,
    pub maciulis_saddle: Option<f64>,
    pub maciulis_series: Option<f64>,
    pub mc: Option<McTail>,
    /// `empirical / hwang_saddle`.
    pub ratio: Option<f64>,
}

impl TailReportRow {
    /// The theoretical columns that were computed.
    pub fn theoretical(&self) -> Vec<f64> {
        [
            self.hwang_saddle,
            self.hwang_series,
            self.maciulis_saddle,
            self.maciulis_series,
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub version: u32,
    pub spec: String,
    pub x: u64,
    pub target: StepDistribution,
    pub mu: f64,
    pub b: f64,
    /// Strength of the prime-side hypothesis at this `x`.
    pub kolmogorov: f64,
    pub options: ForwardOptions,
    pub rows: Vec<TailReportRow>,
}

fn range_filter<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Range { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Integer-side tails next to every asymptotic form and a Monte Carlo
/// estimate of `P(Z_Psi(B^2) >= delta B)`.
pub fn theorem3_check(
    spec: &AdditiveFunctionSpec,
    sieve: &Sieve,
    x: u64,
    target: &StepDistribution,
    deltas: &[f64],
    options: ForwardOptions,
) -> Result<TailReport> {
    let measure = prime_measure(spec, sieve, x)?;
    let stats = evaluate_summary(spec, sieve, x)?;
    let b = measure.b();
    let b2 = measure.total_mass();
    let empirical = empirical_tail(&stats, deltas)?;
    let lambda = lambda_coeffs(&measure, options.kmax);
    let big = levy_lambda_coeffs(target, options.kmax);
    let batch = if options.mc_n > 0 {
        Some(sample(target, b2, options.mc_n, options.seed)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(deltas.len());
    for (row, &delta) in empirical.iter().zip(deltas) {
        let range_skipped = !options.guard.admits(delta, b);
        let (eta, rho, hwang_saddle, maciulis_saddle) = if range_skipped {
            (None, None, None, None)
        } else {
            let eta = solve_eta(&measure, measure.mu(), delta, options.guard)?;
            let rho = solve_rho(target, b, delta, options.guard)?;
            (
                Some(eta.value),
                Some(rho.value),
                Some(hwang_tail_saddle(target, b, delta, &rho)?.value),
                Some(maciulis_tail_saddle(&measure, delta, &eta)?.value),
            )
        };
        let hwang_series = range_filter(hwang_tail_series(&big, b, delta))?.map(|v| v.value);
        let maciulis_series = range_filter(maciulis_tail_series(&lambda, b, delta))?.map(|v| v.value);
        let mc = match &batch {
            Some(batch) => Some(mc_tail(batch, delta * b)?),
            None => None,
        };
        rows.push(TailReportRow {
            delta,
            empirical: row.tail,
            poisson: poisson_tail(b2, delta)?,
            range_skipped,
            eta,
            rho,
            hwang_saddle,
            hwang_series,
            maciulis_saddle,
            maciulis_series,
            mc,
            ratio: hwang_saddle.map(|h| row.tail / h),
        });
    }
    Ok(TailReport {
        version: REPORT_VERSION,
        spec: spec.name.clone(),
        x,
        target: target.clone(),
        mu: measure.mu(),
        b,
        kolmogorov: kolmogorov_distance(&measure, target),
        options,
        rows,
    })
}
