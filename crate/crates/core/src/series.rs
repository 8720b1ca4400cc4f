//! Truncated power series and the coefficient recurrences for `lambda_f(x; k)`
//! and `Lambda(Psi; k)`.
//!
//! Two independent routes produce the same coefficients:
//! - the displayed recurrence, with the multi-index sums
//!   `sum_{k_1+...+k_i=j} prod lambda(k_r)` read off iterated powers, and
//! - [`series_inverse`], which inverts the generating series
//!   `F(z) = sum_k M(k-1)/k! z^k` by solving `[z^n] F(G(z)) = 0` degree by degree.

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prime_side::{moments, PrimeMeasure, StepDistribution};
use crate::summation::Neumaier;

/// Default truncation degree for coefficient tables.
pub const DEFAULT_KMAX: usize = 20;

/// Coefficients `c[0..=kmax]` of a power series truncated at degree `kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a constant term");
        Self { coeffs }
    }

    pub fn zero(kmax: usize) -> Self {
        Self::new(vec![0.0; kmax + 1])
    }

    /// The series `z`.
    pub fn identity(kmax: usize) -> Self {
        let mut c = vec![0.0; kmax + 1];
        if kmax >= 1 {
            c[1] = 1.0;
        }
        Self::new(c)
    }

    pub fn kmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, kmax: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(kmax + 1, 0.0);
        Self::new(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `self(inner(z))` truncated at `min(kmax)`; `inner` must have zero
    /// constant term so that the truncation is exact.
    pub fn compose(&self, inner: &TruncatedSeries) -> Result<Self> {
        if inner.coeffs[0] != 0.0 {
            return Err(Error::ShiftedSeries(inner.coeffs[0]));
        }
        let kmax = self.kmax().min(inner.kmax());
        let inner = inner.truncate(kmax);
        // Horner: (((c_K) g + c_{K-1}) g + ...) + c_0
        let mut acc = TruncatedSeries::zero(kmax);
        for k in (0..=kmax).rev() {
            acc = &acc * &inner;
            acc.coeffs[0] += self.coeff(k);
        }
        Ok(acc)
    }

    /// Evaluates the truncated polynomial at `z`.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let kmax = self.kmax().min(rhs.kmax());
        TruncatedSeries::new((0..=kmax).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect())
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let kmax = self.kmax().min(rhs.kmax());
        TruncatedSeries::new((0..=kmax).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect())
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    /// Truncated Cauchy product with compensated inner sums.
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let kmax = self.kmax().min(rhs.kmax());
        let coeffs = (0..=kmax)
            .map(|k| {
                let mut acc = Neumaier::new();
                for i in 0..=k {
                    acc.add(self.coeffs[i] * rhs.coeffs[k - i]);
                }
                acc.total()
            })
            .collect();
        TruncatedSeries::new(coeffs)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `sum_{k>=1} moments[k-1]/k! z^k` truncated at `kmax`.
pub fn series_from_moments(moments: &[f64], kmax: usize) -> TruncatedSeries {
    let mut c = vec![0.0; kmax + 1];
    for k in 1..=kmax {
        c[k] = moments[k - 1] / factorial(k);
    }
    TruncatedSeries::new(c)
}

/// `F_f(x; z) = B^-2 sum_p (f(p)/p)(e^{f(p) z} - 1)`, coefficient of `z^k`
/// being `M_f(x; k-1)/k!`.
pub fn f_series_from_measure(measure: &PrimeMeasure, kmax: usize) -> TruncatedSeries {
    series_from_moments(&moments(measure, kmax), kmax)
}

/// `u'(z) = integral (e^{zt} - 1)/t dPsi(t)`, coefficient of `z^l` being
/// `(1/l!) integral t^{l-1} dPsi`.
pub fn u_prime_series(target: &StepDistribution, kmax: usize) -> TruncatedSeries {
    let m: Vec<f64> = (0..kmax as u32).map(|l| target.moment(l)).collect();
    series_from_moments(&m, kmax)
}

/// `u(z) = integral (e^{zt} - zt - 1)/t^2 dPsi(t)`; coefficient of `z^l` is
/// `(1/l!) integral t^{l-2} dPsi` for `l >= 2`.
pub fn u_series(target: &StepDistribution, kmax: usize) -> TruncatedSeries {
    let mut c = vec![0.0; kmax + 1];
    for l in 2..=kmax {
        c[l] = target.moment(l as u32 - 2) / factorial(l);
    }
    TruncatedSeries::new(c)
}

/// Compositional inverse `g` with `f(g(z)) = z` through degree `kmax`.
///
/// Degree by degree: with `g` known below degree `n`, the coefficient of
/// `z^n` in `f(g)` is `f_1 g_n + (terms in g_1..g_{n-1})`, so
/// `g_n = -[z^n] f(g_{<n}) / f_1`.
pub fn series_inverse(f: &TruncatedSeries) -> Result<TruncatedSeries> {
    if f.coeff(0) != 0.0 {
        return Err(Error::ShiftedSeries(f.coeff(0)));
    }
    let f1 = f.coeff(1);
    if f1 == 0.0 {
        return Err(Error::NonInvertible);
    }
    let kmax = f.kmax();
    let mut g = TruncatedSeries::zero(kmax);
    if kmax >= 1 {
        g.coeffs[1] = 1.0 / f1;
    }
    for n in 2..=kmax {
        let partial = f.truncate(n).compose(&g.truncate(n))?;
        g.coeffs[n] = -partial.coeff(n) / f1;
    }
    Ok(g)
}

/// The recurrence `c(0) = 0, c(1) = 1`,
/// `c(j) = -sum_{i=2}^{j} (M(i-1)/i!) sum_{k_1+...+k_i=j} c(k_1)...c(k_i)`.
///
/// `moments[0]` must be 1 (normalization). `pow[i][j]` holds `[z^j] c(z)^i`
/// and is filled column by column, since degree `j` of `c^i` (i >= 2) only
/// involves `c(1..j-1)`.
fn recurrence_coeffs(moments: &[f64], kmax: usize) -> Vec<f64> {
    let mut c = vec![0.0; kmax + 1];
    if kmax >= 1 {
        c[1] = 1.0;
    }
    // pow[i][j], 1 <= i <= kmax
    let mut pow = vec![vec![0.0f64; kmax + 1]; kmax + 1];
    if kmax >= 1 {
        pow[1][1] = 1.0;
    }
    for j in 2..=kmax {
        for i in 2..=j {
            let mut acc = Neumaier::new();
            // c^i = c * c^{i-1}; c(k) for k >= 1 and c^{i-1} starts at degree i-1
            for k in 1..=(j + 1 - i) {
                acc.add(c[k] * pow[i - 1][j - k]);
            }
            pow[i][j] = acc.total();
        }
        let mut acc = Neumaier::new();
        for i in 2..=j {
            acc.add(moments[i - 1] / factorial(i) * pow[i][j]);
        }
        c[j] = -acc.total();
        pow[1][j] = c[j];
    }
    c
}

/// `lambda_f(x; 0..=kmax)` from the recurrence with the prime-side moments.
pub fn lambda_coeffs(measure: &PrimeMeasure, kmax: usize) -> Vec<f64> {
    recurrence_coeffs(&moments(measure, kmax.max(1)), kmax)
}

/// `Lambda(Psi; 0..=kmax)` from the recurrence with
/// `integral t^{l-1} dPsi = sum_j w_j a_j^{l-1}`.
pub fn levy_lambda_coeffs(target: &StepDistribution, kmax: usize) -> Vec<f64> {
    let m: Vec<f64> = (0..kmax.max(1) as u32).map(|l| target.moment(l)).collect();
    recurrence_coeffs(&m, kmax)
}

/// Recurrence coefficients for an arbitrary moment sequence with `m[0] = 1`.
pub fn coeffs_from_moments(moments: &[f64], kmax: usize) -> Result<Vec<f64>> {
    if moments.len() < kmax {
        return Err(Error::Contract(format!(
            "need {kmax} moments, got {}",
            moments.len()
        )));
    }
    if (moments[0] - 1.0).abs() > 1e-12 {
        return Err(Error::Contract(format!(
            "moment 0 must be 1, got {}",
            moments[0]
        )));
    }
    Ok(recurrence_coeffs(moments, kmax))
}

/// Geometric growth estimate `max_{2<=k<=kmax} |c(k)|^{1/k}`.
pub fn geometric_bound_check(coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() < 3 {
        return Err(Error::Contract("geometric bound needs kmax >= 2".into()));
    }
    Ok(coeffs[2..]
        .iter()
        .enumerate()
        .map(|(i, c)| c.abs().powf(1.0 / (i + 2) as f64))
        .fold(0.0, f64::max))
}

/// One row of the `k, lambda, Lambda, diff` table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoeffRow {
    pub k: usize,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub diff: f64,
}

pub fn coefficient_table(lambda: &[f64], big_lambda: &[f64]) -> Vec<CoeffRow> {
    lambda
        .iter()
        .zip(big_lambda)
        .enumerate()
        .map(|(k, (&l, &b))| CoeffRow {
            k,
            lambda: l,
            big_lambda: b,
            diff: l - b,
        })
        .collect()
}
