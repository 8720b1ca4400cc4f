//! Closed-form and asymptotic tail quantities.
//!
//! Every asymptotic form is a product `exp(log_correction) * gaussian_factor`.
//! Series forms use `gaussian_factor = Q(delta)` (the Gaussian upper tail);
//! saddle forms use `e^{delta^2/2} Q(delta)` and carry `-delta^2/2` inside
//! their exponent instead.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prime_side::{PrimeMeasure, StepDistribution};
use crate::saddle::SaddleSolution;
use crate::series::geometric_bound_check;
use crate::summation::{exp_m1_m_x_exp, Neumaier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailForm {
    Series,
    Saddle,
    Poisson,
    Mills,
}

impl TailForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailForm::Series => "series",
            TailForm::Saddle => "saddle",
            TailForm::Poisson => "poisson",
            TailForm::Mills => "mills",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailValue {
    pub form: TailForm,
    pub log_correction: f64,
    pub gaussian_factor: f64,
    pub value: f64,
    /// Bound on the neglected part of the exponent (series forms), else 0.
    pub remainder_bound: f64,
    /// Set when the raw product exceeded 1 and `value` was capped.
    pub clamped: bool,
}

impl TailValue {
    fn product(form: TailForm, log_correction: f64, gaussian_factor: f64, remainder_bound: f64) -> Self {
        let raw = log_correction.exp() * gaussian_factor;
        let clamped = raw > 1.0;
        Self {
            form,
            log_correction,
            gaussian_factor,
            value: if clamped { 1.0 } else { raw },
            remainder_bound,
            clamped,
        }
    }
}

/// Gaussian upper tail `integral_delta^inf e^{-u^2/2} du / sqrt(2 pi)`.
pub fn mills_tail(delta: f64) -> f64 {
    0.5 * libm::erfc(delta * FRAC_1_SQRT_2)
}

/// `e^{delta^2/2} * mills_tail(delta)`, finite for large `delta`.
pub fn scaled_mills(delta: f64) -> f64 {
    if delta < 25.0 {
        (0.5 * delta * delta).exp() * mills_tail(delta)
    } else {
        // continued fraction 1/(d + 1/(d + 2/(d + 3/(d + ...)))) / sqrt(2 pi)
        let mut tail = delta;
        for k in (1..=60).rev() {
            tail = delta + k as f64 / tail;
        }
        1.0 / (tail * (2.0 * PI).sqrt())
    }
}

/// `P(X >= lambda + sqrt(lambda) delta)` for `X ~ Poisson(lambda)`.
///
/// Terms are summed upward from the threshold in log scale relative to the
/// largest term, so nothing underflows before it matters.
pub fn poisson_tail(lambda: f64, delta: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("Poisson parameter {lambda} must be positive")));
    }
    let start = (lambda + lambda.sqrt() * delta).ceil().max(0.0);
    if start == 0.0 {
        return Ok(1.0);
    }
    let log_pmf = |v: f64| -lambda + v * lambda.ln() - libm::lgamma(v + 1.0);
    let mode = lambda.floor();
    let reference = log_pmf(start.max(mode));
    let mut v = start;
    let mut term = (log_pmf(v) - reference).exp();
    let mut acc = Neumaier::new();
    loop {
        acc.add(term);
        v += 1.0;
        term *= lambda / v;
        if v > lambda && term <= acc.total() * 1e-18 {
            break;
        }
    }
    Ok((acc.total().ln() + reference).exp().min(1.0))
}

/// Largest admissible `delta/B` for a series with geometric growth `c_hat`.
pub fn series_radius(c_hat: f64) -> f64 {
    if c_hat > 0.0 {
        0.5 / c_hat
    } else {
        f64::INFINITY
    }
}

fn series_tail(coeffs: &[f64], b: f64, delta: f64) -> Result<TailValue> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("B = {b} must be positive")));
    }
    if coeffs.len() < 3 {
        return Err(Error::Contract("series tail needs coefficients through index 2".into()));
    }
    let c_hat = geometric_bound_check(coeffs)?;
    let xi = delta / b;
    let radius = series_radius(c_hat);
    if !(xi <= radius) || delta < 0.0 {
        return Err(Error::Range {
            ratio: xi,
            max: radius,
        });
    }
    // sum_{k=0}^{K} c(k+2)/(k+3) xi^k, K = len - 3
    let kmax = coeffs.len() - 3;
    let mut acc = Neumaier::new();
    let mut power = 1.0;
    for k in 0..=kmax {
        acc.add(coeffs[k + 2] / (k + 3) as f64 * power);
        power *= xi;
    }
    let scale = delta.powi(3) / b;
    let log_correction = -scale * acc.total();
    // |c(k+2)| <= c_hat^{k+2}: tail of the k-sum beyond K, times delta^3/B
    let remainder_bound = if c_hat > 0.0 {
        scale * c_hat.powi(kmax as i32 + 3) * xi.powi(kmax as i32 + 1) / (1.0 - c_hat * xi)
    } else {
        0.0
    };
    Ok(TailValue::product(
        TailForm::Series,
        log_correction,
        mills_tail(delta),
        remainder_bound,
    ))
}

/// Integer-side series form with `lambda_f(x; k)`:
/// `exp(-(delta^3/B) sum_k lambda(k+2)/(k+3) (delta/B)^k) Q(delta)`.
///
/// The k-sum runs over every supplied coefficient; the guard
/// `delta/B <= 0.5/C_hat` uses the geometric estimate of the same table.
pub fn maciulis_tail_series(lambda: &[f64], b: f64, delta: f64) -> Result<TailValue> {
    series_tail(lambda, b, delta)
}

/// Levy-side series form, as [`maciulis_tail_series`] with `Lambda(Psi; k)`.
pub fn hwang_tail_series(big_lambda: &[f64], b: f64, delta: f64) -> Result<TailValue> {
    series_tail(big_lambda, b, delta)
}

fn check_exponent(s: f64, max_loc: f64) -> Result<()> {
    if s * max_loc > crate::saddle::EXPONENT_CAP {
        return Err(Error::Overflow(format!(
            "saddle parameter {s} times max value {max_loc} exceeds the exponent cap"
        )));
    }
    Ok(())
}

/// Integer-side saddle form:
/// `exp(sum_p (e^{eta g} - eta g - 1)/p - eta sum_p g (e^{eta g} - 1)/p)
///  e^{delta^2/2} Q(delta)`.
///
/// Per atom the exponent is `(w/v^2) (e^{eta v}(1 - eta v) - 1)` with
/// `w = g(p)^2/p`, `v = g(p)`.
pub fn maciulis_tail_saddle(measure: &PrimeMeasure, delta: f64, eta: &SaddleSolution) -> Result<TailValue> {
    check_exponent(eta.value, measure.max_value())?;
    let mut acc = Neumaier::new();
    for (v, w) in measure.grouped() {
        acc.add(w / (v * v) * exp_m1_m_x_exp(eta.value * v));
    }
    Ok(TailValue::product(TailForm::Saddle, acc.total(), scaled_mills(delta), 0.0))
}

/// Levy-side saddle form:
/// `exp(B^2 integral (e^{rho u} - rho u - 1)/u^2 dPsi - B^2 rho integral (e^{rho u} - 1)/u dPsi)
///  e^{delta^2/2} Q(delta)`.
pub fn hwang_tail_saddle(target: &StepDistribution, b: f64, delta: f64, rho: &SaddleSolution) -> Result<TailValue> {
    check_exponent(rho.value, target.alpha())?;
    let mut acc = Neumaier::new();
    for &(a, w) in target.atoms() {
        acc.add(w / (a * a) * exp_m1_m_x_exp(rho.value * a));
    }
    Ok(TailValue::product(
        TailForm::Saddle,
        b * b * acc.total(),
        scaled_mills(delta),
        0.0,
    ))
}

/// `mills_tail` as a [`TailValue`].
pub fn mills_value(delta: f64) -> TailValue {
    TailValue::product(TailForm::Mills, 0.0, mills_tail(delta), 0.0)
}

/// `poisson_tail` as a [`TailValue`].
pub fn poisson_value(lambda: f64, delta: f64) -> Result<TailValue> {
    Ok(TailValue::product(TailForm::Poisson, 0.0, poisson_tail(lambda, delta)?, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::{solve_eta, solve_rho, RangeGuard};
    use crate::series::levy_lambda_coeffs;

    #[test]
    fn mills_values() {
        assert_eq!(mills_tail(0.0), 0.5);
        // scipy.special.erfc oracle: 0.5*erfc(1/sqrt 2), 0.5*erfc(5/sqrt 2)
        assert!((mills_tail(1.0) / 0.15865525393145707 - 1.0).abs() < 1e-14);
        assert!((mills_tail(5.0) / 2.866515718791939e-07 - 1.0).abs() < 1e-14);
        for d in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            assert!(mills_tail(d) <= 0.5 * (-d * d / 2.0).exp());
        }
    }

    #[test]
    fn scaled_mills_is_continuous_across_the_switch() {
        let below = (0.5 * 24.999f64 * 24.999).exp() * mills_tail(24.999);
        let above = scaled_mills(25.0);
        assert!((below / above - 1.0).abs() < 1e-4);
        // Q(d) e^{d^2/2} ~ 1/(d sqrt(2 pi))
        let d = 100.0;
        assert!((scaled_mills(d) * d * (2.0 * PI).sqrt() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn poisson_tail_examples() {
        let e = (-1.0f64).exp();
        assert!((poisson_tail(1.0, 1.0).unwrap() - (1.0 - 2.0 * e)).abs() < 1e-15);
        // scipy.stats.poisson.sf(5, 4)
        assert!((poisson_tail(4.0, 1.0).unwrap() / 0.2148696129695948 - 1.0).abs() < 1e-13);
        // scipy.stats.poisson.sf(99, 100)
        let med = poisson_tail(100.0, 0.0).unwrap();
        assert!((med / 0.5132987982791487 - 1.0).abs() < 1e-12);
        assert!(med > 0.4);
        assert_eq!(poisson_tail(3.0, -10.0).unwrap(), 1.0);
        assert!(poisson_tail(0.0, 1.0).is_err());
        assert!(poisson_tail(-1.0, 1.0).is_err());
        // deep tail: scipy.stats.poisson.sf(199, 50)
        let deep = poisson_tail(50.0, 150.0 / 50f64.sqrt() - 1e-9).unwrap();
        assert!((deep / 2.0247590148473265e-57 - 1.0).abs() < 1e-10, "{deep}");
    }

    #[test]
    fn gaussian_case_reduces_to_mills() {
        let zeros = vec![0.0, 1.0, 0.0, 0.0, 0.0];
        let v = hwang_tail_series(&zeros, 10.0, 2.0).unwrap();
        assert_eq!(v.value, mills_tail(2.0));
        assert_eq!(v.remainder_bound, 0.0);
        let v = maciulis_tail_series(&zeros, 10.0, 2.0).unwrap();
        assert_eq!(v.log_correction, 0.0);
    }

    #[test]
    fn series_leading_term() {
        let d1 = StepDistribution::delta(1.0).unwrap();
        let c = levy_lambda_coeffs(&d1, 20);
        let (b, delta) = (1e4, 2.0);
        let v = hwang_tail_series(&c, b, delta).unwrap();
        let lead = -(delta.powi(3) / b) * c[2] / 3.0;
        assert!((v.log_correction / lead - 1.0).abs() < 1e-3);
    }

    #[test]
    fn series_guard() {
        let d1 = StepDistribution::delta(1.0).unwrap();
        let c = levy_lambda_coeffs(&d1, 20);
        let radius = series_radius(geometric_bound_check(&c).unwrap());
        assert!(hwang_tail_series(&c, 10.0, 9.99 * radius).is_ok());
        assert!(matches!(
            hwang_tail_series(&c, 10.0, 10.01 * radius),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn truncation_change_within_remainder_bound() {
        let target = StepDistribution::new(vec![(0.3, 0.4), (1.0, 0.6)]).unwrap();
        let (b, delta) = (5.0, 2.0);
        let short = hwang_tail_series(&levy_lambda_coeffs(&target, 22), b, delta).unwrap();
        let long = hwang_tail_series(&levy_lambda_coeffs(&target, 27), b, delta).unwrap();
        let change = (short.log_correction - long.log_correction).abs();
        assert!(change <= short.remainder_bound, "{change} vs {}", short.remainder_bound);
    }

    #[test]
    fn delta_one_series_equals_omega_series() {
        let d1 = StepDistribution::delta(1.0).unwrap();
        let big = levy_lambda_coeffs(&d1, 30);
        let m = PrimeMeasure::from_atoms(vec![(1.0, 25.0)], None, 0).unwrap();
        let small = crate::series::lambda_coeffs(&m, 30);
        let a = hwang_tail_series(&big, 5.0, 2.0).unwrap();
        let b = maciulis_tail_series(&small, 5.0, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn omega_saddle_matches_direct_prime_sum() {
        let sieve = crate::sieve::Sieve::new(100_000).unwrap();
        let spec = crate::additive::AdditiveFunctionSpec::omega();
        let m = crate::prime_side::prime_measure(&spec, &sieve, 100_000).unwrap();
        let b = m.b();
        let delta = 0.3 * b;
        let eta = solve_eta(&m, m.mu(), delta, RangeGuard::default()).unwrap();
        let v = maciulis_tail_saddle(&m, delta, &eta).unwrap();
        // direct summation over primes of both displayed sums
        let mut first = 0.0;
        let mut second = 0.0;
        for &p in sieve.primes().upto(100_000) {
            let p = p as f64;
            first += (eta.value.exp() - eta.value - 1.0) / p;
            second += (eta.value.exp() - 1.0) / p;
        }
        let direct = first - eta.value * second;
        assert!((v.log_correction - direct).abs() < 1e-12 * direct.abs());
        // closed form B^2 [e^eta (1 - eta) - 1]
        let closed = m.total_mass() * (eta.value.exp() * (1.0 - eta.value) - 1.0);
        assert!((v.log_correction - closed).abs() < 1e-12 * closed.abs());
    }

    #[test]
    fn saddle_forms_at_small_delta() {
        let d1 = StepDistribution::delta(1.0).unwrap();
        let rho = solve_rho(&d1, 10.0, 0.0, RangeGuard::default()).unwrap();
        let v = hwang_tail_saddle(&d1, 10.0, 0.0, &rho).unwrap();
        assert_eq!(v.value, 0.5);
        let rho = solve_rho(&d1, 10.0, 1e-6, RangeGuard::default()).unwrap();
        let v = hwang_tail_saddle(&d1, 10.0, 1e-6, &rho).unwrap();
        assert!((v.value - 0.5).abs() < 1e-6);
    }

    #[test]
    fn hwang_saddle_hand_formula() {
        // Psi = delta_1: exponent B^2 (u(rho) - rho u'(rho)), u = e^z - z - 1
        let d1 = StepDistribution::delta(1.0).unwrap();
        let (b, delta) = (6.0, 2.0);
        let rho = solve_rho(&d1, b, delta, RangeGuard::default()).unwrap();
        let r = rho.value;
        let hand = b * b * ((r.exp() - r - 1.0) - r * (r.exp() - 1.0));
        let v = hwang_tail_saddle(&d1, b, delta, &rho).unwrap();
        assert!((v.log_correction - hand).abs() < 1e-12 * hand.abs());
    }

    #[test]
    fn tails_decrease_in_delta() {
        let target = StepDistribution::new(vec![(0.5, 0.2), (1.0, 0.8)]).unwrap();
        let b = 10.0;
        let c = levy_lambda_coeffs(&target, 30);
        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for i in 0..=20 {
            let delta = 0.25 * i as f64;
            let rho = solve_rho(&target, b, delta, RangeGuard::default()).unwrap();
            let sad = hwang_tail_saddle(&target, b, delta, &rho).unwrap().value;
            let ser = hwang_tail_series(&c, b, delta).unwrap().value;
            let poi = poisson_tail(b * b, delta).unwrap();
            assert!(sad <= last.0 && ser <= last.1 && poi <= last.2);
            last = (sad, ser, poi);
        }
    }

    #[test]
    fn overflow_guard() {
        let d1 = StepDistribution::delta(1.0).unwrap();
        let fake = SaddleSolution {
            value: 800.0,
            residual: 0.0,
            iterations: 0,
            bracket: (0.0, 0.0),
        };
        assert!(matches!(hwang_tail_saddle(&d1, 1.0, 1.0, &fake), Err(Error::Overflow(_))));
    }
}
