//! Saddle-point parameters `eta_g(x; delta)` and `rho_Psi(B; delta)`.
//!
//! Both solve a tilted-mean equation of the same shape,
//!
//! ```text
//!     sum_j c_j (e^{s a_j} - 1) / a_j = delta * B,
//! ```
//!
//! with `c_j = g(p)^2/p` grouped by value on the arithmetic side and
//! `c_j = B^2 w_j` on the Levy side. The left side is strictly increasing in
//! `s`, so the positive root is unique.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prime_side::{PrimeMeasure, StepDistribution};
use crate::summation::Neumaier;

/// Largest admissible `s * max(a_j)` before exponentials are refused.
pub const EXPONENT_CAP: f64 = 700.0;

/// Bracket width at which bisection hands over to Newton.
const BISECTION_WIDTH: f64 = 1e-3;
const MAX_ITERATIONS: usize = 200;

/// Upper bound on `delta / B` standing in for the asymptotic `delta = o(B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeGuard {
    pub max_ratio: f64,
}

impl Default for RangeGuard {
    fn default() -> Self {
        Self { max_ratio: 0.5 }
    }
}

impl RangeGuard {
    pub fn new(max_ratio: f64) -> Self {
        Self { max_ratio }
    }

    pub fn check(&self, delta: f64, b: f64) -> Result<()> {
        let ratio = delta / b;
        if !(delta >= 0.0) || !(ratio <= self.max_ratio) {
            return Err(Error::Range {
                ratio,
                max: self.max_ratio,
            });
        }
        Ok(())
    }

    pub fn admits(&self, delta: f64, b: f64) -> bool {
        self.check(delta, b).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleSolution {
    pub value: f64,
    /// Residual of the defining equation at the returned value.
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// `sum_j c_j (e^{s a_j} - 1)/a_j` and its derivative `sum_j c_j e^{s a_j}`.
struct TiltedMean {
    atoms: Vec<(f64, f64)>,
    max_loc: f64,
}

impl TiltedMean {
    fn new(atoms: Vec<(f64, f64)>) -> Self {
        let max_loc = atoms.iter().map(|a| a.0).fold(0.0, f64::max);
        Self { atoms, max_loc }
    }

    fn value(&self, s: f64) -> f64 {
        let mut acc = Neumaier::new();
        for &(a, c) in &self.atoms {
            acc.add(c * (s * a).exp_m1() / a);
        }
        acc.total()
    }

    fn derivative(&self, s: f64) -> f64 {
        let mut acc = Neumaier::new();
        for &(a, c) in &self.atoms {
            acc.add(c * (s * a).exp());
        }
        acc.total()
    }

    fn check_exponent(&self, s: f64) -> Result<()> {
        if s * self.max_loc > EXPONENT_CAP {
            return Err(Error::Overflow(format!(
                "saddle parameter {s} times max value {} exceeds {EXPONENT_CAP}",
                self.max_loc
            )));
        }
        Ok(())
    }

    /// Positive root of `value(s) = rhs`: bracket `[0, h]` with `h` doubling
    /// from `initial`, bisection to width 1e-3, then safeguarded Newton.
    fn solve(&self, rhs: f64, initial: f64) -> Result<(f64, usize, (f64, f64))> {
        if rhs == 0.0 {
            return Ok((0.0, 0, (0.0, 0.0)));
        }
        let f = |s: f64| self.value(s) - rhs;
        let mut lo = 0.0;
        let mut hi = initial.max(f64::MIN_POSITIVE);
        let mut iterations = 0;
        loop {
            self.check_exponent(hi)?;
            if f(hi) >= 0.0 {
                break;
            }
            lo = hi;
            hi *= 2.0;
            iterations += 1;
            if iterations > MAX_ITERATIONS {
                return Err(Error::NoConvergence {
                    iterations,
                    lo,
                    hi,
                    residual: f(hi),
                });
            }
        }
        // f(0) = -rhs < 0 <= f(hi): sign change confirmed
        let bracket = (lo, hi);
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let mut s = 0.5 * (lo + hi);
        loop {
            iterations += 1;
            let fs = f(s);
            if fs == 0.0 {
                break;
            }
            if fs < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let mut next = s - fs / self.derivative(s);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - s).abs();
            s = next;
            if step <= 4.0 * f64::EPSILON * s || hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            if iterations > MAX_ITERATIONS {
                return Err(Error::NoConvergence {
                    iterations,
                    lo,
                    hi,
                    residual: fs,
                });
            }
        }
        Ok((s, iterations, bracket))
    }
}

/// `eta_g(x; delta)`: the positive root of
/// `sum_p g(p) e^{eta g(p)}/p = mu(g; x) + delta B(g; x)`.
///
/// The root is computed from the equivalent form
/// `sum_p g(p)(e^{eta g(p)} - 1)/p = delta B`; the reported residual is the
/// defining equation evaluated with the given `mu`.
pub fn solve_eta(measure: &PrimeMeasure, mu: f64, delta: f64, guard: RangeGuard) -> Result<SaddleSolution> {
    let b = measure.b();
    guard.check(delta, b)?;
    let tilt = TiltedMean::new(measure.grouped().collect());
    let (value, iterations, bracket) = tilt.solve(delta * b, delta / b)?;
    let mut lhs = Neumaier::new();
    for (v, w) in measure.grouped() {
        lhs.add(w / v * (value * v).exp());
    }
    Ok(SaddleSolution {
        value,
        residual: lhs.total() - (mu + delta * b),
        iterations,
        bracket,
    })
}

/// `rho_Psi(B; delta)`: the positive root of
/// `B^2 integral (e^{rho u} - 1)/u dPsi(u) = delta B`.
pub fn solve_rho(target: &StepDistribution, b: f64, delta: f64, guard: RangeGuard) -> Result<SaddleSolution> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("B = {b} must be positive")));
    }
    guard.check(delta, b)?;
    let b2 = b * b;
    let tilt = TiltedMean::new(target.atoms().iter().map(|&(a, w)| (a, b2 * w)).collect());
    let (value, iterations, bracket) = tilt.solve(delta * b, delta / b)?;
    Ok(SaddleSolution {
        value,
        residual: tilt.value(value) - delta * b,
        iterations,
        bracket,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub delta: f64,
    pub eta: f64,
    pub rho: f64,
    pub gap: f64,
    pub b2_gap: f64,
}

/// `eta - rho` and `B^2 (eta - rho)` across a delta grid.
pub fn eta_rho_gap(
    measure: &PrimeMeasure,
    mu: f64,
    target: &StepDistribution,
    deltas: &[f64],
    guard: RangeGuard,
) -> Result<Vec<GapRow>> {
    let b = measure.b();
    deltas
        .iter()
        .map(|&delta| {
            let eta = solve_eta(measure, mu, delta, guard)?.value;
            let rho = solve_rho(target, b, delta, guard)?.value;
            let gap = eta - rho;
            Ok(GapRow {
                delta,
                eta,
                rho,
                gap,
                b2_gap: measure.total_mass() * gap,
            })
        })
        .collect()
}
