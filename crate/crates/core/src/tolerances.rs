//! Numerical tolerances and calibrated bands used by the checks.

/// Closed-form coefficients `(-1)^{k+1}/k`.
pub const CLOSED_FORM_COEFFS: f64 = 1e-12;

/// Recurrence vs compositional inverse of `u'`, through degree 20.
pub const LAGRANGE_EQUIVALENCE: f64 = 1e-10;

/// Relative agreement of series and saddle exponents.
pub const EXPONENT_IDENTITY: f64 = 1e-8;

/// Saddle solutions vs `log(1 + delta/B)`, and the residual contract.
pub const SADDLE_CLOSED_FORM: f64 = 1e-12;

/// Bound on `B^2 |eta - rho|` at `delta = B^{1/2}` for the two-value spec
/// (`g(p) = 1/2` on odd prime index, 1 on even) against its limit
/// `atoms:0.5@0.2,1@0.8`.
///
/// Calibration: 0.0046, 0.0045, 0.0044 at `x = 1e4, 1e5, 1e6`; the
/// mismatched target `delta:1` gives 0.028, 0.029, 0.030. The bound sits
/// roughly 2x above the matched values and 3x below the mismatched ones.
pub const GAP_REGRESSION_BOUND: f64 = 0.01;

/// `hwang_tail_saddle(delta_1) / poisson_tail` at `B^2 = 400, delta = 2`.
pub const POISSON_CONSISTENCY: (f64, f64) = (0.85, 1.15);

/// Sampler characteristic function band, `5/sqrt(n)`.
pub fn char_function_band(n: usize) -> f64 {
    5.0 / (n as f64).sqrt()
}

/// `mu` and `B^2` vs an independent high-precision prime sum.
pub const PRIME_SUM_ORACLE: f64 = 1e-12;

/// Envelope for empirical `omega` tails over `poisson_tail(B^2, delta)`.
/// Sanity envelopes, not constants of the theory.
pub const OMEGA_ENVELOPE_1E6: (f64, f64) = (0.6, 1.6);
pub const OMEGA_ENVELOPE_1E7: (f64, f64) = (0.7, 1.4);

/// Converse reconstruction: distance at the largest `x`, and the floor
/// the mismatched-target control must stay above.
pub const CONVERSE_DISTANCE: f64 = 0.05;
pub const CONVERSE_NEGATIVE_FLOOR: f64 = 0.2;

/// `lambda -> moments -> lambda` and `series_inverse` composition residuals.
pub const ROUND_TRIP: f64 = 1e-9;

/// `empirical / hwang_tail_saddle` for `omega`, `delta_1`, `x = 1e6`,
/// `delta = 1` with the guard relaxed to 1. Recorded value 0.2615
/// (empirical 0.044785, saddle form 0.17128); the band is +-15% around it.
pub const FORWARD_RATIO_OMEGA_1E6: (f64, f64) = (0.222, 0.301);
