//! Strongly additive functions and their integer-side statistics.
//!
//! A strongly additive `g` is fixed by its values on primes:
//! `g(n) = sum of g(p) over the distinct primes p | n`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sieve::Sieve;
use crate::step::StepDistribution;
use crate::summation::Neumaier;

/// Which primes receive the first value of a two-value function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// `p_i` gets `a` when the 1-based index `i` is odd (2, 5, 11, ...).
    IndexParity,
    /// `p` gets `a` when `p % modulus == residue`.
    Residue { modulus: u32, residue: u32 },
}

type RuleFn = dyn Fn(u64, usize) -> f64 + Send + Sync;

/// The rule assigning `g(p)` to each prime.
#[derive(Clone)]
pub enum Family {
    Zero,
    /// `g(p) = 1`, i.e. `omega(n)`.
    Omega,
    Constant(f64),
    TwoValue { a: f64, b: f64, selector: Selector },
    /// `g(p) = value` if `p % modulus == residue`, else 0.
    Congruence { modulus: u32, residue: u32, value: f64 },
    /// Deterministic assignment of atom locations to primes so that the
    /// prime-side law tracks the target (greedy largest-deficit rule).
    Sampled(StepDistribution),
    /// Arbitrary rule of `(p, 1-based prime index)`.
    Custom(Arc<RuleFn>),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Zero => write!(f, "Zero"),
            Family::Omega => write!(f, "Omega"),
            Family::Constant(c) => write!(f, "Constant({c})"),
            Family::TwoValue { a, b, selector } => write!(f, "TwoValue({a}, {b}, {selector:?})"),
            Family::Congruence {
                modulus,
                residue,
                value,
            } => write!(f, "Congruence({value} on {residue} mod {modulus})"),
            Family::Sampled(d) => write!(f, "Sampled({})", d.to_spec_string()),
            Family::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A named strongly additive function with values in `[0, bound]`.
#[derive(Debug, Clone)]
pub struct AdditiveFunctionSpec {
    pub name: String,
    pub bound: f64,
    pub family: Family,
}

impl AdditiveFunctionSpec {
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            bound: 1.0,
            family: Family::Zero,
        }
    }

    pub fn omega() -> Self {
        Self {
            name: "omega".into(),
            bound: 1.0,
            family: Family::Omega,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            name: format!("constant:{c}"),
            bound: c.abs().max(f64::MIN_POSITIVE),
            family: Family::Constant(c),
        }
    }

    /// `a` on odd-indexed primes, `b` on even-indexed ones.
    pub fn two_value(a: f64, b: f64) -> Self {
        Self {
            name: format!("two-value:{a},{b}"),
            bound: a.abs().max(b.abs()),
            family: Family::TwoValue {
                a,
                b,
                selector: Selector::IndexParity,
            },
        }
    }

    pub fn two_value_residue(a: f64, b: f64, modulus: u32, residue: u32) -> Self {
        Self {
            name: format!("two-value:{a},{b},mod{modulus}={residue}"),
            bound: a.abs().max(b.abs()),
            family: Family::TwoValue {
                a,
                b,
                selector: Selector::Residue { modulus, residue },
            },
        }
    }

    pub fn congruence(modulus: u32, residue: u32, value: f64) -> Self {
        Self {
            name: format!("congruence:{modulus},{residue},{value}"),
            bound: value.abs(),
            family: Family::Congruence {
                modulus,
                residue,
                value,
            },
        }
    }

    pub fn sampled(target: StepDistribution) -> Self {
        Self {
            name: format!("sampled:{}", target.to_spec_string()),
            bound: target.alpha(),
            family: Family::Sampled(target),
        }
    }

    pub fn custom<F>(name: &str, bound: f64, rule: F) -> Self
    where
        F: Fn(u64, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            bound,
            family: Family::Custom(Arc::new(rule)),
        }
    }

    /// Values `g(p)` for the given ascending primes (which must start at 2
    /// for index-based rules to be meaningful). Every value is checked
    /// against `[0, bound]`.
    pub fn values_on_primes(&self, primes: &[u32]) -> Result<Vec<f64>> {
        let values: Vec<f64> = match &self.family {
            Family::Zero => vec![0.0; primes.len()],
            Family::Omega => vec![1.0; primes.len()],
            Family::Constant(c) => vec![*c; primes.len()],
            Family::TwoValue { a, b, selector } => primes
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let first = match selector {
                        Selector::IndexParity => i % 2 == 0,
                        Selector::Residue { modulus, residue } => p % modulus == *residue,
                    };
                    if first {
                        *a
                    } else {
                        *b
                    }
                })
                .collect(),
            Family::Congruence {
                modulus,
                residue,
                value,
            } => primes
                .iter()
                .map(|&p| if p % modulus == *residue { *value } else { 0.0 })
                .collect(),
            Family::Sampled(target) => sampled_values(target, primes),
            Family::Custom(rule) => primes
                .iter()
                .enumerate()
                .map(|(i, &p)| rule(p as u64, i + 1))
                .collect(),
        };
        for (&p, &v) in primes.iter().zip(&values) {
            if !(0.0..=self.bound).contains(&v) {
                return Err(Error::ValueOutOfBounds {
                    name: self.name.clone(),
                    prime: p as u64,
                    value: v,
                    bound: self.bound,
                });
            }
        }
        Ok(values)
    }
}

fn sampled_values(target: &StepDistribution, primes: &[u32]) -> Vec<f64> {
    let atoms = target.atoms();
    let mut assigned = vec![0.0f64; atoms.len()];
    let mut total = 0.0f64;
    primes
        .iter()
        .map(|&p| {
            // atom whose share lags its target mass the most; ties to the lowest
            let mut best = 0;
            let mut best_deficit = f64::NEG_INFINITY;
            for (j, &(_, w)) in atoms.iter().enumerate() {
                let deficit = w * total - assigned[j];
                if deficit > best_deficit {
                    best = j;
                    best_deficit = deficit;
                }
            }
            let a = atoms[best].0;
            let weight = a * a / p as f64;
            assigned[best] += weight;
            total += weight;
            a
        })
        .collect()
}

/// Integer-side statistics of `g` on `n <= x`.
#[derive(Debug, Clone)]
pub struct IntegerStats {
    pub x: u64,
    pub mu: f64,
    pub b2: f64,
    /// `values[n] = g(n)` for `n <= x` (`values[0]` unused, 0); absent when
    /// only the histogram was kept.
    pub values: Option<Vec<f64>>,
    /// Distinct values of `g(n)`, `1 <= n <= x`, ascending, with counts.
    pub histogram: Vec<(f64, u64)>,
}

/// One row of an integer-side tail table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub delta: f64,
    pub tail: f64,
}

/// Prime values `g(p)` for `p <= x`, paired with `p`.
pub fn prime_values(spec: &AdditiveFunctionSpec, sieve: &Sieve, x: u64) -> Result<(Vec<u32>, Vec<f64>)> {
    sieve.check(x)?;
    let primes = sieve.primes().upto(x).to_vec();
    let values = spec.values_on_primes(&primes)?;
    Ok((primes, values))
}

/// `mu(g; x)`: compensated sum of `g(p)/p` in ascending prime order.
pub fn mean_mu(spec: &AdditiveFunctionSpec, sieve: &Sieve, x: u64) -> Result<f64> {
    let (primes, values) = prime_values(spec, sieve, x)?;
    Ok(sum_over_primes(&primes, &values, |g| g))
}

/// `B(g; x)^2`: compensated sum of `g(p)^2/p` in ascending prime order.
pub fn variance_b2(spec: &AdditiveFunctionSpec, sieve: &Sieve, x: u64) -> Result<f64> {
    let (primes, values) = prime_values(spec, sieve, x)?;
    Ok(sum_over_primes(&primes, &values, |g| g * g))
}

pub(crate) fn sum_over_primes(primes: &[u32], values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = Neumaier::new();
    for (&p, &g) in primes.iter().zip(values) {
        acc.add(f(g) / p as f64);
    }
    acc.total()
}

/// Evaluates `g(n)` for every `n <= x`, keeping the value array.
pub fn evaluate_all(spec: &AdditiveFunctionSpec, sieve: &Sieve, x: u64) -> Result<IntegerStats> {
    evaluate(spec, sieve, x, true)
}

/// As [`evaluate_all`] but keeps only the histogram.
pub fn evaluate_summary(spec: &AdditiveFunctionSpec, sieve: &Sieve, x: u64) -> Result<IntegerStats> {
    evaluate(spec, sieve, x, false)
}

fn evaluate(spec: &AdditiveFunctionSpec, sieve: &Sieve, x: u64, keep: bool) -> Result<IntegerStats> {
    let (primes, gp) = prime_values(spec, sieve, x)?;
    let mu = sum_over_primes(&primes, &gp, |g| g);
    let b2 = sum_over_primes(&primes, &gp, |g| g * g);

    let n = x as usize;
    let mut values = vec![0.0f64; n + 1];
    for (&p, &g) in primes.iter().zip(&gp) {
        values[p as usize] = g;
    }
    let spf = sieve.factors().raw();
    for m in 4..=n {
        let p = spf[m] as usize;
        if p == m {
            continue;
        }
        // g(m) = g(m/p) when p^2 | m, else g(m/p) + g(p)
        let rest = m / p;
        values[m] = if rest % p == 0 {
            values[rest]
        } else {
            values[rest] + values[p]
        };
    }

    let mut counts: HashMap<u64, u64> = HashMap::new();
    for &v in &values[1..] {
        *counts.entry(v.to_bits()).or_insert(0) += 1;
    }
    let mut histogram: Vec<(f64, u64)> = counts
        .into_iter()
        .map(|(bits, c)| (f64::from_bits(bits), c))
        .collect();
    histogram.sort_by(|a, b| a.0.total_cmp(&b.0));

    Ok(IntegerStats {
        x,
        mu,
        b2,
        values: keep.then_some(values),
        histogram,
    })
}

impl IntegerStats {
    /// Number of `n <= x` with `g(n) >= threshold`.
    pub fn count_at_least(&self, threshold: f64) -> u64 {
        let start = self.histogram.partition_point(|&(v, _)| v < threshold);
        self.histogram[start..].iter().map(|&(_, c)| c).sum()
    }
}

/// `D_g(x; delta)`: density of `n <= x` with `g(n) >= mu + delta * B`.
pub fn empirical_tail(stats: &IntegerStats, deltas: &[f64]) -> Result<Vec<TailRow>> {
    if !(stats.b2 > 0.0) {
        return Err(Error::Degenerate(stats.x));
    }
    let b = stats.b2.sqrt();
    Ok(deltas
        .iter()
        .map(|&delta| TailRow {
            delta,
            tail: stats.count_at_least(stats.mu + delta * b) as f64 / stats.x as f64,
        })
        .collect())
}
