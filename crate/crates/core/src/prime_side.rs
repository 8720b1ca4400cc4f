//! The prime-side measure `K_f(x; t)`, its moments and distances to a target law.

use serde::Serialize;

use crate::additive::{prime_values, AdditiveFunctionSpec};
use crate::error::{Error, Result};
use crate::sieve::Sieve;
pub use crate::step::{sup_distance, StepDistribution, Steps};
use crate::summation::{compensated_sum, Neumaier};

/// Atoms `(g(p), g(p)^2/p)` for the primes `p <= x` with `g(p) > 0`.
///
/// Atoms with equal values are kept separate; `grouped` aggregates them.
#[derive(Debug, Clone)]
pub struct PrimeMeasure {
    atoms: Vec<(f64, f64)>,
    total_mass: f64,
    mu: f64,
    x: u64,
    grouped: Steps,
}

impl PrimeMeasure {
    /// Builds a measure from raw `(value, weight)` atoms.
    ///
    /// `mu` is the matching `sum g(p)/p`; for synthetic measures pass
    /// `None` to use `sum weight/value`.
    pub fn from_atoms(atoms: Vec<(f64, f64)>, mu: Option<f64>, x: u64) -> Result<Self> {
        for &(v, w) in &atoms {
            if !(v > 0.0 && v.is_finite() && w > 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!("bad atom ({v}, {w})")));
            }
        }
        let total_mass = compensated_sum(atoms.iter().map(|a| a.1));
        if !(total_mass > 0.0) {
            return Err(Error::Degenerate(x));
        }
        let mu = mu.unwrap_or_else(|| compensated_sum(atoms.iter().map(|&(v, w)| w / v)));
        let grouped = Steps::from_pairs(atoms.clone());
        Ok(Self {
            atoms,
            total_mass,
            mu,
            x,
            grouped,
        })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `B^2(g; x)`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn b(&self) -> f64 {
        self.total_mass.sqrt()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn max_value(&self) -> f64 {
        *self.grouped.locs().last().unwrap()
    }

    /// Distinct values with summed (unnormalized) weights, ascending.
    pub fn grouped(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grouped
            .locs()
            .iter()
            .copied()
            .zip(self.grouped.masses().iter().copied())
    }

    /// The normalized law as a step function.
    pub fn normalized_steps(&self) -> Steps {
        Steps::from_pairs(self.grouped().map(|(v, w)| (v, w / self.total_mass)).collect())
    }
}

/// `K_f(x; .)` for `g` on the primes up to `x`.
pub fn prime_measure(spec: &AdditiveFunctionSpec, sieve: &Sieve, x: u64) -> Result<PrimeMeasure> {
    let (primes, values) = prime_values(spec, sieve, x)?;
    let mut mu = Neumaier::new();
    let mut atoms = Vec::new();
    for (&p, &g) in primes.iter().zip(&values) {
        mu.add(g / p as f64);
        if g > 0.0 {
            atoms.push((g, g * g / p as f64));
        }
    }
    if atoms.is_empty() {
        return Err(Error::Degenerate(x));
    }
    PrimeMeasure::from_atoms(atoms, Some(mu.total()), x)
}

/// `K_f(x; t)` with half weight on atoms located exactly at `t`.
pub fn k_distribution(measure: &PrimeMeasure, t: f64) -> f64 {
    measure.grouped.at(t) / measure.total_mass
}

/// `M_f(x; l) = B^-2 sum g(p)^(l+2)/p`.
pub fn moment(measure: &PrimeMeasure, l: u32) -> f64 {
    compensated_sum(measure.grouped().map(|(v, w)| w * v.powi(l as i32))) / measure.total_mass
}

/// First `count` moments `M(0), ..., M(count-1)`.
pub fn moments(measure: &PrimeMeasure, count: usize) -> Vec<f64> {
    (0..count as u32).map(|l| moment(measure, l)).collect()
}

/// Sup over `t` of `|K_f(x; t) - Psi(t)|`, probing both sides of every jump.
pub fn kolmogorov_distance(measure: &PrimeMeasure, target: &StepDistribution) -> f64 {
    sup_distance(&measure.normalized_steps(), target.steps(), &[])
}

/// One row of the `(t, K, Psi, K - Psi)` table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DistributionRow {
    pub t: f64,
    pub k: f64,
    pub psi: f64,
    pub diff: f64,
}

/// `K` and `Psi` on the merged jump grid: each jump location with its left
/// limit, midpoint value and right limit.
pub fn distribution_table(measure: &PrimeMeasure, target: &StepDistribution) -> Vec<DistributionRow> {
    let k = measure.normalized_steps();
    let psi = target.steps();
    let mut locs: Vec<f64> = k.locs().iter().chain(psi.locs()).copied().collect();
    locs.sort_by(f64::total_cmp);
    locs.dedup();
    let mut rows = Vec::with_capacity(locs.len() * 3);
    for t in locs {
        for (kv, pv) in [
            (k.left(t), psi.left(t)),
            (k.at(t), psi.at(t)),
            (k.right(t), psi.right(t)),
        ] {
            rows.push(DistributionRow {
                t,
                k: kv,
                psi: pv,
                diff: kv - pv,
            });
        }
    }
    rows
}
