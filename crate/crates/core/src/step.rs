//! Finite-atom distribution functions with the midpoint convention at jumps.
//!
//! A jump of size `m` at `a` contributes `0` for `t < a`, `m/2` at `t = a`
//! and `m` for `t > a`. Left and right limits are exposed separately so that
//! sup-distances can probe both sides of every jump.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::{compensated_sum, Neumaier};

const MASS_TOLERANCE: f64 = 1e-9;

/// Sorted jump locations with cumulative masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Steps {
    locs: Vec<f64>,
    masses: Vec<f64>,
    /// `cum[i]` = total mass of `locs[..i]`; length `locs.len() + 1`.
    cum: Vec<f64>,
}

impl Steps {
    /// Builds from `(location, mass)` pairs; equal locations are merged.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut locs: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut acc: Vec<Neumaier> = Vec::with_capacity(pairs.len());
        for (loc, mass) in pairs {
            if locs.last() == Some(&loc) {
                acc.last_mut().unwrap().add(mass);
            } else {
                locs.push(loc);
                let mut n = Neumaier::new();
                n.add(mass);
                acc.push(n);
            }
        }
        let masses: Vec<f64> = acc.iter().map(Neumaier::total).collect();
        let mut cum = Vec::with_capacity(masses.len() + 1);
        let mut running = Neumaier::new();
        cum.push(0.0);
        for &m in &masses {
            running.add(m);
            cum.push(running.total());
        }
        Self { locs, masses, cum }
    }

    pub fn locs(&self) -> &[f64] {
        &self.locs
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Mass strictly below `t`.
    pub fn left(&self, t: f64) -> f64 {
        self.cum[self.locs.partition_point(|&a| a < t)]
    }

    /// Mass at or below `t`.
    pub fn right(&self, t: f64) -> f64 {
        self.cum[self.locs.partition_point(|&a| a <= t)]
    }

    /// Midpoint-convention value at `t`.
    pub fn at(&self, t: f64) -> f64 {
        0.5 * (self.left(t) + self.right(t))
    }
}

/// Sup of `|a(t) - b(t)|` over `t` outside the open intervals `excluded`,
/// with `a`, `b` evaluated under the midpoint convention. At every jump the
/// value and both one-sided limits are probed; a one-sided limit counts only
/// if the points on that side are admissible.
pub fn sup_distance(a: &Steps, b: &Steps, excluded: &[(f64, f64)]) -> f64 {
    let mut candidates: Vec<f64> = a
        .locs()
        .iter()
        .chain(b.locs())
        .copied()
        .chain(excluded.iter().flat_map(|&(l, r)| [l, r]))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let inside = |c: f64| excluded.iter().any(|&(l, r)| l < c && c < r);
    let left_blocked = |c: f64| excluded.iter().any(|&(l, r)| l < c && c <= r);
    let right_blocked = |c: f64| excluded.iter().any(|&(l, r)| l <= c && c < r);

    let mut sup = 0.0f64;
    for &c in &candidates {
        if !inside(c) {
            sup = sup.max((a.at(c) - b.at(c)).abs());
        }
        if !left_blocked(c) {
            sup = sup.max((a.left(c) - b.left(c)).abs());
        }
        if !right_blocked(c) {
            sup = sup.max((a.right(c) - b.right(c)).abs());
        }
    }
    sup
}

/// A distribution function with finitely many atoms in `(0, alpha]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepDistributionRepr", into = "StepDistributionRepr")]
pub struct StepDistribution {
    atoms: Vec<(f64, f64)>,
    alpha: f64,
    #[serde(skip)]
    steps: Option<Steps>,
}

#[derive(Serialize, Deserialize)]
struct StepDistributionRepr {
    atoms: Vec<(f64, f64)>,
    alpha: f64,
}

impl TryFrom<StepDistributionRepr> for StepDistribution {
    type Error = Error;
    fn try_from(r: StepDistributionRepr) -> Result<Self> {
        StepDistribution::with_alpha(r.atoms, r.alpha)
    }
}

impl From<StepDistribution> for StepDistributionRepr {
    fn from(d: StepDistribution) -> Self {
        StepDistributionRepr {
            atoms: d.atoms,
            alpha: d.alpha,
        }
    }
}

impl StepDistribution {
    /// Atoms as `(location, mass)`; the support bound is the largest location.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let alpha = atoms.iter().map(|a| a.0).fold(f64::NAN, f64::max);
        Self::with_alpha(atoms, alpha)
    }

    pub fn with_alpha(mut atoms: Vec<(f64, f64)>, alpha: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidDistribution(format!(
                    "repeated location {}",
                    w[0].0
                )));
            }
        }
        for &(loc, mass) in &atoms {
            if !(loc > 0.0 && loc.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "location {loc} is not in (0, inf)"
                )));
            }
            if !(mass > 0.0 && mass.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "mass {mass} at {loc} is not positive"
                )));
            }
        }
        if !(alpha.is_finite() && alpha >= atoms.last().unwrap().0) {
            return Err(Error::InvalidDistribution(format!(
                "support bound {alpha} is below the largest atom"
            )));
        }
        let total = compensated_sum(atoms.iter().map(|a| a.1));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        let steps = Some(Steps::from_pairs(atoms.clone()));
        Ok(Self {
            atoms,
            alpha,
            steps,
        })
    }

    /// The unit step at `a`.
    pub fn delta(a: f64) -> Result<Self> {
        Self::new(vec![(a, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn steps(&self) -> &Steps {
        self.steps.as_ref().expect("steps built on construction")
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.steps().at(t)
    }

    /// `integral t^l dPsi`.
    pub fn moment(&self, l: u32) -> f64 {
        compensated_sum(self.atoms.iter().map(|&(a, w)| w * a.powi(l as i32)))
    }

    /// Parses `delta:A` or `atoms:A1@W1,A2@W2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidDistribution(format!("`{s}`: {m}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("expected kind:params"))?;
        match kind.trim() {
            "delta" => {
                let a: f64 = rest.trim().parse().map_err(|_| bad("bad location"))?;
                Self::delta(a)
            }
            "atoms" => {
                let mut atoms = Vec::new();
                for part in rest.split(',') {
                    let (a, w) = part.split_once('@').ok_or_else(|| bad("expected A@W"))?;
                    let a: f64 = a.trim().parse().map_err(|_| bad("bad location"))?;
                    let w: f64 = w.trim().parse().map_err(|_| bad("bad mass"))?;
                    atoms.push((a, w));
                }
                Self::new(atoms)
            }
            other => Err(bad(&format!("unknown target kind `{other}`"))),
        }
    }

    /// Inverse of [`StepDistribution::parse`] (shortest round-trip floats).
    pub fn to_spec_string(&self) -> String {
        if self.atoms.len() == 1 {
            format!("delta:{}", self.atoms[0].0)
        } else {
            let parts: Vec<String> = self
                .atoms
                .iter()
                .map(|(a, w)| format!("{a}@{w}"))
                .collect();
            format!("atoms:{}", parts.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_uses_midpoint() {
        let d = StepDistribution::delta(1.0).unwrap();
        assert_eq!(d.cdf(0.5), 0.0);
        assert_eq!(d.cdf(1.0), 0.5);
        assert_eq!(d.cdf(1.5), 1.0);
        assert_eq!(d.steps().left(1.0), 0.0);
        assert_eq!(d.steps().right(1.0), 1.0);
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(StepDistribution::new(vec![]).is_err());
        assert!(StepDistribution::new(vec![(0.0, 1.0)]).is_err());
        assert!(StepDistribution::new(vec![(1.0, 0.5)]).is_err());
        assert!(StepDistribution::new(vec![(1.0, 0.5), (1.0, 0.5)]).is_err());
        assert!(StepDistribution::new(vec![(0.5, -0.5), (1.0, 1.5)]).is_err());
        assert!(StepDistribution::with_alpha(vec![(2.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let d = StepDistribution::parse("atoms:1@0.8, 0.5@0.2").unwrap();
        assert_eq!(d.atoms(), &[(0.5, 0.2), (1.0, 0.8)]);
        assert_eq!(StepDistribution::parse(&d.to_spec_string()).unwrap(), d);
        let e = StepDistribution::parse("delta:0.5").unwrap();
        assert_eq!(e.to_spec_string(), "delta:0.5");
        assert!(StepDistribution::parse("gauss:1").is_err());
    }

    #[test]
    fn sup_distance_examples() {
        let d1 = StepDistribution::delta(1.0).unwrap();
        let dh = StepDistribution::delta(0.5).unwrap();
        assert_eq!(sup_distance(d1.steps(), d1.steps(), &[]), 0.0);
        assert_eq!(sup_distance(d1.steps(), dh.steps(), &[]), 1.0);
        // with both jumps excluded nothing separates the two laws except (0.5, 1)
        let ex = [(0.48, 0.52), (0.98, 1.02)];
        assert_eq!(sup_distance(d1.steps(), dh.steps(), &ex), 1.0);
        let close = StepDistribution::delta(1.01).unwrap();
        assert_eq!(sup_distance(d1.steps(), close.steps(), &[(0.98, 1.02)]), 0.0);
        assert_eq!(sup_distance(d1.steps(), close.steps(), &[]), 1.0);
    }

    #[test]
    fn sup_distance_matches_fine_grid() {
        let a = Steps::from_pairs(vec![(0.25, 0.3), (0.5, 0.2), (0.9, 0.5)]);
        let b = Steps::from_pairs(vec![(0.3, 0.5), (0.5, 0.1), (1.0, 0.4)]);
        let mut grid_sup = 0.0f64;
        for i in 0..=20_000 {
            let t = -0.5 + 2.0 * i as f64 / 20_000.0;
            grid_sup = grid_sup.max((a.at(t) - b.at(t)).abs());
        }
        let exact = sup_distance(&a, &b, &[]);
        assert!(exact >= grid_sup - 1e-15);
        // one-sided limits are approached on the grid to within the grid step
        let mut near = 0.0f64;
        for &c in a.locs().iter().chain(b.locs()) {
            for t in [c - 1e-9, c, c + 1e-9] {
                near = near.max((a.at(t) - b.at(t)).abs());
            }
        }
        assert!((exact - near).abs() < 1e-12);
    }
}
