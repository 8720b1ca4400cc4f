//! Compensated summation.
//!
//! All prime sums go through [`Neumaier`] in a fixed (ascending) order, so a
//! given prime table always produces bit-identical totals.

/// Kahan-Babuska-Neumaier accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<Neumaier>().total()
}

/// `exp(x) - 1 - x` without cancellation for small `|x|`.
pub fn exp_m1_m_x(x: f64) -> f64 {
    if x.abs() < 0.25 {
        // x^2/2! + x^3/3! + ... ; 20 terms reach 1e-17 relative at |x| = 0.25
        let mut term = x * x / 2.0;
        let mut acc = term;
        for k in 3..24 {
            term *= x / k as f64;
            acc += term;
            if term.abs() <= acc.abs() * 1e-18 {
                break;
            }
        }
        acc
    } else {
        x.exp_m1() - x
    }
}

/// `exp(x) - x*exp(x) - 1`, the kernel of the tilted-mean derivative.
pub fn exp_m1_m_x_exp(x: f64) -> f64 {
    // e^x(1-x) - 1 = (e^x - 1 - x) - x(e^x - 1)
    exp_m1_m_x(x) - x * x.exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn exp_kernels_match_direct_away_from_zero() {
        for &x in &[0.3f64, -0.7, 1.5, 3.0] {
            let direct = f64::exp(x) - 1.0 - x;
            assert!((exp_m1_m_x(x) - direct).abs() < 1e-14 * direct.abs().max(1.0));
        }
        let x = 1e-5;
        let series = x * x / 2.0 + x * x * x / 6.0 + x * x * x * x / 24.0;
        assert!((exp_m1_m_x(x) - series).abs() < 1e-15 * series);
        assert!((exp_m1_m_x_exp(0.5) - (0.5f64.exp() * 0.5 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn chunking_does_not_change_result_for_fixed_order() {
        let xs: Vec<f64> = (1..10_000).map(|k| 1.0 / k as f64).collect();
        let whole = compensated_sum(xs.iter().copied());
        let mut acc = Neumaier::new();
        for chunk in xs.chunks(97) {
            for &x in chunk {
                acc.add(x);
            }
        }
        assert_eq!(whole.to_bits(), acc.total().to_bits());
    }
}
