//! Lawson-Hanson nonnegative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `argmin ||A x - b||_2` subject to `x >= 0`.
///
/// Returns the solution and the residual norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Contract(format!("rhs has {} rows, matrix {m}", b.len())));
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let tol = 10.0 * f64::EPSILON * scale * (m.max(n) as f64);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let next = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        match next {
            Some(j) if w[j] > tol => passive[j] = true,
            _ => break,
        }
        loop {
            let s = passive_solve(a, b, &passive)?;
            let infeasible: Vec<usize> = (0..n).filter(|&i| passive[i] && s[i] <= tol).collect();
            if infeasible.is_empty() {
                x = s;
                break;
            }
            let alpha = infeasible
                .iter()
                .map(|&i| x[i] / (x[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (&s - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    let residual = (b - a * &x).norm();
    Ok((x, residual))
}

/// Unconstrained least squares on the passive columns, zero elsewhere.
fn passive_solve(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> Result<DVector<f64>> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let sub = a.select_columns(&cols);
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-14)
        .map_err(|e| Error::Contract(format!("least squares failed: {e}")))?;
    let mut full = DVector::zeros(passive.len());
    for (k, &j) in cols.iter().enumerate() {
        full[j] = sol[k];
    }
    Ok(full)
}
