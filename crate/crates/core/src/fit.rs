//! Small least-squares helpers.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let f = lstsq(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] }, y)?;
    Ok(LineFit { slope: f.coef[1], intercept: f.coef[0], rms: f.rms })
}

#[derive(Clone, Debug)]
pub struct LsqFit {
    pub coef: Vec<f64>,
    /// Standard errors from `rms^2 (A^T A)^{-1}`.
    pub stderr: Vec<f64>,
    pub rms: f64,
}

/// Ordinary least squares with design matrix entries `basis(row, col)`.
/// Columns are scaled to unit norm before the SVD solve.
pub fn lstsq(rows: usize, cols: usize, basis: impl Fn(usize, usize) -> f64, y: &[f64]) -> Result<LsqFit> {
    if rows < cols || y.len() != rows {
        return Err(Error::InsufficientOverlap(format!("{rows} samples for {cols} unknowns")));
    }
    let mut a = DMatrix::from_fn(rows, cols, basis);
    let mut norms = vec![1.0; cols];
    for j in 0..cols {
        let nrm = a.column(j).norm();
        if nrm > 0.0 {
            norms[j] = nrm;
            a.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-14 * svd.singular_values.max()).map_err(|e| Error::Domain(format!("least squares: {e}")))?;
    let res = &a * &sol - &b;
    let dof = (rows - cols).max(1) as f64;
    let rms = (res.norm_squared() / dof).sqrt();
    // diag((A^T A)^+) = sum_i V_ji^2 / s_i^2 over the retained singular values
    let vt = svd.v_t.as_ref().unwrap();
    let smax = svd.singular_values.max();
    let var = |j: usize| -> f64 {
        (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > 1e-14 * smax)
            .map(|i| (vt[(i, j)] / svd.singular_values[i]).powi(2))
            .sum()
    };
    let coef = (0..cols).map(|j| sol[j] / norms[j]).collect();
    let stderr = (0..cols).map(|j| rms * var(j).sqrt() / norms[j]).collect();
    Ok(LsqFit { coef, stderr, rms })
}

/// Minimise a unimodal function on `[a, b]`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(f.slope, -2.0, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 3.0, epsilon = 1e-12);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn quadratic_basis_with_errors() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 1.0 + v * v + if i % 2 == 0 { 1e-3 } else { -1e-3 }).collect();
        let f = lstsq(x.len(), 3, |i, j| x[i].powi(j as i32), &y).unwrap();
        assert!((f.coef[2] - 1.0).abs() < 5.0 * f.stderr[2] + 1e-9);
        assert!(f.rms > 5e-4 && f.rms < 2e-3);
    }

    #[test]
    fn golden_minimum() {
        let m = golden_section(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((m - 0.3).abs() < 1e-8);
    }

    #[test]
    fn underdetermined_rejected() {
        assert!(lstsq(1, 2, |_, _| 1.0, &[1.0]).is_err());
    }
}
