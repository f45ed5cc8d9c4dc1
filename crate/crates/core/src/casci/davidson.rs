use log::trace;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_sorted;

#[derive(Debug, Clone)]
pub struct DavidsonResult {
    pub eigenvalue: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Lowest eigenpair of a symmetric operator given its diagonal and a
/// matrix-vector product.
///
/// Diagonal preconditioner; the subspace collapses onto the current Ritz
/// vector once it holds `max_subspace` vectors; the initial guess is the unit
/// vector on the lowest diagonal element.
pub fn davidson_lowest(
    diag: &[f64],
    sigma: impl Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    max_iter: usize,
    max_subspace: usize,
) -> Result<DavidsonResult> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::domain("empty eigenproblem"));
    }
    let max_subspace = max_subspace.max(2);
    let start = (0..n).fold(0, |best, i| if diag[i] < diag[best] { i } else { best });
    let mut v0 = vec![0.0; n];
    v0[start] = 1.0;
    let mut vs: Vec<Vec<f64>> = vec![v0];
    let mut avs: Vec<Vec<f64>> = vec![sigma(&vs[0])];
    let mut history = Vec::new();

    for iter in 1..=max_iter {
        let k = vs.len();
        let g = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&vs[i], &avs[j]) + dot(&vs[j], &avs[i])));
        let (theta, y) = symmetric_eigen_sorted(&g);
        let theta = theta[0];
        let mut x = vec![0.0; n];
        let mut ax = vec![0.0; n];
        for j in 0..k {
            axpy(y[(j, 0)], &vs[j], &mut x);
            axpy(y[(j, 0)], &avs[j], &mut ax);
        }
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - theta * b).collect();
        let rnorm = dot(&r, &r).sqrt();
        history.push(rnorm);
        trace!("davidson iter {iter}: theta = {theta:.12} |r| = {rnorm:.3e}");
        if rnorm <= tol {
            let norm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|c| *c /= norm);
            return Ok(DavidsonResult { eigenvalue: theta, vector: x, iterations: iter, residual: rnorm });
        }
        if k >= max_subspace {
            let norm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|c| *c /= norm);
            ax.iter_mut().for_each(|c| *c /= norm);
            vs = vec![x];
            avs = vec![ax];
        }
        let mut t: Vec<f64> = r
            .iter()
            .zip(diag)
            .map(|(ri, di)| {
                let d = theta - di;
                let d = if d.abs() < 1e-12 { 1e-12f64.copysign(d) } else { d };
                ri / d
            })
            .collect();
        for _ in 0..2 {
            for v in &vs {
                let o = dot(v, &t);
                axpy(-o, v, &mut t);
            }
        }
        let tnorm = dot(&t, &t).sqrt();
        if !(tnorm > 1e-14) {
            break;
        }
        t.iter_mut().for_each(|c| *c /= tnorm);
        avs.push(sigma(&t));
        vs.push(t);
    }
    Err(Error::Convergence {
        solver: "davidson",
        iterations: history.len(),
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_on_random_symmetric() {
        let n = 60;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                i as f64 * 0.3
            } else {
                0.05 / (1.0 + (i as f64 - j as f64).abs())
            }
        });
        let diag: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        let res = davidson_lowest(
            &diag,
            |v| (&m * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec(),
            1e-10,
            200,
            20,
        )
        .unwrap();
        let (vals, _) = symmetric_eigen_sorted(&m);
        assert!((res.eigenvalue - vals[0]).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let diag = vec![0.0, 1.0, 2.0];
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.5, 1.0, 1.0, 0.2, 0.5, 0.2, 2.0]);
        let r = davidson_lowest(
            &diag,
            |v| (&m * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec(),
            1e-30,
            2,
            20,
        );
        assert!(matches!(r, Err(Error::Convergence { .. })));
    }
}
