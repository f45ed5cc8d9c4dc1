use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{davidson_lowest, CIVector};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock_space::{electronic_element, for_each_excitation, ActiveHamiltonian, CasSpace, Determinant};
use crate::linalg::{fix_sign, symmetric_eigen_sorted};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Residual norm for the iterative solver.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest dimension handled by dense diagonalisation.
    pub dense_threshold: usize,
    pub max_subspace: usize,
    /// Maximum number of stored Hamiltonian elements; above it the iterative
    /// solver recomputes rows on the fly.
    pub sparse_budget: usize,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 300,
            dense_threshold: 2000,
            max_subspace: 20,
            sparse_budget: 40_000_000,
            execution: Execution::default(),
        }
    }
}

/// Row-wise access to the active Hamiltonian over a complete determinant
/// space (electronic part only, no core energy).
pub struct HamiltonianRows<'a> {
    pub space: CasSpace,
    h: &'a ActiveHamiltonian,
    stored: Option<Vec<Vec<(u32, f64)>>>,
}

impl<'a> HamiltonianRows<'a> {
    pub fn new(h: &'a ActiveHamiltonian, space: CasSpace) -> Self {
        HamiltonianRows { space, h, stored: None }
    }

    /// Nonzero elements of row `i`, diagonal first.
    pub fn row(&self, i: usize) -> Vec<(u32, f64)> {
        if let Some(rows) = &self.stored {
            return rows[i].clone();
        }
        self.compute_row(i)
    }

    fn compute_row(&self, i: usize) -> Vec<(u32, f64)> {
        let a = self.space.det(i);
        let ints = &self.h.integrals;
        let mut row = vec![(i as u32, electronic_element(ints, &a, &a))];
        for_each_excitation(&a, self.space.n_orb, |b| {
            if let Some(j) = self.space.index_of(&b) {
                let v = electronic_element(ints, &a, &b);
                if v != 0.0 {
                    row.push((j as u32, v));
                }
            }
        });
        row
    }

    pub fn diagonal(&self, exec: Execution) -> Vec<f64> {
        let ints = &self.h.integrals;
        exec.map_range(self.space.len(), |i| {
            let a = self.space.det(i);
            electronic_element(ints, &a, &a)
        })
    }

    /// Precomputes and stores every row.
    pub fn store(&mut self, exec: Execution) {
        let rows = exec.map_range(self.space.len(), |i| self.compute_row(i));
        self.stored = Some(rows);
    }

    pub fn is_stored(&self) -> bool {
        self.stored.is_some()
    }

    /// `H c`, computed row by row.
    pub fn sigma(&self, c: &[f64], exec: Execution) -> Vec<f64> {
        let mut out = vec![0.0; c.len()];
        match &self.stored {
            Some(rows) => exec.for_each_indexed(&mut out, |i, o| {
                *o = rows[i].iter().map(|&(j, v)| v * c[j as usize]).sum();
            }),
            None => exec.for_each_indexed(&mut out, |i, o| {
                *o = self.compute_row(i).iter().map(|&(j, v)| v * c[j as usize]).sum();
            }),
        }
        out
    }

    pub fn dense(&self, exec: Execution) -> DMatrix<f64> {
        let n = self.space.len();
        let rows = exec.map_range(n, |i| self.row(i));
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j as usize)] = v;
            }
        }
        m
    }
}

/// Ground state of the active Hamiltonian in the `(n_alpha, n_beta)` sector.
pub fn solve_casci(
    h: &ActiveHamiltonian,
    n_alpha: usize,
    n_beta: usize,
    opts: &SolverOptions,
) -> Result<CIVector> {
    if n_alpha + n_beta != h.partition.n_active_electrons {
        return Err(Error::domain(format!(
            "sector ({n_alpha}a, {n_beta}b) does not hold {} active electrons",
            h.partition.n_active_electrons
        )));
    }
    let space = CasSpace::new(h.n_active(), n_alpha, n_beta)?;
    let dim = space.len();
    let exec = opts.execution;
    let mut rows = HamiltonianRows::new(h, space);
    let (energy, mut coeffs) = if dim <= opts.dense_threshold {
        let m = rows.dense(exec);
        let (vals, vecs) = symmetric_eigen_sorted(&m);
        (vals[0], vecs.column(0).iter().copied().collect::<Vec<_>>())
    } else {
        let diag = rows.diagonal(exec);
        let samples = dim.min(64);
        let estimate = (0..samples).map(|k| rows.row(k * dim / samples).len()).sum::<usize>() / samples;
        if estimate.saturating_mul(dim) <= opts.sparse_budget {
            rows.store(exec);
        }
        let res = davidson_lowest(
            &diag,
            |v| rows.sigma(v, exec),
            opts.tol,
            opts.max_iter,
            opts.max_subspace,
        )?;
        (res.eigenvalue, res.vector)
    };
    fix_sign(&mut coeffs);
    Ok(CIVector {
        basis: rows.space.determinants(),
        coeffs,
        energy: energy + h.e_core,
        partition: h.partition.clone(),
    })
}

/// Lowest eigenpair of the active Hamiltonian restricted to an arbitrary
/// determinant list (dense). Returns the total energy and the coefficients
/// in the order of `basis`.
pub fn solve_in_basis(
    h: &ActiveHamiltonian,
    basis: &[Determinant],
    exec: Execution,
) -> Result<(f64, Vec<f64>)> {
    if basis.is_empty() {
        return Err(Error::domain("empty determinant basis"));
    }
    let n = basis.len();
    let rows = exec.map_range(n, |i| {
        basis
            .iter()
            .map(|b| electronic_element(&h.integrals, &basis[i], b))
            .collect::<Vec<_>>()
    });
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let (vals, vecs) = symmetric_eigen_sorted(&m);
    let mut c: Vec<f64> = vecs.column(0).iter().copied().collect();
    fix_sign(&mut c);
    Ok((vals[0] + h.e_core, c))
}
