use log::debug;
use nalgebra::DMatrix;

use super::IntegralSet;
use crate::error::{Error, Result};
use crate::linalg::{diis_extrapolate, symmetric_eigen_sorted};

#[derive(Debug, Clone)]
pub struct RhfOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub diis_depth: usize,
}

impl Default for RhfOptions {
    fn default() -> Self {
        Self { max_iter: 500, tol: 1e-11, diis_depth: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct RhfSolution {
    pub energy: f64,
    /// Columns are molecular orbitals in the input orbital basis.
    pub coefficients: DMatrix<f64>,
    pub orbital_energies: Vec<f64>,
    pub iterations: usize,
}

/// Closed-shell Roothaan iterations with DIIS, in the (orthonormal) orbital
/// basis the integrals are given in.
pub fn restricted_hartree_fock(ints: &IntegralSet, opts: &RhfOptions) -> Result<RhfSolution> {
    if ints.n_electrons % 2 != 0 || ints.ms2 != 0 {
        return Err(Error::domain("restricted Hartree-Fock needs a closed-shell electron count"));
    }
    let n = ints.n_orb;
    let nocc = ints.n_electrons / 2;
    let h = ints.h_matrix();
    let density = |c: &DMatrix<f64>| {
        let occ = c.columns(0, nocc);
        &occ * occ.transpose() * 2.0
    };
    let (_, mut c) = symmetric_eigen_sorted(&h);
    let mut focks: Vec<DMatrix<f64>> = Vec::new();
    let mut errors: Vec<DMatrix<f64>> = Vec::new();
    let mut e_old = f64::INFINITY;
    let mut history = Vec::new();
    for iter in 1..=opts.max_iter {
        let d = density(&c);
        let f = ints.fock_matrix(&d);
        let energy = ints.e_nuc + 0.5 * d.component_mul(&(&h + &f)).sum();
        let err = &f * &d - &d * &f;
        let err_norm = err.amax();
        history.push(err_norm);
        debug!("rhf iter {iter}: E = {energy:.12} |[F,D]| = {err_norm:.3e}");
        if err_norm < opts.tol && (energy - e_old).abs() < opts.tol {
            let (eps, c) = symmetric_eigen_sorted(&f);
            return Ok(RhfSolution {
                energy,
                coefficients: c,
                orbital_energies: eps,
                iterations: iter,
            });
        }
        e_old = energy;
        focks.push(f);
        errors.push(err);
        if focks.len() > opts.diis_depth.max(1) {
            focks.remove(0);
            errors.remove(0);
        }
        let f_next = if focks.len() >= 2 {
            diis_extrapolate(&focks, &errors).unwrap_or_else(|| focks.last().unwrap().clone())
        } else {
            focks.last().unwrap().clone()
        };
        c = symmetric_eigen_sorted(&f_next).1;
        debug_assert_eq!(c.nrows(), n);
    }
    Err(Error::Convergence {
        solver: "rhf",
        iterations: opts.max_iter,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Runs RHF and returns the integrals rotated into the canonical orbitals,
/// with the orbital energies recorded.
pub fn canonical_orbitals(
    ints: &IntegralSet,
    opts: &RhfOptions,
) -> Result<(IntegralSet, RhfSolution)> {
    let rhf = restricted_hartree_fock(ints, opts)?;
    let mut mo = ints.rotated(&rhf.coefficients)?;
    mo.orbital_energies = Some(rhf.orbital_energies.clone());
    Ok((mo, rhf))
}
