use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_space::{
    electronic_element, for_each_excitation, ActiveHamiltonian, ActiveSpacePartition, CasSpace,
    Determinant,
};

/// A CI state on the complete determinant basis of an active space.
///
/// `basis` is in active-orbital indexing and in canonical enumeration order;
/// `energy` includes the core energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CIVector {
    pub basis: Vec<Determinant>,
    pub coeffs: Vec<f64>,
    pub energy: f64,
    pub partition: ActiveSpacePartition,
}

impl CIVector {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Number of spatial orbitals in the active space.
    pub fn n_active(&self) -> usize {
        self.partition.active.len()
    }

    pub fn index_map(&self) -> HashMap<Determinant, usize> {
        self.basis.iter().enumerate().map(|(i, d)| (*d, i)).collect()
    }

    pub fn coefficient_of(&self, det: &Determinant) -> Option<f64> {
        self.basis.iter().position(|d| d == det).map(|i| self.coeffs[i])
    }

    /// `(determinant, coefficient)` pairs with nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = (Determinant, f64)> + '_ {
        self.basis
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(d, c)| (*d, *c))
    }

    /// Nonzero coefficients in full-orbital indexing, with the embedding
    /// phase folded into each coefficient.
    pub fn to_full(&self) -> Vec<(Determinant, f64)> {
        self.support()
            .map(|(d, c)| {
                let (full, phase) = self.partition.embed(&d);
                (full, phase * c)
            })
            .collect()
    }

    /// `⟨Ψ|Ĥ|Ψ⟩ / ⟨Ψ|Ψ⟩` for the active Hamiltonian, core energy included.
    pub fn energy_expectation(&self, h: &ActiveHamiltonian) -> f64 {
        let index = self.index_map();
        let n = h.n_active();
        let mut num = 0.0;
        for (a, ca) in self.support() {
            num += ca * ca * h.total_element(&a, &a);
            for_each_excitation(&a, n, |b| {
                if let Some(&j) = index.get(&b) {
                    let cb = self.coeffs[j];
                    if cb != 0.0 {
                        num += ca * cb * electronic_element(&h.integrals, &a, &b);
                    }
                }
            });
        }
        num / self.norm_squared()
    }
}

/// Embeds a sub-active-space state into the reference active-space basis:
/// every sub-space determinant maps to the reference determinant with the
/// extra core orbitals doubly occupied and the extra virtuals empty; all
/// other reference coefficients are zero.
pub fn embed_coefficients(psi_s: &CIVector, rcas: &ActiveSpacePartition) -> Result<CIVector> {
    let scas = &psi_s.partition;
    if !scas.is_nested_in(rcas) {
        return Err(Error::domain(format!(
            "{} is not nested in {}",
            scas.digest(),
            rcas.digest()
        )));
    }
    let first = psi_s
        .basis
        .first()
        .ok_or_else(|| Error::domain("empty CI vector"))?;
    let (full, _) = scas.embed(first);
    let (local, _) = rcas
        .restrict(&full)
        .ok_or_else(|| Error::domain("embedded determinant leaves the reference space"))?;
    let space = CasSpace::new(rcas.active.len(), local.n_alpha(), local.n_beta())?;
    let mut coeffs = vec![0.0; space.len()];
    for (d, c) in psi_s.basis.iter().zip(&psi_s.coeffs) {
        let (full, ph_s) = scas.embed(d);
        let (loc, ph_r) = rcas
            .restrict(&full)
            .ok_or_else(|| Error::domain("embedded determinant leaves the reference space"))?;
        let i = space
            .index_of(&loc)
            .ok_or_else(|| Error::domain("embedded determinant in a different sector"))?;
        coeffs[i] = ph_s * ph_r * c;
    }
    Ok(CIVector {
        basis: space.determinants(),
        coeffs,
        energy: psi_s.energy,
        partition: rcas.clone(),
    })
}
