//! Second-order multireference perturbation correction on top of an
//! active-space CI state, with a diagonal generalized-Fock zeroth-order
//! Hamiltonian.

use std::fmt;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::casci::{one_rdm, CIVector};
use crate::correction::{CorrectionResult, Diagnostics};
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::fock_space::{
    bits, connected_external_determinants, electronic_element, ActiveSpacePartition, Determinant,
};
use crate::model_io::IntegralSet;

const INTRUDER_THRESHOLD: f64 = 1e-8;

/// Which active density enters the generalized Fock operator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum H0Density {
    /// 1-RDM of the state being corrected.
    #[default]
    CappDensity,
    /// Occupations of the aufbau determinant.
    HfDensity,
}

impl fmt::Display for H0Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            H0Density::CappDensity => "capp-density",
            H0Density::HfDensity => "hf-density",
        })
    }
}

/// Diagonal one-body operator `Ĥ⁰ = Σ_pσ ε_p n̂_pσ` over the full orbital space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZerothOrderOperator {
    pub orbital_energies_eff: Vec<f64>,
    pub density: H0Density,
}

impl ZerothOrderOperator {
    /// `⟨D|Ĥ⁰|D⟩` for a full-space determinant.
    pub fn energy(&self, det: &Determinant) -> f64 {
        bits(det.alpha)
            .chain(bits(det.beta))
            .map(|p| self.orbital_energies_eff[p])
            .sum()
    }

    /// Builds the operator from the density of `psi`, or from the aufbau
    /// determinant restricted to the active space of `psi`.
    pub fn for_state(ints: &IntegralSet, psi: &CIVector, kind: H0Density) -> Result<Self> {
        let part = &psi.partition;
        let density = match kind {
            H0Density::CappDensity => one_rdm(psi),
            H0Density::HfDensity => {
                let hf = Determinant::aufbau(ints.n_alpha(), ints.n_beta());
                let (local, _) = part.restrict(&hf).ok_or_else(|| {
                    Error::domain(format!("aufbau determinant is outside {}", part.digest()))
                })?;
                let n = part.active.len();
                DMatrix::from_fn(n, n, |p, q| if p == q { local.occupation(p) as f64 } else { 0.0 })
            }
        };
        let mut h0 = build_h0(ints, part, &density)?;
        h0.density = kind;
        Ok(h0)
    }
}

/// `ε_p = f_pp` of the generalized Fock matrix built from doubly occupied
/// core orbitals plus the spin-summed active density `density` (indexed by
/// active orbital).
pub fn build_h0(
    ints: &IntegralSet,
    part: &ActiveSpacePartition,
    density: &DMatrix<f64>,
) -> Result<ZerothOrderOperator> {
    let n_act = part.active.len();
    if part.n_orb() != ints.n_orb {
        return Err(Error::domain("partition does not match the integral set"));
    }
    if density.nrows() != n_act || density.ncols() != n_act {
        return Err(Error::domain(format!(
            "density is {}x{}, active space has {n_act} orbitals",
            density.nrows(),
            density.ncols()
        )));
    }
    let trace = density.trace();
    if (trace - part.n_active_electrons as f64).abs() > 1e-8 {
        return Err(Error::domain(format!(
            "density trace {trace} differs from {} active electrons",
            part.n_active_electrons
        )));
    }
    let mut d = DMatrix::zeros(ints.n_orb, ints.n_orb);
    for &c in &part.core {
        d[(c, c)] = 2.0;
    }
    for (x, &p) in part.active.iter().enumerate() {
        for (y, &q) in part.active.iter().enumerate() {
            d[(p, q)] = density[(x, y)];
        }
    }
    let f = ints.fock_matrix(&d);
    Ok(ZerothOrderOperator {
        orbital_energies_eff: (0..ints.n_orb).map(|p| f[(p, p)]).collect(),
        density: H0Density::CappDensity,
    })
}

/// Second-order correction of the state `c_app` (complete rCAS basis,
/// coefficients outside its support zero). External determinants are every
/// single and double of a support determinant that lies outside `rcas`.
pub fn mrmp2_correction(
    c_app: &CIVector,
    rcas: &ActiveSpacePartition,
    ints: &IntegralSet,
    h0: &ZerothOrderOperator,
    e_reference: f64,
    exec: Execution,
) -> Result<CorrectionResult> {
    mrmp2_with_label("subspace-mrmp2", c_app, rcas, ints, h0, e_reference, exec)
}

/// MRMP2 with the reference-space state as its own perturbed state.
pub fn standard_mrmp2(
    psi_rcas: &CIVector,
    rcas: &ActiveSpacePartition,
    ints: &IntegralSet,
    h0: &ZerothOrderOperator,
    exec: Execution,
) -> Result<CorrectionResult> {
    mrmp2_with_label("mrmp2", psi_rcas, rcas, ints, h0, psi_rcas.energy, exec)
}

fn mrmp2_with_label(
    label: &str,
    c_app: &CIVector,
    rcas: &ActiveSpacePartition,
    ints: &IntegralSet,
    h0: &ZerothOrderOperator,
    e_reference: f64,
    exec: Execution,
) -> Result<CorrectionResult> {
    if &c_app.partition != rcas {
        return Err(Error::domain(format!(
            "state lives on {}, expected {}",
            c_app.partition.digest(),
            rcas.digest()
        )));
    }
    if h0.orbital_energies_eff.len() != ints.n_orb {
        return Err(Error::domain("zeroth-order operator does not match the integral set"));
    }
    let norm = c_app.norm_squared();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::domain(format!("state is not normalised (norm² = {norm})")));
    }

    let support = c_app.to_full();
    let e0_ref = pairwise_sum(&support.iter().map(|(d, c)| c * c * h0.energy(d)).collect::<Vec<_>>());

    let per_det: Vec<Result<Vec<(Determinant, f64)>>> = exec.map_slice(&support, |(a, ca)| {
        Ok(connected_external_determinants(a, rcas, ints)?
            .into_iter()
            .map(|i| (i, electronic_element(ints, &i, a) * ca))
            .collect())
    });

    // couplings are summed in support order for every thread count
    let mut coupling: IndexMap<Determinant, f64> = IndexMap::new();
    for contributions in per_det {
        for (i, v) in contributions? {
            *coupling.entry(i).or_insert(0.0) += v;
        }
    }

    let entries: Vec<(Determinant, f64)> = coupling.into_iter().filter(|(_, v)| *v != 0.0).collect();
    let terms: Vec<(f64, f64)> = exec.map_slice(&entries, |(i, v)| {
        let den = e0_ref - h0.energy(i);
        (v * v / den, den)
    });
    let mut min_den = f64::INFINITY;
    for ((i, _), (_, den)) in entries.iter().zip(&terms) {
        if den.abs() < INTRUDER_THRESHOLD {
            return Err(Error::intruder(i, *den));
        }
        min_den = min_den.min(den.abs());
    }
    let delta = pairwise_sum(&terms.iter().map(|t| t.0).collect::<Vec<_>>());
    let diagnostics = Diagnostics {
        min_denominator: min_den.is_finite().then_some(min_den),
        external_size: Some(entries.len()),
        iterations: None,
        settings: vec![format!("h0={}", h0.density)],
    };
    Ok(CorrectionResult::new(label, e_reference, delta, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casci::{embed_coefficients, solve_casci, SolverOptions};
    use crate::fock_space::build_active_hamiltonian;
    use crate::model_io::{canonical_orbitals, hubbard_chain, RhfOptions};

    fn canonical_hubbard(n: usize, u: f64) -> IntegralSet {
        let ints = hubbard_chain(n, 1.0, u, false).unwrap();
        canonical_orbitals(&ints, &RhfOptions::default()).unwrap().0
    }

    fn rcas_state(ints: &IntegralSet, part: &ActiveSpacePartition) -> CIVector {
        let h = build_active_hamiltonian(ints, part).unwrap();
        let n = part.n_active_electrons;
        solve_casci(&h, n / 2, n / 2, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn zero_two_electron_integrals_give_core_hamiltonian_diagonal() {
        let mut ints = hubbard_chain(4, 1.0, 0.0, false).unwrap();
        ints.set_h(1, 1, 0.3);
        let part = ActiveSpacePartition::new(4, 4, vec![0], vec![1, 2], vec![3], 2).unwrap();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.2, 0.8]));
        let h0 = build_h0(&ints, &part, &d).unwrap();
        for p in 0..4 {
            assert_eq!(h0.orbital_energies_eff[p], ints.h(p, p));
        }
    }

    #[test]
    fn hartree_fock_density_reproduces_canonical_energies() {
        let ints = canonical_hubbard(6, 2.0);
        let part = ActiveSpacePartition::fermi_window(&ints, 4, 4).unwrap();
        let psi = rcas_state(&ints, &part);
        let h0 = ZerothOrderOperator::for_state(&ints, &psi, H0Density::HfDensity).unwrap();
        let eps = ints.orbital_energies.as_ref().unwrap();
        for p in 0..6 {
            assert!((h0.orbital_energies_eff[p] - eps[p]).abs() < 1e-9);
        }
        assert_eq!(h0.density, H0Density::HfDensity);
    }

    #[test]
    fn doubly_occupied_orbital_can_move_between_core_and_active() {
        let ints = canonical_hubbard(4, 3.0);
        let a = ActiveSpacePartition::new(4, 4, vec![0], vec![1, 2], vec![3], 2).unwrap();
        let b = ActiveSpacePartition::new(4, 4, vec![], vec![0, 1, 2], vec![3], 4).unwrap();
        let da = DMatrix::from_row_slice(2, 2, &[1.5, 0.1, 0.1, 0.5]);
        let mut db = DMatrix::zeros(3, 3);
        db[(0, 0)] = 2.0;
        db.view_mut((1, 1), (2, 2)).copy_from(&da);
        let ea = build_h0(&ints, &a, &da).unwrap().orbital_energies_eff;
        let eb = build_h0(&ints, &b, &db).unwrap().orbital_energies_eff;
        for p in 0..4 {
            assert!((ea[p] - eb[p]).abs() < 1e-14);
        }
    }

    #[test]
    fn density_trace_is_checked() {
        let ints = canonical_hubbard(4, 1.0);
        let part = ActiveSpacePartition::new(4, 4, vec![0], vec![1, 2], vec![3], 2).unwrap();
        let d = DMatrix::identity(2, 2) * 1.1;
        assert!(matches!(build_h0(&ints, &part, &d), Err(Error::Domain(_))));
    }

    #[test]
    fn full_space_reference_has_no_correction() {
        let ints = canonical_hubbard(4, 2.0);
        let part = ActiveSpacePartition::full_space(4, 4).unwrap();
        let psi = rcas_state(&ints, &part);
        let h0 = ZerothOrderOperator::for_state(&ints, &psi, H0Density::CappDensity).unwrap();
        let r = standard_mrmp2(&psi, &part, &ints, &h0, Execution::Sequential).unwrap();
        assert_eq!(r.delta_e, 0.0);
        assert_eq!(r.e_total, psi.energy);
        assert_eq!(r.diagnostics.external_size, Some(0));
    }

    #[test]
    fn identical_subspace_reproduces_standard_and_is_sign_invariant() {
        let ints = canonical_hubbard(6, 2.0);
        let rcas = ActiveSpacePartition::fermi_window(&ints, 4, 4).unwrap();
        let psi = rcas_state(&ints, &rcas);
        let h0 = ZerothOrderOperator::for_state(&ints, &psi, H0Density::CappDensity).unwrap();
        let std = standard_mrmp2(&psi, &rcas, &ints, &h0, Execution::Sequential).unwrap();
        let c_app = embed_coefficients(&psi, &rcas).unwrap();
        let sub = mrmp2_correction(&c_app, &rcas, &ints, &h0, psi.energy, Execution::Sequential).unwrap();
        assert!((std.delta_e - sub.delta_e).abs() <= 1e-12);
        assert!(std.delta_e < 0.0);

        let mut flipped = c_app.clone();
        flipped.coeffs.iter_mut().for_each(|c| *c = -*c);
        let f = mrmp2_correction(&flipped, &rcas, &ints, &h0, psi.energy, Execution::Sequential).unwrap();
        assert_eq!(f.delta_e, sub.delta_e);

        let par = mrmp2_correction(&c_app, &rcas, &ints, &h0, psi.energy, Execution::Parallel).unwrap();
        assert_eq!(par.delta_e.to_bits(), sub.delta_e.to_bits());
        assert_eq!(sub.e_total, sub.e_reference + sub.delta_e);
    }

    #[test]
    fn intruder_denominator_is_reported() {
        // degenerate orbital energies between occupied and virtual levels
        let ints = hubbard_chain(2, 0.0, 0.0, false).unwrap();
        let rcas = ActiveSpacePartition::new(2, 2, vec![], vec![0], vec![1], 2).unwrap();
        let mut ints = ints;
        ints.set_eri(0, 1, 0, 1, 0.1);
        let psi = rcas_state(&ints, &rcas);
        let h0 = ZerothOrderOperator::for_state(&ints, &psi, H0Density::CappDensity).unwrap();
        let mut h0 = h0;
        h0.orbital_energies_eff = vec![0.0, 0.0];
        let err = standard_mrmp2(&psi, &rcas, &ints, &h0, Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::IntruderState { .. }), "{err}");
    }

    #[test]
    fn unnormalised_state_is_rejected() {
        let ints = canonical_hubbard(4, 2.0);
        let rcas = ActiveSpacePartition::fermi_window(&ints, 2, 2).unwrap();
        let mut psi = rcas_state(&ints, &rcas);
        let h0 = ZerothOrderOperator::for_state(&ints, &psi, H0Density::CappDensity).unwrap();
        psi.coeffs[0] *= 2.0;
        assert!(standard_mrmp2(&psi, &rcas, &ints, &h0, Execution::Sequential).is_err());
    }
}
