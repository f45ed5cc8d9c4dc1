//! Simulated computational-basis measurement of a CI state, occupancy
//! estimation, QDOS orbital selection and the QSCI determinant-selection
//! baseline.
//!
//! Measuring a Jordan–Wigner encoded particle-number eigenstate in the
//! computational basis returns determinant `A` with probability `|C_A|²`, so
//! shots are drawn from that multinomial distribution directly.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::casci::{solve_in_basis, CIVector};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock_space::{electronic_element, ActiveHamiltonian, ActiveSpacePartition, CasSpace, Determinant};

/// Default confidence parameter of the occupancy snapping rule, `10^(-1/2)`.
pub const DEFAULT_LAMBDA: f64 = 0.316_227_766_016_837_94;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// Measured determinants in active-orbital indexing.
    pub shots: Vec<Determinant>,
    pub n_shot: usize,
    pub seed: u64,
    pub n_active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    pub eta: Vec<f64>,
    /// `N_{2k-1} + N_{2k}` for every active orbital `k`.
    pub counts: Vec<u64>,
    pub n_shot: usize,
    pub snapped: Vec<bool>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Qdos,
    Qsci,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub partition: ActiveSpacePartition,
    pub report: OccupancyReport,
    pub method: SelectionMethod,
    pub selected_determinants: Option<Vec<Determinant>>,
    /// QSCI only: fewer distinct determinants were observed than requested.
    pub shortfall: bool,
    pub seed: u64,
}

/// Draws `n_shot` basis determinants with probability `|C_A|²`.
pub fn sample_shots(psi: &CIVector, n_shot: usize, seed: u64) -> Result<ShotRecord> {
    if n_shot == 0 {
        return Err(Error::domain("at least one shot is required"));
    }
    let weights: Vec<f64> = psi.coeffs.iter().map(|c| c * c).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::domain(format!("cannot sample from CI vector: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shots = (0..n_shot).map(|_| psi.basis[dist.sample(&mut rng)]).collect();
    Ok(ShotRecord { shots, n_shot, seed, n_active: psi.n_active() })
}

/// Qubit readout of a determinant under interleaved Jordan–Wigner labelling:
/// digit `2k` is the alpha and digit `2k + 1` the beta occupation of spatial
/// orbital `k` (0-based).
pub fn qubit_digits(det: &Determinant, n_active: usize) -> Vec<u8> {
    (0..n_active)
        .flat_map(|k| [(det.alpha >> k & 1) as u8, (det.beta >> k & 1) as u8])
        .collect()
}

/// `η_k = (N_{2k-1} + N_{2k}) / N_shot` from per-digit counts.
pub fn estimate_occupancies(rec: &ShotRecord) -> Result<OccupancyReport> {
    if rec.shots.is_empty() {
        return Err(Error::domain("empty shot record"));
    }
    let mut digit_counts = vec![0u64; 2 * rec.n_active];
    for shot in &rec.shots {
        for (j, d) in qubit_digits(shot, rec.n_active).into_iter().enumerate() {
            digit_counts[j] += d as u64;
        }
    }
    let n = rec.shots.len();
    let counts: Vec<u64> = digit_counts.chunks(2).map(|c| c[0] + c[1]).collect();
    Ok(OccupancyReport {
        eta: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        counts,
        n_shot: n,
        snapped: vec![false; rec.n_active],
        lambda: None,
    })
}

/// Bernoulli standard error `sqrt(x̄(1 − x̄)/N)`.
pub fn standard_error(x_bar: f64, n_shot: usize) -> f64 {
    (x_bar * (1.0 - x_bar) / n_shot as f64).sqrt()
}

/// Half-width `2λ/√N` of the snapping windows.
pub fn snap_threshold(lambda: f64, n_shot: usize) -> f64 {
    2.0 * lambda / (n_shot as f64).sqrt()
}

/// Snaps occupancies within `2λ/√N` of 0 or 2 onto the bound. Both windows
/// are open at the threshold.
pub fn snap_occupancies(rep: &OccupancyReport, lambda: f64) -> Result<OccupancyReport> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    let thr = snap_threshold(lambda, rep.n_shot);
    let mut out = rep.clone();
    out.lambda = Some(lambda);
    for (k, eta) in out.eta.iter_mut().enumerate() {
        if *eta > 2.0 - thr && *eta <= 2.0 {
            *eta = 2.0;
            out.snapped[k] = true;
        } else if *eta >= 0.0 && *eta < thr {
            *eta = 0.0;
            out.snapped[k] = true;
        }
    }
    Ok(out)
}

/// QDOS: relabels the active orbitals with the smallest occupancies as
/// virtual and those with the largest as core until the requested sub-space
/// size is reached.
///
/// `orbital_energies` is indexed by full orbital number. Among equal
/// occupancies the higher-energy orbital goes to the virtual space first and
/// the lower-energy orbital to the core first; equal energies fall back to the
/// lower orbital index.
pub fn qdos_select(
    rep: &OccupancyReport,
    rcas: &ActiveSpacePartition,
    n_act_scas: usize,
    n_ele_scas: usize,
    orbital_energies: &[f64],
) -> Result<SelectionOutcome> {
    let n_act = rcas.active.len();
    let n_ele = rcas.n_active_electrons;
    if rep.eta.len() != n_act {
        return Err(Error::domain("occupancy report does not match the active space"));
    }
    if orbital_energies.len() != rcas.n_orb() {
        return Err(Error::domain("orbital energies do not cover every orbital"));
    }
    if n_act_scas > n_act || n_ele_scas > n_ele || (n_ele - n_ele_scas) % 2 != 0 {
        return Err(Error::domain(format!(
            "cannot reduce ({n_ele}e,{n_act}o) to ({n_ele_scas}e,{n_act_scas}o)"
        )));
    }
    if n_ele_scas > 2 * n_act_scas {
        return Err(Error::domain("sub-space electrons do not fit in its orbitals"));
    }
    let to_core = (n_ele - n_ele_scas) / 2;
    let to_virt = (n_act - n_act_scas)
        .checked_sub(to_core)
        .ok_or_else(|| Error::domain("sub-space would need more core orbitals than removable"))?;

    let orb = |k: usize| rcas.active[k];
    let mut remaining: Vec<usize> = (0..n_act).collect();

    // smallest occupancy first; ties: higher energy first, then lower index
    remaining.sort_by(|&a, &b| {
        rep.eta[a]
            .total_cmp(&rep.eta[b])
            .then(orbital_energies[orb(b)].total_cmp(&orbital_energies[orb(a)]))
            .then(orb(a).cmp(&orb(b)))
    });
    let new_virt: Vec<usize> = remaining.drain(..to_virt).map(orb).collect();

    // largest occupancy first; ties: lower energy first, then lower index
    remaining.sort_by(|&a, &b| {
        rep.eta[b]
            .total_cmp(&rep.eta[a])
            .then(orbital_energies[orb(a)].total_cmp(&orbital_energies[orb(b)]))
            .then(orb(a).cmp(&orb(b)))
    });
    let new_core: Vec<usize> = remaining.drain(..to_core).map(orb).collect();
    let active: Vec<usize> = remaining.into_iter().map(orb).collect();

    let partition = ActiveSpacePartition::new(
        rcas.n_orb(),
        rcas.n_electrons(),
        rcas.core.iter().copied().chain(new_core).collect(),
        active,
        rcas.virt.iter().copied().chain(new_virt).collect(),
        n_ele_scas,
    )?;
    Ok(SelectionOutcome {
        partition,
        report: rep.clone(),
        method: SelectionMethod::Qdos,
        selected_determinants: None,
        shortfall: false,
        seed: 0,
    })
}

/// QSCI baseline: keeps the `m` most frequently measured determinants (ties:
/// lower diagonal energy, then canonical order), diagonalises the active
/// Hamiltonian in that set and embeds the ground vector into the complete
/// active-space basis.
pub fn qsci_select(
    rec: &ShotRecord,
    m: usize,
    h: &ActiveHamiltonian,
    exec: Execution,
) -> Result<(SelectionOutcome, CIVector)> {
    if m == 0 {
        return Err(Error::domain("QSCI needs at least one determinant"));
    }
    let first = rec.shots.first().ok_or_else(|| Error::domain("empty shot record"))?;
    let mut freq: HashMap<Determinant, usize> = HashMap::new();
    for d in &rec.shots {
        *freq.entry(*d).or_default() += 1;
    }
    let mut ranked: Vec<(Determinant, usize, f64)> = freq
        .into_iter()
        .map(|(d, n)| (d, n, electronic_element(&h.integrals, &d, &d)))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)));
    let shortfall = ranked.len() < m;
    let mut selected: Vec<Determinant> = ranked.into_iter().take(m).map(|r| r.0).collect();
    selected.sort();

    let (energy, c) = solve_in_basis(h, &selected, exec)?;
    let space = CasSpace::new(h.n_active(), first.n_alpha(), first.n_beta())?;
    let mut coeffs = vec![0.0; space.len()];
    for (d, ci) in selected.iter().zip(&c) {
        let i = space
            .index_of(d)
            .ok_or_else(|| Error::domain("shot outside the sampled sector"))?;
        coeffs[i] = *ci;
    }
    let psi = CIVector {
        basis: space.determinants(),
        coeffs,
        energy,
        partition: h.partition.clone(),
    };
    let outcome = SelectionOutcome {
        partition: h.partition.clone(),
        report: estimate_occupancies(rec)?,
        method: SelectionMethod::Qsci,
        selected_determinants: Some(selected),
        shortfall,
        seed: rec.seed,
    };
    Ok((outcome, psi))
}
