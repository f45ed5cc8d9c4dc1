use nalgebra::DMatrix;

use super::{bits, bits_between, excite_string, ActiveSpacePartition, Determinant};
use crate::error::{Error, Result};
use crate::model_io::IntegralSet;

/// Active-space Hamiltonian: core energy, effective one-electron integrals
/// with the frozen core folded in, and the active two-electron integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveHamiltonian {
    pub e_core: f64,
    /// Active-orbital integrals; `e_nuc` holds `e_core`.
    pub integrals: IntegralSet,
    pub partition: ActiveSpacePartition,
    pub n_alpha: usize,
    pub n_beta: usize,
}

impl ActiveHamiltonian {
    pub fn n_active(&self) -> usize {
        self.integrals.n_orb
    }

    pub fn h_eff(&self) -> DMatrix<f64> {
        self.integrals.h_matrix()
    }

    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.integrals.eri(p, q, r, s)
    }

    /// `e_core + ⟨a|Ĥ_act|b⟩δ_ab`-inclusive element, i.e. the full-space
    /// matrix element between the embedded determinants (up to their phases).
    pub fn total_element(&self, a: &Determinant, b: &Determinant) -> f64 {
        let e = electronic_element(&self.integrals, a, b);
        if a == b {
            e + self.e_core
        } else {
            e
        }
    }
}

/// Folds the doubly occupied core into a constant and an effective one-body
/// operator over the active orbitals.
pub fn build_active_hamiltonian(
    ints: &IntegralSet,
    part: &ActiveSpacePartition,
) -> Result<ActiveHamiltonian> {
    if part.n_orb() != ints.n_orb {
        return Err(Error::domain(format!(
            "partition covers {} orbitals, integrals have {}",
            part.n_orb(),
            ints.n_orb
        )));
    }
    if part.n_electrons() != ints.n_electrons {
        return Err(Error::domain(format!(
            "partition holds {} electrons, integrals have {}",
            part.n_electrons(),
            ints.n_electrons
        )));
    }
    let n_core = part.core.len();
    if ints.n_alpha() < n_core || ints.n_beta() < n_core {
        return Err(Error::domain("core orbitals exceed one of the spin sectors"));
    }
    let mut e_core = ints.e_nuc;
    for &i in &part.core {
        e_core += 2.0 * ints.h(i, i);
        for &j in &part.core {
            e_core += 2.0 * ints.eri(i, i, j, j) - ints.eri(i, j, j, i);
        }
    }
    let n_act = part.active.len();
    let mut act = IntegralSet::zeros_unchecked(n_act, part.n_active_electrons, ints.ms2);
    act.e_nuc = e_core;
    for (k, &p) in part.active.iter().enumerate() {
        for (l, &q) in part.active.iter().enumerate().take(k + 1) {
            let mut v = ints.h(p, q);
            for &i in &part.core {
                v += 2.0 * ints.eri(p, q, i, i) - ints.eri(p, i, i, q);
            }
            act.set_h(k, l, v);
        }
    }
    let classes: Vec<_> = act.eri_classes().map(|(p, q, r, s, _)| (p, q, r, s)).collect();
    for (p, q, r, s) in classes {
        let v = ints.eri(part.active[p], part.active[q], part.active[r], part.active[s]);
        act.set_eri(p, q, r, s, v);
    }
    Ok(ActiveHamiltonian {
        e_core,
        integrals: act,
        partition: part.clone(),
        n_alpha: ints.n_alpha() - n_core,
        n_beta: ints.n_beta() - n_core,
    })
}

/// `⟨a|Ĥ_act|b⟩` without the core constant.
pub fn slater_condon(h: &ActiveHamiltonian, a: &Determinant, b: &Determinant) -> Result<f64> {
    if !a.same_sector(b) {
        return Err(Error::domain(format!("determinants {a} and {b} are in different sectors")));
    }
    Ok(electronic_element(&h.integrals, a, b))
}

/// `⟨a|Ĥ|b⟩` over the full orbital space, constant term included.
pub fn full_matrix_element(ints: &IntegralSet, a: &Determinant, b: &Determinant) -> f64 {
    let e = electronic_element(ints, a, b);
    if a == b {
        e + ints.e_nuc
    } else {
        e
    }
}

#[inline]
fn lowest_two(s: u64) -> (usize, usize) {
    let i = s.trailing_zeros() as usize;
    let j = (s & (s - 1)).trailing_zeros() as usize;
    (i, j)
}

fn diagonal(ints: &IntegralSet, d: &Determinant) -> f64 {
    let mut e = 0.0;
    for s in [d.alpha, d.beta] {
        for p in bits(s) {
            e += ints.h(p, p);
            for q in bits(s & !((1u64 << p) | ((1u64 << p) - 1))) {
                e += ints.eri(p, p, q, q) - ints.eri(p, q, q, p);
            }
        }
    }
    for p in bits(d.alpha) {
        for q in bits(d.beta) {
            e += ints.eri(p, p, q, q);
        }
    }
    e
}

/// Single substitution `from -> to` in one spin channel; `same` and `other`
/// are the strings of `a` in the excited and the spectator channel.
fn single(ints: &IntegralSet, same: u64, other: u64, from: usize, to: usize) -> f64 {
    let mut v = ints.h(from, to);
    for k in bits(same) {
        if k != from {
            v += ints.eri(from, to, k, k) - ints.eri(from, k, k, to);
        }
    }
    for k in bits(other) {
        v += ints.eri(from, to, k, k);
    }
    let sign = if bits_between(same, from, to) % 2 == 0 { 1.0 } else { -1.0 };
    sign * v
}

fn same_spin_double(ints: &IntegralSet, s: u64, holes: u64, parts: u64) -> f64 {
    let (i, j) = lowest_two(holes);
    let (k, l) = lowest_two(parts);
    let (s1, sign1) = excite_string(s, i, k).expect("valid excitation");
    let (_, sign2) = excite_string(s1, j, l).expect("valid excitation");
    sign1 * sign2 * (ints.eri(k, i, l, j) - ints.eri(k, j, l, i))
}

/// Slater–Condon rules for `⟨a|Ĥ|b⟩`, excluding the constant term.
pub fn electronic_element(ints: &IntegralSet, a: &Determinant, b: &Determinant) -> f64 {
    let da = a.alpha ^ b.alpha;
    let db = a.beta ^ b.beta;
    match (da.count_ones(), db.count_ones()) {
        (0, 0) => diagonal(ints, a),
        (2, 0) => {
            let from = (a.alpha & da).trailing_zeros() as usize;
            let to = (b.alpha & da).trailing_zeros() as usize;
            single(ints, a.alpha, a.beta, from, to)
        }
        (0, 2) => {
            let from = (a.beta & db).trailing_zeros() as usize;
            let to = (b.beta & db).trailing_zeros() as usize;
            single(ints, a.beta, a.alpha, from, to)
        }
        (4, 0) => same_spin_double(ints, a.alpha, a.alpha & da, b.alpha & da),
        (0, 4) => same_spin_double(ints, a.beta, a.beta & db, b.beta & db),
        (2, 2) => {
            let (i, k) = (
                (a.alpha & da).trailing_zeros() as usize,
                (b.alpha & da).trailing_zeros() as usize,
            );
            let (j, l) = (
                (a.beta & db).trailing_zeros() as usize,
                (b.beta & db).trailing_zeros() as usize,
            );
            let sa = if bits_between(a.alpha, i, k) % 2 == 0 { 1.0 } else { -1.0 };
            let sb = if bits_between(a.beta, j, l) % 2 == 0 { 1.0 } else { -1.0 };
            sa * sb * ints.eri(i, k, j, l)
        }
        _ => 0.0,
    }
}
