use std::collections::HashMap;

use super::{bits, ActiveSpacePartition, Determinant, MAX_ORBITALS};
use crate::error::{Error, Result};
use crate::model_io::IntegralSet;

/// All `k`-electron strings over `n` orbitals in ascending integer order.
pub fn enumerate_strings(n: usize, k: usize) -> Vec<u64> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut s: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    loop {
        if n < 64 && s >> n != 0 {
            break;
        }
        out.push(s);
        // Gosper's hack: next integer with the same popcount
        let c = s & s.wrapping_neg();
        let r = s.wrapping_add(c);
        if r == 0 {
            break;
        }
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

/// All determinants with `n_alpha`/`n_beta` electrons in `n_orb` orbitals,
/// ordered by alpha string and then beta string.
pub fn enumerate_cas_determinants(
    n_orb: usize,
    n_alpha: usize,
    n_beta: usize,
) -> Result<Vec<Determinant>> {
    Ok(CasSpace::new(n_orb, n_alpha, n_beta)?.determinants())
}

/// A complete determinant space with string-indexed lookup.
#[derive(Debug, Clone)]
pub struct CasSpace {
    pub n_orb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    alpha_strings: Vec<u64>,
    beta_strings: Vec<u64>,
    alpha_index: HashMap<u64, usize>,
    beta_index: HashMap<u64, usize>,
}

impl CasSpace {
    pub fn new(n_orb: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        if n_orb > MAX_ORBITALS {
            return Err(Error::domain(format!("{n_orb} orbitals exceed {MAX_ORBITALS}")));
        }
        if n_alpha > n_orb || n_beta > n_orb {
            return Err(Error::domain(format!(
                "({n_alpha}a, {n_beta}b) electrons do not fit in {n_orb} orbitals"
            )));
        }
        let alpha_strings = enumerate_strings(n_orb, n_alpha);
        let beta_strings = enumerate_strings(n_orb, n_beta);
        let index = |v: &[u64]| v.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(CasSpace {
            n_orb,
            n_alpha,
            n_beta,
            alpha_index: index(&alpha_strings),
            beta_index: index(&beta_strings),
            alpha_strings,
            beta_strings,
        })
    }

    pub fn len(&self) -> usize {
        self.alpha_strings.len() * self.beta_strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn det(&self, index: usize) -> Determinant {
        let nb = self.beta_strings.len();
        Determinant::new(self.alpha_strings[index / nb], self.beta_strings[index % nb])
    }

    pub fn index_of(&self, det: &Determinant) -> Option<usize> {
        let ia = self.alpha_index.get(&det.alpha)?;
        let ib = self.beta_index.get(&det.beta)?;
        Some(ia * self.beta_strings.len() + ib)
    }

    pub fn determinants(&self) -> Vec<Determinant> {
        (0..self.len()).map(|i| self.det(i)).collect()
    }
}

/// Calls `f` on every spin-conserving single and double substitution of
/// `det` within `n_orb` orbitals. Each target is produced exactly once.
pub fn for_each_excitation(det: &Determinant, n_orb: usize, mut f: impl FnMut(Determinant)) {
    let full = if n_orb >= 64 { u64::MAX } else { (1u64 << n_orb) - 1 };
    let occ_a: Vec<usize> = bits(det.alpha).collect();
    let occ_b: Vec<usize> = bits(det.beta).collect();
    let vir_a: Vec<usize> = bits(!det.alpha & full).collect();
    let vir_b: Vec<usize> = bits(!det.beta & full).collect();

    for (occ, vir, alpha) in [(&occ_a, &vir_a, true), (&occ_b, &vir_b, false)] {
        let s = if alpha { det.alpha } else { det.beta };
        let put = |s: u64| {
            if alpha {
                Determinant::new(s, det.beta)
            } else {
                Determinant::new(det.alpha, s)
            }
        };
        for &i in occ.iter() {
            for &a in vir.iter() {
                f(put(s ^ (1 << i) ^ (1 << a)));
            }
        }
        for (x, &i) in occ.iter().enumerate() {
            for &j in &occ[x + 1..] {
                for (y, &a) in vir.iter().enumerate() {
                    for &b in &vir[y + 1..] {
                        f(put(s ^ (1 << i) ^ (1 << j) ^ (1 << a) ^ (1 << b)));
                    }
                }
            }
        }
    }
    for &i in &occ_a {
        for &a in &vir_a {
            let alpha = det.alpha ^ (1 << i) ^ (1 << a);
            for &j in &occ_b {
                for &b in &vir_b {
                    f(Determinant::new(alpha, det.beta ^ (1 << j) ^ (1 << b)));
                }
            }
        }
    }
}

/// Singles and doubles of a full-space active-space determinant that empty a
/// core spin-orbital or occupy a virtual one.
pub fn connected_external_determinants(
    a: &Determinant,
    part: &ActiveSpacePartition,
    ints: &IntegralSet,
) -> Result<Vec<Determinant>> {
    if part.n_orb() != ints.n_orb {
        return Err(Error::domain("partition does not match the integral set"));
    }
    if !part.contains(a) || a.span() > ints.n_orb {
        return Err(Error::domain(format!(
            "{a} is not an active-space determinant of {}",
            part.digest()
        )));
    }
    let mut out = Vec::new();
    for_each_excitation(a, ints.n_orb, |d| {
        if !part.contains(&d) {
            out.push(d);
        }
    });
    Ok(out)
}
