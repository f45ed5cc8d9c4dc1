//! Integral containers, FCIDUMP interchange and built-in model Hamiltonians.

mod fcidump;
mod models;
mod scf;

pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump, FcidumpMetadata};
pub use models::{disordered_hubbard_chain, hubbard_chain, random_integrals};
pub use scf::{canonical_orbitals, restricted_hartree_fock, RhfOptions, RhfSolution};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Index of the unordered pair `{p, q}` in a packed lower triangle.
#[inline]
pub fn pair_index(p: usize, q: usize) -> usize {
    let (a, b) = if p >= q { (p, q) } else { (q, p) };
    a * (a + 1) / 2 + b
}

/// Canonical storage slot of `[pq|rs]` under the 8-fold permutational symmetry.
#[inline]
pub fn eri_index(p: usize, q: usize, r: usize, s: usize) -> usize {
    pair_index(pair_index(p, q), pair_index(r, s))
}

fn eri_len(n_orb: usize) -> usize {
    let npair = n_orb * (n_orb + 1) / 2;
    npair * (npair + 1) / 2
}

/// Real one- and two-electron integrals over spatial orbitals.
///
/// Two-electron integrals are in chemists' notation and stored once per
/// 8-fold symmetry class, so an asymmetric tensor cannot be represented.
/// The one-electron matrix is kept symmetric by [`IntegralSet::set_h`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    pub n_orb: usize,
    pub e_nuc: f64,
    pub orbital_energies: Option<Vec<f64>>,
    pub n_electrons: usize,
    pub ms2: i32,
    h: Vec<f64>,
    eri: Vec<f64>,
}

impl IntegralSet {
    /// All-zero integrals.
    pub fn zeros(n_orb: usize, n_electrons: usize, ms2: i32) -> Result<Self> {
        if n_orb == 0 || n_orb > crate::fock_space::MAX_ORBITALS {
            return Err(Error::domain(format!(
                "orbital count {n_orb} outside 1..={}",
                crate::fock_space::MAX_ORBITALS
            )));
        }
        let ints = IntegralSet {
            n_orb,
            e_nuc: 0.0,
            orbital_energies: None,
            n_electrons,
            ms2,
            h: vec![0.0; n_orb * n_orb],
            eri: vec![0.0; eri_len(n_orb)],
        };
        ints.check_electrons()?;
        Ok(ints)
    }

    /// Zero integrals without the electron-count check; used for active
    /// spaces that may hold no electrons.
    pub(crate) fn zeros_unchecked(n_orb: usize, n_electrons: usize, ms2: i32) -> Self {
        IntegralSet {
            n_orb,
            e_nuc: 0.0,
            orbital_energies: None,
            n_electrons,
            ms2,
            h: vec![0.0; n_orb * n_orb],
            eri: vec![0.0; eri_len(n_orb)],
        }
    }

    fn check_electrons(&self) -> Result<()> {
        if self.n_electrons < 1 || self.n_electrons > 2 * self.n_orb {
            return Err(Error::domain(format!(
                "electron count {} outside 1..={}",
                self.n_electrons,
                2 * self.n_orb
            )));
        }
        let ms2 = self.ms2.unsigned_abs() as usize;
        if ms2 > self.n_electrons || (self.n_electrons - ms2) % 2 != 0 {
            return Err(Error::domain(format!(
                "MS2={} incompatible with {} electrons",
                self.ms2, self.n_electrons
            )));
        }
        let (na, nb) = (self.n_alpha(), self.n_beta());
        if na > self.n_orb || nb > self.n_orb {
            return Err(Error::domain("spin sector does not fit in the orbital space"));
        }
        Ok(())
    }

    /// Returns a copy with a different electron count and spin projection.
    pub fn with_electrons(mut self, n_electrons: usize, ms2: i32) -> Result<Self> {
        self.n_electrons = n_electrons;
        self.ms2 = ms2;
        self.check_electrons()?;
        Ok(self)
    }

    pub fn n_alpha(&self) -> usize {
        ((self.n_electrons as i64 + self.ms2 as i64) / 2) as usize
    }

    pub fn n_beta(&self) -> usize {
        ((self.n_electrons as i64 - self.ms2 as i64) / 2) as usize
    }

    #[inline]
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.n_orb + q]
    }

    /// Sets `h[p][q]` and `h[q][p]`.
    pub fn set_h(&mut self, p: usize, q: usize, value: f64) {
        self.h[p * self.n_orb + q] = value;
        self.h[q * self.n_orb + p] = value;
    }

    /// `[pq|rs]` in chemists' notation.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.eri[eri_index(p, q, r, s)]
    }

    /// Sets the whole symmetry class of `[pq|rs]`.
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        self.eri[eri_index(p, q, r, s)] = value;
    }

    pub fn h_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_orb, self.n_orb, |p, q| self.h(p, q))
    }

    /// Fock matrix of a spin-summed density `density` (full orbital space):
    /// `f_pq = h_pq + Σ_rs D_rs ([pq|rs] − ½[ps|rq])`.
    pub fn fock_matrix(&self, density: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n_orb;
        DMatrix::from_fn(n, n, |p, q| {
            let mut f = self.h(p, q);
            for r in 0..n {
                for s in 0..n {
                    let d = density[(r, s)];
                    if d != 0.0 {
                        f += d * (self.eri(p, q, r, s) - 0.5 * self.eri(p, s, r, q));
                    }
                }
            }
            f
        })
    }

    /// Density of the closed-shell determinant occupying the lowest
    /// `n_electrons / 2` orbitals (an odd electron goes into the next one with
    /// occupation 1).
    pub fn aufbau_density(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_orb, self.n_orb);
        for p in 0..self.n_alpha() {
            d[(p, p)] += 1.0;
        }
        for p in 0..self.n_beta() {
            d[(p, p)] += 1.0;
        }
        d
    }

    /// Orbital energies from the auxiliary records when present, otherwise
    /// the diagonal of the Fock matrix of the aufbau determinant.
    pub fn orbital_energies_or_fock(&self) -> Vec<f64> {
        match &self.orbital_energies {
            Some(e) => e.clone(),
            None => {
                let f = self.fock_matrix(&self.aufbau_density());
                (0..self.n_orb).map(|p| f[(p, p)]).collect()
            }
        }
    }

    /// Energy of the aufbau closed-shell determinant (lowest orbitals filled).
    pub fn aufbau_energy(&self) -> f64 {
        let d = self.aufbau_density();
        let f = self.fock_matrix(&d);
        let mut e = self.e_nuc;
        for p in 0..self.n_orb {
            for q in 0..self.n_orb {
                e += 0.5 * d[(p, q)] * (self.h(p, q) + f[(p, q)]);
            }
        }
        e
    }

    /// Integrals in the orbital basis `φ'_j = Σ_p φ_p C[p][j]`.
    ///
    /// Orbital-energy records are dropped because they refer to the old basis.
    pub fn rotated(&self, c: &DMatrix<f64>) -> Result<Self> {
        let n = self.n_orb;
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::domain("rotation matrix has the wrong shape"));
        }
        let h = c.transpose() * self.h_matrix() * c;
        // Quarter transformations over a dense n^4 buffer.
        let idx = |a: usize, b: usize, cc: usize, d: usize| ((a * n + b) * n + cc) * n + d;
        let mut full = vec![0.0; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        full[idx(p, q, r, s)] = self.eri(p, q, r, s);
                    }
                }
            }
        }
        let mut tmp = vec![0.0; full.len()];
        for _ in 0..4 {
            tmp.iter_mut().for_each(|x| *x = 0.0);
            for a in 0..n {
                for b in 0..n {
                    for cc in 0..n {
                        for d in 0..n {
                            let v = full[idx(a, b, cc, d)];
                            if v == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                let w = v * c[(d, j)];
                                // rotate the last index, then cycle the axes
                                tmp[idx(j, a, b, cc)] += w;
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut full, &mut tmp);
        }
        let mut out = IntegralSet::zeros(n, self.n_electrons, self.ms2)?;
        out.e_nuc = self.e_nuc;
        for p in 0..n {
            for q in 0..=p {
                out.set_h(p, q, 0.5 * (h[(p, q)] + h[(q, p)]));
            }
        }
        for p in 0..n {
            for q in 0..=p {
                for r in 0..n {
                    for s in 0..=r {
                        if pair_index(p, q) >= pair_index(r, s) {
                            out.set_eri(p, q, r, s, full[idx(p, q, r, s)]);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Iterates over the canonical representative `(p, q, r, s, value)` of
    /// every two-electron symmetry class, `p ≥ q`, `r ≥ s`, `pq ≥ rs`.
    pub fn eri_classes(&self) -> impl Iterator<Item = (usize, usize, usize, usize, f64)> + '_ {
        let n = self.n_orb;
        (0..n).flat_map(move |p| {
            (0..=p).flat_map(move |q| {
                (0..=p).flat_map(move |r| {
                    let smax = if r == p { q } else { r };
                    (0..=smax).map(move |s| (p, q, r, s, self.eri(p, q, r, s)))
                })
            })
        })
    }
}
