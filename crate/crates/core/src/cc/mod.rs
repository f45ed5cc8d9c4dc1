//! Spin-orbital coupled cluster around a closed-shell determinant: CCSD with
//! an optional frozen amplitude block, conversion of active-space CI
//! coefficients to cluster amplitudes, the tailored energy correction and the
//! perturbative triples correction.
//!
//! Spin orbitals use the blocked order of [`Determinant::spin_orbitals`].
//! Excitation operators are `a†_a a_i` and `a†_a a†_b a_j a_i`.

mod ccsd;
mod tailored;
mod triples;

pub use ccsd::{cc_energy, ccsd_solve};
pub use tailored::{ci_to_cluster, tcc_external_solve, tccsd_correction};
pub use triples::triples_correction;


use ndarray::{Array2, Array4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock_space::Determinant;
use crate::model_io::IntegralSet;

/// Origin of the external amplitudes in the tailored solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TccMode {
    /// CCSD for the external amplitudes with the active block held fixed.
    #[default]
    FrozenActive,
    /// Unconstrained CCSD whose active block is then replaced.
    PlainCcsd,
}

impl std::fmt::Display for TccMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TccMode::FrozenActive => "frozen-active",
            TccMode::PlainCcsd => "plain-ccsd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CcOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Number of stored DIIS vectors; 0 disables extrapolation.
    pub diis_depth: usize,
    /// Minimum `|C₀|` accepted when converting CI coefficients.
    pub c0_min: f64,
    pub mode: TccMode,
    pub execution: Execution,
}

impl Default for CcOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            diis_depth: 8,
            c0_min: 0.1,
            mode: TccMode::FrozenActive,
            execution: Execution::default(),
        }
    }
}

/// Fock matrix and antisymmetrized integral blocks in the occupied/virtual
/// spin-orbital partition of a reference determinant.
#[derive(Debug, Clone)]
pub struct SpinOrbitalSystem {
    pub n_orb: usize,
    pub reference: Determinant,
    /// Occupied spin orbitals, ascending.
    pub occ: Vec<usize>,
    /// Virtual spin orbitals, ascending.
    pub vir: Vec<usize>,
    /// Reference energy including the nuclear term.
    pub e_reference: f64,
    pub foo: Array2<f64>,
    pub fov: Array2<f64>,
    pub fvv: Array2<f64>,
    pub oooo: Array4<f64>,
    pub ooov: Array4<f64>,
    pub oovv: Array4<f64>,
    pub ovov: Array4<f64>,
    pub ovvo: Array4<f64>,
    pub ovvv: Array4<f64>,
    pub vvvv: Array4<f64>,
}

impl SpinOrbitalSystem {
    pub fn new(ints: &IntegralSet, reference: &Determinant) -> Result<Self> {
        let n = ints.n_orb;
        if reference.span() > n {
            return Err(Error::domain("reference determinant exceeds the orbital space"));
        }
        if reference.n_alpha() != reference.n_beta() {
            return Err(Error::domain("coupled cluster needs a closed-shell reference"));
        }
        let so = reference.spin_orbitals(n);
        let occ: Vec<usize> = (0..2 * n).filter(|&p| so >> p & 1 == 1).collect();
        let vir: Vec<usize> = (0..2 * n).filter(|&p| so >> p & 1 == 0).collect();
        let g = |p: usize, q: usize, r: usize, s: usize| antisym(ints, p, q, r, s);

        let fock = |p: usize, q: usize| {
            let mut f = if p / n == q / n { ints.h(p % n, q % n) } else { 0.0 };
            for &m in &occ {
                f += g(p, m, q, m);
            }
            f
        };
        let mut e_ref = ints.e_nuc;
        for &m in &occ {
            e_ref += ints.h(m % n, m % n);
            for &k in &occ {
                e_ref += 0.5 * g(m, k, m, k);
            }
        }
        let (o, v) = (&occ, &vir);
        let (no, nv) = (o.len(), v.len());
        Ok(Self {
            n_orb: n,
            reference: *reference,
            e_reference: e_ref,
            foo: Array2::from_shape_fn((no, no), |(i, j)| fock(o[i], o[j])),
            fov: Array2::from_shape_fn((no, nv), |(i, a)| fock(o[i], v[a])),
            fvv: Array2::from_shape_fn((nv, nv), |(a, b)| fock(v[a], v[b])),
            oooo: Array4::from_shape_fn((no, no, no, no), |(p, q, r, s)| g(o[p], o[q], o[r], o[s])),
            ooov: Array4::from_shape_fn((no, no, no, nv), |(p, q, r, s)| g(o[p], o[q], o[r], v[s])),
            oovv: Array4::from_shape_fn((no, no, nv, nv), |(p, q, r, s)| g(o[p], o[q], v[r], v[s])),
            ovov: Array4::from_shape_fn((no, nv, no, nv), |(p, q, r, s)| g(o[p], v[q], o[r], v[s])),
            ovvo: Array4::from_shape_fn((no, nv, nv, no), |(p, q, r, s)| g(o[p], v[q], v[r], o[s])),
            ovvv: Array4::from_shape_fn((no, nv, nv, nv), |(p, q, r, s)| g(o[p], v[q], v[r], v[s])),
            vvvv: Array4::from_shape_fn((nv, nv, nv, nv), |(p, q, r, s)| g(v[p], v[q], v[r], v[s])),
            occ,
            vir,
        })
    }

    pub fn n_occ(&self) -> usize {
        self.occ.len()
    }

    pub fn n_vir(&self) -> usize {
        self.vir.len()
    }
}

/// `⟨pq||rs⟩ = ⟨pq|rs⟩ − ⟨pq|sr⟩` over blocked spin orbitals.
pub fn antisym(ints: &IntegralSet, p: usize, q: usize, r: usize, s: usize) -> f64 {
    let n = ints.n_orb;
    let (sp, sq, sr, ss) = (p / n, q / n, r / n, s / n);
    let (p, q, r, s) = (p % n, q % n, r % n, s % n);
    let mut v = 0.0;
    if sp == sr && sq == ss {
        v += ints.eri(p, r, q, s);
    }
    if sp == ss && sq == sr {
        v -= ints.eri(p, s, q, r);
    }
    v
}

/// Singles and doubles amplitudes over the occupied/virtual spin orbitals of
/// `reference`, with a per-amplitude frozen flag.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSet {
    pub reference: Determinant,
    pub n_orb: usize,
    pub occ: Vec<usize>,
    pub vir: Vec<usize>,
    pub t1: Array2<f64>,
    pub t2: Array4<f64>,
    pub frozen1: Array2<bool>,
    pub frozen2: Array4<bool>,
}

impl AmplitudeSet {
    pub fn zeros(sys: &SpinOrbitalSystem) -> Self {
        Self::zeros_for(&sys.reference, sys.n_orb)
    }

    /// Zero amplitudes for the occupied/virtual split of `reference`.
    pub fn zeros_for(reference: &Determinant, n_orb: usize) -> Self {
        let so = reference.spin_orbitals(n_orb);
        let occ: Vec<usize> = (0..2 * n_orb).filter(|&p| so >> p & 1 == 1).collect();
        let vir: Vec<usize> = (0..2 * n_orb).filter(|&p| so >> p & 1 == 0).collect();
        let (no, nv) = (occ.len(), vir.len());
        Self {
            reference: *reference,
            n_orb,
            occ,
            vir,
            t1: Array2::zeros((no, nv)),
            t2: Array4::zeros((no, no, nv, nv)),
            frozen1: Array2::from_elem((no, nv), false),
            frozen2: Array4::from_elem((no, no, nv, nv), false),
        }
    }

    pub fn n_occ(&self) -> usize {
        self.occ.len()
    }

    pub fn n_vir(&self) -> usize {
        self.vir.len()
    }

    pub fn n_frozen(&self) -> usize {
        self.frozen1.iter().filter(|f| **f).count() + self.frozen2.iter().filter(|f| **f).count()
    }

    /// Copy with every frozen amplitude set to zero.
    pub fn external_only(&self) -> Self {
        let mut out = self.clone();
        out.t1.zip_mut_with(&self.frozen1, |t, f| if *f { *t = 0.0 });
        out.t2.zip_mut_with(&self.frozen2, |t, f| if *f { *t = 0.0 });
        out
    }

    /// Copy with every unfrozen amplitude set to zero.
    pub fn frozen_only(&self) -> Self {
        let mut out = self.clone();
        out.t1.zip_mut_with(&self.frozen1, |t, f| if !*f { *t = 0.0 });
        out.t2.zip_mut_with(&self.frozen2, |t, f| if !*f { *t = 0.0 });
        out
    }

    /// Sets `t2[ijab]` and its three antisymmetric partners.
    pub fn set_t2(&mut self, i: usize, j: usize, a: usize, b: usize, value: f64) {
        self.t2[[i, j, a, b]] = value;
        self.t2[[j, i, a, b]] = -value;
        self.t2[[i, j, b, a]] = -value;
        self.t2[[j, i, b, a]] = value;
    }

    /// Largest deviation from `t2[ijab] = −t2[jiab] = −t2[ijba] = t2[jiba]`.
    pub fn antisymmetry_error(&self) -> f64 {
        let (no, nv) = (self.n_occ(), self.n_vir());
        let mut err = 0.0f64;
        for i in 0..no {
            for j in 0..no {
                for a in 0..nv {
                    for b in 0..nv {
                        let t = self.t2[[i, j, a, b]];
                        err = err
                            .max((t + self.t2[[j, i, a, b]]).abs())
                            .max((t + self.t2[[i, j, b, a]]).abs())
                            .max((t - self.t2[[j, i, b, a]]).abs());
                    }
                }
            }
        }
        err
    }
}

/// Spin-orbital MP2 correlation energy
/// `¼ Σ |⟨ij||ab⟩|² / (f_ii + f_jj − f_aa − f_bb)` with the diagonal Fock
/// elements of the reference.
pub fn mp2_energy(sys: &SpinOrbitalSystem) -> Result<f64> {
    let (no, nv) = (sys.n_occ(), sys.n_vir());
    let mut e = 0.0;
    for i in 0..no {
        for j in i + 1..no {
            for a in 0..nv {
                for b in a + 1..nv {
                    let v = sys.oovv[[i, j, a, b]];
                    if v == 0.0 {
                        continue;
                    }
                    let d = sys.foo[[i, i]] + sys.foo[[j, j]] - sys.fvv[[a, a]] - sys.fvv[[b, b]];
                    if d.abs() < 1e-8 {
                        let so = sys.reference.spin_orbitals(sys.n_orb)
                            ^ (1 << sys.occ[i])
                            ^ (1 << sys.occ[j])
                            ^ (1 << sys.vir[a])
                            ^ (1 << sys.vir[b]);
                        return Err(Error::intruder(&Determinant::from_spin_orbitals(so, sys.n_orb), d));
                    }
                    e += v * v / d;
                }
            }
        }
    }
    Ok(e)
}

/// Sign of `a_p` (or of `a†_p` on a string without `p`) acting on the
/// spin-orbital occupation string `s`.
pub(crate) fn operator_sign(s: u128, p: usize) -> f64 {
    let below = s & ((1u128 << p) - 1);
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
