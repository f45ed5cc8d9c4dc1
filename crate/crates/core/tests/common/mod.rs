//! Reference implementations used only by the integration and acceptance
//! tests. Everything here works in a plain second-quantized picture: a
//! determinant is a `u128` of spin orbitals (alpha `p` at bit `p`, beta `p`
//! at bit `n + p`), operators act by creation/annihilation with the usual
//! Jordan–Wigner sign, and nothing calls the crate's Slater–Condon code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use qdos_core::casci::CIVector;
use qdos_core::fock_space::Determinant;
use qdos_core::model_io::IntegralSet;

pub type State = BTreeMap<u128, f64>;

pub fn annihilate(s: u128, p: usize) -> Option<(u128, f64)> {
    if s >> p & 1 == 0 {
        return None;
    }
    let sign = if (s & ((1u128 << p) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((s & !(1u128 << p), sign))
}

pub fn create(s: u128, p: usize) -> Option<(u128, f64)> {
    if s >> p & 1 == 1 {
        return None;
    }
    let sign = if (s & ((1u128 << p) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((s | 1u128 << p, sign))
}

/// `a†_{parts[0]} a†_{parts[1]} … a_{holes[1]} a_{holes[0]} |s⟩`.
pub fn excite(s: u128, holes: &[usize], parts: &[usize]) -> Option<(u128, f64)> {
    let mut cur = s;
    let mut sign = 1.0;
    for &i in holes {
        let (n, f) = annihilate(cur, i)?;
        cur = n;
        sign *= f;
    }
    for &a in parts.iter().rev() {
        let (n, f) = create(cur, a)?;
        cur = n;
        sign *= f;
    }
    Some((cur, sign))
}

pub fn add(state: &mut State, det: u128, v: f64) {
    *state.entry(det).or_insert(0.0) += v;
}

pub fn dot(a: &State, b: &State) -> f64 {
    a.iter().map(|(d, x)| x * b.get(d).copied().unwrap_or(0.0)).sum()
}

/// Dense copy of the integrals with the two-body list pruned to nonzeros.
pub struct Hamiltonian {
    pub n: usize,
    pub e_nuc: f64,
    pub h: Vec<f64>,
    pub eri: Vec<f64>,
    one_body: Vec<(usize, usize, f64)>,
    two_body: Vec<(usize, usize, usize, usize, f64)>,
}

impl Hamiltonian {
    pub fn new(ints: &IntegralSet) -> Self {
        let n = ints.n_orb;
        let mut h = vec![0.0; n * n];
        let mut eri = vec![0.0; n * n * n * n];
        let mut one_body = Vec::new();
        let mut two_body = Vec::new();
        for p in 0..n {
            for q in 0..n {
                h[p * n + q] = ints.h(p, q);
                if h[p * n + q] != 0.0 {
                    one_body.push((p, q, h[p * n + q]));
                }
                for r in 0..n {
                    for s in 0..n {
                        let v = ints.eri(p, q, r, s);
                        eri[((p * n + q) * n + r) * n + s] = v;
                        if v != 0.0 {
                            two_body.push((p, q, r, s, v));
                        }
                    }
                }
            }
        }
        Self { n, e_nuc: ints.e_nuc, h, eri, one_body, two_body }
    }

    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.n + q]
    }

    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.eri[((p * self.n + q) * self.n + r) * self.n + s]
    }

    /// `Ĥ|ψ⟩` with `Ĥ = E_nuc + Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ`.
    pub fn apply(&self, psi: &State) -> State {
        let n = self.n;
        let mut out = State::new();
        for (&det, &c) in psi {
            add(&mut out, det, self.e_nuc * c);
            for &(p, q, v) in &self.one_body {
                for off in [0, n] {
                    if let Some((d, f)) = annihilate(det, q + off).and_then(|(d1, f1)| {
                        create(d1, p + off).map(|(d2, f2)| (d2, f1 * f2))
                    }) {
                        add(&mut out, d, v * f * c);
                    }
                }
            }
            for &(p, q, r, s, v) in &self.two_body {
                for so in [0, n] {
                    for to in [0, n] {
                        let hit = annihilate(det, q + so)
                            .and_then(|(d, f)| annihilate(d, s + to).map(|(d, g)| (d, f * g)))
                            .and_then(|(d, f)| create(d, r + to).map(|(d, g)| (d, f * g)))
                            .and_then(|(d, f)| create(d, p + so).map(|(d, g)| (d, f * g)));
                        if let Some((d, f)) = hit {
                            add(&mut out, d, 0.5 * v * f * c);
                        }
                    }
                }
            }
        }
        out.retain(|_, v| *v != 0.0);
        out
    }

    pub fn element(&self, bra: u128, ket: u128) -> f64 {
        self.apply(&State::from([(ket, 1.0)])).get(&bra).copied().unwrap_or(0.0)
    }

    /// Closed-shell Fock diagonal for the `n_docc` lowest orbitals doubly
    /// occupied.
    pub fn closed_shell_fock_diagonal(&self, n_docc: usize) -> Vec<f64> {
        (0..self.n)
            .map(|p| {
                self.h(p, p)
                    + (0..n_docc).map(|i| 2.0 * self.eri(p, p, i, i) - self.eri(p, i, i, p)).sum::<f64>()
            })
            .collect()
    }

    /// Diagonal of the generalized Fock operator for a spin-summed density.
    pub fn generalized_fock_diagonal(&self, density: &DMatrix<f64>) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|p| {
                let mut f = self.h(p, p);
                for r in 0..n {
                    for s in 0..n {
                        f += density[(r, s)] * (self.eri(p, p, r, s) - 0.5 * self.eri(p, s, r, p));
                    }
                }
                f
            })
            .collect()
    }
}

/// All determinants with `na` alpha and `nb` beta electrons in `n` orbitals,
/// ascending.
pub fn sector(n: usize, na: usize, nb: usize) -> Vec<u128> {
    let strings = |k: usize| -> Vec<u128> { (0u128..1 << n).filter(|s| s.count_ones() as usize == k).collect() };
    let mut out = Vec::new();
    for b in strings(nb) {
        for a in strings(na) {
            out.push(a | b << n);
        }
    }
    out.sort_unstable();
    out
}

pub fn dense_matrix(ham: &Hamiltonian, dets: &[u128]) -> DMatrix<f64> {
    let index: BTreeMap<u128, usize> = dets.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut m = DMatrix::zeros(dets.len(), dets.len());
    for (j, &d) in dets.iter().enumerate() {
        for (e, v) in ham.apply(&State::from([(d, 1.0)])) {
            if let Some(&i) = index.get(&e) {
                m[(i, j)] = v;
            }
        }
    }
    m
}

/// Lowest eigenpair of the Hamiltonian projected on `dets`.
pub fn lowest(ham: &Hamiltonian, dets: &[u128]) -> (f64, State) {
    let eig = SymmetricEigen::new(dense_matrix(ham, dets));
    let k = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(k);
    (eig.eigenvalues[k], dets.iter().zip(v.iter()).map(|(d, c)| (*d, *c)).collect())
}

pub fn fci(ints: &IntegralSet) -> (f64, State) {
    let ham = Hamiltonian::new(ints);
    lowest(&ham, &sector(ints.n_orb, ints.n_alpha(), ints.n_beta()))
}

pub fn to_state(psi: &CIVector) -> State {
    let n = psi.partition.n_orb();
    psi.to_full().into_iter().map(|(d, c)| (d.spin_orbitals(n), c)).collect()
}

pub fn so(det: &Determinant, n: usize) -> u128 {
    det.spin_orbitals(n)
}

/// Spin-summed one-particle density `Σ_σ ⟨ψ|a†_pσ a_qσ|ψ⟩`.
pub fn one_rdm(psi: &State, n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            let mut v = 0.0;
            for off in [0, n] {
                for (&det, &c) in psi {
                    if let Some((e, f)) = excite(det, &[q + off], &[p + off]) {
                        v += psi.get(&e).copied().unwrap_or(0.0) * f * c;
                    }
                }
            }
            d[(p, q)] = v;
        }
    }
    d
}

/// Second-order energy by an explicit loop over every external determinant
/// `I` of the `(na, nb)` sector and every reference determinant `J`:
/// `−Σ_I (Σ_J H_IJ c_J)² / (E⁰_I − E⁰_ref)` with `E⁰_D = Σ_{p∈D} ε_p`.
pub fn brute_force_mrmp2(
    ham: &Hamiltonian,
    psi: &State,
    na: usize,
    nb: usize,
    eps: &[f64],
    in_reference_space: impl Fn(u128) -> bool,
) -> f64 {
    let n = ham.n;
    let e0 = |d: u128| -> f64 { (0..2 * n).filter(|&p| d >> p & 1 == 1).map(|p| eps[p % n]).sum() };
    let e0_ref: f64 = psi.iter().map(|(d, c)| c * c * e0(*d)).sum();
    let columns: Vec<(f64, State)> = psi.iter().map(|(&d, &c)| (c, ham.apply(&State::from([(d, 1.0)])))).collect();
    let mut total = 0.0;
    for i in sector(n, na, nb).into_iter().filter(|&d| !in_reference_space(d)) {
        let mut v = 0.0;
        for (c, col) in &columns {
            v += col.get(&i).copied().unwrap_or(0.0) * c;
        }
        if v != 0.0 {
            total -= v * v / (e0(i) - e0_ref);
        }
    }
    total
}

/// Closed-shell MP2 from spatial canonical orbitals:
/// `Σ (ia|jb)[2(ia|jb) − (ib|ja)] / (ε_i + ε_j − ε_a − ε_b)`.
pub fn spatial_mp2(ham: &Hamiltonian, n_docc: usize) -> f64 {
    let eps = ham.closed_shell_fock_diagonal(n_docc);
    let mut e = 0.0;
    for i in 0..n_docc {
        for j in 0..n_docc {
            for a in n_docc..ham.n {
                for b in n_docc..ham.n {
                    let iajb = ham.eri(i, a, j, b);
                    let ibja = ham.eri(i, b, j, a);
                    e += iajb * (2.0 * iajb - ibja) / (eps[i] + eps[j] - eps[a] - eps[b]);
                }
            }
        }
    }
    e
}

/// Cluster amplitudes keyed by `(holes, particles)` with ascending indices;
/// each stands for `t · a†_a a†_b … a_j a_i`.
#[derive(Debug, Clone, Default)]
pub struct Cluster {
    pub amps: BTreeMap<(Vec<usize>, Vec<usize>), f64>,
}

impl Cluster {
    pub fn apply(&self, psi: &State) -> State {
        let mut out = State::new();
        for (&det, &c) in psi {
            for ((h, p), t) in &self.amps {
                if let Some((d, f)) = excite(det, h, p) {
                    add(&mut out, d, t * f * c);
                }
            }
        }
        out
    }

    /// `e^{±T}|ψ⟩` by the terminating Taylor series.
    pub fn exp_apply(&self, psi: &State, sign: f64) -> State {
        let mut acc = psi.clone();
        let mut term = psi.clone();
        for k in 1..64 {
            term = self.apply(&term);
            term.values_mut().for_each(|v| *v *= sign / k as f64);
            term.retain(|_, v| *v != 0.0);
            if term.is_empty() {
                break;
            }
            for (d, v) in &term {
                add(&mut acc, *d, *v);
            }
        }
        acc
    }

    pub fn rank(&self, rank: usize) -> Cluster {
        Cluster { amps: self.amps.iter().filter(|((h, _), _)| h.len() == rank).map(|(k, v)| (k.clone(), *v)).collect() }
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

/// Spin-conserving excitation labels of rank `k` out of the reference.
pub fn excitations(reference: u128, n: usize, k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let occ: Vec<usize> = (0..2 * n).filter(|&p| reference >> p & 1 == 1).collect();
    let vir: Vec<usize> = (0..2 * n).filter(|&p| reference >> p & 1 == 0).collect();
    let beta = |v: &[usize]| v.iter().filter(|&&p| p >= n).count();
    let mut out = Vec::new();
    for h in combinations(&occ, k) {
        for p in combinations(&vir, k) {
            if beta(&h) == beta(&p) {
                out.push((h.clone(), p));
            }
        }
    }
    out
}

/// Spin-orbital energies `ε_P` for the spatial Fock diagonal.
fn spin_eps(eps: &[f64], p: usize) -> f64 {
    eps[p % eps.len()]
}

/// CCSD in determinant space: solves `⟨μ|e^{−T} Ĥ e^{T}|Φ⟩ = 0` for every
/// single and double `μ` with Jacobi steps against orbital-energy
/// differences, accelerated by DIIS. Returns the correlation energy and the amplitudes.
/// `fixed` amplitudes are held at their given values.
pub fn determinant_ccsd(
    ham: &Hamiltonian,
    reference: u128,
    eps: &[f64],
    fixed: &Cluster,
    tol: f64,
) -> (f64, Cluster) {
    let n = ham.n;
    let phi = State::from([(reference, 1.0)]);
    let e_ref = dot(&phi, &ham.apply(&phi));
    let mut t = fixed.clone();
    let free: Vec<(Vec<usize>, Vec<usize>)> = [1, 2]
        .iter()
        .flat_map(|&k| excitations(reference, n, k))
        .filter(|key| !fixed.amps.contains_key(key))
        .collect();
    for key in &free {
        t.amps.insert(key.clone(), 0.0);
    }
    let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for _ in 0..2000 {
        let psi = t.exp_apply(&phi, 1.0);
        let omega = t.exp_apply(&ham.apply(&psi), -1.0);
        let mut max_r: f64 = 0.0;
        let updates: Vec<f64> = free
            .iter()
            .map(|(h, p)| {
                let (d, f) = excite(reference, h, p).unwrap();
                let r = f * omega.get(&d).copied().unwrap_or(0.0);
                max_r = max_r.max(r.abs());
                let den: f64 =
                    h.iter().map(|&i| spin_eps(eps, i)).sum::<f64>() - p.iter().map(|&a| spin_eps(eps, a)).sum::<f64>();
                r / den
            })
            .collect();
        if max_r < tol {
            return (omega.get(&reference).copied().unwrap_or(0.0) - e_ref, t);
        }
        let mut next: Vec<f64> = free.iter().zip(&updates).map(|(k, u)| t.amps[k] + u).collect();
        history.push((next.clone(), updates));
        if history.len() > 6 {
            history.remove(0);
        }
        if history.len() >= 3 {
            next = diis_extrapolate(&history).unwrap_or(next);
        }
        for (key, v) in free.iter().zip(next) {
            t.amps.insert(key.clone(), v);
        }
    }
    panic!("determinant-space CCSD did not converge");
}

/// Pulay extrapolation over (amplitude, step) pairs.
fn diis_extrapolate(history: &[(Vec<f64>, Vec<f64>)]) -> Option<Vec<f64>> {
    let m = history.len();
    let mut b = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = nalgebra::DVector::zeros(m + 1);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] = history[i].1.iter().zip(&history[j].1).map(|(x, y)| x * y).sum::<f64>();
        }
        b[(i, m)] = -1.0;
        b[(m, i)] = -1.0;
    }
    rhs[m] = -1.0;
    let w = b.lu().solve(&rhs)?;
    let n = history[0].0.len();
    Some((0..n).map(|k| (0..m).map(|i| w[i] * history[i].0[k]).sum()).collect())
}

/// `(T)` in determinant space for canonical orbitals:
/// `Σ_μ W_μ (W_μ + V_μ) / D_μ` over triples `μ`, with `W_μ = ⟨μ|Ĥ T₂|Φ⟩`,
/// `V_μ = ⟨μ|Ĥ T₁|Φ⟩` and `D_μ` the orbital-energy difference.
pub fn determinant_triples(ham: &Hamiltonian, reference: u128, eps: &[f64], t: &Cluster) -> f64 {
    let n = ham.n;
    let phi = State::from([(reference, 1.0)]);
    let w = ham.apply(&t.rank(2).apply(&phi));
    let v = ham.apply(&t.rank(1).apply(&phi));
    let mut e = 0.0;
    for (h, p) in excitations(reference, n, 3) {
        let (d, f) = excite(reference, &h, &p).unwrap();
        let wm = f * w.get(&d).copied().unwrap_or(0.0);
        let vm = f * v.get(&d).copied().unwrap_or(0.0);
        let den: f64 = h.iter().map(|&i| spin_eps(eps, i)).sum::<f64>() - p.iter().map(|&a| spin_eps(eps, a)).sum::<f64>();
        e += wm * (wm + vm) / den;
    }
    e
}

/// Deterministic 64-bit LCG for test-local random choices that must not
/// depend on the crate's RNG plumbing.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 42) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            v.swap(i, self.below(i + 1));
        }
    }
}
