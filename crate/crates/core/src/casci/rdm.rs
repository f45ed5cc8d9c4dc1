use std::collections::HashMap;

use nalgebra::DMatrix;

use super::CIVector;
use crate::fock_space::{bits, Determinant, Spin};

/// Spin-summed one-particle density `D_pq = Σ_σ ⟨Ψ|a†_pσ a_qσ|Ψ⟩` over the
/// active orbitals.
pub fn one_rdm(psi: &CIVector) -> DMatrix<f64> {
    let n = psi.n_active();
    let full = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    let index = psi.index_map();
    let mut d = DMatrix::zeros(n, n);
    for (a, ca) in psi.support() {
        for spin in [Spin::Alpha, Spin::Beta] {
            let s = a.string(spin);
            for q in bits(s) {
                d[(q, q)] += ca * ca;
                for p in bits(!s & full) {
                    let (b, sign) = a.excite(spin, q, p).expect("q occupied, p empty");
                    if let Some(&j) = index.get(&b) {
                        d[(p, q)] += psi.coeffs[j] * sign * ca;
                    }
                }
            }
        }
    }
    d
}

/// Expected occupation of every active orbital, `Σ_A |C_A|² n_k(A)`.
pub fn exact_occupancies(psi: &CIVector) -> Vec<f64> {
    let mut occ = vec![0.0; psi.n_active()];
    for (a, c) in psi.support() {
        for (k, o) in occ.iter_mut().enumerate() {
            *o += c * c * a.occupation(k) as f64;
        }
    }
    occ
}

/// `⟨S²⟩ = S_z(S_z + 1) + ‖S₊Ψ‖²` for a normalised state.
pub fn spin_squared(psi: &CIVector) -> f64 {
    let mut raised: HashMap<Determinant, f64> = HashMap::new();
    let mut sz = 0.0;
    for (a, c) in psi.support() {
        sz = 0.5 * (a.n_alpha() as f64 - a.n_beta() as f64);
        for p in bits(a.beta & !a.alpha) {
            let below = (1u64 << p) - 1;
            let parity = a.n_alpha() + (a.beta & below).count_ones() as usize
                + (a.alpha & below).count_ones() as usize;
            let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
            let b = Determinant::new(a.alpha | 1 << p, a.beta & !(1 << p));
            *raised.entry(b).or_insert(0.0) += sign * c;
        }
    }
    sz * (sz + 1.0) + raised.values().map(|v| v * v).sum::<f64>()
}
