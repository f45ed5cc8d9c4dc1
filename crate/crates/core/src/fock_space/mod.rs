//! Determinants, active-space partitions and Slater–Condon matrix elements.
//!
//! Phase convention: a determinant is the product of creation operators in
//! ascending order with every alpha spin-orbital before every beta one.

mod hamiltonian;
mod partition;
mod space;

pub use hamiltonian::{
    build_active_hamiltonian, electronic_element, full_matrix_element, slater_condon,
    ActiveHamiltonian,
};
pub use partition::ActiveSpacePartition;
pub use space::{
    connected_external_determinants, enumerate_cas_determinants, enumerate_strings,
    for_each_excitation, CasSpace,
};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Determinants use one `u64` per spin channel.
pub const MAX_ORBITALS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Alpha,
    Beta,
}

/// Alpha and beta occupation bitmasks over spatial orbitals.
///
/// The derived ordering compares the alpha string first, then beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Determinant {
    pub alpha: u64,
    pub beta: u64,
}

/// Iterates over the set bits of `s` in ascending order.
#[inline]
pub fn bits(mut s: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if s == 0 {
            None
        } else {
            let k = s.trailing_zeros() as usize;
            s &= s - 1;
            Some(k)
        }
    })
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Number of set bits strictly between positions `i` and `j`.
#[inline]
pub fn bits_between(s: u64, i: usize, j: usize) -> u32 {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    if hi <= lo + 1 {
        return 0;
    }
    ((s >> (lo + 1)) & low_mask(hi - lo - 1)).count_ones()
}

/// Applies `a†_to a_from` to a single spin string. Returns the new string and
/// the fermionic sign, or `None` if the excitation is not allowed.
#[inline]
pub fn excite_string(s: u64, from: usize, to: usize) -> Option<(u64, f64)> {
    if s >> from & 1 == 0 {
        return None;
    }
    if from == to {
        return Some((s, 1.0));
    }
    if s >> to & 1 == 1 {
        return None;
    }
    let sign = if bits_between(s, from, to) % 2 == 0 { 1.0 } else { -1.0 };
    Some((s ^ (1u64 << from) ^ (1u64 << to), sign))
}

impl Determinant {
    pub const fn new(alpha: u64, beta: u64) -> Self {
        Determinant { alpha, beta }
    }

    /// Closed-shell determinant with orbitals `0..n_doubly` doubly occupied.
    pub fn closed_shell(n_doubly: usize) -> Self {
        Determinant::new(low_mask(n_doubly), low_mask(n_doubly))
    }

    /// Determinant with the lowest `n_alpha` / `n_beta` orbitals occupied.
    pub fn aufbau(n_alpha: usize, n_beta: usize) -> Self {
        Determinant::new(low_mask(n_alpha), low_mask(n_beta))
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha.count_ones() as usize
    }

    pub fn n_beta(&self) -> usize {
        self.beta.count_ones() as usize
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha() + self.n_beta()
    }

    pub fn string(&self, spin: Spin) -> u64 {
        match spin {
            Spin::Alpha => self.alpha,
            Spin::Beta => self.beta,
        }
    }

    /// Occupation (0, 1 or 2) of spatial orbital `k`.
    pub fn occupation(&self, k: usize) -> u8 {
        ((self.alpha >> k & 1) + (self.beta >> k & 1)) as u8
    }

    /// Number of spin-orbital substitutions separating two determinants.
    pub fn excitation_rank(&self, other: &Determinant) -> usize {
        (((self.alpha ^ other.alpha).count_ones() + (self.beta ^ other.beta).count_ones()) / 2)
            as usize
    }

    pub fn same_sector(&self, other: &Determinant) -> bool {
        self.n_alpha() == other.n_alpha() && self.n_beta() == other.n_beta()
    }

    /// `a†_{to,σ} a_{from,σ}` applied to this determinant.
    pub fn excite(&self, spin: Spin, from: usize, to: usize) -> Option<(Determinant, f64)> {
        match spin {
            Spin::Alpha => excite_string(self.alpha, from, to)
                .map(|(s, sign)| (Determinant::new(s, self.beta), sign)),
            Spin::Beta => excite_string(self.beta, from, to)
                .map(|(s, sign)| (Determinant::new(self.alpha, s), sign)),
        }
    }

    /// Highest occupied spatial orbital plus one.
    pub fn span(&self) -> usize {
        64 - (self.alpha | self.beta).leading_zeros() as usize
    }

    /// Spin-orbital bitmask in blocked order: alpha orbital `p` is bit `p`,
    /// beta orbital `p` is bit `n_orb + p`.
    pub fn spin_orbitals(&self, n_orb: usize) -> u128 {
        (self.alpha as u128) | ((self.beta as u128) << n_orb)
    }

    pub fn from_spin_orbitals(bits: u128, n_orb: usize) -> Self {
        let mask = (1u128 << n_orb) - 1;
        Determinant::new((bits & mask) as u64, ((bits >> n_orb) & mask) as u64)
    }
}

impl fmt::Display for Determinant {
    /// One character per spatial orbital: `2`, `a`, `b` or `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.span().max(1);
        for k in 0..n {
            let c = match (self.alpha >> k & 1, self.beta >> k & 1) {
                (1, 1) => '2',
                (1, 0) => 'a',
                (0, 1) => 'b',
                _ => '0',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_occupations() {
        let d = Determinant::new(0b0011, 0b0101);
        assert_eq!(d.to_string(), "2ab");
        assert_eq!(d.occupation(0), 2);
        assert_eq!(d.occupation(3), 0);
        assert_eq!(d.n_electrons(), 4);
    }

    #[test]
    fn excitation_sign_counts_intervening_electrons() {
        // alpha: orbitals 0,1,2 occupied; 0 -> 3 passes 1 and 2
        let (s, sign) = excite_string(0b0111, 0, 3).unwrap();
        assert_eq!(s, 0b1110);
        assert_eq!(sign, 1.0);
        let (_, sign) = excite_string(0b0011, 0, 3).unwrap();
        assert_eq!(sign, -1.0);
        assert!(excite_string(0b0011, 2, 3).is_none());
        assert!(excite_string(0b0011, 0, 1).is_none());
    }

    #[test]
    fn rank_and_spin_orbital_views() {
        let a = Determinant::new(0b011, 0b011);
        let b = Determinant::new(0b101, 0b110);
        assert_eq!(a.excitation_rank(&b), 2);
        let so = b.spin_orbitals(3);
        assert_eq!(Determinant::from_spin_orbitals(so, 3), b);
        assert_eq!(so, 0b110_101);
    }
}
