use serde::{Deserialize, Serialize};

use super::{bits, Determinant};
use crate::error::{Error, Result};
use crate::model_io::IntegralSet;

/// Core / active / virtual split of the spatial orbitals.
///
/// Active orbital `active[k]` is bit `k` of an active-space determinant. All
/// three lists are kept in ascending orbital order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActiveSpacePartition {
    pub core: Vec<usize>,
    pub active: Vec<usize>,
    #[serde(rename = "virtual")]
    pub virt: Vec<usize>,
    pub n_active_electrons: usize,
}

impl ActiveSpacePartition {
    /// Validates and sorts the orbital lists for a system of `n_orb` orbitals
    /// and `n_electrons` electrons.
    pub fn new(
        n_orb: usize,
        n_electrons: usize,
        mut core: Vec<usize>,
        mut active: Vec<usize>,
        mut virt: Vec<usize>,
        n_active_electrons: usize,
    ) -> Result<Self> {
        core.sort_unstable();
        active.sort_unstable();
        virt.sort_unstable();
        let mut seen = vec![false; n_orb];
        for &p in core.iter().chain(&active).chain(&virt) {
            if p >= n_orb {
                return Err(Error::domain(format!("orbital {p} outside 0..{n_orb}")));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::domain(format!("orbital {p} assigned twice")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::domain("partition does not cover every orbital"));
        }
        if n_active_electrons > 2 * active.len() {
            return Err(Error::domain(format!(
                "{n_active_electrons} active electrons do not fit in {} active orbitals",
                active.len()
            )));
        }
        if 2 * core.len() + n_active_electrons != n_electrons {
            return Err(Error::domain(format!(
                "2 x {} core + {n_active_electrons} active electrons != {n_electrons}",
                core.len()
            )));
        }
        Ok(ActiveSpacePartition { core, active, virt, n_active_electrons })
    }

    /// Every orbital active.
    pub fn full_space(n_orb: usize, n_electrons: usize) -> Result<Self> {
        Self::new(n_orb, n_electrons, vec![], (0..n_orb).collect(), vec![], n_electrons)
    }

    /// The `n_active` orbitals straddling the Fermi level of the orbital
    /// energy ordering: the lowest `(n_e − n_active_electrons)/2` orbitals are
    /// core, the next `n_active` active, the rest virtual.
    pub fn fermi_window(
        ints: &IntegralSet,
        n_active: usize,
        n_active_electrons: usize,
    ) -> Result<Self> {
        let n_e = ints.n_electrons;
        if n_active_electrons > n_e || (n_e - n_active_electrons) % 2 != 0 {
            return Err(Error::domain(format!(
                "cannot place {n_active_electrons} active electrons out of {n_e}"
            )));
        }
        let n_core = (n_e - n_active_electrons) / 2;
        if n_core + n_active > ints.n_orb {
            return Err(Error::domain("active window exceeds the orbital count"));
        }
        let eps = ints.orbital_energies_or_fock();
        let mut order: Vec<usize> = (0..ints.n_orb).collect();
        order.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]).then(a.cmp(&b)));
        Self::new(
            ints.n_orb,
            n_e,
            order[..n_core].to_vec(),
            order[n_core..n_core + n_active].to_vec(),
            order[n_core + n_active..].to_vec(),
            n_active_electrons,
        )
    }

    pub fn n_orb(&self) -> usize {
        self.core.len() + self.active.len() + self.virt.len()
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn n_electrons(&self) -> usize {
        2 * self.core.len() + self.n_active_electrons
    }

    /// Compact text form, e.g. `c[0]a[1,2]v[3]/2e`.
    pub fn digest(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        format!(
            "c[{}]a[{}]v[{}]/{}e",
            join(&self.core),
            join(&self.active),
            join(&self.virt),
            self.n_active_electrons
        )
    }

    /// Whether `self` is obtained from `outer` by relabelling some active
    /// orbitals as core or virtual.
    pub fn is_nested_in(&self, outer: &ActiveSpacePartition) -> bool {
        self.n_orb() == outer.n_orb()
            && self.n_electrons() == outer.n_electrons()
            && self.active.iter().all(|p| outer.active.contains(p))
            && outer.core.iter().all(|p| self.core.contains(p))
            && outer.virt.iter().all(|p| self.virt.contains(p))
    }

    fn core_mask(&self) -> u64 {
        self.core.iter().fold(0u64, |m, &c| m | 1u64 << c)
    }

    fn virt_mask(&self) -> u64 {
        self.virt.iter().fold(0u64, |m, &c| m | 1u64 << c)
    }

    /// Whether a full-space determinant has every core orbital doubly
    /// occupied and every virtual orbital empty.
    pub fn contains(&self, full: &Determinant) -> bool {
        let core = self.core_mask();
        let virt = self.virt_mask();
        full.alpha & core == core
            && full.beta & core == core
            && full.alpha & virt == 0
            && full.beta & virt == 0
    }

    fn map_string(&self, local: u64) -> u64 {
        bits(local).fold(0u64, |m, k| m | 1u64 << self.active[k])
    }

    /// Phase relating the active-space state (core pairs in front of the
    /// active string) to the canonically ordered full determinant. Constant
    /// factors that only depend on the sector are dropped.
    fn embedding_phase(&self, local: &Determinant) -> f64 {
        let mut parity = 0usize;
        for s in [local.alpha, local.beta] {
            for k in bits(s) {
                let p = self.active[k];
                parity += self.core.iter().filter(|&&c| c > p).count();
            }
        }
        if parity % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Maps an active-space determinant to full orbital indexing, with the
    /// phase to apply to its CI coefficient.
    pub fn embed(&self, local: &Determinant) -> (Determinant, f64) {
        let core = self.core_mask();
        let full = Determinant::new(
            self.map_string(local.alpha) | core,
            self.map_string(local.beta) | core,
        );
        (full, self.embedding_phase(local))
    }

    /// Inverse of [`ActiveSpacePartition::embed`]; `None` if `full` is not an
    /// active-space determinant of this partition.
    pub fn restrict(&self, full: &Determinant) -> Option<(Determinant, f64)> {
        if !self.contains(full) {
            return None;
        }
        let mut local = Determinant::new(0, 0);
        for (k, &p) in self.active.iter().enumerate() {
            local.alpha |= (full.alpha >> p & 1) << k;
            local.beta |= (full.beta >> p & 1) << k;
        }
        let phase = self.embedding_phase(&local);
        Some((local, phase))
    }
}
