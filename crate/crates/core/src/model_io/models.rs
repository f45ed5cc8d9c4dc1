use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IntegralSet;
use crate::error::{Error, Result};

/// One-band Hubbard chain in the site basis at half filling (`n_sites`
/// electrons, lowest spin projection). Use [`IntegralSet::with_electrons`] for other
/// fillings.
///
/// For `n_sites == 2` the periodic wrap bond would duplicate the single bond,
/// so it is only added for rings of three or more sites.
pub fn hubbard_chain(n_sites: usize, t: f64, u: f64, periodic: bool) -> Result<IntegralSet> {
    if n_sites < 2 {
        return Err(Error::domain(format!(
            "Hubbard chain needs at least 2 sites, got {n_sites}"
        )));
    }
    let mut ints = IntegralSet::zeros(n_sites, n_sites, (n_sites % 2) as i32)?;
    for i in 0..n_sites - 1 {
        ints.set_h(i, i + 1, -t);
    }
    if periodic && n_sites > 2 {
        ints.set_h(0, n_sites - 1, -t);
    }
    for i in 0..n_sites {
        ints.set_eri(i, i, i, i, u);
    }
    Ok(ints)
}

/// Open Hubbard chain with random bond and on-site disorder of relative
/// strength `disorder`, reproducible from `seed`.
pub fn disordered_hubbard_chain(
    n_sites: usize,
    t: f64,
    u: f64,
    disorder: f64,
    seed: u64,
) -> Result<IntegralSet> {
    let mut ints = hubbard_chain(n_sites, t, u, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_sites - 1 {
        let scale = 1.0 + disorder * rng.random_range(-1.0..1.0);
        ints.set_h(i, i + 1, -t * scale);
    }
    for i in 0..n_sites {
        ints.set_h(i, i, disorder * t * rng.random_range(-1.0..1.0));
    }
    Ok(ints)
}

/// Random integrals with the full permutational symmetry, for property tests
/// and benchmarks. Not physical beyond symmetry and a positive `[pp|pp]`.
pub fn random_integrals(n_orb: usize, n_electrons: usize, seed: u64) -> IntegralSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ms2 = (n_electrons % 2) as i32;
    let mut ints = IntegralSet::zeros(n_orb, n_electrons, ms2).expect("valid sizes");
    ints.e_nuc = rng.random_range(0.0..2.0);
    for p in 0..n_orb {
        for q in 0..=p {
            let v = if p == q {
                -2.0 + p as f64 * 0.5 + rng.random_range(-0.1..0.1)
            } else {
                rng.random_range(-0.2..0.2)
            };
            ints.set_h(p, q, v);
        }
    }
    let classes: Vec<_> = ints.eri_classes().map(|(p, q, r, s, _)| (p, q, r, s)).collect();
    for (p, q, r, s) in classes {
        let v = if p == q && r == s {
            0.3 + rng.random_range(0.0..0.4)
        } else {
            rng.random_range(-0.05..0.05)
        };
        ints.set_eri(p, q, r, s, v);
    }
    ints
}
