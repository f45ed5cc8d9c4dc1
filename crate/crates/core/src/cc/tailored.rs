use super::{cc_energy, ccsd_solve, operator_sign, AmplitudeSet, CcOptions, SpinOrbitalSystem, TccMode};
use crate::casci::CIVector;
use crate::correction::{CorrectionResult, Diagnostics};
use crate::error::{Error, Result};
use crate::fock_space::Determinant;

/// Cluster amplitudes of the active block from CI coefficients on the
/// reference active-space basis:
/// `t_ia = C_S/C₀` and `t_ijab = C_D/C₀ − (t_ia t_jb − t_ib t_ja)`, with the
/// sign of the excitation operator string relative to the determinant folded
/// in. Every amplitude whose orbitals are all active is flagged frozen, also
/// those with zero value.
pub fn ci_to_cluster(c_app: &CIVector, hf: &Determinant, c0_min: f64) -> Result<AmplitudeSet> {
    let part = &c_app.partition;
    let n = part.n_orb();
    if !part.contains(hf) {
        return Err(Error::domain(format!("reference determinant {hf} is outside {}", part.digest())));
    }
    let mut t = AmplitudeSet::zeros_for(hf, n);
    let mut occ_pos = vec![usize::MAX; 2 * n];
    let mut vir_pos = vec![usize::MAX; 2 * n];
    for (k, &p) in t.occ.iter().enumerate() {
        occ_pos[p] = k;
    }
    for (k, &p) in t.vir.iter().enumerate() {
        vir_pos[p] = k;
    }

    let support = c_app.to_full();
    let c0 = support.iter().find(|(d, _)| d == hf).map_or(0.0, |(_, c)| *c);
    if c0.abs() < c0_min || c0 == 0.0 {
        return Err(Error::ReferenceDominance { c0: c0.abs(), threshold: c0_min });
    }
    let hf_so = hf.spin_orbitals(n);
    let split = |d: &Determinant| {
        let so = d.spin_orbitals(n);
        let holes: Vec<usize> = (0..2 * n).filter(|&p| (hf_so & !so) >> p & 1 == 1).collect();
        let parts: Vec<usize> = (0..2 * n).filter(|&p| (so & !hf_so) >> p & 1 == 1).collect();
        (holes, parts)
    };

    for (d, c) in &support {
        let (holes, parts) = split(d);
        if let ([i], [a]) = (holes.as_slice(), parts.as_slice()) {
            let s = hf_so & !(1 << i);
            let sign = operator_sign(hf_so, *i) * operator_sign(s, *a);
            t.t1[[occ_pos[*i], vir_pos[*a]]] = sign * c / c0;
        }
    }
    for (d, c) in &support {
        let (holes, parts) = split(d);
        if let ([i, j], [a, b]) = (holes.as_slice(), parts.as_slice()) {
            let s1 = hf_so & !(1 << i);
            let s2 = s1 & !(1 << j);
            let s3 = s2 | 1 << b;
            let sign = operator_sign(hf_so, *i)
                * operator_sign(s1, *j)
                * operator_sign(s2, *b)
                * operator_sign(s3, *a);
            let (oi, oj, va, vb) = (occ_pos[*i], occ_pos[*j], vir_pos[*a], vir_pos[*b]);
            let disconnected = t.t1[[oi, va]] * t.t1[[oj, vb]] - t.t1[[oi, vb]] * t.t1[[oj, va]];
            t.set_t2(oi, oj, va, vb, sign * c / c0 - disconnected);
        }
    }

    let active: Vec<bool> = (0..2 * n).map(|p| part.active.contains(&(p % n))).collect();
    let (occ, vir) = (t.occ.clone(), t.vir.clone());
    for ((i, a), f) in t.frozen1.indexed_iter_mut() {
        *f = active[occ[i]] && active[vir[a]];
    }
    for ((i, j, a, b), f) in t.frozen2.indexed_iter_mut() {
        *f = active[occ[i]] && active[occ[j]] && active[vir[a]] && active[vir[b]];
    }
    Ok(t)
}

/// Completes `t_act` with external amplitudes. In frozen-active mode the
/// external block solves the CCSD equations with the active block fixed; in
/// plain-ccsd mode it is taken from an unconstrained CCSD solution. The
/// returned set carries the frozen flags and values of `t_act` and the
/// iteration count.
pub fn tcc_external_solve(
    sys: &SpinOrbitalSystem,
    t_act: &AmplitudeSet,
    opts: &CcOptions,
) -> Result<(AmplitudeSet, usize)> {
    match opts.mode {
        TccMode::FrozenActive => {
            let (t, _, iters) = ccsd_solve(sys, Some(t_act), opts)?;
            Ok((t, iters))
        }
        TccMode::PlainCcsd => {
            let (free, _, iters) = ccsd_solve(sys, None, opts)?;
            let mut t = t_act.clone();
            t.t1.zip_mut_with(&free.t1, |x, y| *x = *y);
            t.t2.zip_mut_with(&free.t2, |x, y| *x = *y);
            let frozen = t_act.frozen_only();
            t.t1.zip_mut_with(&t_act.frozen1, |x, f| if *f { *x = 0.0 });
            t.t2.zip_mut_with(&t_act.frozen2, |x, f| if *f { *x = 0.0 });
            t.t1 += &frozen.t1;
            t.t2 += &frozen.t2;
            Ok((t, iters))
        }
    }
}

/// `ΔE = E_CC(T_act + T_ext) − E_CC(T_act)` on top of `e_reference`.
pub fn tccsd_correction(
    sys: &SpinOrbitalSystem,
    t_act: &AmplitudeSet,
    t_full: &AmplitudeSet,
    e_reference: f64,
    method: &str,
) -> Result<CorrectionResult> {
    if t_act.frozen1 != t_full.frozen1 || t_act.frozen2 != t_full.frozen2 {
        return Err(Error::domain("amplitude sets have different active blocks"));
    }
    let act = t_act.frozen_only();
    let same = t_full.t1.iter().zip(&t_full.frozen1).zip(&act.t1).all(|((x, f), y)| !*f || x == y)
        && t_full.t2.iter().zip(&t_full.frozen2).zip(&act.t2).all(|((x, f), y)| !*f || x == y);
    if !same {
        return Err(Error::domain("full amplitudes do not contain the active block"));
    }
    let delta = cc_energy(sys, t_full) - cc_energy(sys, &act);
    let external = t_full.frozen1.iter().chain(t_full.frozen2.iter()).filter(|f| !**f).count();
    let diagnostics = Diagnostics {
        external_size: Some(external),
        ..Diagnostics::default()
    };
    Ok(CorrectionResult::new(method, e_reference, delta, diagnostics))
}
