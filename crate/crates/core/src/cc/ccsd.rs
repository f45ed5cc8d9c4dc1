use log::debug;
use ndarray::{Array2, Array4};

use super::{AmplitudeSet, CcOptions, SpinOrbitalSystem};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::diis_coefficients;

/// Correlation part of `⟨Φ|Ĥ e^T|Φ⟩`:
/// `Σ f_ia t_ia + ¼ Σ ⟨ij||ab⟩ t_ijab + ½ Σ ⟨ij||ab⟩ t_ia t_jb`.
pub fn cc_energy(sys: &SpinOrbitalSystem, t: &AmplitudeSet) -> f64 {
    let (no, nv) = (sys.n_occ(), sys.n_vir());
    let mut e = 0.0;
    for i in 0..no {
        for a in 0..nv {
            e += sys.fov[[i, a]] * t.t1[[i, a]];
        }
    }
    for i in 0..no {
        for j in 0..no {
            for a in 0..nv {
                for b in 0..nv {
                    let v = sys.oovv[[i, j, a, b]];
                    if v != 0.0 {
                        e += v * (0.25 * t.t2[[i, j, a, b]] + 0.5 * t.t1[[i, a]] * t.t1[[j, b]]);
                    }
                }
            }
        }
    }
    e
}

fn array4(exec: Execution, shape: (usize, usize, usize, usize), f: impl Fn(usize, usize, usize, usize) -> f64 + Sync + Send) -> Array4<f64> {
    let (n0, n1, n2, n3) = shape;
    let slabs = exec.map_range(n0, |p| {
        let mut v = Vec::with_capacity(n1 * n2 * n3);
        for q in 0..n1 {
            for r in 0..n2 {
                for s in 0..n3 {
                    v.push(f(p, q, r, s));
                }
            }
        }
        v
    });
    Array4::from_shape_vec(shape, slabs.concat()).expect("slab sizes match the shape")
}

/// Right-hand sides of the CCSD amplitude equations in the form
/// `D t = RHS(t)` (Stanton–Gauss intermediates).
fn ccsd_rhs(sys: &SpinOrbitalSystem, t1: &Array2<f64>, t2: &Array4<f64>, exec: Execution) -> (Array2<f64>, Array4<f64>) {
    let (no, nv) = (sys.n_occ(), sys.n_vir());
    let (fov, foo, fvv) = (&sys.fov, &sys.foo, &sys.fvv);
    let (oooo, ooov, oovv, ovov, ovvo, ovvv, vvvv) =
        (&sys.oooo, &sys.ooov, &sys.oovv, &sys.ovov, &sys.ovvo, &sys.ovvv, &sys.vvvv);

    let tau = Array4::from_shape_fn((no, no, nv, nv), |(i, j, a, b)| {
        t2[[i, j, a, b]] + t1[[i, a]] * t1[[j, b]] - t1[[i, b]] * t1[[j, a]]
    });
    let taut = Array4::from_shape_fn((no, no, nv, nv), |(i, j, a, b)| {
        t2[[i, j, a, b]] + 0.5 * (t1[[i, a]] * t1[[j, b]] - t1[[i, b]] * t1[[j, a]])
    });

    let fae = Array2::from_shape_fn((nv, nv), |(a, e)| {
        let mut x = if a != e { fvv[[a, e]] } else { 0.0 };
        for m in 0..no {
            x -= 0.5 * fov[[m, e]] * t1[[m, a]];
            for f in 0..nv {
                x += t1[[m, f]] * ovvv[[m, a, f, e]];
                for n in 0..no {
                    x -= 0.5 * taut[[m, n, a, f]] * oovv[[m, n, e, f]];
                }
            }
        }
        x
    });
    let fmi = Array2::from_shape_fn((no, no), |(m, i)| {
        let mut x = if m != i { foo[[m, i]] } else { 0.0 };
        for e in 0..nv {
            x += 0.5 * t1[[i, e]] * fov[[m, e]];
            for n in 0..no {
                x += t1[[n, e]] * ooov[[m, n, i, e]];
                for f in 0..nv {
                    x += 0.5 * taut[[i, n, e, f]] * oovv[[m, n, e, f]];
                }
            }
        }
        x
    });
    let fme = Array2::from_shape_fn((no, nv), |(m, e)| {
        let mut x = fov[[m, e]];
        for n in 0..no {
            for f in 0..nv {
                x += t1[[n, f]] * oovv[[m, n, e, f]];
            }
        }
        x
    });
    let wmnij = array4(exec, (no, no, no, no), |m, n, i, j| {
        let mut x = oooo[[m, n, i, j]];
        for e in 0..nv {
            x += t1[[j, e]] * ooov[[m, n, i, e]] - t1[[i, e]] * ooov[[m, n, j, e]];
            for f in 0..nv {
                x += 0.25 * tau[[i, j, e, f]] * oovv[[m, n, e, f]];
            }
        }
        x
    });
    // ⟨am||ef⟩ = −⟨ma||ef⟩
    let wabef = array4(exec, (nv, nv, nv, nv), |a, b, e, f| {
        let mut x = vvvv[[a, b, e, f]];
        for m in 0..no {
            x += t1[[m, b]] * ovvv[[m, a, e, f]] - t1[[m, a]] * ovvv[[m, b, e, f]];
            for n in 0..no {
                x += 0.25 * tau[[m, n, a, b]] * oovv[[m, n, e, f]];
            }
        }
        x
    });
    // ⟨mn||ej⟩ = −⟨mn||je⟩
    let wmbej = array4(exec, (no, nv, nv, no), |m, b, e, j| {
        let mut x = ovvo[[m, b, e, j]];
        for f in 0..nv {
            x += t1[[j, f]] * ovvv[[m, b, e, f]];
        }
        for n in 0..no {
            x += t1[[n, b]] * ooov[[m, n, j, e]];
            for f in 0..nv {
                x -= (0.5 * t2[[j, n, f, b]] + t1[[j, f]] * t1[[n, b]]) * oovv[[m, n, e, f]];
            }
        }
        x
    });

    // ⟨na||if⟩ = ovov[n,a,i,f]; ⟨ma||ef⟩ = ovvv[m,a,e,f]; ⟨nm||ei⟩ = −ooov[n,m,i,e]
    let r1 = Array2::from_shape_fn((no, nv), |(i, a)| {
        let mut x = fov[[i, a]];
        for e in 0..nv {
            x += t1[[i, e]] * fae[[a, e]];
        }
        for m in 0..no {
            x -= t1[[m, a]] * fmi[[m, i]];
            for e in 0..nv {
                x += t2[[i, m, a, e]] * fme[[m, e]];
                x -= t1[[m, e]] * ovov[[m, a, i, e]];
                for f in 0..nv {
                    x -= 0.5 * t2[[i, m, e, f]] * ovvv[[m, a, e, f]];
                }
                for n in 0..no {
                    x += 0.5 * t2[[m, n, a, e]] * ooov[[n, m, i, e]];
                }
            }
        }
        x
    });

    let fbe = Array2::from_shape_fn((nv, nv), |(b, e)| {
        let mut x = fae[[b, e]];
        for m in 0..no {
            x -= 0.5 * t1[[m, b]] * fme[[m, e]];
        }
        x
    });
    let fmj = Array2::from_shape_fn((no, no), |(m, j)| {
        let mut x = fmi[[m, j]];
        for e in 0..nv {
            x += 0.5 * t1[[j, e]] * fme[[m, e]];
        }
        x
    });
    // Z[i,j,a,b] = Σ_me (t_imae W_mbej − t_ie t_ma ⟨mb||ej⟩)
    let z = array4(exec, (no, no, nv, nv), |i, j, a, b| {
        let mut x = 0.0;
        for m in 0..no {
            for e in 0..nv {
                x += t2[[i, m, a, e]] * wmbej[[m, b, e, j]] - t1[[i, e]] * t1[[m, a]] * ovvo[[m, b, e, j]];
            }
        }
        x
    });
    // ⟨ab||ej⟩ = ovvv[j,e,b,a]·(−1)... expressed through ⟨je||ba⟩ = ⟨ab||ej⟩
    // ⟨mb||ij⟩ = ooov[i,j,m,b]
    // only i < j, a < b is evaluated; the caller mirrors it
    let r2 = array4(exec, (no, no, nv, nv), |i, j, a, b| {
        if i >= j || a >= b {
            return 0.0;
        }
        let mut x = oovv[[i, j, a, b]];
        for e in 0..nv {
            x += t2[[i, j, a, e]] * fbe[[b, e]] - t2[[i, j, b, e]] * fbe[[a, e]];
            x += t1[[i, e]] * ovvv[[j, e, b, a]] - t1[[j, e]] * ovvv[[i, e, b, a]];
            for f in 0..nv {
                x += 0.5 * tau[[i, j, e, f]] * wabef[[a, b, e, f]];
            }
        }
        for m in 0..no {
            x -= t2[[i, m, a, b]] * fmj[[m, j]] - t2[[j, m, a, b]] * fmj[[m, i]];
            x -= t1[[m, a]] * ooov[[i, j, m, b]] - t1[[m, b]] * ooov[[i, j, m, a]];
            for n in 0..no {
                x += 0.5 * tau[[m, n, a, b]] * wmnij[[m, n, i, j]];
            }
        }
        x + z[[i, j, a, b]] - z[[j, i, a, b]] - z[[i, j, b, a]] + z[[j, i, b, a]]
    });
    (r1, r2)
}

/// Spin-orbital CCSD. Amplitudes flagged frozen in `seed` keep their seeded
/// values; all others start from zero (or from `seed` when it carries no
/// frozen flags) and are iterated to convergence. Returns the amplitudes and
/// the correlation energy.
pub fn ccsd_solve(
    sys: &SpinOrbitalSystem,
    seed: Option<&AmplitudeSet>,
    opts: &CcOptions,
) -> Result<(AmplitudeSet, f64, usize)> {
    let (no, nv) = (sys.n_occ(), sys.n_vir());
    let mut t = match seed {
        Some(s) => {
            if s.occ != sys.occ || s.vir != sys.vir {
                return Err(Error::domain("seed amplitudes use a different reference"));
            }
            s.clone()
        }
        None => AmplitudeSet::zeros(sys),
    };
    let d1 = Array2::from_shape_fn((no, nv), |(i, a)| sys.foo[[i, i]] - sys.fvv[[a, a]]);
    let d2 = Array4::from_shape_fn((no, no, nv, nv), |(i, j, a, b)| {
        sys.foo[[i, i]] + sys.foo[[j, j]] - sys.fvv[[a, a]] - sys.fvv[[b, b]]
    });
    for &d in d1.iter().chain(d2.iter()) {
        if d.abs() < 1e-10 {
            return Err(Error::domain(format!("vanishing CCSD denominator {d:e}")));
        }
    }

    let frozen1 = t.frozen1.clone();
    let frozen2 = t.frozen2.clone();
    let mut history = Vec::new();
    let mut store: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();

    for iter in 1..=opts.max_iter {
        let (r1, r2) = ccsd_rhs(sys, &t.t1, &t.t2, opts.execution);
        let mut new1 = t.t1.clone();
        let mut new2 = t.t2.clone();
        let mut resid = 0.0f64;
        for ((idx, v), f) in new1.indexed_iter_mut().zip(frozen1.iter()) {
            if !*f {
                resid = resid.max((r1[idx] - d1[idx] * *v).abs());
                *v = r1[idx] / d1[idx];
            }
        }
        for i in 0..no {
            for j in i + 1..no {
                for a in 0..nv {
                    for b in a + 1..nv {
                        let idx = [i, j, a, b];
                        if !frozen2[idx] {
                            resid = resid.max((r2[idx] - d2[idx] * new2[idx]).abs());
                            let v = r2[idx] / d2[idx];
                            new2[idx] = v;
                            new2[[j, i, a, b]] = -v;
                            new2[[i, j, b, a]] = -v;
                            new2[[j, i, b, a]] = v;
                        }
                    }
                }
            }
        }
        history.push(resid);
        debug!("ccsd iteration {iter}: residual {resid:.3e}");
        if resid <= opts.tol {
            t.t1 = new1;
            t.t2 = new2;
            let e = cc_energy(sys, &t);
            return Ok((t, e, iter));
        }

        if opts.diis_depth > 0 {
            let vec: Vec<f64> = new1.iter().chain(new2.iter()).copied().collect();
            let err: Vec<f64> = vec
                .iter()
                .zip(t.t1.iter().chain(t.t2.iter()))
                .map(|(n, o)| n - o)
                .collect();
            store.push((vec, err));
            if store.len() > opts.diis_depth {
                store.remove(0);
            }
            if store.len() >= 2 {
                let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
                if let Some(c) = diis_coefficients(store.len(), |i, j| dot(&store[i].1, &store[j].1)) {
                    let mut mixed = vec![0.0; store[0].0.len()];
                    for (ck, (v, _)) in c.iter().zip(&store) {
                        for (m, x) in mixed.iter_mut().zip(v) {
                            *m += ck * x;
                        }
                    }
                    let (m1, m2) = mixed.split_at(no * nv);
                    for ((v, f), m) in new1.iter_mut().zip(frozen1.iter()).zip(m1) {
                        if !*f {
                            *v = *m;
                        }
                    }
                    for ((v, f), m) in new2.iter_mut().zip(frozen2.iter()).zip(m2) {
                        if !*f {
                            *v = *m;
                        }
                    }
                }
            }
        }
        t.t1 = new1;
        t.t2 = new2;
        if !resid.is_finite() {
            break;
        }
    }
    Err(Error::Convergence {
        solver: "CCSD",
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}
