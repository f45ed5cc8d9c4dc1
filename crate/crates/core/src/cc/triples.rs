use super::{AmplitudeSet, SpinOrbitalSystem};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock_space::Determinant;

/// Perturbative triples energy from the unfrozen (external) amplitudes only:
/// every frozen amplitude is treated as zero in both the connected and the
/// disconnected triples.
pub fn triples_correction(sys: &SpinOrbitalSystem, t: &AmplitudeSet, exec: Execution) -> Result<f64> {
    let te = t.external_only();
    let (t1, t2) = (&te.t1, &te.t2);
    let (no, nv) = (sys.n_occ(), sys.n_vir());
    let (ooov, oovv, ovvv) = (&sys.ooov, &sys.oovv, &sys.ovvv);

    // ⟨ei||bc⟩ = −⟨ie||bc⟩, ⟨ma||jk⟩ = ⟨jk||ma⟩
    let connected = |i: usize, j: usize, k: usize, a: usize, b: usize, c: usize| {
        let mut x = 0.0;
        for e in 0..nv {
            x -= t2[[j, k, a, e]] * ovvv[[i, e, b, c]];
        }
        for m in 0..no {
            x -= t2[[i, m, b, c]] * ooov[[j, k, m, a]];
        }
        x
    };
    let disconnected = |i: usize, j: usize, k: usize, a: usize, b: usize, c: usize| t1[[i, a]] * oovv[[j, k, b, c]];
    // P(i/jk) P(a/bc)
    let permuted = |f: &dyn Fn(usize, usize, usize, usize, usize, usize) -> f64, i, j, k, a, b, c| {
        let occ = [(i, j, k, 1.0), (j, i, k, -1.0), (k, j, i, -1.0)];
        let vir = [(a, b, c, 1.0), (b, a, c, -1.0), (c, b, a, -1.0)];
        let mut x = 0.0;
        for &(p, q, r, s) in &occ {
            for &(d, e, g, u) in &vir {
                x += s * u * f(p, q, r, d, e, g);
            }
        }
        x
    };

    let partial: Vec<Result<f64>> = exec.map_range(no, |i| {
        let mut sum = 0.0;
        for j in i + 1..no {
            for k in j + 1..no {
                for a in 0..nv {
                    for b in a + 1..nv {
                        for c in b + 1..nv {
                            let w = permuted(&connected, i, j, k, a, b, c);
                            if w == 0.0 {
                                continue;
                            }
                            let v = permuted(&disconnected, i, j, k, a, b, c);
                            let d = sys.foo[[i, i]] + sys.foo[[j, j]] + sys.foo[[k, k]]
                                - sys.fvv[[a, a]]
                                - sys.fvv[[b, b]]
                                - sys.fvv[[c, c]];
                            if d.abs() < 1e-8 {
                                let mut so = sys.reference.spin_orbitals(sys.n_orb);
                                for p in [sys.occ[i], sys.occ[j], sys.occ[k], sys.vir[a], sys.vir[b], sys.vir[c]] {
                                    so ^= 1 << p;
                                }
                                return Err(Error::intruder(&Determinant::from_spin_orbitals(so, sys.n_orb), d));
                            }
                            sum += w * (w + v) / d;
                        }
                    }
                }
            }
        }
        Ok(sum)
    });
    let mut e = 0.0;
    for p in partial {
        e += p?;
    }
    Ok(e)
}
