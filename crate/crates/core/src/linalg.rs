//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
///
/// Each eigenvector is normalised so that its largest-magnitude component
/// (first one on ties) is positive, which makes the result deterministic.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(k).into_owned();
        fix_sign(col.as_mut_slice());
        vectors.set_column(j, &col);
    }
    (values, vectors)
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Pulay DIIS: the combination of `vectors` whose matching `errors`
/// combination has minimal norm. Returns `None` for a singular system.
pub fn diis_extrapolate(vectors: &[DMatrix<f64>], errors: &[DMatrix<f64>]) -> Option<DMatrix<f64>> {
    let coeffs = diis_coefficients(errors.len(), |i, j| errors[i].dot(&errors[j]))?;
    let mut out = DMatrix::zeros(vectors[0].nrows(), vectors[0].ncols());
    for (c, v) in coeffs.iter().zip(vectors) {
        out += v * *c;
    }
    Some(out)
}

/// Solves the DIIS linear system for `n` stored vectors given the overlap
/// function of their error vectors.
pub fn diis_coefficients(n: usize, overlap: impl Fn(usize, usize) -> f64) -> Option<Vec<f64>> {
    let mut b = DMatrix::zeros(n + 1, n + 1);
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        for j in 0..=i {
            let v = overlap(i, j);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
        b[(i, n)] = -1.0;
        b[(n, i)] = -1.0;
    }
    rhs[n] = -1.0;
    // scale for conditioning
    let scale = (0..n).map(|i| b[(i, i)]).fold(0.0f64, f64::max);
    if scale <= 0.0 || !scale.is_finite() {
        return None;
    }
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] /= scale;
        }
    }
    let sol = b.lu().solve(&rhs)?;
    let c: Vec<f64> = sol.iter().take(n).copied().collect();
    c.iter().all(|x| x.is_finite()).then_some(c)
}
