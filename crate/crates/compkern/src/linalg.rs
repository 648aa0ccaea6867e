//! Small symmetric-eigenvalue helpers shared by kernels, weighting and
//! embedding.

use nalgebra::{DMatrix, DVector};

/// Threshold below which a dense symmetric eigensolve is used directly.
pub(crate) const DENSE_EIG_LIMIT: usize = 4096;

/// Extreme eigenvalues (min, max) of a symmetric matrix.
///
/// Dense solve up to [`DENSE_EIG_LIMIT`]; beyond that a Lanczos bound with a
/// fixed iteration budget is returned instead of the exact extremes.
pub(crate) fn sym_extreme_eigs(m: &DMatrix<f64>) -> (f64, f64) {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return (0.0, 0.0);
    }
    if n == 1 {
        return (m[(0, 0)], m[(0, 0)]);
    }
    if n <= DENSE_EIG_LIMIT {
        let eig = m.clone().symmetric_eigen();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &e in eig.eigenvalues.iter() {
            lo = lo.min(e);
            hi = hi.max(e);
        }
        (lo, hi)
    } else {
        lanczos_extremes(m, 64)
    }
}

/// Eigenvalues (descending) and matching eigenvectors of a symmetric matrix.
pub(crate) fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Lanczos tridiagonalization with full reorthogonalization; returns extreme
/// Ritz values, which bound the spectrum from inside.
fn lanczos_extremes(m: &DMatrix<f64>, steps: usize) -> (f64, f64) {
    let n = m.nrows();
    let steps = steps.min(n);
    // Deterministic start vector.
    let mut q = DVector::from_fn(n, |i, _| ((i as f64) * 0.618_033_988_749_894_8).sin() + 1.0);
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = vec![q.clone()];
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::new();
    let mut q_prev: Option<DVector<f64>> = None;
    let mut beta_prev = 0.0;
    for _ in 0..steps {
        let mut w = m * &q;
        let alpha = q.dot(&w);
        alphas.push(alpha);
        w -= alpha * &q;
        if let Some(ref qp) = q_prev {
            w -= beta_prev * qp;
        }
        for b in &basis {
            let proj = b.dot(&w);
            w -= proj * b;
        }
        let beta = w.norm();
        if beta < 1e-12 {
            break;
        }
        betas.push(beta);
        q_prev = Some(q.clone());
        beta_prev = beta;
        q = w / beta;
        basis.push(q.clone());
    }
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    sym_extreme_eigs(&t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes_match_dense_on_small_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let (lo, hi) = sym_extreme_eigs(&m);
        let expected_hi = 2.0 + 2.0f64.sqrt();
        let expected_lo = 2.0 - 2.0f64.sqrt();
        assert!((hi - expected_hi).abs() < 1e-10);
        assert!((lo - expected_lo).abs() < 1e-10);
    }

    #[test]
    fn lanczos_brackets_diagonal_spectrum() {
        let n = 200;
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let (lo, hi) = lanczos_extremes(&m, 64);
        assert!((hi - n as f64).abs() / (n as f64) < 1e-6);
        assert!((0.999..2.0).contains(&lo));
    }

    #[test]
    fn sorted_eigs_descend() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 3.0, 0.1, 0.0, 0.1, 2.0]);
        let (vals, vecs) = sym_eigen_sorted(&m);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        // Reconstruct: V diag(vals) V^T == M
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.clone()));
        let rec = &vecs * d * vecs.transpose();
        assert!((rec - m).norm() < 1e-10);
    }
}
