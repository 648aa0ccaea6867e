//! Kernel PCA / multidimensional scaling and kernel-distance scalar
//! summaries.
//!
//! The embedding solves `min_Z ||K - Z Z'||` via the eigendecomposition of
//! the (optionally double-centered) Gram matrix; new points project through
//! the cross-kernel against the training sample with the stored centering
//! statistics. At full rank without centering the embedding reproduces `K`
//! and pairwise embedded distances equal kernel distances.

use crate::compdata::Composition;
use crate::error::{Error, Result};
use crate::kernels::{cross_gram, gram, kernel_distance, kernel_distance_squared, KernelSpec};
use crate::linalg;
use nalgebra::DMatrix;

/// Relative eigenvalue cutoff: components with eigenvalues at or below
/// `RANK_TOL * lambda_max` are dropped.
pub const RANK_TOL: f64 = 1e-10;

/// A fitted kernel principal-component embedding.
#[derive(Debug, Clone)]
pub struct KpcaModel {
    train_x: Vec<Composition>,
    spec: KernelSpec,
    centered: bool,
    requested_components: usize,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
    inv_sqrt: Vec<f64>,
    col_means: Vec<f64>,
    grand_mean: f64,
    train_embedding: DMatrix<f64>,
}

impl KpcaModel {
    /// Retained eigenvalues, descending.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// Number of retained components (may be below the request when the
    /// spectrum is rank deficient; see [`KpcaModel::requested_components`]).
    pub fn components(&self) -> usize {
        self.eigvals.len()
    }

    pub fn requested_components(&self) -> usize {
        self.requested_components
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn train_x(&self) -> &[Composition] {
        &self.train_x
    }

    /// Embedding of the training sample (`n x components`).
    pub fn train_embedding(&self) -> &DMatrix<f64> {
        &self.train_embedding
    }

    /// Project new points with the stored training statistics.
    pub fn project(&self, x_new: &[Composition]) -> Result<DMatrix<f64>> {
        let mut k_new = cross_gram(&self.spec, x_new, &self.train_x)?;
        if self.centered {
            center_cross(&mut k_new, &self.col_means, self.grand_mean);
        }
        Ok(self.apply_projection(&k_new))
    }

    fn apply_projection(&self, k_rows: &DMatrix<f64>) -> DMatrix<f64> {
        let l = self.components();
        let mut out = DMatrix::zeros(k_rows.nrows(), l);
        for r in 0..l {
            let col = self.eigvecs.column(r);
            for i in 0..k_rows.nrows() {
                let mut acc = 0.0;
                for j in 0..k_rows.ncols() {
                    acc += k_rows[(i, j)] * col[j];
                }
                out[(i, r)] = acc * self.inv_sqrt[r];
            }
        }
        out
    }

    /// Projection closure for per-coordinate contribution analysis
    /// (see [`crate::interpret::pc_contribution`]).
    pub fn projector(&self) -> impl Fn(&Composition) -> Result<Vec<f64>> + Sync + '_ {
        move |x: &Composition| {
            let row = self.project(std::slice::from_ref(x))?;
            Ok(row.row(0).iter().copied().collect())
        }
    }
}

/// Subtract row/column/grand means of the training Gram from a cross-kernel
/// block, mirroring the training double centering.
fn center_cross(k_new: &mut DMatrix<f64>, col_means: &[f64], grand_mean: f64) {
    let (m, n) = k_new.shape();
    for i in 0..m {
        let row_mean: f64 = (0..n).map(|j| k_new[(i, j)]).sum::<f64>() / n as f64;
        for j in 0..n {
            k_new[(i, j)] = k_new[(i, j)] - col_means[j] - row_mean + grand_mean;
        }
    }
}

/// Fit the embedding: eigendecompose the (optionally double-centered) Gram,
/// clamp round-off negatives to zero and keep at most `l` components with
/// eigenvalues above `RANK_TOL * lambda_max`.
pub fn kpca_fit(x: &[Composition], spec: &KernelSpec, l: usize, center: bool) -> Result<KpcaModel> {
    let n = x.len();
    assert!(n > 0, "empty training sample");
    if l == 0 || l > n {
        return Err(Error::InvalidParameters(format!(
            "component count {l} out of range 1..={n}"
        )));
    }
    let g = gram(spec, x)?;
    let raw = g.entries();
    let col_means: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| raw[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let grand_mean = col_means.iter().sum::<f64>() / n as f64;
    let work = if center {
        let mut k = raw.clone();
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = raw[(i, j)] - col_means[i] - col_means[j] + grand_mean;
            }
        }
        k
    } else {
        raw.clone()
    };
    let (mut vals, vecs) = linalg::sym_eigen_sorted(&work);
    let lambda_max = vals.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = RANK_TOL * lambda_max;
    for v in &mut vals {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let retained = vals
        .iter()
        .take(l)
        .filter(|&&v| v > cutoff)
        .count()
        .max(1)
        .min(l);
    let mut eigvals = vals[..retained].to_vec();
    let mut eigvecs = DMatrix::zeros(n, retained);
    for r in 0..retained {
        let mut col: Vec<f64> = vecs.column(r).iter().copied().collect();
        // Sign convention: the largest-magnitude entry is positive, so plots
        // are reproducible across eigensolvers.
        let mut pivot = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            for v in &mut col {
                *v = -*v;
            }
        }
        for (i, v) in col.iter().enumerate() {
            eigvecs[(i, r)] = *v;
        }
    }
    if eigvals.is_empty() {
        eigvals.push(0.0);
    }
    let inv_sqrt: Vec<f64> = eigvals
        .iter()
        .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
        .collect();
    let mut model = KpcaModel {
        train_x: x.to_vec(),
        spec: spec.clone(),
        centered: center,
        requested_components: l,
        eigvals,
        eigvecs,
        inv_sqrt,
        col_means,
        grand_mean,
        train_embedding: DMatrix::zeros(0, 0),
    };
    model.train_embedding = model.apply_projection(&work);
    Ok(model)
}

/// Kernel-distance closeness scores `-d^2(x_i, u)` against a reference
/// point. Values are nonpositive and vanish exactly where the kernel
/// distance to the reference does.
#[derive(Debug, Clone)]
pub struct SummaryStat {
    pub reference: Composition,
    pub spec: KernelSpec,
    pub values: Vec<f64>,
}

/// Closeness of every sample to the reference `u`: `D(x) = -d^2(x, u)`.
///
/// With the linear kernel and the neutral reference this is a shifted
/// diversity index: `D(x) = (1 - sum_j (x^j)^2) - (p-1)/p`.
pub fn summary_stat(x: &[Composition], spec: &KernelSpec, u: &Composition) -> Result<SummaryStat> {
    let values = x
        .iter()
        .map(|xi| kernel_distance_squared(spec, xi, u).map(|d2| -d2.max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SummaryStat {
        reference: u.clone(),
        spec: spec.clone(),
        values,
    })
}

/// Index (into `x`) of the subset member with the smallest total kernel
/// distance to the other subset members; ties go to the lowest index.
pub fn kernel_medoid(x: &[Composition], spec: &KernelSpec, subset: &[usize]) -> Result<usize> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &i in subset {
        if i >= x.len() {
            return Err(Error::DimensionMismatch(i, x.len()));
        }
    }
    let m = subset.len();
    let mut dist = vec![0.0f64; m * m];
    for a in 0..m {
        for b in (a + 1)..m {
            let d = kernel_distance(spec, &x[subset[a]], &x[subset[b]])?;
            dist[a * m + b] = d;
            dist[b * m + a] = d;
        }
    }
    let mut best = 0usize;
    let mut best_total = f64::INFINITY;
    for a in 0..m {
        let total: f64 = (0..m).map(|b| dist[a * m + b]).sum();
        if total < best_total {
            best_total = total;
            best = a;
        }
    }
    Ok(subset[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::testutil::random_composition;
    use approx::assert_abs_diff_eq;

    fn sample(n: usize, p: usize, seed: u64) -> Vec<Composition> {
        let mut rng = CounterRng::new(seed);
        (0..n).map(|_| random_composition(&mut rng, p, false)).collect()
    }

    #[test]
    fn full_rank_uncentered_reconstructs_gram() {
        let x = sample(20, 4, 3);
        let spec = KernelSpec::aitchison_rbf(1e-3, 5.0).unwrap();
        let model = kpca_fit(&x, &spec, 20, false).unwrap();
        let k = gram(&spec, &x).unwrap();
        let z = model.train_embedding();
        let rec = z * z.transpose();
        let rel = (&rec - k.entries()).norm() / k.entries().norm();
        assert!(rel < 1e-8, "relative error {rel}");
    }

    #[test]
    fn embedded_distances_match_kernel_distances() {
        let x = sample(15, 4, 5);
        let spec = KernelSpec::rbf(0.4).unwrap();
        let model = kpca_fit(&x, &spec, 15, false).unwrap();
        let z = model.train_embedding();
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                let zi = z.row(i);
                let zj = z.row(j);
                let dz: f64 = zi
                    .iter()
                    .zip(zj.iter())
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let dk = kernel_distance(&spec, &x[i], &x[j]).unwrap();
                assert_abs_diff_eq!(dz, dk, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn duplicated_rows_embed_identically() {
        let mut x = sample(10, 3, 7);
        x.push(x[0].clone());
        let spec = KernelSpec::linear();
        let model = kpca_fit(&x, &spec, 3, true).unwrap();
        let z = model.train_embedding();
        for r in 0..model.components() {
            assert_abs_diff_eq!(z[(0, r)], z[(10, r)], epsilon = 1e-9);
        }
    }

    #[test]
    fn centered_embedding_has_zero_column_means() {
        let x = sample(18, 5, 9);
        let spec = KernelSpec::generalized_js(1.0, 1.0).unwrap();
        let model = kpca_fit(&x, &spec, 4, true).unwrap();
        let z = model.train_embedding();
        for r in 0..model.components() {
            let mean: f64 = (0..x.len()).map(|i| z[(i, r)]).sum::<f64>() / x.len() as f64;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
        }
        // Double centering keeps the spectrum nonnegative up to round-off.
        let lambda_max = model.eigvals().first().copied().unwrap_or(0.0);
        for &v in model.eigvals() {
            assert!(v >= -1e-8 * lambda_max.max(1.0));
        }
    }

    #[test]
    fn projecting_training_points_reproduces_embedding() {
        let x = sample(12, 4, 11);
        let spec = KernelSpec::aitchison(1e-3).unwrap();
        for center in [false, true] {
            let model = kpca_fit(&x, &spec, 4, center).unwrap();
            let z = model.train_embedding();
            let projected = model.project(&x).unwrap();
            assert!((z - &projected).norm() < 1e-8);
            // Single point equal to a training point maps onto that row.
            let single = model.project(std::slice::from_ref(&x[3])).unwrap();
            for r in 0..model.components() {
                assert_abs_diff_eq!(single[(0, r)], projected[(3, r)], epsilon = 1e-9);
            }
            // Determinism.
            let again = model.project(std::slice::from_ref(&x[3])).unwrap();
            assert_eq!(single, again);
        }
    }

    #[test]
    fn rank_deficiency_shrinks_components() {
        // Linear kernel on p = 3 has rank at most 3.
        let x = sample(10, 3, 13);
        let model = kpca_fit(&x, &KernelSpec::linear(), 10, false).unwrap();
        assert!(model.components() <= 3);
        assert_eq!(model.requested_components(), 10);
        for w in model.eigvals().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn summary_stat_linear_is_shifted_diversity() {
        let mut rng = CounterRng::new(15);
        for &p in &[2usize, 5, 50] {
            let u = Composition::uniform(p);
            for _ in 0..50 {
                let xi = random_composition(&mut rng, p, true);
                let s = summary_stat(std::slice::from_ref(&xi), &KernelSpec::linear(), &u).unwrap();
                let gini: f64 = 1.0 - xi.values().iter().map(|&v| v * v).sum::<f64>();
                let expected = gini - (p as f64 - 1.0) / p as f64;
                assert_abs_diff_eq!(s.values[0], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn summary_stat_reference_and_vertex_values() {
        let u = Composition::uniform(2);
        let e1 = Composition::vertex(2, 0);
        let spec = KernelSpec::linear();
        let s = summary_stat(&[u.clone(), e1], &spec, &u).unwrap();
        assert_abs_diff_eq!(s.values[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.values[1], -0.5, epsilon = 1e-14);
        assert!(s.values.iter().all(|&v| v <= 0.0));
    }

    #[test]
    fn medoid_of_collinear_points_is_middle() {
        let x = vec![
            Composition::new(vec![0.1, 0.9]).unwrap(),
            Composition::new(vec![0.5, 0.5]).unwrap(),
            Composition::new(vec![0.8, 0.2]).unwrap(),
        ];
        let spec = KernelSpec::linear();
        // Brute force oracle over the three candidates.
        let mut best = 0;
        let mut best_total = f64::INFINITY;
        for a in 0..3 {
            let total: f64 = (0..3)
                .map(|b| kernel_distance(&spec, &x[a], &x[b]).unwrap())
                .sum();
            if total < best_total {
                best_total = total;
                best = a;
            }
        }
        assert_eq!(best, 1);
        assert_eq!(kernel_medoid(&x, &spec, &[0, 1, 2]).unwrap(), 1);
        assert_eq!(kernel_medoid(&x, &spec, &[2]).unwrap(), 2);
        assert!(kernel_medoid(&x, &spec, &[]).is_err());
    }

    #[test]
    fn medoid_ties_resolve_to_lowest_index() {
        let x = vec![
            Composition::new(vec![0.5, 0.5]).unwrap(),
            Composition::new(vec![0.5, 0.5]).unwrap(),
            Composition::new(vec![0.5, 0.5]).unwrap(),
        ];
        assert_eq!(kernel_medoid(&x, &KernelSpec::linear(), &[0, 1, 2]).unwrap(), 0);
    }
}
