//! Compositionality-aware model interpretation.
//!
//! Two per-coordinate summaries of an arbitrary predictor `f` on the
//! simplex, both built from perturbations that never leave the simplex:
//!
//! * [`cfi`]: the average derivative of `f` along the multiplicative
//!   perturbation of each coordinate, taken at scale 1. For a log-contrast
//!   model `f = beta' log(x)` this recovers `beta` exactly, and for any
//!   differentiable `f` the values sum to zero.
//! * [`cpd`]: the average change of `f` when a coordinate is pinned to a
//!   grid value `z` and the rest renormalized.
//!
//! Off-simplex alternatives (partial-derivative influence, permutation
//! importance, partial dependence) mis-attribute effects under the sum
//! constraint; see [`crate::simgen::compare_cfi_pi_pdp`] for the comparison
//! harness.

use crate::compdata::{phi, psi, Composition};
use crate::error::{Error, Result};
use crate::learn::FittedModel;
use rayon::prelude::*;

/// Central-difference step along the multiplicative-perturbation path.
pub const DEFAULT_CFI_STEP: f64 = 1e-5;

/// Anything that can be evaluated on the simplex.
pub trait Predictor: Sync {
    fn eval(&self, x: &Composition) -> Result<f64>;
}

/// Wrap an infallible closure as a [`Predictor`].
pub struct FnPredictor<F: Fn(&Composition) -> f64 + Sync>(pub F);

impl<F: Fn(&Composition) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn eval(&self, x: &Composition) -> Result<f64> {
        Ok((self.0)(x))
    }
}

impl Predictor for FittedModel {
    fn eval(&self, x: &Composition) -> Result<f64> {
        self.predict_one(x)
    }
}

/// Per-coordinate feature influences (response units per unit multiplicative
/// perturbation), plus the per-coordinate count of samples that had to be
/// skipped because the coordinate carried their whole mass.
#[derive(Debug, Clone)]
pub struct CfiVector {
    pub values: Vec<f64>,
    pub skipped: Vec<usize>,
}

impl CfiVector {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// A dependence curve: coordinate `j`, pin values `grid` and the mean
/// response shift at each pin value.
#[derive(Debug, Clone)]
pub struct CpdCurve {
    pub coordinate: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

fn predictor_failure(index: usize, err: Error) -> Error {
    Error::PredictorFailure {
        index,
        message: err.to_string(),
    }
}

/// Estimate feature influences of `f` over the sample `x` by central
/// differences of step `h` along each coordinate's multiplicative
/// perturbation path.
///
/// Samples with `x^j = 1` are skipped for coordinate `j` (counted in the
/// result); a predictor error aborts with the offending sample index.
pub fn cfi(f: &dyn Predictor, x: &[Composition], h: f64) -> Result<CfiVector> {
    assert!(h > 0.0, "step must be positive");
    assert!(!x.is_empty(), "need at least one sample");
    let p = x[0].len();
    let per_coord: Vec<Result<(f64, usize)>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut total = 0.0;
            let mut used = 0usize;
            let mut skipped = 0usize;
            for (i, xi) in x.iter().enumerate() {
                if xi.get(j) == 1.0 {
                    skipped += 1;
                    continue;
                }
                let up = psi(xi, j, 1.0 + h)?;
                let down = psi(xi, j, 1.0 - h)?;
                let f_up = f.eval(&up).map_err(|e| predictor_failure(i, e))?;
                let f_down = f.eval(&down).map_err(|e| predictor_failure(i, e))?;
                total += (f_up - f_down) / (2.0 * h);
                used += 1;
            }
            let value = if used > 0 { total / used as f64 } else { 0.0 };
            Ok((value, skipped))
        })
        .collect();
    let mut values = Vec::with_capacity(p);
    let mut skipped = Vec::with_capacity(p);
    for r in per_coord {
        let (v, s) = r?;
        values.push(v);
        skipped.push(s);
    }
    Ok(CfiVector { values, skipped })
}

/// Default pin grid: 100 evenly spaced values in [0.001, 0.999].
pub fn default_cpd_grid() -> Vec<f64> {
    let n = 100;
    let (lo, hi) = (0.001, 0.999);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Monte Carlo dependence curve of `f` for coordinate `j` over `grid`.
///
/// Requires every sample to have mass left outside coordinate `j`; the grid
/// must be strictly increasing inside (0, 1).
///
/// Pin values far outside the observed range of coordinate `j` force `f` to
/// extrapolate beyond the sample support, where a fitted model is not
/// constrained by data; treat those parts of the curve with caution.
pub fn cpd(f: &dyn Predictor, x: &[Composition], j: usize, grid: &[f64]) -> Result<CpdCurve> {
    assert!(!x.is_empty(), "need at least one sample");
    assert!(j < x[0].len(), "coordinate {j} out of range");
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::OutOfRange(pair[1]));
        }
    }
    if let Some(&z) = grid.first() {
        if z <= 0.0 {
            return Err(Error::OutOfRange(z));
        }
    }
    if let Some(&z) = grid.last() {
        if z >= 1.0 {
            return Err(Error::OutOfRange(z));
        }
    }
    if x.iter().any(|xi| xi.get(j) == 1.0) {
        return Err(Error::DegenerateCoordinate(j));
    }
    let mut base = 0.0;
    for (i, xi) in x.iter().enumerate() {
        base += f.eval(xi).map_err(|e| predictor_failure(i, e))?;
    }
    base /= x.len() as f64;
    let values: Vec<Result<f64>> = grid
        .par_iter()
        .map(|&z| {
            let mut total = 0.0;
            for (i, xi) in x.iter().enumerate() {
                let pinned = phi(xi, j, z)?;
                total += f.eval(&pinned).map_err(|e| predictor_failure(i, e))?;
            }
            Ok(total / x.len() as f64 - base)
        })
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for v in values {
        out.push(v?);
    }
    Ok(CpdCurve {
        coordinate: j,
        grid: grid.to_vec(),
        values: out,
    })
}

/// Log-contrast model `x -> beta' log(x)` with `sum(beta) = 0`; its feature
/// influences are `beta` itself and its dependence curves are
/// `beta_j log(z / (1 - z)) + const`, which makes it the reference oracle
/// for the estimators above.
#[derive(Debug, Clone)]
pub struct LogContrast {
    beta: Vec<f64>,
}

impl LogContrast {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        let sum: f64 = beta.iter().sum();
        let scale = beta.iter().map(|b| b.abs()).fold(0.0, f64::max).max(1.0);
        if sum.abs() > 1e-10 * scale {
            return Err(Error::NonzeroSum(sum));
        }
        Ok(LogContrast { beta })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Exact feature influences.
    pub fn cfi_exact(&self) -> &[f64] {
        &self.beta
    }

    /// Shape of the exact dependence curve for coordinate `j` (the additive
    /// constant depends on the sampling distribution, and vanishes when
    /// `beta_j = 0`).
    pub fn cpd_shape(&self, j: usize, z: f64) -> f64 {
        self.beta[j] * (z / (1.0 - z)).ln()
    }
}

impl Predictor for LogContrast {
    fn eval(&self, x: &Composition) -> Result<f64> {
        if x.len() != self.beta.len() {
            return Err(Error::DimensionMismatch(self.beta.len(), x.len()));
        }
        let mut total = 0.0;
        for (j, (&b, &v)) in self.beta.iter().zip(x.values()).enumerate() {
            if b != 0.0 {
                if v <= 0.0 {
                    return Err(Error::NonpositiveCoordinate { index: j, value: v });
                }
                total += b * v.ln();
            }
        }
        Ok(total)
    }
}

/// Mean contribution of a multiplicative perturbation of size `c` in each
/// coordinate to component `r` of an embedding map.
///
/// `project` maps a composition to its embedding row. Samples whose
/// coordinate carries the whole mass are skipped, as in [`cfi`].
pub fn pc_contribution(
    project: &(dyn Fn(&Composition) -> Result<Vec<f64>> + Sync),
    x: &[Composition],
    r: usize,
    c: f64,
) -> Result<Vec<f64>> {
    assert!(c > 0.0, "perturbation scale must be positive");
    assert!(!x.is_empty(), "need at least one sample");
    let p = x[0].len();
    let base: Vec<f64> = {
        let mut vals = Vec::with_capacity(x.len());
        for (i, xi) in x.iter().enumerate() {
            let row = project(xi).map_err(|e| predictor_failure(i, e))?;
            if r >= row.len() {
                return Err(Error::DimensionMismatch(r + 1, row.len()));
            }
            vals.push(row[r]);
        }
        vals
    };
    let per_coord: Vec<Result<f64>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut total = 0.0;
            let mut used = 0usize;
            for (i, xi) in x.iter().enumerate() {
                if xi.get(j) == 1.0 {
                    continue;
                }
                let moved = psi(xi, j, c)?;
                let row = project(&moved).map_err(|e| predictor_failure(i, e))?;
                total += row[r] - base[i];
                used += 1;
            }
            Ok(if used > 0 { total / used as f64 } else { 0.0 })
        })
        .collect();
    per_coord.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::simgen;
    use approx::assert_abs_diff_eq;

    fn lognormal_sample(n: usize, p: usize, seed: u64) -> Vec<Composition> {
        let mut rng = CounterRng::new(seed);
        (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..p).map(|_| rng.next_normal().exp()).collect();
                Composition::from_counts(&raw).unwrap()
            })
            .collect()
    }

    #[test]
    fn log_contrast_requires_zero_sum() {
        assert!(LogContrast::new(vec![1.0, -0.5]).is_err());
        assert!(LogContrast::new(vec![1.0, -1.0]).is_ok());
    }

    #[test]
    fn cfi_recovers_log_contrast_coefficients() {
        let f = LogContrast::new(vec![2.0, -1.0, -1.0]).unwrap();
        let x = lognormal_sample(100, 3, 42);
        let est = cfi(&f, &x, DEFAULT_CFI_STEP).unwrap();
        for (got, want) in est.values.iter().zip(f.cfi_exact()) {
            assert_abs_diff_eq!(*got, *want, epsilon = 1e-6);
        }
        assert!(est.sum().abs() < 1e-8);
    }

    #[test]
    fn cfi_of_ratio_function_ignores_inactive_coordinate() {
        // On the simplex this function depends only on the first two parts.
        let f = FnPredictor(|x: &Composition| (1.0 - x.get(1) - x.get(2)) / (1.0 - x.get(2)));
        let x = lognormal_sample(100, 3, 7);
        let est = cfi(&f, &x, 1e-6).unwrap();
        assert_abs_diff_eq!(est.values[2], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(est.values[0] + est.values[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn cfi_constant_predictor_is_zero() {
        let f = FnPredictor(|_: &Composition| 4.2);
        let x = lognormal_sample(20, 4, 9);
        let est = cfi(&f, &x, DEFAULT_CFI_STEP).unwrap();
        for v in est.values {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn cfi_skips_degenerate_samples() {
        let f = FnPredictor(|x: &Composition| x.get(0));
        let x = vec![
            Composition::vertex(3, 0),
            Composition::new(vec![0.5, 0.25, 0.25]).unwrap(),
        ];
        let est = cfi(&f, &x, 1e-5).unwrap();
        assert_eq!(est.skipped, vec![1, 0, 0]);
    }

    #[test]
    fn cfi_step_sizes_agree_for_smooth_predictors() {
        let f = LogContrast::new(vec![1.0, 0.5, -1.5]).unwrap();
        let x = lognormal_sample(50, 3, 11);
        let coarse = cfi(&f, &x, 1e-4).unwrap();
        let fine = cfi(&f, &x, 1e-6).unwrap();
        for (a, b) in coarse.values.iter().zip(&fine.values) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-4);
        }
    }

    #[test]
    fn cpd_matches_log_contrast_shape() {
        let f = LogContrast::new(vec![2.0, -1.0, -1.0, 0.0]).unwrap();
        let x = lognormal_sample(100, 4, 13);
        let grid = default_cpd_grid();
        for j in 0..4 {
            let curve = cpd(&f, &x, j, &grid).unwrap();
            let resid: Vec<f64> = curve
                .values
                .iter()
                .zip(&curve.grid)
                .map(|(&v, &z)| v - f.cpd_shape(j, z))
                .collect();
            let range = resid.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                - resid.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            assert!(range < 1e-8, "coordinate {j}: residual range {range}");
            if f.beta()[j] == 0.0 {
                for v in &curve.values {
                    assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn cpd_constant_predictor_is_flat_zero() {
        let f = FnPredictor(|_: &Composition| -3.0);
        let x = lognormal_sample(10, 3, 17);
        let curve = cpd(&f, &x, 0, &[0.2, 0.5, 0.8]).unwrap();
        for v in curve.values {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn cpd_rejects_bad_grids_and_degenerate_samples() {
        let f = FnPredictor(|_: &Composition| 0.0);
        let x = lognormal_sample(5, 3, 19);
        assert!(cpd(&f, &x, 0, &[0.5, 0.4]).is_err());
        assert!(cpd(&f, &x, 0, &[0.0, 0.5]).is_err());
        let degenerate = vec![Composition::vertex(3, 1)];
        assert!(matches!(
            cpd(&f, &degenerate, 1, &[0.5]),
            Err(Error::DegenerateCoordinate(1))
        ));
    }

    #[test]
    fn cfi_sums_to_zero_for_smooth_predictors() {
        // Smooth non-linear predictor: a Gaussian bump on the simplex.
        let x = lognormal_sample(60, 5, 23);
        let center = Composition::uniform(5);
        let f = FnPredictor(move |x: &Composition| {
            let d2: f64 = x
                .values()
                .iter()
                .zip(center.values())
                .map(|(&u, &v)| (u - v) * (u - v))
                .sum();
            (-4.0 * d2).exp() * 3.0
        });
        let est = cfi(&f, &x, DEFAULT_CFI_STEP).unwrap();
        assert!(est.sum().abs() < 1e-6, "sum {}", est.sum());
    }

    #[test]
    fn pc_contribution_basics() {
        let x = lognormal_sample(30, 4, 29);
        // Identity at scale 1 gives exactly zero.
        let proj = |c: &Composition| -> Result<Vec<f64>> { Ok(vec![c.get(0) * 2.0, c.get(1)]) };
        let zero = pc_contribution(&proj, &x, 0, 1.0).unwrap();
        for v in zero {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        }
        // Constant map gives zero at any scale.
        let constant = |_: &Composition| -> Result<Vec<f64>> { Ok(vec![1.0, 2.0]) };
        let flat = pc_contribution(&constant, &x, 1, 0.5).unwrap();
        for v in flat {
            assert_eq!(v, 0.0);
        }
        // Order invariance of the sample mean.
        let mut shuffled = x.clone();
        shuffled.reverse();
        let a = pc_contribution(&proj, &x, 0, 0.7).unwrap();
        let b = pc_contribution(&proj, &shuffled, 0, 0.7).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_abs_diff_eq!(*u, *v, epsilon = 1e-12);
        }
    }

    #[test]
    fn cfi_oracle_matches_estimator_on_two_parts() {
        let f = LogContrast::new(vec![1.0, -1.0]).unwrap();
        let x = simgen::gen_lognormal_iid(100, 31)
            .into_iter()
            .map(|c| Composition::from_counts(&c.values()[..2]).unwrap())
            .collect::<Vec<_>>();
        let est = cfi(&f, &x, DEFAULT_CFI_STEP).unwrap();
        assert_abs_diff_eq!(est.values[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(est.values[1], -1.0, epsilon = 1e-6);
    }
}
