//! Compositional core: simplex points, the two coordinate perturbations and
//! the shifted centered log-ratio transform.
//!
//! A composition is a point of the simplex `S^{p-1}`: a nonnegative vector
//! whose entries sum to one. Only ratios of parts are meaningful, so every
//! transformation here preserves the sum-to-one constraint. All operations
//! are pure functions over immutable values and can be called concurrently.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance on the coordinate sum when validating an existing composition.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// A point of the simplex: nonnegative entries summing to one, `p >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    values: Vec<f64>,
}

impl Composition {
    /// Validate `values` as a composition.
    ///
    /// Entries must be finite and nonnegative and the sum must be within
    /// [`SIMPLEX_SUM_TOL`] of one; vectors inside the tolerance are
    /// renormalized silently so that downstream code can rely on an exact
    /// unit sum.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidComposition(format!(
                "need at least 2 parts, got {}",
                values.len()
            )));
        }
        let mut sum = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidComposition(format!(
                    "entry {i} is {v}, expected a finite nonnegative value"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidComposition(format!(
                "entries sum to {sum}, expected 1 within {SIMPLEX_SUM_TOL}"
            )));
        }
        Ok(Self::normalize_unchecked(values, sum))
    }

    /// Normalize a vector of raw counts (or relative abundances) onto the
    /// simplex by dividing by its sum. Rows summing to zero are rejected.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidComposition(format!(
                "need at least 2 parts, got {}",
                counts.len()
            )));
        }
        let mut sum = 0.0;
        for (i, &v) in counts.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidComposition(format!(
                    "entry {i} is {v}, expected a finite nonnegative count"
                )));
            }
            sum += v;
        }
        if sum <= 0.0 {
            return Err(Error::ZeroSumRow(String::new()));
        }
        Ok(Self::normalize_unchecked(counts.to_vec(), sum))
    }

    fn normalize_unchecked(mut values: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            for v in &mut values {
                *v /= sum;
            }
        }
        // Pin the sum to exactly 1.0 by absorbing the residual into the
        // largest coordinate. This makes normalization idempotent, so
        // serialized compositions reload bit-exactly.
        for _ in 0..8 {
            let s: f64 = values.iter().sum();
            if s == 1.0 {
                break;
            }
            let mut mx = 0usize;
            for (i, v) in values.iter().enumerate() {
                if *v > values[mx] {
                    mx = i;
                }
            }
            values[mx] += 1.0 - s;
        }
        Composition { values }
    }

    /// The neutral element `(1/p, ..., 1/p)`.
    pub fn uniform(p: usize) -> Self {
        assert!(p >= 2, "uniform composition needs p >= 2");
        Composition {
            values: vec![1.0 / p as f64; p],
        }
    }

    /// Vertex `e_j` of the simplex.
    pub fn vertex(p: usize, j: usize) -> Self {
        assert!(p >= 2 && j < p);
        let mut values = vec![0.0; p];
        values[j] = 1.0;
        Composition { values }
    }

    /// Number of parts `p`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; compositions have `p >= 2`.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate access.
    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Borrow the coordinates.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Consume into the coordinate vector.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for Composition {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Multiplicative perturbation: multiply coordinate `j` (0-based) by `c` and
/// rescale the whole vector back onto the simplex.
///
/// The scale factor is `s_c = 1 / (sum_{l != j} x^l + c x^j)`. The identity
/// `psi(x, j, 1) == x` holds for every valid input.
pub fn psi(x: &Composition, j: usize, c: f64) -> Result<Composition> {
    assert!(j < x.len(), "coordinate {j} out of range");
    if c < 0.0 || !c.is_finite() {
        return Err(Error::InvalidScale(c));
    }
    if x.get(j) == 1.0 {
        return Err(Error::DegenerateCoordinate(j));
    }
    let rest: f64 = x
        .values()
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != j)
        .map(|(_, v)| v)
        .sum();
    let denom = rest + c * x.get(j);
    let s = 1.0 / denom;
    let values = x
        .values()
        .iter()
        .enumerate()
        .map(|(l, &v)| if l == j { s * c * v } else { s * v })
        .collect();
    Composition::new(values)
}

/// Fixed-coordinate perturbation: pin coordinate `j` (0-based) to `c` and
/// rescale the remaining coordinates by `s = (1 - c) / sum_{l != j} x^l`.
pub fn phi(x: &Composition, j: usize, c: f64) -> Result<Composition> {
    assert!(j < x.len(), "coordinate {j} out of range");
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::OutOfRange(c));
    }
    let rest: f64 = x
        .values()
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != j)
        .map(|(_, v)| v)
        .sum();
    if rest <= 0.0 {
        return Err(Error::DegenerateCoordinate(j));
    }
    let s = (1.0 - c) / rest;
    let values = x
        .values()
        .iter()
        .enumerate()
        .map(|(l, &v)| if l == j { c } else { s * v })
        .collect();
    Composition::new(values)
}

/// Geometric mean `(prod v_j)^{1/p}` of a strictly positive vector, computed
/// in log space so that large `p` cannot overflow.
pub fn geometric_mean(v: &[f64]) -> Result<f64> {
    assert!(!v.is_empty());
    let mut log_sum = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if x <= 0.0 || !x.is_finite() {
            return Err(Error::NonpositiveEntry { index: i, value: x });
        }
        log_sum += x.ln();
    }
    Ok((log_sum / v.len() as f64).exp())
}

/// Zero-shifted centered log-ratio transform.
///
/// Maps `x` to `(log((x^j + c) / g(x + c)))_j` where `g` is the geometric
/// mean of the shifted vector. The shift `c > 0` makes the transform well
/// defined in the presence of zeros; the output always sums to zero.
pub fn clr_shifted(x: &Composition, c: f64) -> Result<Vec<f64>> {
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::NonpositiveShift(c));
    }
    clr_shifted_slice(x.values(), c)
}

pub(crate) fn clr_shifted_slice(values: &[f64], c: f64) -> Result<Vec<f64>> {
    let logs: Vec<f64> = values.iter().map(|&v| (v + c).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(logs.into_iter().map(|l| l - mean_log).collect())
}

/// The derivative of `c -> psi(x, j, c)` at `c = 1`, in closed form:
/// `x^j (e_j - x)`. Summed over `j` this vanishes identically, which is what
/// forces feature influences to sum to zero.
pub fn psi_velocity(x: &Composition, j: usize) -> Vec<f64> {
    let xj = x.get(j);
    x.values()
        .iter()
        .enumerate()
        .map(|(l, &v)| if l == j { xj * (1.0 - v) } else { -xj * v })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn comp(v: &[f64]) -> Composition {
        Composition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        assert!(Composition::new(vec![1.0]).is_err());
        assert!(Composition::new(vec![0.5, 0.6]).is_err());
        assert!(Composition::new(vec![-0.1, 1.1]).is_err());
        assert!(Composition::from_counts(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn construction_renormalizes_within_tolerance() {
        let x = Composition::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert_eq!(x.values().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn counts_normalize() {
        let x = Composition::from_counts(&[2.0, 2.0, 0.0]).unwrap();
        assert_eq!(x.values(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn psi_identity_at_one() {
        let x = comp(&[0.2, 0.3, 0.5]);
        let y = psi(&x, 1, 1.0).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(y.get(j), x.get(j), epsilon = 1e-15);
        }
    }

    #[test]
    fn psi_known_values() {
        let y = psi(&comp(&[0.5, 0.5]), 0, 3.0).unwrap();
        assert_abs_diff_eq!(y.get(0), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(y.get(1), 0.25, epsilon = 1e-15);

        let z = psi(&comp(&[0.25, 0.25, 0.5]), 2, 0.0).unwrap();
        assert_abs_diff_eq!(z.get(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(z.get(1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(z.get(2), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn psi_rejects_degenerate_and_negative() {
        let x = comp(&[1.0, 0.0]);
        assert!(matches!(psi(&x, 0, 2.0), Err(Error::DegenerateCoordinate(0))));
        let y = comp(&[0.5, 0.5]);
        assert!(matches!(psi(&y, 0, -1.0), Err(Error::InvalidScale(_))));
    }

    #[test]
    fn phi_known_values() {
        let y = phi(&comp(&[0.5, 0.25, 0.25]), 0, 0.2).unwrap();
        assert_abs_diff_eq!(y.get(0), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(y.get(1), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(y.get(2), 0.4, epsilon = 1e-15);

        // Fixed point: pinning a coordinate to its own value changes nothing.
        let x = comp(&[0.3, 0.3, 0.4]);
        let z = phi(&x, 2, 0.4).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(z.get(j), x.get(j), epsilon = 1e-15);
        }

        let w = phi(&comp(&[0.5, 0.5]), 1, 1.0).unwrap();
        assert_eq!(w.values(), &[0.0, 1.0]);
    }

    #[test]
    fn phi_rejects_degenerate_and_out_of_range() {
        let x = comp(&[1.0, 0.0]);
        assert!(matches!(phi(&x, 0, 0.5), Err(Error::DegenerateCoordinate(0))));
        let y = comp(&[0.5, 0.5]);
        assert!(matches!(phi(&y, 0, 1.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn geometric_mean_known_values() {
        assert_abs_diff_eq!(geometric_mean(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(geometric_mean(&[1.0, 4.0]).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(geometric_mean(&[2.0, 8.0, 4.0]).unwrap(), 4.0, epsilon = 1e-12);
        assert!(geometric_mean(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn clr_shifted_uniform_is_zero() {
        let u = Composition::uniform(5);
        for &c in &[1e-6, 0.3, 2.0] {
            let v = clr_shifted(&u, c).unwrap();
            for e in v {
                assert_abs_diff_eq!(e, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn clr_shifted_direct_substitution() {
        // (0.5, 0.5, 0) with c = 0.5 shifts to (1, 1, 0.5).
        let x = comp(&[0.5, 0.5, 0.0]);
        let g = geometric_mean(&[1.0, 1.0, 0.5]).unwrap();
        let v = clr_shifted(&x, 0.5).unwrap();
        assert_abs_diff_eq!(v[0], (1.0f64 / g).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], (1.0f64 / g).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(v[2], (0.5f64 / g).ln(), epsilon = 1e-12);
        assert!(clr_shifted(&x, 0.0).is_err());
    }

    #[test]
    fn psi_velocity_matches_difference_quotient() {
        let x = comp(&[0.1, 0.2, 0.3, 0.4]);
        let h = 1e-6;
        for j in 0..4 {
            let forward = psi(&x, j, 1.0 + h).unwrap();
            let v = psi_velocity(&x, j);
            for l in 0..4 {
                let fd = (forward.get(l) - x.get(l)) / h;
                assert_abs_diff_eq!(fd, v[l], epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn psi_velocity_sums_to_zero() {
        let x = comp(&[0.1, 0.2, 0.3, 0.4]);
        let mut total = vec![0.0; 4];
        for j in 0..4 {
            for (l, v) in psi_velocity(&x, j).into_iter().enumerate() {
                total[l] += v;
            }
        }
        for t in total {
            assert_abs_diff_eq!(t, 0.0, epsilon = 1e-15);
        }
    }

    prop_compose! {
        fn arb_composition(max_p: usize)(p in 2..=max_p)(
            raw in proptest::collection::vec(0.0f64..1.0, p),
        ) -> Vec<f64> {
            raw
        }
    }

    proptest! {
        #[test]
        fn perturbations_stay_on_simplex(
            raw in arb_composition(8),
            j_pick in 0usize..8,
            c_psi in 0.0f64..5.0,
            c_phi in 0.0f64..1.0,
        ) {
            let sum: f64 = raw.iter().sum();
            prop_assume!(sum > 1e-6);
            let x = Composition::from_counts(&raw).unwrap();
            let j = j_pick % x.len();
            prop_assume!(x.get(j) < 1.0);

            let y = psi(&x, j, c_psi).unwrap();
            prop_assert!((y.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(y.values().iter().all(|&v| v >= 0.0));

            let z = phi(&x, j, c_phi).unwrap();
            prop_assert!((z.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(z.values().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn psi_is_monotone_in_scale(
            raw in arb_composition(6),
            j_pick in 0usize..6,
            c1 in 0.1f64..2.0,
            delta in 0.1f64..2.0,
        ) {
            let sum: f64 = raw.iter().sum();
            prop_assume!(sum > 1e-6);
            let x = Composition::from_counts(&raw).unwrap();
            let j = j_pick % x.len();
            prop_assume!(x.get(j) > 1e-12 && x.get(j) < 1.0);

            let lo = psi(&x, j, c1).unwrap();
            let hi = psi(&x, j, c1 + delta).unwrap();
            prop_assert!(hi.get(j) >= lo.get(j));
            for l in 0..x.len() {
                if l != j {
                    prop_assert!(hi.get(l) <= lo.get(l) + 1e-15);
                }
            }
        }

        #[test]
        fn clr_output_sums_to_zero(raw in arb_composition(10), c in 1e-6f64..1.0) {
            let sum: f64 = raw.iter().sum();
            prop_assume!(sum > 1e-6);
            let x = Composition::from_counts(&raw).unwrap();
            let v = clr_shifted(&x, c).unwrap();
            prop_assert!(v.iter().sum::<f64>().abs() < 1e-9);
        }
    }
}
