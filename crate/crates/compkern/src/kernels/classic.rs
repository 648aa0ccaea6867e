//! Classical probability-metric kernels on the simplex, centered at the
//! neutral point `u = (1/p, ..., 1/p)`.
//!
//! These closed forms are kept separate from the parametric families on
//! purpose: the parametric kernels recover them at special parameter
//! settings (up to documented scale factors), and the test suite uses these
//! functions as independent oracles for those identities:
//!
//! * generalized-JS `(1, 0.5)`  = `sqrt(2)/2 *` [`hellinger`]
//! * generalized-JS `(1, 1)`    = [`jensen_shannon`]
//! * generalized-JS `(inf, 1)`  = `2 *` [`total_variation`]
//! * Hilbertian `(1, -1)`       = `1/3 *` [`chi_square`]
//! * Hilbertian `(1, -inf)`     = [`total_variation`]

use crate::compdata::Composition;

fn check(x: &Composition, y: &Composition) {
    assert_eq!(x.len(), y.len(), "dimension mismatch");
}

/// Hellinger kernel, scaled by `sqrt(2)/2`:
/// `sqrt(2)/4 + sqrt(2)/4 * sum_j (sqrt(x^j y^j) - (sqrt(x^j) + sqrt(y^j)) / sqrt(p))`.
pub fn hellinger(x: &Composition, y: &Composition) -> f64 {
    check(x, y);
    let p = x.len() as f64;
    let root_p = p.sqrt();
    let s: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(&u, &v)| (u * v).sqrt() - (u.sqrt() + v.sqrt()) / root_p)
        .sum();
    let q = std::f64::consts::SQRT_2 / 4.0;
    q + q * s
}

/// Jensen-Shannon kernel
/// `-1/4 sum_j { x^j log((x^j + 1/p)/(x^j + y^j)) + y^j log((y^j + 1/p)/(x^j + y^j))
///   - 1/p log(4 / (p^2 (x^j + 1/p)(y^j + 1/p))) }`
/// with the convention `0 log 0 = 0`.
pub fn jensen_shannon(x: &Composition, y: &Composition) -> f64 {
    check(x, y);
    let q = 1.0 / x.len() as f64;
    let xlogr = |w: f64, num: f64, den: f64| if w > 0.0 { w * (num / den).ln() } else { 0.0 };
    let s: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(&u, &v)| {
            let uv = u + v;
            xlogr(u, u + q, uv) + xlogr(v, v + q, uv) - q * (4.0 / ((u + q) * (v + q)) * q * q).ln()
        })
        .sum();
    -s / 4.0
}

/// Total-variation kernel
/// `-1/4 sum_j (|x^j - y^j| - |x^j - 1/p| - |y^j - 1/p|)`,
/// the centered kernel of the metric `d^2(x, y) = 1/2 sum_j |x^j - y^j|`.
pub fn total_variation(x: &Composition, y: &Composition) -> f64 {
    check(x, y);
    let q = 1.0 / x.len() as f64;
    let s: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(&u, &v)| (u - v).abs() - (u - q).abs() - (v - q).abs())
        .sum();
    -s / 4.0
}

/// Chi-square kernel
/// `-1/2 sum_j ((x^j - y^j)^2/(x^j + y^j) - (x^j - 1/p)^2/(x^j + 1/p) - (y^j - 1/p)^2/(y^j + 1/p))`
/// with `0/0 = 0` when both coordinates vanish.
pub fn chi_square(x: &Composition, y: &Composition) -> f64 {
    check(x, y);
    let q = 1.0 / x.len() as f64;
    let ratio = |u: f64, v: f64| {
        let den = u + v;
        if den > 0.0 {
            (u - v) * (u - v) / den
        } else {
            0.0
        }
    };
    let s: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(&u, &v)| ratio(u, v) - ratio(u, q) - ratio(v, q))
        .sum();
    -s / 2.0
}
