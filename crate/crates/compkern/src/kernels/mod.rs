//! Kernel catalog on the simplex.
//!
//! Seven families are provided, spanning four geometries:
//!
//! * Euclidean restrictions: [`KernelFamily::Linear`], [`KernelFamily::Rbf`]
//! * probability-distribution kernels: [`KernelFamily::GeneralizedJs`],
//!   [`KernelFamily::Hilbertian`] (these recover total variation, Hellinger,
//!   Jensen-Shannon and chi-square as special parameter settings, see
//!   [`classic`])
//! * log-ratio geometry: [`KernelFamily::Aitchison`],
//!   [`KernelFamily::AitchisonRbf`], both zero-shifted by a tunable `c`
//! * multinomial-manifold geometry: [`KernelFamily::HeatDiffusion`]
//!
//! The linear, generalized-JS, Hilbertian and Aitchison kernels are centered
//! so that `k(u, .) = 0` at the neutral point `u = (1/p, ..., 1/p)`; the
//! exponential families (RBF, Aitchison-RBF, heat diffusion) keep their
//! uncentered form. Every kernel induces a semi-metric through
//! `d^2(x, y) = k(x,x) + k(y,y) - 2 k(x,y)`; [`distance_squared_direct`]
//! evaluates the same quantity through an independent closed form, which the
//! test suite cross-checks against the composed route.
//!
//! Each family also has a weighted variant taking a prior-similarity matrix
//! `W` over the coordinates; see [`crate::weighting`].

pub mod classic;

use crate::compdata::{clr_shifted_slice, Composition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::weighting::WeightMatrix;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A kernel family together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    /// `k(x,y) = sum_j x^j y^j - 1/p`.
    Linear,
    /// `k(x,y) = exp(-sum_j (x^j - y^j)^2 / (2 sigma2))`.
    Rbf { sigma2: f64 },
    /// Generalized Jensen-Shannon family; `a` in (0, inf], `b` in [0.5, a].
    /// `b = a` and `a = inf` are explicit limit branches.
    GeneralizedJs { a: f64, b: f64 },
    /// Hilbertian family; `a` in (0, inf], `b` in [-inf, 0), not both infinite.
    Hilbertian { a: f64, b: f64 },
    /// Log-ratio inner product with zero shift `c > 0`.
    Aitchison { c: f64 },
    /// Gaussian kernel on shifted log-ratio coordinates.
    AitchisonRbf { c: f64, sigma2: f64 },
    /// Heat kernel on the multinomial manifold, bandwidth `t > 0`.
    HeatDiffusion { t: f64 },
}

impl KernelFamily {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameters(msg));
        match *self {
            KernelFamily::Linear => Ok(()),
            KernelFamily::Rbf { sigma2 } => {
                if sigma2 > 0.0 && sigma2.is_finite() {
                    Ok(())
                } else {
                    bad(format!("rbf requires sigma2 > 0, got {sigma2}"))
                }
            }
            KernelFamily::GeneralizedJs { a, b } => {
                if !a.is_nan() && a > 0.0 && (0.5..=a).contains(&b) {
                    Ok(())
                } else {
                    bad(format!("generalized-js requires a in (0, inf], b in [0.5, a], got a={a}, b={b}"))
                }
            }
            KernelFamily::Hilbertian { a, b } => {
                if a.is_nan() || b.is_nan() || a <= 0.0 || b >= 0.0 {
                    bad(format!("hilbertian requires a in (0, inf], b in [-inf, 0), got a={a}, b={b}"))
                } else if a.is_infinite() && b.is_infinite() {
                    bad("hilbertian parameters cannot both be infinite".to_string())
                } else {
                    Ok(())
                }
            }
            KernelFamily::Aitchison { c } => {
                if c > 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    bad(format!("aitchison requires c > 0, got {c}"))
                }
            }
            KernelFamily::AitchisonRbf { c, sigma2 } => {
                if c > 0.0 && c.is_finite() && sigma2 > 0.0 && sigma2.is_finite() {
                    Ok(())
                } else {
                    bad(format!("aitchison-rbf requires c > 0 and sigma2 > 0, got c={c}, sigma2={sigma2}"))
                }
            }
            KernelFamily::HeatDiffusion { t } => {
                if t > 0.0 && t.is_finite() {
                    Ok(())
                } else {
                    bad(format!("heat-diffusion requires t > 0, got {t}"))
                }
            }
        }
    }

    /// Canonical family name used in serialized records.
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Linear => "linear",
            KernelFamily::Rbf { .. } => "rbf",
            KernelFamily::GeneralizedJs { .. } => "generalized-js",
            KernelFamily::Hilbertian { .. } => "hilbertian",
            KernelFamily::Aitchison { .. } => "aitchison",
            KernelFamily::AitchisonRbf { .. } => "aitchison-rbf",
            KernelFamily::HeatDiffusion { .. } => "heat-diffusion",
        }
    }
}

/// A fully specified kernel: family, parameters and optional coordinate
/// weighting.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    weight: Option<WeightMatrix>,
}

impl KernelSpec {
    /// Validate parameters and build a spec.
    pub fn new(family: KernelFamily) -> Result<Self> {
        family.validate()?;
        Ok(KernelSpec {
            family,
            weight: None,
        })
    }

    /// Attach a weight matrix. Its dimension is checked lazily against the
    /// data at evaluation time.
    pub fn with_weight(mut self, weight: WeightMatrix) -> Self {
        self.weight = Some(weight);
        self
    }

    /// Drop the weight matrix.
    pub fn without_weight(mut self) -> Self {
        self.weight = None;
        self
    }

    pub fn linear() -> Self {
        KernelSpec::new(KernelFamily::Linear).expect("valid")
    }

    pub fn rbf(sigma2: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::Rbf { sigma2 })
    }

    pub fn generalized_js(a: f64, b: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::GeneralizedJs { a, b })
    }

    pub fn hilbertian(a: f64, b: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::Hilbertian { a, b })
    }

    pub fn aitchison(c: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::Aitchison { c })
    }

    pub fn aitchison_rbf(c: f64, sigma2: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::AitchisonRbf { c, sigma2 })
    }

    pub fn heat_diffusion(t: f64) -> Result<Self> {
        KernelSpec::new(KernelFamily::HeatDiffusion { t })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn weight(&self) -> Option<&WeightMatrix> {
        self.weight.as_ref()
    }

    /// Compact canonical description, e.g. `rbf(sigma2=0.5)`.
    pub fn describe(&self) -> String {
        let base = match self.family {
            KernelFamily::Linear => "linear".to_string(),
            KernelFamily::Rbf { sigma2 } => format!("rbf(sigma2={sigma2})"),
            KernelFamily::GeneralizedJs { a, b } => format!("generalized-js(a={a},b={b})"),
            KernelFamily::Hilbertian { a, b } => format!("hilbertian(a={a},b={b})"),
            KernelFamily::Aitchison { c } => format!("aitchison(c={c})"),
            KernelFamily::AitchisonRbf { c, sigma2 } => {
                format!("aitchison-rbf(c={c},sigma2={sigma2})")
            }
            KernelFamily::HeatDiffusion { t } => format!("heat-diffusion(t={t})"),
        };
        if self.weight.is_some() {
            format!("{base}[weighted]")
        } else {
            base
        }
    }

    /// Flattened serializable form.
    pub fn to_record(&self) -> KernelRecord {
        let mut rec = KernelRecord {
            family: self.family.name().to_string(),
            a: None,
            b: None,
            sigma2: None,
            c: None,
            t: None,
            weights_path: self.weight.as_ref().and_then(|w| w.source_path().map(String::from)),
        };
        match self.family {
            KernelFamily::Linear => {}
            KernelFamily::Rbf { sigma2 } => rec.sigma2 = Some(sigma2),
            KernelFamily::GeneralizedJs { a, b } => {
                rec.a = Some(a);
                rec.b = Some(b);
            }
            KernelFamily::Hilbertian { a, b } => {
                rec.a = Some(a);
                rec.b = Some(b);
            }
            KernelFamily::Aitchison { c } => rec.c = Some(c),
            KernelFamily::AitchisonRbf { c, sigma2 } => {
                rec.c = Some(c);
                rec.sigma2 = Some(sigma2);
            }
            KernelFamily::HeatDiffusion { t } => rec.t = Some(t),
        }
        rec
    }

    /// Rebuild a spec from its flattened form. A relative `weights_path` is
    /// resolved against `weights_dir` when given.
    pub fn from_record(rec: &KernelRecord, weights_dir: Option<&Path>) -> Result<Self> {
        let missing = |f: &str| Error::InvalidParameters(format!("{} requires parameter {f}", rec.family));
        let family = match rec.family.as_str() {
            "linear" => KernelFamily::Linear,
            "rbf" => KernelFamily::Rbf {
                sigma2: rec.sigma2.ok_or_else(|| missing("sigma2"))?,
            },
            "generalized-js" => KernelFamily::GeneralizedJs {
                a: rec.a.ok_or_else(|| missing("a"))?,
                b: rec.b.ok_or_else(|| missing("b"))?,
            },
            "hilbertian" => KernelFamily::Hilbertian {
                a: rec.a.ok_or_else(|| missing("a"))?,
                b: rec.b.ok_or_else(|| missing("b"))?,
            },
            "aitchison" => KernelFamily::Aitchison {
                c: rec.c.ok_or_else(|| missing("c"))?,
            },
            "aitchison-rbf" => KernelFamily::AitchisonRbf {
                c: rec.c.ok_or_else(|| missing("c"))?,
                sigma2: rec.sigma2.ok_or_else(|| missing("sigma2"))?,
            },
            "heat-diffusion" => KernelFamily::HeatDiffusion {
                t: rec.t.ok_or_else(|| missing("t"))?,
            },
            other => {
                return Err(Error::InvalidParameters(format!(
                    "unknown kernel family {other:?}"
                )))
            }
        };
        let mut spec = KernelSpec::new(family)?;
        if let Some(ref path) = rec.weights_path {
            let resolved = match weights_dir {
                Some(dir) if Path::new(path).is_relative() => dir.join(path),
                _ => Path::new(path).to_path_buf(),
            };
            let w = WeightMatrix::from_csv(&resolved)?.with_source_path(path.clone());
            spec = spec.with_weight(w);
        }
        Ok(spec)
    }
}

/// Flat serializable record: family name, numeric parameters and an optional
/// weight-matrix CSV path. Infinite `a`/`b` serialize as the strings
/// `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelRecord {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "ext_f64")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "ext_f64")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_path: Option<String>,
}

/// JSON has no infinity literal, so infinite values round-trip as strings.
mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_finite() => s.serialize_f64(*x),
            Some(x) if *x > 0.0 => s.serialize_str("inf"),
            Some(_) => s.serialize_str("-inf"),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum NumOrStr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        let v = Option::<NumOrStr>::deserialize(d)?;
        match v {
            None => Ok(None),
            Some(NumOrStr::Num(x)) => Ok(Some(x)),
            Some(NumOrStr::Str(s)) => s
                .trim()
                .parse::<f64>()
                .map(Some)
                .map_err(|_| serde::de::Error::custom(format!("invalid number {s:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// numeric helpers
// ---------------------------------------------------------------------------

/// `(u^e + v^e)^(1/e)` for nonnegative `u`, `v` and `e != 0`, computed as
/// `m (1 + r^e)^(1/e)` with `r <= 1` so that large `|e|` cannot overflow.
/// For `e < 0` the continuous extension at zero arguments is 0.
fn pow_sum_root(u: f64, v: f64, e: f64) -> f64 {
    if e > 0.0 {
        let m = u.max(v);
        if m == 0.0 {
            return 0.0;
        }
        let r = u.min(v) / m;
        m * (r.powf(e).ln_1p() / e).exp()
    } else {
        let m = u.min(v);
        if m == 0.0 {
            return 0.0;
        }
        let r = m / u.max(v);
        m * (r.powf(-e).ln_1p() / e).exp()
    }
}

/// Per-coordinate building block of the diagonal (`b -> a`) branch:
/// `(u^b + v^b)^(1/b) * [ln 2 + w_u ln w_u + w_v ln w_v]` with
/// `w_u = u^b / (u^b + v^b)`, using the convention `0 ln 0 = 0`.
fn js_diag_block(u: f64, v: f64, b: f64) -> f64 {
    let m = u.max(v);
    if m == 0.0 {
        return 0.0;
    }
    let r = (u.min(v) / m).powf(b); // in [0, 1]
    let w_hi = 1.0 / (1.0 + r);
    let w_lo = r / (1.0 + r);
    let xlx = |w: f64| if w > 0.0 { w * w.ln() } else { 0.0 };
    let bracket = std::f64::consts::LN_2 + xlx(w_hi) + xlx(w_lo);
    let root = m * (r.ln_1p() / b).exp(); // (u^b + v^b)^(1/b)
    root * bracket
}

fn ind_ne(u: f64, v: f64) -> f64 {
    // Sharp indicator by design: this branch of the family is discontinuous.
    if u != v {
        1.0
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// branch dispatch for the coordinate-sum families
// ---------------------------------------------------------------------------

/// Families expressible as `pref * sum_j term(x^j, y^j)`; the weighted
/// variant replaces the sum by `sum_{j,l} W_{j,l} term(x^j, y^l)`.
#[derive(Debug, Clone, Copy)]
enum SumBranch {
    Linear,
    GenJsFinite { a: f64, b: f64 },
    GenJsInfA { b: f64 },
    GenJsDiag { b: f64 },
    GenJsInfBoth,
    HilbFinite { a: f64, b: f64 },
    HilbInfA { b: f64 },
    HilbInfB { a: f64 },
    HilbTv,
}

impl SumBranch {
    fn from_family(family: &KernelFamily) -> Option<SumBranch> {
        match *family {
            KernelFamily::Linear => Some(SumBranch::Linear),
            KernelFamily::GeneralizedJs { a, b } => Some(match (a.is_infinite(), b.is_infinite()) {
                (true, true) => SumBranch::GenJsInfBoth,
                (true, false) => SumBranch::GenJsInfA { b },
                _ if a == b => SumBranch::GenJsDiag { b },
                _ => SumBranch::GenJsFinite { a, b },
            }),
            KernelFamily::Hilbertian { a, b } => Some(if a.is_infinite() {
                SumBranch::HilbInfA { b }
            } else if b.is_infinite() {
                if a == 1.0 {
                    // The (1, -inf) point is the total-variation kernel.
                    SumBranch::HilbTv
                } else {
                    SumBranch::HilbInfB { a }
                }
            } else {
                SumBranch::HilbFinite { a, b }
            }),
            _ => None,
        }
    }

    fn kernel_prefactor(&self) -> f64 {
        match *self {
            SumBranch::Linear => 1.0,
            SumBranch::GenJsFinite { a, b } => {
                -(a * b / (a - b)) * (-(1.0 + 1.0 / a + 1.0 / b) * std::f64::consts::LN_2).exp()
            }
            SumBranch::GenJsInfA { b } => -b / 2.0,
            SumBranch::GenJsDiag { b } => -0.5 * (-std::f64::consts::LN_2 / b).exp(),
            SumBranch::GenJsInfBoth => -std::f64::consts::LN_2 / 2.0,
            SumBranch::HilbFinite { a, b } => {
                -1.0 / (2.0 * ((1.0 / a).exp2() - (1.0 / b).exp2()))
            }
            SumBranch::HilbInfA { b } => -1.0 / (2.0 * (1.0 - (1.0 / b).exp2())),
            SumBranch::HilbInfB { a } => -1.0 / (2.0 * ((1.0 / a).exp2() - 1.0)),
            SumBranch::HilbTv => -0.25,
        }
    }

    /// Per-coordinate kernel term; `q = 1/p` is the matching coordinate of
    /// the neutral point. Arguments are ordered first so that evaluation is
    /// bitwise symmetric in `(u, v)`.
    fn kernel_term(&self, u: f64, v: f64, q: f64) -> f64 {
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        match *self {
            SumBranch::Linear => u * v - u * q - v * q + q * q,
            SumBranch::GenJsFinite { a, b } => {
                let ta = (1.0 / a).exp2();
                let tb = (1.0 / b).exp2();
                let pa = pow_sum_root(u, v, a) - pow_sum_root(u, q, a) - pow_sum_root(q, v, a);
                let pb = pow_sum_root(u, v, b) - pow_sum_root(u, q, b) - pow_sum_root(q, v, b);
                tb * pa - ta * pb
            }
            SumBranch::GenJsInfA { b } | SumBranch::HilbInfA { b } => {
                let tb = (1.0 / b).exp2();
                let mx = u.max(v) - u.max(q) - v.max(q);
                let pb = pow_sum_root(u, v, b) - pow_sum_root(u, q, b) - pow_sum_root(q, v, b);
                tb * mx - pb
            }
            SumBranch::GenJsDiag { b } => {
                js_diag_block(u, v, b) - js_diag_block(u, q, b) - js_diag_block(q, v, b)
            }
            SumBranch::GenJsInfBoth => {
                u.max(v) * ind_ne(u, v) - u.max(q) * ind_ne(u, q) - v.max(q) * ind_ne(v, q)
            }
            SumBranch::HilbFinite { a, b } => {
                let ta = (1.0 / a).exp2();
                let tb = (1.0 / b).exp2();
                let pa = pow_sum_root(u, v, a) - pow_sum_root(u, q, a) - pow_sum_root(q, v, a);
                let pb = pow_sum_root(u, v, b) - pow_sum_root(u, q, b) - pow_sum_root(q, v, b);
                tb * pa - ta * pb
            }
            SumBranch::HilbInfB { a } => {
                let ta = (1.0 / a).exp2();
                let pa = pow_sum_root(u, v, a) - pow_sum_root(u, q, a) - pow_sum_root(q, v, a);
                let mn = u.min(v) - u.min(q) - v.min(q);
                pa - ta * mn
            }
            SumBranch::HilbTv => (u - v).abs() - (u - q).abs() - (v - q).abs(),
        }
    }

    fn distance_prefactor(&self) -> f64 {
        match *self {
            SumBranch::Linear => 1.0,
            SumBranch::GenJsFinite { a, b } => {
                (a * b / (a - b)) * (-(1.0 / a + 1.0 / b) * std::f64::consts::LN_2).exp()
            }
            SumBranch::GenJsInfA { b } => b,
            SumBranch::GenJsDiag { b } => (-std::f64::consts::LN_2 / b).exp(),
            SumBranch::GenJsInfBoth => std::f64::consts::LN_2,
            SumBranch::HilbFinite { a, b } => 1.0 / ((1.0 / a).exp2() - (1.0 / b).exp2()),
            SumBranch::HilbInfA { b } => 1.0 / (1.0 - (1.0 / b).exp2()),
            SumBranch::HilbInfB { a } => 1.0 / ((1.0 / a).exp2() - 1.0),
            SumBranch::HilbTv => 0.5,
        }
    }

    /// Per-coordinate squared-distance term of the closed-form metric.
    fn distance_term(&self, u: f64, v: f64) -> f64 {
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        match *self {
            SumBranch::Linear => (u - v) * (u - v),
            SumBranch::GenJsFinite { a, b } | SumBranch::HilbFinite { a, b } => {
                let ta = (1.0 / a).exp2();
                let tb = (1.0 / b).exp2();
                tb * pow_sum_root(u, v, a) - ta * pow_sum_root(u, v, b)
            }
            SumBranch::GenJsInfA { b } | SumBranch::HilbInfA { b } => {
                let tb = (1.0 / b).exp2();
                tb * u.max(v) - pow_sum_root(u, v, b)
            }
            SumBranch::GenJsDiag { b } => js_diag_block(u, v, b),
            SumBranch::GenJsInfBoth => u.max(v) * ind_ne(u, v),
            SumBranch::HilbInfB { a } => {
                let ta = (1.0 / a).exp2();
                pow_sum_root(u, v, a) - ta * u.min(v)
            }
            SumBranch::HilbTv => (u - v).abs(),
        }
    }
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

fn check_dims(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    if let Some(w) = spec.weight() {
        if w.dim() != x.len() {
            return Err(Error::DimensionMismatch(w.dim(), x.len()));
        }
    }
    Ok(())
}

fn clr_for(spec: &KernelSpec, x: &[f64]) -> Option<Vec<f64>> {
    match *spec.family() {
        KernelFamily::Aitchison { c } | KernelFamily::AitchisonRbf { c, .. } => {
            Some(clr_shifted_slice(x, c).expect("c > 0 validated"))
        }
        _ => None,
    }
}

/// Evaluate `k(x, y)`.
pub fn kernel_eval(spec: &KernelSpec, x: &Composition, y: &Composition) -> Result<f64> {
    check_dims(spec, x.values(), y.values())?;
    let cx = clr_for(spec, x.values());
    let cy = clr_for(spec, y.values());
    Ok(eval_prepared(
        spec,
        x.values(),
        cx.as_deref(),
        y.values(),
        cy.as_deref(),
    ))
}

/// Kernel evaluation once log-ratio coordinates have been prepared.
fn eval_prepared(
    spec: &KernelSpec,
    x: &[f64],
    clr_x: Option<&[f64]>,
    y: &[f64],
    clr_y: Option<&[f64]>,
) -> f64 {
    let p = x.len();
    let q = 1.0 / p as f64;
    let w = spec.weight();
    if let Some(branch) = SumBranch::from_family(spec.family()) {
        let pref = branch.kernel_prefactor();
        let total = match w {
            None => {
                // Unweighted linear kernel keeps its short form.
                if let SumBranch::Linear = branch {
                    let dot: f64 = x.iter().zip(y).map(|(&u, &v)| u * v).sum();
                    return dot - q;
                }
                (0..p).map(|j| branch.kernel_term(x[j], y[j], q)).sum::<f64>()
            }
            Some(w) => {
                let mut acc = 0.0;
                for j in 0..p {
                    let row = w.row(j);
                    for l in 0..p {
                        let wj = row[l];
                        if wj != 0.0 {
                            acc += wj * branch.kernel_term(x[j], y[l], q);
                        }
                    }
                }
                acc
            }
        };
        return pref * total;
    }
    match *spec.family() {
        KernelFamily::Rbf { sigma2 } => {
            let ss = match w {
                None => x
                    .iter()
                    .zip(y)
                    .map(|(&u, &v)| (u - v) * (u - v))
                    .sum::<f64>(),
                Some(w) => double_sum_sq(x, y, w),
            };
            (-ss / (2.0 * sigma2)).exp()
        }
        KernelFamily::Aitchison { .. } => {
            let cx = clr_x.expect("prepared");
            let cy = clr_y.expect("prepared");
            match w {
                None => cx.iter().zip(cy).map(|(&u, &v)| u * v).sum(),
                Some(w) => {
                    let mut acc = 0.0;
                    for j in 0..p {
                        let row = w.row(j);
                        let mut inner = 0.0;
                        for l in 0..p {
                            inner += row[l] * cy[l];
                        }
                        acc += cx[j] * inner;
                    }
                    acc
                }
            }
        }
        KernelFamily::AitchisonRbf { sigma2, .. } => {
            let cx = clr_x.expect("prepared");
            let cy = clr_y.expect("prepared");
            let ss = match w {
                None => cx
                    .iter()
                    .zip(cy)
                    .map(|(&u, &v)| (u - v) * (u - v))
                    .sum::<f64>(),
                Some(w) => double_sum_sq(cx, cy, w),
            };
            (-ss / (2.0 * sigma2)).exp()
        }
        KernelFamily::HeatDiffusion { t } => {
            let dot = match w {
                None => x.iter().zip(y).map(|(&u, &v)| (u * v).sqrt()).sum::<f64>(),
                Some(w) => {
                    let mut acc = 0.0;
                    for j in 0..p {
                        let row = w.row(j);
                        let su = x[j].sqrt();
                        for l in 0..p {
                            acc += row[l] * su * y[l].sqrt();
                        }
                    }
                    acc
                }
            };
            // Round-off (and weighting) can push the argument out of range.
            let s = dot.clamp(-1.0, 1.0).acos();
            let ln_k = -(p as f64 / 2.0) * (4.0 * std::f64::consts::PI * t).ln() - s * s / t;
            ln_k.exp()
        }
        _ => unreachable!("sum families handled above"),
    }
}

fn double_sum_sq(x: &[f64], y: &[f64], w: &WeightMatrix) -> f64 {
    let p = x.len();
    let mut acc = 0.0;
    for j in 0..p {
        let row = w.row(j);
        for l in 0..p {
            let d = x[j] - y[l];
            acc += row[l] * d * d;
        }
    }
    acc
}

/// Kernel-induced semi-metric `sqrt(max(0, k(x,x) + k(y,y) - 2 k(x,y)))`.
pub fn kernel_distance(spec: &KernelSpec, x: &Composition, y: &Composition) -> Result<f64> {
    Ok(kernel_distance_squared(spec, x, y)?.max(0.0).sqrt())
}

/// Squared kernel distance through the composed route.
pub fn kernel_distance_squared(spec: &KernelSpec, x: &Composition, y: &Composition) -> Result<f64> {
    let kxx = kernel_eval(spec, x, x)?;
    let kyy = kernel_eval(spec, y, y)?;
    let kxy = kernel_eval(spec, x, y)?;
    Ok(kxx + kyy - 2.0 * kxy)
}

/// Squared distance through the closed-form metric of each family.
///
/// This is an independent evaluation route; the test suite asserts it agrees
/// with [`kernel_distance_squared`]. Weighted specs have no printed closed
/// form and fall back to the composed route.
pub fn distance_squared_direct(spec: &KernelSpec, x: &Composition, y: &Composition) -> Result<f64> {
    check_dims(spec, x.values(), y.values())?;
    if spec.weight().is_some() {
        if let KernelFamily::Aitchison { c } = *spec.family() {
            // The weighted log-ratio kernel still has a quadratic-form metric.
            let cx = clr_shifted_slice(x.values(), c)?;
            let cy = clr_shifted_slice(y.values(), c)?;
            let d: Vec<f64> = cx.iter().zip(&cy).map(|(&u, &v)| u - v).collect();
            let w = spec.weight().unwrap();
            let mut acc = 0.0;
            for j in 0..d.len() {
                let row = w.row(j);
                for l in 0..d.len() {
                    acc += d[j] * row[l] * d[l];
                }
            }
            return Ok(acc);
        }
        return kernel_distance_squared(spec, x, y);
    }
    let xs = x.values();
    let ys = y.values();
    if let Some(branch) = SumBranch::from_family(spec.family()) {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(&u, &v)| branch.distance_term(u, v))
            .sum();
        return Ok(branch.distance_prefactor() * total);
    }
    Ok(match *spec.family() {
        KernelFamily::Rbf { sigma2 } => {
            let ss: f64 = xs.iter().zip(ys).map(|(&u, &v)| (u - v) * (u - v)).sum();
            2.0 - 2.0 * (-ss / (2.0 * sigma2)).exp()
        }
        KernelFamily::Aitchison { c } => {
            let cx = clr_shifted_slice(xs, c)?;
            let cy = clr_shifted_slice(ys, c)?;
            cx.iter().zip(&cy).map(|(&u, &v)| (u - v) * (u - v)).sum()
        }
        KernelFamily::AitchisonRbf { c, sigma2 } => {
            let cx = clr_shifted_slice(xs, c)?;
            let cy = clr_shifted_slice(ys, c)?;
            let ss: f64 = cx.iter().zip(&cy).map(|(&u, &v)| (u - v) * (u - v)).sum();
            2.0 - 2.0 * (-ss / (2.0 * sigma2)).exp()
        }
        KernelFamily::HeatDiffusion { t } => {
            let p = xs.len() as f64;
            let dot: f64 = xs.iter().zip(ys).map(|(&u, &v)| (u * v).sqrt()).sum();
            let s = dot.clamp(-1.0, 1.0).acos();
            let scale = (-(p / 2.0) * (4.0 * std::f64::consts::PI * t).ln()).exp();
            2.0 * scale * (1.0 - (-s * s / t).exp())
        }
        _ => unreachable!(),
    })
}

// ---------------------------------------------------------------------------
// Gram matrices
// ---------------------------------------------------------------------------

/// Symmetric matrix of kernel evaluations with spectral diagnostics.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    spec: KernelSpec,
    min_eig_estimate: f64,
    max_eig_estimate: f64,
}

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Smallest eigenvalue (estimate beyond the dense solver limit).
    pub fn min_eig_estimate(&self) -> f64 {
        self.min_eig_estimate
    }

    pub fn max_eig_estimate(&self) -> f64 {
        self.max_eig_estimate
    }

    /// Positive semi-definite up to round-off: `min_eig >= -1e-8 * max(1, max_eig)`.
    pub fn is_psd(&self) -> bool {
        self.min_eig_estimate >= -1e-8 * self.max_eig_estimate.max(1.0)
    }
}

fn prepared_rows<'a>(spec: &KernelSpec, rows: &'a [Composition]) -> (Vec<&'a [f64]>, Option<Vec<Vec<f64>>>) {
    let raw: Vec<&[f64]> = rows.iter().map(|c| c.values()).collect();
    let clr = match *spec.family() {
        KernelFamily::Aitchison { c } | KernelFamily::AitchisonRbf { c, .. } => Some(
            raw.iter()
                .map(|r| clr_shifted_slice(r, c).expect("c > 0 validated"))
                .collect(),
        ),
        _ => None,
    };
    (raw, clr)
}

fn common_dim(spec: &KernelSpec, rows: &[Composition]) -> Result<usize> {
    let p = rows[0].len();
    for r in rows {
        if r.len() != p {
            return Err(Error::DimensionMismatch(p, r.len()));
        }
    }
    if let Some(w) = spec.weight() {
        if w.dim() != p {
            return Err(Error::DimensionMismatch(w.dim(), p));
        }
    }
    Ok(p)
}

/// Assemble the Gram matrix of `spec` over `rows`.
///
/// The upper triangle is computed in parallel and mirrored, so symmetry is
/// exact. Spectral diagnostics are attached for the PSD check.
pub fn gram(spec: &KernelSpec, rows: &[Composition]) -> Result<GramMatrix> {
    assert!(!rows.is_empty(), "gram of an empty sample");
    common_dim(spec, rows)?;
    let n = rows.len();
    let (raw, clr) = prepared_rows(spec, rows);
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ci = clr.as_ref().map(|c| c[i].as_slice());
            (i..n)
                .map(|j| {
                    let cj = clr.as_ref().map(|c| c[j].as_slice());
                    eval_prepared(spec, raw[i], ci, raw[j], cj)
                })
                .collect()
        })
        .collect();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for (off, &v) in upper[i].iter().enumerate() {
            let j = i + off;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    let (min_eig, max_eig) = linalg::sym_extreme_eigs(&entries);
    Ok(GramMatrix {
        entries,
        spec: spec.clone(),
        min_eig_estimate: min_eig,
        max_eig_estimate: max_eig,
    })
}

/// Rectangular kernel matrix: entry `(i, j) = k(x_new[i], x_train[j])`.
pub fn cross_gram(
    spec: &KernelSpec,
    x_new: &[Composition],
    x_train: &[Composition],
) -> Result<DMatrix<f64>> {
    assert!(!x_train.is_empty(), "cross_gram with empty training rows");
    let p = common_dim(spec, x_train)?;
    for r in x_new {
        if r.len() != p {
            return Err(Error::DimensionMismatch(p, r.len()));
        }
    }
    let m = x_new.len();
    let n = x_train.len();
    let (raw_new, clr_new) = prepared_rows(spec, x_new);
    let (raw_train, clr_train) = prepared_rows(spec, x_train);
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let ci = clr_new.as_ref().map(|c| c[i].as_slice());
            (0..n)
                .map(|j| {
                    let cj = clr_train.as_ref().map(|c| c[j].as_slice());
                    eval_prepared(spec, raw_new[i], ci, raw_train[j], cj)
                })
                .collect()
        })
        .collect();
    let mut out = DMatrix::zeros(m, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}
