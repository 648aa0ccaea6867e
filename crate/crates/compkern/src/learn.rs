//! Kernel ridge fitting, default hyperparameter grids and two-step
//! hierarchical cross-validation model selection.
//!
//! Fitting solves `(K + n lambda I) alpha = y - mean(y)` with a Cholesky
//! factorization; prediction is `mean(y) + sum_i alpha_i k(X_i, .)`. Binary
//! classification reuses the same solver on +/-1 labels, exposing the raw
//! decision value alongside the sign.
//!
//! Selection runs in two steps: an outer/inner CV picks the kernel (the
//! penalty is re-tuned inside every outer fold), then a final inner CV on the
//! full data picks the penalty for the winning kernel. Everything is
//! deterministic given the seed; fold assignments depend only on the seed, so
//! scores are invariant to the order of kernels in the grid.

use crate::compdata::{clr_shifted, Composition};
use crate::datio::Task;
use crate::error::{Error, Result};
use crate::kernels::{cross_gram, gram, KernelRecord, KernelSpec};
use crate::rng::CounterRng;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A fitted kernel ridge model: dual coefficients over the training
/// compositions plus the kernel that produced them.
#[derive(Debug, Clone)]
pub struct FittedModel {
    train_x: Vec<Composition>,
    alpha: Vec<f64>,
    intercept: f64,
    spec: KernelSpec,
    lambda: f64,
    task: Task,
    label_names: Option<(String, String)>,
}

impl FittedModel {
    pub fn train_x(&self) -> &[Composition] {
        &self.train_x
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Label strings mapped to -1/+1, when fitted through a labeled dataset.
    pub fn label_names(&self) -> Option<&(String, String)> {
        self.label_names.as_ref()
    }

    pub fn set_label_names(&mut self, names: Option<(String, String)>) {
        self.label_names = names;
    }

    /// Decision values `intercept + cross_gram * alpha`.
    pub fn predict(&self, x_new: &[Composition]) -> Result<Vec<f64>> {
        if x_new.is_empty() {
            return Ok(Vec::new());
        }
        let kg = cross_gram(&self.spec, x_new, &self.train_x)?;
        let alpha = DVector::from_column_slice(&self.alpha);
        let raw = kg * alpha;
        Ok(raw.iter().map(|v| v + self.intercept).collect())
    }

    /// Single-point decision value.
    pub fn predict_one(&self, x: &Composition) -> Result<f64> {
        Ok(self.predict(std::slice::from_ref(x))?[0])
    }

    /// Class labels in {-1, +1} (sign of the decision value; 0 maps to +1).
    pub fn predict_class(&self, x_new: &[Composition]) -> Result<Vec<f64>> {
        Ok(self
            .predict(x_new)?
            .into_iter()
            .map(|v| if v < 0.0 { -1.0 } else { 1.0 })
            .collect())
    }

    /// Serialize to a single self-describing JSON file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            task: self.task,
            kernel: self.spec.to_record(),
            lambda: self.lambda,
            intercept: self.intercept,
            alpha: self.alpha.clone(),
            train: self.train_x.iter().map(|c| c.values().to_vec()).collect(),
            label_names: self.label_names.clone(),
        };
        let json = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Load a model saved by [`FittedModel::save`]. A relative kernel
    /// `weights_path` is resolved against the model file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text)?;
        let spec = KernelSpec::from_record(&file.kernel, path.parent())?;
        let train_x = file
            .train
            .into_iter()
            .map(Composition::new)
            .collect::<Result<Vec<_>>>()?;
        if train_x.len() != file.alpha.len() {
            return Err(Error::DimensionMismatch(train_x.len(), file.alpha.len()));
        }
        Ok(FittedModel {
            train_x,
            alpha: file.alpha,
            intercept: file.intercept,
            spec,
            lambda: file.lambda,
            task: file.task,
            label_names: file.label_names,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    task: Task,
    kernel: KernelRecord,
    lambda: f64,
    intercept: f64,
    alpha: Vec<f64>,
    train: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label_names: Option<(String, String)>,
}

/// Fit kernel ridge regression (or a ridge classifier on +/-1 labels).
///
/// Solves `(K + n lambda I) alpha = y - mean(y)` by Cholesky; on failure a
/// jitter of `1e-10 trace(K)/n` is added once before giving up.
pub fn fit_krr(
    x: &[Composition],
    y: &[f64],
    spec: &KernelSpec,
    lambda: f64,
    task: Task,
) -> Result<FittedModel> {
    if x.len() < 2 {
        return Err(Error::FoldTooSmall(format!(
            "need at least 2 samples, got {}",
            x.len()
        )));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidParameters(format!(
            "ridge penalty must be > 0, got {lambda}"
        )));
    }
    if task == Task::Classification {
        if let Some(bad) = y.iter().find(|&&v| v != -1.0 && v != 1.0) {
            return Err(Error::NonBinaryLabels(vec![format!("{bad}")]));
        }
    }
    let g = gram(spec, x)?;
    let n = x.len();
    let intercept = y.iter().sum::<f64>() / n as f64;
    let centered = DVector::from_iterator(n, y.iter().map(|v| v - intercept));
    let alpha = solve_ridge(g.entries(), &centered, n as f64 * lambda)?;
    Ok(FittedModel {
        train_x: x.to_vec(),
        alpha: alpha.iter().copied().collect(),
        intercept,
        spec: spec.clone(),
        lambda,
        task,
        label_names: None,
    })
}

fn solve_ridge(k: &DMatrix<f64>, rhs: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let n = k.nrows();
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += ridge;
    }
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    let jitter = 1e-10 * k.trace() / n as f64;
    for i in 0..n {
        a[(i, i)] += jitter;
    }
    match a.cholesky() {
        Some(chol) => Ok(chol.solve(rhs)),
        None => Err(Error::SolveFailure),
    }
}

// ---------------------------------------------------------------------------
// median heuristics and the default grid
// ---------------------------------------------------------------------------

/// Space in which the median heuristic measures pairwise squared distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MedianSpace {
    /// Euclidean distance on raw simplex coordinates.
    Raw,
    /// Euclidean distance on shifted log-ratio coordinates with this shift.
    Clr(f64),
}

/// Median of the `n(n-1)/2` pairwise squared distances.
pub fn median_heuristic(x: &[Composition], space: MedianSpace) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::FoldTooSmall(format!(
            "median heuristic needs at least 2 points, got {}",
            x.len()
        )));
    }
    let coords: Vec<Vec<f64>> = match space {
        MedianSpace::Raw => x.iter().map(|c| c.values().to_vec()).collect(),
        MedianSpace::Clr(shift) => x
            .iter()
            .map(|c| clr_shifted(c, shift))
            .collect::<Result<_>>()?,
    };
    let mut dists = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    for i in 0..coords.len() {
        for j in (i + 1)..coords.len() {
            let d: f64 = coords[i]
                .iter()
                .zip(&coords[j])
                .map(|(&u, &v)| (u - v) * (u - v))
                .sum();
            dists.push(d);
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median <= 0.0 {
        return Err(Error::AllPointsIdentical);
    }
    Ok(median)
}

/// Kernel candidates plus the ridge-penalty grid used during selection.
#[derive(Debug, Clone)]
pub struct ParamGrid {
    pub kernels: Vec<KernelSpec>,
    pub lambdas: Vec<f64>,
}

impl ParamGrid {
    pub fn new(kernels: Vec<KernelSpec>, lambdas: Vec<f64>) -> Self {
        ParamGrid { kernels, lambdas }
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Default 40-point log-spaced ridge-penalty grid.
pub fn default_lambda_grid() -> Vec<f64> {
    log_space(1e-5, 1e2, 40)
}

/// The default 55-kernel grid, data-adapted through the median heuristics
/// `m1` (raw space), `m2` (log-ratio space, computed per shift candidate) and
/// the smallest non-zero relative abundance `mu`.
///
/// Families and counts: linear (1); RBF with `sigma2` in
/// `{1e-2..1e4} * m1` (7); generalized-JS over its nine `(a, b)` pairs;
/// Hilbertian over its eight `(a, b)` pairs; log-ratio shift `c` over nine
/// log-spaced values in `[mu/2 * 1e-4, min(mu/2 * 1e4, 1e-2)]`; the
/// Gaussian log-ratio kernel over five shift values crossed with
/// `sigma2 in {0.1, 1, 10} * c * m2(c)` (15); heat diffusion with
/// `t = x^(2/(n-1)) / (4 pi)` over six log-spaced `x` in `[1e-20, 10]`,
/// where `n` is the sample size.
pub fn default_grid(x: &[Composition]) -> Result<ParamGrid> {
    if x.len() < 2 {
        return Err(Error::FoldTooSmall(format!(
            "default grid needs at least 2 samples, got {}",
            x.len()
        )));
    }
    let n = x.len();
    let m1 = median_heuristic(x, MedianSpace::Raw)?;
    let mu = x
        .iter()
        .flat_map(|c| c.values().iter().copied())
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);

    let mut kernels = Vec::with_capacity(55);
    kernels.push(KernelSpec::linear());
    for factor in [1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4] {
        kernels.push(KernelSpec::rbf(factor * m1)?);
    }
    let inf = f64::INFINITY;
    for (a, b) in [
        (1.0, 0.5),
        (1.0, 1.0),
        (10.0, 0.5),
        (10.0, 1.0),
        (10.0, 10.0),
        (inf, 0.5),
        (inf, 1.0),
        (inf, 10.0),
        (inf, inf),
    ] {
        kernels.push(KernelSpec::generalized_js(a, b)?);
    }
    for (a, b) in [
        (1.0, -1.0),
        (1.0, -10.0),
        (1.0, -inf),
        (10.0, -1.0),
        (10.0, -10.0),
        (10.0, -inf),
        (inf, -1.0),
        (inf, -10.0),
    ] {
        kernels.push(KernelSpec::hilbertian(a, b)?);
    }
    let c_lo = mu / 2.0 * 1e-4;
    let c_hi = (mu / 2.0 * 1e4).min(1e-2);
    for c in log_space(c_lo, c_hi, 9) {
        kernels.push(KernelSpec::aitchison(c)?);
    }
    for c in log_space(c_lo, c_hi, 5) {
        let m2 = median_heuristic(x, MedianSpace::Clr(c))?;
        for factor in [1e-1, 1.0, 1e1] {
            kernels.push(KernelSpec::aitchison_rbf(c, factor * c * m2)?);
        }
    }
    let exponent = 2.0 / (n as f64 - 1.0);
    for xv in log_space(1e-20, 10.0, 6) {
        kernels.push(KernelSpec::heat_diffusion(
            xv.powf(exponent) / (4.0 * std::f64::consts::PI),
        )?);
    }
    debug_assert_eq!(kernels.len(), 55);
    Ok(ParamGrid::new(kernels, default_lambda_grid()))
}

// ---------------------------------------------------------------------------
// folds
// ---------------------------------------------------------------------------

/// Assign each of `n` samples to one of `k` folds; stratified by label for
/// classification. Depends only on `(seed, salt)`.
fn make_folds(
    n: usize,
    k: usize,
    seed: u64,
    salt: u64,
    labels: Option<&[f64]>,
) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::FoldTooSmall(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::FoldTooSmall(format!("{n} samples for {k} folds")));
    }
    let mut rng = CounterRng::substream(seed, salt);
    let mut assignment = vec![0usize; n];
    match labels {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut idx);
            for (pos, &i) in idx.iter().enumerate() {
                assignment[i] = pos % k;
            }
        }
        Some(labels) => {
            let mut neg: Vec<usize> = (0..n).filter(|&i| labels[i] < 0.0).collect();
            let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i] >= 0.0).collect();
            for (class, bucket) in [("-1", &mut neg), ("+1", &mut pos)] {
                if bucket.len() < k {
                    return Err(Error::SingleClassFold {
                        label: class.to_string(),
                        count: bucket.len(),
                        folds: k,
                    });
                }
            }
            let mut cursor = 0usize;
            for bucket in [&mut neg, &mut pos] {
                rng.shuffle(bucket);
                for &i in bucket.iter() {
                    assignment[i] = cursor % k;
                    cursor += 1;
                }
            }
        }
    }
    Ok(assignment)
}

fn mse(pred: &[f64], actual: &[f64]) -> f64 {
    pred.iter()
        .zip(actual)
        .map(|(&p, &a)| (p - a) * (p - a))
        .sum::<f64>()
        / pred.len() as f64
}

fn accuracy(pred: &[f64], actual: &[f64]) -> f64 {
    pred.iter()
        .zip(actual)
        .filter(|(&p, &a)| (if p < 0.0 { -1.0 } else { 1.0 }) == a)
        .count() as f64
        / pred.len() as f64
}

/// `true` when `a` is a strictly better score than `b` for the task.
fn better(task: Task, a: f64, b: f64) -> bool {
    match task {
        Task::Regression => a < b,
        Task::Classification => a > b,
    }
}

// ---------------------------------------------------------------------------
// ridge path evaluation on Gram submatrices
// ---------------------------------------------------------------------------

/// Decision values on a held-out set for every penalty in `lambdas`,
/// sharing one eigendecomposition of the training Gram block.
fn ridge_path_decisions(
    k_full: &DMatrix<f64>,
    y: &[f64],
    train_idx: &[usize],
    test_idx: &[usize],
    lambdas: &[f64],
) -> Vec<Vec<f64>> {
    let nt = train_idx.len();
    let k_tr = DMatrix::from_fn(nt, nt, |i, j| k_full[(train_idx[i], train_idx[j])]);
    let k_te = DMatrix::from_fn(test_idx.len(), nt, |i, j| {
        k_full[(test_idx[i], train_idx[j])]
    });
    let mean_y = train_idx.iter().map(|&i| y[i]).sum::<f64>() / nt as f64;
    let centered = DVector::from_iterator(nt, train_idx.iter().map(|&i| y[i] - mean_y));
    let eig = k_tr.symmetric_eigen();
    let vt_y = eig.eigenvectors.transpose() * &centered;
    lambdas
        .iter()
        .map(|&lambda| {
            let ridge = nt as f64 * lambda;
            let scaled = DVector::from_iterator(
                nt,
                vt_y.iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(&vy, &ev)| vy / (ev.max(0.0) + ridge)),
            );
            let alpha = &eig.eigenvectors * scaled;
            (&k_te * alpha)
                .iter()
                .map(|v| v + mean_y)
                .collect::<Vec<f64>>()
        })
        .collect()
}

/// Inner CV over the penalty grid; returns the index of the winning penalty
/// (ties resolved towards the first grid entry).
#[allow(clippy::too_many_arguments)]
fn pick_lambda(
    k_full: &DMatrix<f64>,
    y: &[f64],
    subset: &[usize],
    lambdas: &[f64],
    n_in: usize,
    seed: u64,
    salt: u64,
    task: Task,
) -> Result<usize> {
    let labels: Option<Vec<f64>> = match task {
        Task::Classification => Some(subset.iter().map(|&i| y[i]).collect()),
        Task::Regression => None,
    };
    let folds = make_folds(subset.len(), n_in, seed, salt, labels.as_deref())?;
    let mut scores = vec![0.0f64; lambdas.len()];
    for fold in 0..n_in {
        let train: Vec<usize> = subset
            .iter()
            .enumerate()
            .filter(|(pos, _)| folds[*pos] != fold)
            .map(|(_, &i)| i)
            .collect();
        let test: Vec<usize> = subset
            .iter()
            .enumerate()
            .filter(|(pos, _)| folds[*pos] == fold)
            .map(|(_, &i)| i)
            .collect();
        if test.is_empty() || train.len() < 2 {
            return Err(Error::FoldTooSmall(format!(
                "inner fold {fold} has {} train / {} test samples",
                train.len(),
                test.len()
            )));
        }
        let actual: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        let decisions = ridge_path_decisions(k_full, y, &train, &test, lambdas);
        for (li, dec) in decisions.iter().enumerate() {
            scores[li] += match task {
                Task::Regression => mse(dec, &actual),
                Task::Classification => accuracy(dec, &actual),
            };
        }
    }
    let mut best = 0usize;
    for li in 1..lambdas.len() {
        if better(task, scores[li], scores[best]) {
            best = li;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// selection
// ---------------------------------------------------------------------------

/// One outer-fold evaluation of one kernel.
#[derive(Debug, Clone, Serialize)]
pub struct FoldRecord {
    pub kernel_index: usize,
    pub kernel: String,
    pub fold: usize,
    pub score: f64,
    pub lambda: f64,
}

/// Full account of a model-selection run.
#[derive(Debug, Clone)]
pub struct SelectionReport {
    pub rows: Vec<FoldRecord>,
    pub mean_scores: Vec<f64>,
    pub winner_index: usize,
    pub winner: KernelSpec,
    pub final_lambda: f64,
    pub fold_assignments: Vec<usize>,
    pub seed: u64,
    pub task: Task,
}

impl SelectionReport {
    /// Long-format CSV: `kernel,fold,score,lambda`, ordered by grid index
    /// then fold. Kernel descriptions contain commas, so that field is
    /// always quoted. Identical seeds reproduce this byte for byte.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("kernel,fold,score,lambda\n");
        for row in &self.rows {
            out.push_str(&format!(
                "\"{}\",{},{},{}\n",
                row.kernel, row.fold, row.score, row.lambda
            ));
        }
        out
    }
}

/// Two-step hierarchical CV model selection.
///
/// Step 1 scores every kernel by an `n_out`-fold CV whose per-fold penalty is
/// chosen by an `n_in`-fold CV on the remaining data; the kernel with the
/// best mean outer score wins (ties towards the first grid entry). Step 2
/// re-picks the penalty on the full data and refits.
pub fn select_model(
    x: &[Composition],
    y: &[f64],
    grid: &ParamGrid,
    n_out: usize,
    n_in: usize,
    seed: u64,
    task: Task,
) -> Result<(SelectionReport, FittedModel)> {
    if grid.kernels.is_empty() || grid.lambdas.is_empty() {
        return Err(Error::InvalidParameters(
            "selection grid must contain at least one kernel and one penalty".to_string(),
        ));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(x.len(), y.len()));
    }
    if task == Task::Classification {
        if let Some(bad) = y.iter().find(|&&v| v != -1.0 && v != 1.0) {
            return Err(Error::NonBinaryLabels(vec![format!("{bad}")]));
        }
    }
    let n = x.len();
    let labels: Option<&[f64]> = match task {
        Task::Classification => Some(y),
        Task::Regression => None,
    };
    let outer = make_folds(n, n_out, seed, 0, labels)?;

    // Fail fast if any outer-train subset cannot host the inner CV.
    for fold in 0..n_out {
        let train_size = outer.iter().filter(|&&f| f != fold).count();
        if train_size < n_in {
            return Err(Error::FoldTooSmall(format!(
                "outer fold {fold} leaves {train_size} samples for {n_in} inner folds"
            )));
        }
    }

    // One Gram matrix per kernel, shared across all folds.
    let grams: Vec<DMatrix<f64>> = grid
        .kernels
        .par_iter()
        .map(|spec| gram(spec, x).map(|g| g.entries().clone()))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..grid.kernels.len())
        .flat_map(|ki| (0..n_out).map(move |fold| (ki, fold)))
        .collect();
    let evals: Vec<Result<FoldRecord>> = jobs
        .par_iter()
        .map(|&(ki, fold)| {
            let train: Vec<usize> = (0..n).filter(|&i| outer[i] != fold).collect();
            let test: Vec<usize> = (0..n).filter(|&i| outer[i] == fold).collect();
            let li = pick_lambda(
                &grams[ki],
                y,
                &train,
                &grid.lambdas,
                n_in,
                seed,
                1 + fold as u64,
                task,
            )?;
            let lambda = grid.lambdas[li];
            let dec = ridge_path_decisions(&grams[ki], y, &train, &test, &[lambda])
                .pop()
                .expect("one lambda requested");
            let actual: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            let score = match task {
                Task::Regression => mse(&dec, &actual),
                Task::Classification => accuracy(&dec, &actual),
            };
            Ok(FoldRecord {
                kernel_index: ki,
                kernel: grid.kernels[ki].describe(),
                fold,
                score,
                lambda,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(evals.len());
    for r in evals {
        rows.push(r?);
    }
    // Parallel iteration preserved job order, so rows are already sorted by
    // (kernel, fold).
    let mut mean_scores = vec![0.0f64; grid.kernels.len()];
    for row in &rows {
        mean_scores[row.kernel_index] += row.score;
    }
    for s in &mut mean_scores {
        *s /= n_out as f64;
    }
    let mut winner_index = 0usize;
    for ki in 1..grid.kernels.len() {
        if better(task, mean_scores[ki], mean_scores[winner_index]) {
            winner_index = ki;
        }
    }

    // Step 2: penalty for the winner on the full data, then refit.
    let all: Vec<usize> = (0..n).collect();
    let li = pick_lambda(
        &grams[winner_index],
        y,
        &all,
        &grid.lambdas,
        n_in,
        seed,
        u64::MAX,
        task,
    )?;
    let final_lambda = grid.lambdas[li];
    let model = fit_krr(x, y, &grid.kernels[winner_index], final_lambda, task)?;
    let report = SelectionReport {
        rows,
        mean_scores,
        winner_index,
        winner: grid.kernels[winner_index].clone(),
        final_lambda,
        fold_assignments: outer,
        seed,
        task,
    };
    Ok((report, model))
}
