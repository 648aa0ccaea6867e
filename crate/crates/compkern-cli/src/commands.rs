//! Subcommand implementations.

use crate::config::FileConfig;
use crate::svg;
use clap::Args;
use compkern::datio::{self, CountsTable, Dataset};
use compkern::interpret;
use compkern::kernels::KernelRecord;
use compkern::learn::{self, MedianSpace};
use compkern::simgen;
use compkern::weighting::{self, UnifracVariant};
use compkern::{Composition, Error as LibError, FittedModel, KernelSpec, Task};
use std::fmt;
use std::path::{Path, PathBuf};

/// CLI failure: either a usage/config problem (exit 2) or a library error
/// (exit 3 for data problems, 4 for numerical ones).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(LibError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Lib(err) => write!(f, "{err}"),
        }
    }
}

impl From<LibError> for CliError {
    fn from(err: LibError) -> Self {
        CliError::Lib(err)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(err) => match err {
                LibError::ParseError { .. }
                | LibError::NonBinaryLabels(_)
                | LibError::ZeroSumRow(_)
                | LibError::AllFeaturesFiltered { .. }
                | LibError::Io(_)
                | LibError::Csv(_)
                | LibError::Serde(_)
                | LibError::NewickParse { .. }
                | LibError::DuplicateLeafName(_)
                | LibError::UnknownLeaf(_)
                | LibError::InvalidComposition(_)
                | LibError::DimensionMismatch(_, _)
                | LibError::SingleClassFold { .. } => 3,
                LibError::MissingColumn(_)
                | LibError::InvalidParameters(_)
                | LibError::InvalidPartition(_)
                | LibError::FoldTooSmall(_) => 2,
                _ => 4,
            },
        }
    }
}

type CliResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ---------------------------------------------------------------------------
// shared argument blocks
// ---------------------------------------------------------------------------

/// Dataset input options.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Counts CSV: header row, first column sample id, numeric cells.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the label column.
    #[arg(long)]
    pub label: Option<String>,
    /// Prediction task: regression | classification.
    #[arg(long)]
    pub task: Option<String>,
    /// Input stores taxa as rows and samples as columns.
    #[arg(long)]
    pub transpose: bool,
    /// Apply the prevalence/abundance filter before normalizing.
    #[arg(long)]
    pub filter: bool,
    /// Fraction of samples a feature must be present in (with --filter).
    #[arg(long)]
    pub prevalence: Option<f64>,
    /// Minimum median non-zero count (with --filter).
    #[arg(long)]
    pub min_median: Option<f64>,
}

fn parse_task(name: &str) -> Result<Task, CliError> {
    match name {
        "regression" => Ok(Task::Regression),
        "classification" => Ok(Task::Classification),
        other => Err(usage(format!(
            "unknown task {other:?}: expected regression or classification"
        ))),
    }
}

fn load_data(args: &DataArgs, cfg: &FileConfig, need_label: bool) -> Result<Dataset, CliError> {
    let path = cfg
        .string("data", args.data.clone().map(|p| p.display().to_string()))
        .ok_or_else(|| usage("missing --data"))?;
    let label = cfg.string("label", args.label.clone());
    let task_name = cfg.string("task", args.task.clone());
    let transpose = cfg.flag("transpose", args.transpose).map_err(usage)?;
    let filter = cfg.flag("filter", args.filter).map_err(usage)?;
    let prevalence = cfg
        .f64("prevalence", args.prevalence)
        .map_err(usage)?
        .unwrap_or(0.25);
    let min_median = cfg
        .f64("min_median", args.min_median)
        .map_err(usage)?
        .unwrap_or(5.0);

    if need_label && label.is_none() {
        return Err(usage("missing --label (a label column is required)"));
    }
    let task = match (&label, task_name) {
        (None, _) => None,
        (Some(_), Some(name)) => Some(parse_task(&name)?),
        (Some(_), None) => Some(Task::Regression),
    };

    let mut table: CountsTable =
        datio::read_counts_table(Path::new(&path), label.as_deref(), transpose)?;
    if filter {
        let (filtered, report) = datio::prevalence_abundance_filter(&table, prevalence, min_median)?;
        eprintln!(
            "filter kept {} of {} features",
            report.kept.len(),
            report.kept.len() + report.dropped.len()
        );
        table = filtered;
    }
    Ok(table.into_dataset(task)?)
}

/// Explicit kernel selection; data-dependent defaults fill missing
/// bandwidth/shift parameters.
#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    /// linear | rbf | generalized-js | hilbertian | aitchison | aitchison-rbf | heat-diffusion
    #[arg(long)]
    pub family: Option<String>,
    /// First shape parameter (generalized-js, hilbertian); accepts "inf".
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Second shape parameter; accepts "inf"/"-inf".
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Squared bandwidth (rbf, aitchison-rbf).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Zero shift (aitchison, aitchison-rbf).
    #[arg(long)]
    pub c: Option<f64>,
    /// Heat-diffusion bandwidth.
    #[arg(long)]
    pub t: Option<f64>,
    /// Weight-matrix CSV (headerless p x p).
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

fn resolve_kernel(
    args: &KernelArgs,
    cfg: &FileConfig,
    x: &[Composition],
) -> Result<KernelSpec, CliError> {
    let family = cfg
        .string("family", args.family.clone())
        .ok_or_else(|| usage("missing --family (or --model)"))?;
    let mut rec = KernelRecord {
        family,
        a: cfg.f64("a", args.a).map_err(usage)?,
        b: cfg.f64("b", args.b).map_err(usage)?,
        sigma2: cfg.f64("sigma2", args.sigma2).map_err(usage)?,
        c: cfg.f64("c", args.c).map_err(usage)?,
        t: cfg.f64("t", args.t).map_err(usage)?,
        weights_path: cfg.string(
            "weights",
            args.weights.clone().map(|p| p.display().to_string()),
        ),
    };
    // Data-driven defaults: median-heuristic bandwidths, half the smallest
    // non-zero abundance as zero shift.
    let needs_c = matches!(rec.family.as_str(), "aitchison" | "aitchison-rbf");
    if needs_c && rec.c.is_none() {
        let mu = x
            .iter()
            .flat_map(|comp| comp.values().iter().copied())
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        rec.c = Some(mu / 2.0);
    }
    if rec.family == "rbf" && rec.sigma2.is_none() {
        rec.sigma2 = Some(learn::median_heuristic(x, MedianSpace::Raw)?);
    }
    if rec.family == "aitchison-rbf" && rec.sigma2.is_none() {
        let c = rec.c.expect("filled above");
        let m2 = learn::median_heuristic(x, MedianSpace::Clr(c))?;
        rec.sigma2 = Some(c * m2);
    }
    if rec.family == "heat-diffusion" && rec.t.is_none() {
        return Err(usage("heat-diffusion requires --t"));
    }
    if let Some(ref w) = rec.weights_path {
        // Store an absolute path so the serialized model stays loadable from
        // its output directory.
        if let Ok(abs) = std::fs::canonicalize(w) {
            rec.weights_path = Some(abs.display().to_string());
        }
    }
    Ok(KernelSpec::from_record(&rec, None)?)
}

fn out_dir(cfg: &FileConfig, cli: Option<&PathBuf>) -> Result<PathBuf, CliError> {
    let dir = cfg
        .string("out", cli.map(|p| p.display().to_string()))
        .unwrap_or_else(|| ".".to_string());
    let path = PathBuf::from(dir);
    std::fs::create_dir_all(&path).map_err(LibError::Io)?;
    Ok(path)
}

fn write_text(path: &Path, content: &str) -> CliResult {
    std::fs::write(path, content).map_err(LibError::Io)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn require_labels(ds: &Dataset) -> Result<&Vec<f64>, CliError> {
    ds.y.as_ref()
        .ok_or_else(|| usage("this command needs a labeled dataset (--label)"))
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Flat JSON config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// RNG seed (required).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Outer fold count.
    #[arg(long)]
    pub n_out: Option<usize>,
    /// Inner fold count.
    #[arg(long)]
    pub n_in: Option<usize>,
    /// Restrict the default grid to these families (comma separated).
    #[arg(long)]
    pub families: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_select(args: SelectArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let seed = cfg
        .u64("seed", args.seed)
        .map_err(usage)?
        .ok_or_else(|| usage("missing --seed (selection must be reproducible)"))?;
    let n_out = cfg.usize("n_out", args.n_out).map_err(usage)?.unwrap_or(10);
    let n_in = cfg.usize("n_in", args.n_in).map_err(usage)?.unwrap_or(5);
    let out = out_dir(&cfg, args.out.as_ref())?;
    let ds = load_data(&args.data, &cfg, true)?;
    let y = require_labels(&ds)?;
    let task = ds.task.unwrap_or(Task::Regression);

    let mut grid = learn::default_grid(&ds.x)?;
    if let Some(families) = cfg.string("families", args.families.clone()) {
        let wanted: Vec<&str> = families.split(',').map(str::trim).collect();
        grid.kernels.retain(|k| wanted.contains(&k.family().name()));
        if grid.kernels.is_empty() {
            return Err(usage(format!("no grid kernels match families {families:?}")));
        }
    }
    let (report, mut model) = learn::select_model(&ds.x, y, &grid, n_out, n_in, seed, task)?;
    model.set_label_names(ds.label_names.clone());

    write_text(&out.join("selection_report.csv"), &report.to_csv_string())?;
    model.save(&out.join("model.json"))?;
    println!("wrote {}", out.join("model.json").display());
    println!(
        "winner: {} (mean outer score {}, lambda {})",
        report.winner.describe(),
        report.mean_scores[report.winner_index],
        report.final_lambda
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit / predict
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ridge penalty; picked by inner CV when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Seed for the penalty CV when --lambda is omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Inner fold count for the penalty CV.
    #[arg(long)]
    pub n_in: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_fit(args: FitArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let ds = load_data(&args.data, &cfg, true)?;
    let y = require_labels(&ds)?;
    let task = ds.task.unwrap_or(Task::Regression);
    let spec = resolve_kernel(&args.kernel, &cfg, &ds.x)?;
    let lambda = match cfg.f64("lambda", args.lambda).map_err(usage)? {
        Some(l) => l,
        None => {
            let seed = cfg.u64("seed", args.seed).map_err(usage)?.unwrap_or(0);
            let n_in = cfg.usize("n_in", args.n_in).map_err(usage)?.unwrap_or(5);
            let grid = learn::ParamGrid::new(vec![spec.clone()], learn::default_lambda_grid());
            let (report, _) = learn::select_model(&ds.x, y, &grid, n_in.max(2), n_in, seed, task)?;
            report.final_lambda
        }
    };
    let mut model = learn::fit_krr(&ds.x, y, &spec, lambda, task)?;
    model.set_label_names(ds.label_names.clone());
    model.save(&out.join("model.json"))?;
    println!("wrote {}", out.join("model.json").display());
    println!("kernel: {} lambda: {lambda}", spec.describe());
    Ok(())
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Saved model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_model(cfg: &FileConfig, cli: Option<&PathBuf>) -> Result<FittedModel, CliError> {
    let path = cfg
        .string("model", cli.map(|p| p.display().to_string()))
        .ok_or_else(|| usage("missing --model"))?;
    Ok(FittedModel::load(Path::new(&path))?)
}

pub fn run_predict(args: PredictArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let model = load_model(&cfg, args.model.as_ref())?;
    let ds = load_data(&args.data, &cfg, false)?;
    let decisions = model.predict(&ds.x)?;
    let mut text = String::from("sample_id,decision");
    let classify = model.task() == Task::Classification;
    if classify {
        text.push_str(",class");
    }
    text.push('\n');
    for (i, d) in decisions.iter().enumerate() {
        text.push_str(&csv_escape(&ds.sample_ids[i]));
        text.push_str(&format!(",{d}"));
        if classify {
            let sign = if *d < 0.0 { -1.0 } else { 1.0 };
            let label = match model.label_names() {
                Some((neg, pos)) => {
                    if sign < 0.0 {
                        neg.clone()
                    } else {
                        pos.clone()
                    }
                }
                None => format!("{sign}"),
            };
            text.push_str(&format!(",{}", csv_escape(&label)));
        }
        text.push('\n');
    }
    write_text(&out.join("predictions.csv"), &text)
}

// ---------------------------------------------------------------------------
// cfi / cpd
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct CfiArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Central-difference step.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_cfi(args: CfiArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let model = load_model(&cfg, args.model.as_ref())?;
    let ds = load_data(&args.data, &cfg, false)?;
    let step = cfg
        .f64("step", args.step)
        .map_err(usage)?
        .unwrap_or(interpret::DEFAULT_CFI_STEP);
    let result = interpret::cfi(&model, &ds.x, step)?;
    let mut text = String::from("feature,value\n");
    for (name, value) in ds.feature_names.iter().zip(&result.values) {
        text.push_str(&format!("{},{}\n", csv_escape(name), value));
    }
    write_text(&out.join("cfi.csv"), &text)?;
    let chart = svg::bar_chart("compositional feature influence", &ds.feature_names, &result.values);
    write_text(&out.join("cfi.svg"), &chart)?;
    let skipped: usize = result.skipped.iter().sum();
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} degenerate sample/coordinate pairs");
    }
    println!("cfi_sum={}", result.sum());
    Ok(())
}

#[derive(Args, Debug)]
pub struct CpdArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Restrict to one feature (by name).
    #[arg(long)]
    pub feature: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_cpd(args: CpdArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let model = load_model(&cfg, args.model.as_ref())?;
    let ds = load_data(&args.data, &cfg, false)?;
    let grid = interpret::default_cpd_grid();
    let coords: Vec<usize> = match cfg.string("feature", args.feature.clone()) {
        None => (0..ds.p()).collect(),
        Some(name) => vec![ds
            .feature_names
            .iter()
            .position(|f| *f == name)
            .ok_or_else(|| CliError::Lib(LibError::MissingColumn(name.clone())))?],
    };
    let mut text = String::from("feature,z,value\n");
    for &j in &coords {
        let curve = interpret::cpd(&model, &ds.x, j, &grid)?;
        for (z, v) in curve.grid.iter().zip(&curve.values) {
            text.push_str(&format!("{},{z},{v}\n", csv_escape(&ds.feature_names[j])));
        }
    }
    write_text(&out.join("cpd.csv"), &text)
}

// ---------------------------------------------------------------------------
// kpca / summary / medoid
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct KpcaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Take the kernel from a saved model instead of kernel flags.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of components.
    #[arg(long)]
    pub components: Option<usize>,
    /// Skip double centering of the Gram matrix.
    #[arg(long)]
    pub no_center: bool,
    /// Also write per-feature contributions for this perturbation scale.
    #[arg(long)]
    pub contrib_scale: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn kernel_from_model_or_flags(
    cfg: &FileConfig,
    model: Option<&PathBuf>,
    kernel: &KernelArgs,
    x: &[Composition],
) -> Result<KernelSpec, CliError> {
    match cfg.string("model", model.map(|p| p.display().to_string())) {
        Some(path) => Ok(FittedModel::load(Path::new(&path))?.spec().clone()),
        None => resolve_kernel(kernel, cfg, x),
    }
}

pub fn run_kpca(args: KpcaArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let ds = load_data(&args.data, &cfg, false)?;
    let spec = kernel_from_model_or_flags(&cfg, args.model.as_ref(), &args.kernel, &ds.x)?;
    let l = cfg
        .usize("components", args.components)
        .map_err(usage)?
        .unwrap_or(2)
        .min(ds.n());
    let center = !cfg.flag("no_center", args.no_center).map_err(usage)?;
    let model = compkern::kpca_fit(&ds.x, &spec, l, center)?;
    if model.components() < model.requested_components() {
        eprintln!(
            "note: spectrum supports {} of {} requested components",
            model.components(),
            model.requested_components()
        );
    }
    let z = model.train_embedding();
    let mut text = String::from("sample_id");
    for r in 0..model.components() {
        text.push_str(&format!(",pc{}", r + 1));
    }
    text.push('\n');
    for i in 0..ds.n() {
        text.push_str(&csv_escape(&ds.sample_ids[i]));
        for r in 0..model.components() {
            text.push_str(&format!(",{}", z[(i, r)]));
        }
        text.push('\n');
    }
    write_text(&out.join("embedding.csv"), &text)?;

    if model.components() >= 2 {
        let points: Vec<(f64, f64)> = (0..ds.n()).map(|i| (z[(i, 0)], z[(i, 1)])).collect();
        let classes: Option<Vec<String>> = ds.y.as_ref().map(|y| {
            y.iter()
                .map(|&v| match (&ds.label_names, ds.task) {
                    (Some((neg, pos)), Some(Task::Classification)) => {
                        if v < 0.0 {
                            neg.clone()
                        } else {
                            pos.clone()
                        }
                    }
                    _ => format!("{v}"),
                })
                .collect()
        });
        let plot = svg::scatter(
            &format!("kernel PCA ({})", spec.describe()),
            "pc1",
            "pc2",
            &points,
            classes.as_deref(),
        );
        write_text(&out.join("kpca.svg"), &plot)?;
    }

    if let Some(scale) = cfg.f64("contrib_scale", args.contrib_scale).map_err(usage)? {
        let projector = model.projector();
        let mut text = String::from("feature,component,value\n");
        for r in 0..model.components() {
            let contrib = interpret::pc_contribution(&projector, &ds.x, r, scale)?;
            for (name, v) in ds.feature_names.iter().zip(&contrib) {
                text.push_str(&format!("{},{},{v}\n", csv_escape(name), r + 1));
            }
        }
        write_text(&out.join("pc_contributions.csv"), &text)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SummaryArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Reference point: uniform | medoid.
    #[arg(long)]
    pub reference: Option<String>,
    /// With --reference medoid: restrict the medoid to samples with this
    /// label value.
    #[arg(long)]
    pub subset_label: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn subset_by_label(ds: &Dataset, value: Option<&str>) -> Result<Vec<usize>, CliError> {
    match value {
        None => Ok((0..ds.n()).collect()),
        Some(raw) => {
            let y = require_labels(ds)?;
            let indices: Vec<usize> = match (&ds.label_names, ds.task) {
                (Some((neg, pos)), Some(Task::Classification)) => {
                    let target = if raw == neg.as_str() {
                        -1.0
                    } else if raw == pos.as_str() {
                        1.0
                    } else {
                        return Err(usage(format!(
                            "label value {raw:?} not found (labels: {neg:?}, {pos:?})"
                        )));
                    };
                    (0..ds.n()).filter(|&i| y[i] == target).collect()
                }
                _ => {
                    let target: f64 = raw
                        .parse()
                        .map_err(|_| usage(format!("invalid numeric label value {raw:?}")))?;
                    (0..ds.n()).filter(|&i| y[i] == target).collect()
                }
            };
            Ok(indices)
        }
    }
}

pub fn run_summary(args: SummaryArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let ds = load_data(&args.data, &cfg, false)?;
    let spec = kernel_from_model_or_flags(&cfg, args.model.as_ref(), &args.kernel, &ds.x)?;
    let reference = cfg
        .string("reference", args.reference.clone())
        .unwrap_or_else(|| "uniform".to_string());
    let u = match reference.as_str() {
        "uniform" => Composition::uniform(ds.p()),
        "medoid" => {
            let subset = subset_by_label(
                &ds,
                cfg.string("subset_label", args.subset_label.clone()).as_deref(),
            )?;
            let idx = compkern::kernel_medoid(&ds.x, &spec, &subset)?;
            println!("medoid reference: {} (index {idx})", ds.sample_ids[idx]);
            ds.x[idx].clone()
        }
        other => return Err(usage(format!("unknown reference {other:?}"))),
    };
    let stat = compkern::summary_stat(&ds.x, &spec, &u)?;
    let mut text = String::from("sample_id,score\n");
    for (id, v) in ds.sample_ids.iter().zip(&stat.values) {
        text.push_str(&format!("{},{v}\n", csv_escape(id)));
    }
    write_text(&out.join("summary.csv"), &text)
}

#[derive(Args, Debug)]
pub struct MedoidArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Restrict to samples with this label value.
    #[arg(long)]
    pub subset_label: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_medoid(args: MedoidArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let ds = load_data(&args.data, &cfg, false)?;
    let spec = kernel_from_model_or_flags(&cfg, args.model.as_ref(), &args.kernel, &ds.x)?;
    let subset = subset_by_label(
        &ds,
        cfg.string("subset_label", args.subset_label.clone()).as_deref(),
    )?;
    let idx = compkern::kernel_medoid(&ds.x, &spec, &subset)?;
    let text = format!("index,sample_id\n{},{}\n", idx, csv_escape(&ds.sample_ids[idx]));
    write_text(&out.join("medoid.csv"), &text)?;
    println!("medoid: {} (index {idx})", ds.sample_ids[idx]);
    Ok(())
}

// ---------------------------------------------------------------------------
// unifrac-weights
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct UnifracArgs {
    /// Newick tree file.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Similarity variant: a | b.
    #[arg(long)]
    pub variant: Option<String>,
    /// Fall back to variant b when variant a fails the PSD check.
    #[arg(long)]
    pub fallback_b: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_unifrac(args: UnifracArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let tree_path = cfg
        .string("tree", args.tree.clone().map(|p| p.display().to_string()))
        .ok_or_else(|| usage("missing --tree"))?;
    let text = std::fs::read_to_string(&tree_path).map_err(LibError::Io)?;
    let tree = weighting::parse_newick(&text)?;
    let variant = match cfg
        .string("variant", args.variant.clone())
        .unwrap_or_else(|| "a".to_string())
        .as_str()
    {
        "a" | "A" => UnifracVariant::A,
        "b" | "B" => UnifracVariant::B,
        other => return Err(usage(format!("unknown variant {other:?}: expected a or b"))),
    };
    let fallback = cfg.flag("fallback_b", args.fallback_b).map_err(usage)?;
    let mut weights = match weighting::unifrac_weights(&tree, variant) {
        Ok(w) => w,
        Err(LibError::NotPsd { min_eig }) if fallback && variant == UnifracVariant::A => {
            eprintln!("variant a failed the PSD check (min eigenvalue {min_eig:.3e}); using variant b");
            weighting::unifrac_weights(&tree, UnifracVariant::B)?
        }
        Err(e) => return Err(e.into()),
    };
    weights.to_csv(&out.join("weights.csv"))?;
    println!("wrote {}", out.join("weights.csv").display());
    println!("leaf order: {}", tree.leaf_names().join(","));
    println!("min eigenvalue: {}", weights.min_eig());
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate / compare-importance
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Design: blocktv | iid-lognormal.
    #[arg(long)]
    pub design: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sample count.
    #[arg(long)]
    pub n: Option<usize>,
    /// RNG seed (required).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Response noise standard deviation (blocktv only).
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_simulate(args: SimulateArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let design = cfg
        .string("design", args.design.clone())
        .ok_or_else(|| usage("missing --design"))?;
    let n = cfg.usize("n", args.n).map_err(usage)?.unwrap_or(100);
    let seed = cfg
        .u64("seed", args.seed)
        .map_err(usage)?
        .ok_or_else(|| usage("missing --seed (simulation must be reproducible)"))?;
    let noise_sd = cfg.f64("noise_sd", args.noise_sd).map_err(usage)?.unwrap_or(1.0);
    let ds = match design.as_str() {
        "blocktv" => {
            let (x, y) = simgen::gen_block_lognormal(n, seed, noise_sd);
            Dataset {
                feature_names: (1..=9).map(|j| format!("f{j}")).collect(),
                sample_ids: (1..=n).map(|i| format!("s{i}")).collect(),
                x,
                y: Some(y),
                task: Some(Task::Regression),
                label_names: None,
            }
        }
        "iid-lognormal" => {
            let x = simgen::gen_lognormal_iid(n, seed);
            Dataset {
                feature_names: (1..=3).map(|j| format!("f{j}")).collect(),
                sample_ids: (1..=n).map(|i| format!("s{i}")).collect(),
                x,
                y: None,
                task: None,
                label_names: None,
            }
        }
        other => {
            return Err(usage(format!(
                "unknown design {other:?}: expected blocktv or iid-lognormal"
            )))
        }
    };
    let path = out.join("data.csv");
    ds.save_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_compare(args: CompareArgs) -> CliResult {
    let cfg = FileConfig::load(args.config.as_deref()).map_err(usage)?;
    let out = out_dir(&cfg, args.out.as_ref())?;
    let n = cfg.usize("n", args.n).map_err(usage)?.unwrap_or(100);
    let seed = cfg.u64("seed", args.seed).map_err(usage)?.unwrap_or(1);
    let report = simgen::compare_cfi_pi_pdp(n, seed)?;
    let mut text = String::from("function,measure,feature,value\n");
    for (name, m) in [("f1", &report.f1), ("f2", &report.f2)] {
        for (measure, values) in [("cfi", &m.cfi), ("ri", &m.ri), ("pi", &m.pi)] {
            for (j, v) in values.iter().enumerate() {
                text.push_str(&format!("{name},{measure},x{},{v}\n", j + 1));
            }
        }
    }
    write_text(&out.join("importance.csv"), &text)?;

    // Dependence-curve foils: simplex-aware curve vs raw partial dependence.
    let x = simgen::gen_lognormal_iid(n, seed);
    let grid = interpret::default_cpd_grid();
    let mut curves = String::from("function,curve,feature,z,value\n");
    for (name, idx) in [("f1", 1usize), ("f2", 2usize)] {
        let f = simgen::benchmark_function(idx).expect("known index");
        for j in 0..3 {
            let cpd = interpret::cpd(
                &interpret::FnPredictor(move |c: &Composition| f(c.values())),
                &x,
                j,
                &grid,
            )?;
            for (z, v) in cpd.grid.iter().zip(&cpd.values) {
                curves.push_str(&format!("{name},cpd,x{},{z},{v}\n", j + 1));
            }
            let pdp = simgen::pdp_curve(f, &x, j, &grid);
            for (z, v) in grid.iter().zip(&pdp) {
                curves.push_str(&format!("{name},pdp,x{},{z},{v}\n", j + 1));
            }
        }
    }
    write_text(&out.join("importance_curves.csv"), &curves)?;
    println!(
        "expected pattern {}",
        if report.pattern_holds() { "holds" } else { "VIOLATED" }
    );
    Ok(())
}
