//! Batch command-line interface for kernel analysis of compositional data.
//!
//! Every command reads CSV/Newick inputs, writes CSV (and SVG) artifacts
//! into `--out`, and is deterministic given its configuration and seed.
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numerical failure.

mod commands;
mod config;
mod svg;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "compkern",
    version,
    about = "Kernel regression and compositionality-aware model analysis on the simplex"
)]
struct Cli {
    /// Cap worker parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hierarchical-CV model selection over a kernel grid, then a final fit.
    Select(commands::SelectArgs),
    /// Fit one kernel ridge model.
    Fit(commands::FitArgs),
    /// Predict with a saved model.
    Predict(commands::PredictArgs),
    /// Per-feature influence of a saved model (simplex-aware).
    Cfi(commands::CfiArgs),
    /// Per-feature dependence curves of a saved model (simplex-aware).
    Cpd(commands::CpdArgs),
    /// Kernel principal-component embedding.
    Kpca(commands::KpcaArgs),
    /// Kernel-distance closeness scores against a reference point.
    Summary(commands::SummaryArgs),
    /// Kernel medoid of a dataset or labeled subset.
    Medoid(commands::MedoidArgs),
    /// Build a UniFrac weight matrix from a Newick tree.
    UnifracWeights(commands::UnifracArgs),
    /// Generate synthetic datasets.
    Simulate(commands::SimulateArgs),
    /// Compare simplex-aware and off-simplex importance measures.
    CompareImportance(commands::CompareArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
        {
            eprintln!("error: cannot configure {threads} worker threads: {e}");
            std::process::exit(2);
        }
    }
    let result = match cli.command {
        Command::Select(args) => commands::run_select(args),
        Command::Fit(args) => commands::run_fit(args),
        Command::Predict(args) => commands::run_predict(args),
        Command::Cfi(args) => commands::run_cfi(args),
        Command::Cpd(args) => commands::run_cpd(args),
        Command::Kpca(args) => commands::run_kpca(args),
        Command::Summary(args) => commands::run_summary(args),
        Command::Medoid(args) => commands::run_medoid(args),
        Command::UnifracWeights(args) => commands::run_unifrac(args),
        Command::Simulate(args) => commands::run_simulate(args),
        Command::CompareImportance(args) => commands::run_compare(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
