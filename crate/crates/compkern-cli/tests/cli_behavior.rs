//! End-to-end checks of the command-line surface: artifacts, exit codes and
//! the advertised file schemas.

use compkern::interpret::Predictor;
use compkern::rng::CounterRng;
use compkern::{simgen, Composition, LogContrast};
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_compkern")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("compkern_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(args: &[&str]) -> String {
    let out = Command::new(bin()).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_log_contrast_csv(path: &Path, n: usize, seed: u64, beta: &[f64]) -> Vec<Composition> {
    let truth = LogContrast::new(beta.to_vec()).unwrap();
    let mut rng = CounterRng::new(seed);
    let p = beta.len();
    let mut text = String::from("sample_id");
    for j in 1..=p {
        text.push_str(&format!(",f{j}"));
    }
    text.push_str(",y\n");
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..n {
        let raw: Vec<f64> = (0..p).map(|_| rng.next_normal().exp()).collect();
        let x = Composition::from_counts(&raw).unwrap();
        ys.push(truth.eval(&x).unwrap());
        rows.push(x);
    }
    // Center the response: a constant offset leaves every influence and
    // dependence value unchanged, and keeps the target inside the span of
    // the log-ratio kernel sections.
    let mean = ys.iter().sum::<f64>() / n as f64;
    for (i, (x, y)) in rows.iter().zip(&ys).enumerate() {
        text.push_str(&format!("s{i}"));
        for v in x.values() {
            text.push_str(&format!(",{v}"));
        }
        text.push_str(&format!(",{}\n", y - mean));
    }
    std::fs::write(path, text).unwrap();
    rows
}

#[test]
fn select_records_log_ratio_winner_on_log_contrast_data() {
    let dir = workdir("select");
    let data = dir.join("data.csv");
    write_log_contrast_csv(&data, 100, 42, &[2.0, -1.0, -1.0]);
    run_ok(&[
        "select",
        "--data",
        data.to_str().unwrap(),
        "--label",
        "y",
        "--task",
        "regression",
        "--seed",
        "11",
        "--families",
        "linear,aitchison",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["kernel"]["family"], "aitchison");
    let report = std::fs::read_to_string(dir.join("selection_report.csv")).unwrap();
    assert!(report.starts_with("kernel,fold,score,lambda\n"));
}

#[test]
fn missing_label_column_exits_2_naming_it() {
    let dir = workdir("missing_label");
    let data = dir.join("data.csv");
    std::fs::write(&data, "sample_id,f1,f2\ns1,1,2\ns2,2,1\n").unwrap();
    let out = Command::new(bin())
        .args([
            "select",
            "--data",
            data.to_str().unwrap(),
            "--label",
            "outcome",
            "--task",
            "regression",
            "--seed",
            "1",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("outcome"), "stderr: {stderr}");
}

#[test]
fn cfi_of_a_tight_log_contrast_fit_recovers_beta() {
    let dir = workdir("cfi");
    let data = dir.join("data.csv");
    let beta = [2.0, -1.0, -1.0];
    write_log_contrast_csv(&data, 100, 7, &beta);
    run_ok(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--label",
        "y",
        "--task",
        "regression",
        "--family",
        "aitchison",
        "--c",
        "1e-9",
        "--lambda",
        "1e-9",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let stdout = run_ok(&[
        "cfi",
        "--model",
        dir.join("model.json").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--label",
        "y",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let sum_line = stdout
        .lines()
        .find(|l| l.starts_with("cfi_sum="))
        .expect("footer line");
    let sum: f64 = sum_line.trim_start_matches("cfi_sum=").parse().unwrap();
    // A near-interpolating fit has steep higher derivatives along the
    // perturbation paths, so the central-difference residual is larger here
    // than for regular fits.
    assert!(sum.abs() < 1e-4, "influence sum {sum}");

    let text = std::fs::read_to_string(dir.join("cfi.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("feature,value"));
    // A fitted ridge model carries a small bias because the constant
    // function is not in the span of the log-ratio kernel sections at p = 3;
    // exact coefficient recovery is asserted for the closed-form oracle in
    // the acceptance suite.
    for (line, want) in lines.zip(beta) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((value - want).abs() < 5e-2, "{line} vs {want}");
    }
    assert!(dir.join("cfi.svg").exists());
}

#[test]
fn constant_model_yields_all_zero_interpretation() {
    let dir = workdir("const");
    let data = dir.join("data.csv");
    let mut text = String::from("sample_id,f1,f2,f3,y\n");
    let mut rng = CounterRng::new(3);
    for i in 0..20 {
        let x = [
            rng.next_f64() + 0.1,
            rng.next_f64() + 0.1,
            rng.next_f64() + 0.1,
        ];
        text.push_str(&format!("s{i},{},{},{},5.0\n", x[0], x[1], x[2]));
    }
    std::fs::write(&data, text).unwrap();
    run_ok(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--label",
        "y",
        "--task",
        "regression",
        "--family",
        "linear",
        "--lambda",
        "0.1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    run_ok(&[
        "cfi",
        "--model",
        dir.join("model.json").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--label",
        "y",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let cfi = std::fs::read_to_string(dir.join("cfi.csv")).unwrap();
    for line in cfi.lines().skip(1) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(value, 0.0, "{line}");
    }
    run_ok(&[
        "cpd",
        "--model",
        dir.join("model.json").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--label",
        "y",
        "--feature",
        "f2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let cpd = std::fs::read_to_string(dir.join("cpd.csv")).unwrap();
    for line in cpd.lines().skip(1) {
        let value: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(value, 0.0, "{line}");
    }
}

#[test]
fn summary_with_linear_kernel_matches_diversity_shift() {
    let dir = workdir("summary");
    let data = dir.join("data.csv");
    std::fs::write(
        &data,
        "sample_id,f1,f2,f3\ns1,1,1,1\ns2,1,0,0\ns3,2,1,1\n",
    )
    .unwrap();
    run_ok(&[
        "summary",
        "--data",
        data.to_str().unwrap(),
        "--family",
        "linear",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    let scores: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let expected = |x: &[f64]| {
        let p = x.len() as f64;
        (1.0 - x.iter().map(|v| v * v).sum::<f64>()) - (p - 1.0) / p
    };
    let rows = [
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        vec![1.0, 0.0, 0.0],
        vec![0.5, 0.25, 0.25],
    ];
    for (got, row) in scores.iter().zip(&rows) {
        assert!((got - expected(row)).abs() < 1e-12, "{got} vs {}", expected(row));
    }
}

#[test]
fn unifrac_weights_artifact_has_unit_diagonal() {
    let dir = workdir("unifrac");
    let tree = dir.join("tree.nwk");
    std::fs::write(&tree, "((A:1,B:1):1,C:2);\n").unwrap();
    let stdout = run_ok(&[
        "unifrac-weights",
        "--tree",
        tree.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(stdout.contains("leaf order: A,B,C"));
    let text = std::fs::read_to_string(dir.join("weights.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 3);
        assert!((row[i] - 1.0).abs() < 1e-12);
    }
    // Off-diagonal similarity of the cherry pair: 1 - 2/3.
    assert!((rows[0][1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn weighted_fit_round_trips_through_model_file() {
    let dir = workdir("weighted");
    let tree = dir.join("tree.nwk");
    std::fs::write(&tree, "((A:1,B:1):1,C:2);\n").unwrap();
    run_ok(&[
        "unifrac-weights",
        "--tree",
        tree.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let data = dir.join("data.csv");
    write_log_contrast_csv(&data, 30, 5, &[1.0, -1.0, 0.0]);
    run_ok(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--label",
        "y",
        "--task",
        "regression",
        "--family",
        "aitchison",
        "--weights",
        dir.join("weights.csv").to_str().unwrap(),
        "--lambda",
        "0.01",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("model.json")).unwrap()).unwrap();
    assert!(model["kernel"]["weights_path"]
        .as_str()
        .unwrap()
        .ends_with("weights.csv"));
    run_ok(&[
        "predict",
        "--model",
        dir.join("model.json").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--label",
        "y",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let pred = std::fs::read_to_string(dir.join("predictions.csv")).unwrap();
    assert_eq!(pred.lines().count(), 31);
}

#[test]
fn simulate_emits_ingestible_schema() {
    let dir = workdir("simulate");
    run_ok(&[
        "simulate",
        "--design",
        "iid-lognormal",
        "--n",
        "25",
        "--seed",
        "9",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let ds = compkern::load_counts_csv(&dir.join("data.csv"), None, None).unwrap();
    assert_eq!(ds.n(), 25);
    assert_eq!(ds.p(), 3);
    // Matches the in-process generator.
    let direct = simgen::gen_lognormal_iid(25, 9);
    for (a, b) in ds.x.iter().zip(&direct) {
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - v).abs() < 1e-15);
        }
    }
}
