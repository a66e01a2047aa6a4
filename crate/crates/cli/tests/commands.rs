use std::path::{Path, PathBuf};
use std::process::Command;

use ggmsel::commands::{cmd_fit, cmd_simulate, FitArgs, InputArgs, ModelArgs, SimulateArgs};
use ggmsel::error::{EXIT_CONFIG, EXIT_DATA, EXIT_OK};
use ggmsel_core::simulate::{sample, truth_matrices, Family, TruthSpec};

fn write_ar1_csv(path: &Path, p: usize, n: usize, seed: u64) {
    let t = truth_matrices(TruthSpec::new(Family::Ar1, p).unwrap()).unwrap();
    let data = sample(&t.omega, n, seed).unwrap();
    let mut w = csv::Writer::from_path(path).unwrap();
    for r in 0..n {
        w.write_record(data.row(r).iter().map(|v| format!("{v:.17e}"))).unwrap();
    }
    w.flush().unwrap();
}

fn fit_args(input: PathBuf, out: PathBuf) -> FitArgs {
    FitArgs {
        input: InputArgs {
            input,
            ..Default::default()
        },
        model: ModelArgs {
            rho: Some(0.5),
            seed: Some(1),
            quiet: true,
            ..Default::default()
        },
        out: Some(out),
        edges: None,
        top_models: 8,
    }
}

#[test]
fn fit_recovers_the_ar1_path() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ar1.csv");
    write_ar1_csv(&csv, 3, 500, 17);
    let out = dir.path().join("fit.json");
    assert_eq!(cmd_fit(&fit_args(csv, out.clone())), EXIT_OK);
    let edges = std::fs::read_to_string(out.with_extension("edges")).unwrap();
    assert_eq!(edges, "1 2\n2 3\n");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["median_probability_model"], serde_json::json!([[1, 2], [2, 3]]));
    assert_eq!(json["config"]["rho"], 0.5);
    assert_eq!(json["config"]["search"], "exact");
    assert_eq!(json["data"]["n"], 500);
    assert!(json["edge_inclusion"]["1-2"].as_f64().unwrap() > 0.5);
    assert!(json["edge_inclusion"]["1-3"].as_f64().unwrap() < 0.5);
}

#[test]
fn fit_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ar1.csv");
    write_ar1_csv(&csv, 7, 120, 5);
    let mut outputs = Vec::new();
    for (k, threads) in [1, 1, 2].into_iter().enumerate() {
        let out = dir.path().join(format!("fit{k}.json"));
        let mut args = fit_args(csv.clone(), out.clone());
        args.model.steps = Some(1500);
        args.model.threads = threads;
        assert_eq!(cmd_fit(&args), EXIT_OK);
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert!(String::from_utf8_lossy(&outputs[0]).contains("\"stochastic\""));
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn empty_csv_exits_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    std::fs::write(&csv, "").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ggmsel"))
        .arg("fit")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&out.stderr).contains("TooFewRows"));
    assert!(out.stdout.is_empty());
}

#[test]
fn binary_writes_json_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ar1.csv");
    write_ar1_csv(&csv, 3, 200, 2);
    let out = Command::new(env!("CARGO_BIN_EXE_ggmsel"))
        .args(["fit", "--quiet", "--q", "0.3"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["config"]["q"], 0.3);
    assert_eq!(json["model_count"].as_u64().unwrap() as usize, json["top_models"].as_array().unwrap().len());
}

#[test]
fn bad_flags_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ar1.csv");
    write_ar1_csv(&csv, 3, 50, 2);
    let mut args = fit_args(csv, dir.path().join("o.json"));
    args.model.q = Some(0.8);
    assert_eq!(cmd_fit(&args), EXIT_CONFIG);
    args.model.q = None;
    args.model.rho = Some(-1.0);
    assert_eq!(cmd_fit(&args), EXIT_CONFIG);
}

fn simulate_args(family: &str, p: usize, n: usize, reps: usize, out: PathBuf) -> SimulateArgs {
    SimulateArgs {
        model: ModelArgs {
            seed: Some(3),
            steps: Some(20 * p * (p - 1) / 2),
            quiet: true,
            ..Default::default()
        },
        family: family.into(),
        p,
        n,
        reps,
        out: Some(out),
    }
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(Result::unwrap).collect()
}

#[test]
fn simulate_writes_one_row_of_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ar1.csv");
    assert_eq!(cmd_simulate(&simulate_args("ar1", 5, 200, 5, out.clone())), EXIT_OK);
    let header = csv::Reader::from_path(&out).unwrap().headers().unwrap().clone();
    assert_eq!(&header[0], "family");
    assert_eq!(&header[4], "sp_mean");
    let rows = read_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "ar1");
    for k in [4, 6, 8, 10, 12, 14] {
        let v: f64 = rows[0][k].parse().unwrap();
        let lo = if header[k].contains("mcc") { -1.0 } else { 0.0 };
        assert!((lo..=1.0).contains(&v), "{} = {v}", &header[k]);
    }
}

#[test]
fn simulate_star_has_positive_sensitivity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("star.csv");
    let mut args = simulate_args("star", 10, 200, 10, out.clone());
    // star covariances are about 0.11 in magnitude, below the default penalty
    args.model.rho = Some(0.1);
    assert_eq!(cmd_simulate(&args), EXIT_OK);
    let rows = read_rows(&out);
    let se_mean: f64 = rows[0][6].parse().unwrap();
    assert!(se_mean > 0.0, "se_mean {se_mean}");
}

#[test]
fn zero_replications_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let args = simulate_args("ar1", 5, 200, 0, dir.path().join("x.csv"));
    assert_eq!(cmd_simulate(&args), EXIT_CONFIG);
}
