//! End-to-end tests driving the compiled binary through temp directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn arkan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arkan"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        stderr(out)
    );
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", stderr(out));
}

fn synth_file(dir: &Path, name: &str, sigma: &str, seed: &str) -> PathBuf {
    let path = dir.join(name);
    let out = arkan(
        &[
            "synth",
            "--function",
            "f1",
            "--sigma",
            sigma,
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ],
        dir,
    );
    assert_ok(&out);
    path
}

// Small training budget so pipeline tests stay quick; model quality is
// covered by the library tests.
const QUICK: &str = r#"{"max_epochs": 25, "patience": 10}"#;

fn write_quick_config(dir: &Path) -> PathBuf {
    let path = dir.join("quick.json");
    fs::write(&path, QUICK).unwrap();
    path
}

#[test]
fn synth_writes_csv_and_reports_row_count() {
    let tmp = TempDir::new().unwrap();
    let out = arkan(
        &[
            "synth",
            "--function",
            "f2",
            "--sigma",
            "0.2",
            "--seed",
            "4",
            "--out",
            "series.csv",
        ],
        tmp.path(),
    );
    assert_ok(&out);
    assert!(stdout(&out).contains("500 rows"));
    let text = fs::read_to_string(tmp.path().join("series.csv")).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert_eq!(text.lines().next(), Some("t,value"));
}

#[test]
fn synth_respects_samples_and_tmax() {
    let tmp = TempDir::new().unwrap();
    let out = arkan(
        &[
            "synth",
            "--function",
            "f1",
            "--samples",
            "100",
            "--tmax",
            "6.2831853",
            "--out",
            "short.csv",
        ],
        tmp.path(),
    );
    assert_ok(&out);
    let text = fs::read_to_string(tmp.path().join("short.csv")).unwrap();
    assert_eq!(text.lines().count(), 101);
    let last = text.lines().last().unwrap();
    let t: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert!((t - 6.2831853).abs() < 1e-9);
}

#[test]
fn fit_eval_pipeline_produces_consistent_report() {
    let tmp = TempDir::new().unwrap();
    let data = synth_file(tmp.path(), "f1.csv", "0.1", "7");
    let config = write_quick_config(tmp.path());
    let fit_out = arkan(
        &[
            "fit",
            "--model",
            "ar-kan",
            "--data",
            data.to_str().unwrap(),
            "--seed",
            "3",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "model.json",
        ],
        tmp.path(),
    );
    assert_ok(&fit_out);
    assert!(stdout(&fit_out).contains("validation loss"));

    let eval_out = arkan(
        &[
            "eval",
            "--model",
            "model.json",
            "--data",
            data.to_str().unwrap(),
            "--out",
            "report.json",
            "--out-predictions",
            "preds.csv",
        ],
        tmp.path(),
    );
    assert_ok(&eval_out);
    let report: serde_json::Value = serde_json::from_str(&stdout(&eval_out)).unwrap();
    assert_eq!(report["n_test"], 100);
    assert_eq!(report["predictions"].as_array().unwrap().len(), 100);
    assert!(report["test_mse"].as_f64().unwrap().is_finite());
    let on_disk = fs::read_to_string(tmp.path().join("report.json")).unwrap();
    assert_eq!(on_disk, stdout(&eval_out));

    let preds = fs::read_to_string(tmp.path().join("preds.csv")).unwrap();
    assert_eq!(preds.lines().next(), Some("t,actual,predicted"));
    assert_eq!(preds.lines().count(), 101);
    let last_pred: f64 = preds
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(
        last_pred,
        report["predictions"].as_array().unwrap()[99].as_f64().unwrap()
    );
}

#[test]
fn repeated_fit_and_eval_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let data = synth_file(tmp.path(), "f1.csv", "0.1", "9");
    let config = write_quick_config(tmp.path());
    for name in ["a.json", "b.json"] {
        let out = arkan(
            &[
                "fit",
                "--model",
                "kan",
                "--data",
                data.to_str().unwrap(),
                "--seed",
                "11",
                "--config",
                config.to_str().unwrap(),
                "--out",
                name,
            ],
            tmp.path(),
        );
        assert_ok(&out);
    }
    let a = fs::read(tmp.path().join("a.json")).unwrap();
    let b = fs::read(tmp.path().join("b.json")).unwrap();
    assert_eq!(a, b);

    let evals: Vec<String> = (0..2)
        .map(|_| {
            let out = arkan(
                &["eval", "--model", "a.json", "--data", data.to_str().unwrap()],
                tmp.path(),
            );
            assert_ok(&out);
            stdout(&out)
        })
        .collect();
    assert_eq!(evals[0], evals[1]);
}

#[test]
fn bad_inputs_exit_two() {
    let tmp = TempDir::new().unwrap();
    let negative_sigma = arkan(
        &["synth", "--function", "f1", "--sigma", "-1", "--out", "x.csv"],
        tmp.path(),
    );
    assert_code(&negative_sigma, 2);

    let missing_data = arkan(
        &["fit", "--model", "arima", "--data", "nowhere.csv", "--out", "m.json"],
        tmp.path(),
    );
    assert_code(&missing_data, 2);
    assert!(stderr(&missing_data).contains("nowhere.csv"));

    let unknown_model = arkan(
        &["fit", "--model", "lstm", "--data", "x.csv", "--out", "m.json"],
        tmp.path(),
    );
    assert_code(&unknown_model, 2);

    let unknown_function = arkan(
        &["synth", "--function", "f3", "--out", "x.csv"],
        tmp.path(),
    );
    assert_code(&unknown_function, 2);
}

#[test]
fn corrupted_model_document_exits_two() {
    let tmp = TempDir::new().unwrap();
    let data = synth_file(tmp.path(), "f1.csv", "0.1", "2");
    fs::write(tmp.path().join("broken.json"), "{\"format_version\": 1").unwrap();
    let out = arkan(
        &["eval", "--model", "broken.json", "--data", data.to_str().unwrap()],
        tmp.path(),
    );
    assert_code(&out, 2);
}

#[test]
fn config_with_unknown_key_exits_two() {
    let tmp = TempDir::new().unwrap();
    let data = synth_file(tmp.path(), "f1.csv", "0.1", "2");
    let config = tmp.path().join("typo.json");
    fs::write(&config, r#"{"max_epoch": 25}"#).unwrap();
    let out = arkan(
        &[
            "fit",
            "--model",
            "mlp",
            "--data",
            data.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--out",
            "m.json",
        ],
        tmp.path(),
    );
    assert_code(&out, 2);
    assert!(stderr(&out).contains("typo.json"));
}

#[test]
fn per_variant_config_override_is_accepted() {
    let tmp = TempDir::new().unwrap();
    let data = synth_file(tmp.path(), "f1.csv", "0.1", "5");
    let config = tmp.path().join("layered.json");
    fs::write(
        &config,
        r#"{"max_epochs": 25, "patience": 10, "kan": {"max_epochs": 5}}"#,
    )
    .unwrap();
    let out = arkan(
        &[
            "fit",
            "--model",
            "kan",
            "--data",
            data.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--out",
            "m.json",
        ],
        tmp.path(),
    );
    assert_ok(&out);
}

fn strip_train_seconds(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            let mut kept = fields.clone();
            if fields.len() == 7 {
                kept.remove(5);
            }
            kept.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn bench_grid_writes_csv_and_pivot() {
    let tmp = TempDir::new().unwrap();
    let config = write_quick_config(tmp.path());
    let run = |csv: &str| {
        arkan(
            &[
                "bench",
                "--functions",
                "f1",
                "--sigmas",
                "0.2",
                "--models",
                "arima,kan",
                "--seeds",
                "1,2",
                "--p",
                "6",
                "--config",
                config.to_str().unwrap(),
                "--out-csv",
                csv,
                "--out-md",
                "pivot.md",
            ],
            tmp.path(),
        )
    };
    let out = run("grid.csv");
    assert_ok(&out);
    let table = stdout(&out);
    assert!(table.starts_with("| dataset | sigma | arima | kan |"));
    assert_eq!(
        table,
        fs::read_to_string(tmp.path().join("pivot.md")).unwrap()
    );

    let csv = fs::read_to_string(tmp.path().join("grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("dataset,sigma,model,seed,test_mse,train_seconds,status")
    );
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",ok")));

    let rerun = run("grid2.csv");
    assert_ok(&rerun);
    let csv2 = fs::read_to_string(tmp.path().join("grid2.csv")).unwrap();
    assert_eq!(strip_train_seconds(&csv), strip_train_seconds(&csv2));
}

#[test]
fn bench_accepts_csv_datasets() {
    let tmp = TempDir::new().unwrap();
    let data = synth_file(tmp.path(), "mydata.csv", "0.3", "8");
    let config = write_quick_config(tmp.path());
    let out = arkan(
        &[
            "bench",
            "--data",
            data.to_str().unwrap(),
            "--models",
            "ar-kan,arima",
            "--seeds",
            "1",
            "--p",
            "8",
            "--config",
            config.to_str().unwrap(),
            "--out-csv",
            "grid.csv",
        ],
        tmp.path(),
    );
    assert_ok(&out);
    let csv = fs::read_to_string(tmp.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("mydata,,ar-kan,1,"));
}

#[test]
fn bench_with_failing_cells_exits_one() {
    let tmp = TempDir::new().unwrap();
    let out = arkan(
        &[
            "bench",
            "--functions",
            "f1",
            "--sigmas",
            "0.2",
            "--models",
            "arima",
            "--seeds",
            "1",
            "--p",
            "400",
            "--out-csv",
            "grid.csv",
        ],
        tmp.path(),
    );
    assert_code(&out, 1);
    let csv = fs::read_to_string(tmp.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(!csv.lines().nth(1).unwrap().ends_with(",ok"));
}

fn write_sin12(path: &Path, n: usize) {
    let mut text = String::from("t,value\n");
    for i in 0..n {
        let v = (2.0 * std::f64::consts::PI * i as f64 / 12.0).sin();
        text.push_str(&format!("{},{}\n", i, v));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn periodicity_single_file_reports_the_period() {
    let tmp = TempDir::new().unwrap();
    write_sin12(&tmp.path().join("seasonal.csv"), 240);
    let out = arkan(&["periodicity", "seasonal.csv"], tmp.path());
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["period"], 12);
    assert!(report["strength"].as_f64().unwrap() >= 0.9);
}

#[test]
fn periodicity_directory_sorts_by_strength() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("batch");
    fs::create_dir(&dir).unwrap();
    write_sin12(&dir.join("seasonal.csv"), 240);
    let trend: String = std::iter::once("t,value".to_string())
        .chain((0..240).map(|i| format!("{},{}", i, 0.05 * i as f64)))
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(dir.join("trending.csv"), trend).unwrap();
    fs::write(dir.join("broken.csv"), "t,value\n0,not_a_number\n").unwrap();
    fs::write(dir.join("notes.txt"), "ignored").unwrap();

    let out = arkan(&["periodicity", "batch"], tmp.path());
    assert_ok(&out);
    let entries: Vec<serde_json::Value> = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(entries.len(), 3);
    assert!(entries[0]["file"].as_str().unwrap().ends_with("seasonal.csv"));
    assert!(entries[0]["strength"].as_f64().unwrap() >= 0.9);
    assert!(
        entries[0]["strength"].as_f64().unwrap() > entries[1]["strength"].as_f64().unwrap()
    );
    let broken = entries
        .iter()
        .find(|e| e["file"].as_str().unwrap().ends_with("broken.csv"))
        .unwrap();
    assert!(broken["error"].is_string());
}

#[test]
fn periodicity_empty_directory_prints_empty_table() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("empty");
    fs::create_dir(&dir).unwrap();
    let out = arkan(&["periodicity", "empty"], tmp.path());
    assert_ok(&out);
    assert_eq!(stdout(&out).trim(), "[]");
}

#[test]
fn jobs_flag_is_accepted() {
    let tmp = TempDir::new().unwrap();
    let out = arkan(
        &[
            "--jobs",
            "1",
            "synth",
            "--function",
            "f1",
            "--out",
            "s.csv",
        ],
        tmp.path(),
    );
    assert_ok(&out);
}
