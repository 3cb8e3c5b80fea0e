//! Repository acceptance checks. Each test prints a single verdict line;
//! run with `--show-output` to see them alongside the pass/fail status.
//! Criteria 1 and 2 share one full benchmark grid at default training
//! budget, so this target takes several minutes.

use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::LazyLock;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

use arkan_core::armemory::{
    autocorrelation, fit_ar, levinson_durbin, memory_objective, solve_dense,
    yule_walker_residual,
};
use arkan_core::analysis::periodicity_strength;
use arkan_core::bench::{run_grid, BenchReport, BenchSpec, DatasetSource};
use arkan_core::kan::{kan_backward, kan_forward, KanNetwork, SplineGrid};
use arkan_core::models::{evaluate, fit_model, ArimaModel, ModelKind, DEFAULT_P};
use arkan_core::nn::{mlp_backward, mlp_forward, MlpNetwork, TrainConfig};
use arkan_core::series::split;
use arkan_core::synth::{generate, SynthFunction, SynthSpec};
use arkan_core::{Threading, TimeSeries};

fn verdict(number: u32, name: &str, ok: bool, details: &str) {
    println!(
        "acceptance {number:02} {}: {name} ({details})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {number:02} {name}: {details}");
}

fn normal_vec(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn standardized(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    values.iter().map(|v| (v - mean) / std).collect()
}

/// The Table-I-shaped run: both synthetic functions, the four noise
/// levels, all five models, five seeds, default budget.
static GRID: LazyLock<(BenchReport, f64)> = LazyLock::new(|| {
    let spec = BenchSpec::new(
        vec![
            DatasetSource::Synthetic(SynthFunction::F1),
            DatasetSource::Synthetic(SynthFunction::F2),
        ],
        vec![0.1, 0.2, 0.3, 0.4],
        ModelKind::ALL.to_vec(),
        vec![1, 2, 3, 4, 5],
    );
    let started = Instant::now();
    let report = run_grid(&spec, Threading::default()).expect("grid runs");
    (report, started.elapsed().as_secs_f64())
});

fn grid_median(dataset: &str, sigma: f64, model: ModelKind) -> f64 {
    let (report, _) = &*GRID;
    let columns = report.model_columns();
    let col = columns.iter().position(|m| *m == model).expect("model ran");
    report
        .pivot()
        .iter()
        .find(|row| row.dataset == dataset && row.sigma == Some(sigma))
        .and_then(|row| row.medians[col])
        .unwrap_or(f64::INFINITY)
}

#[test]
fn c01_model_ordering_on_the_synthetic_grid() {
    let (_, elapsed) = &*GRID;
    let mut ar_kan_beats_plain = 0;
    let mut arima_beats_plain = 0;
    let mut ar_kan_beats_ar_mlp = 0;
    let mut cells = 0;
    for dataset in ["f1", "f2"] {
        for sigma in [0.1, 0.2, 0.3, 0.4] {
            let m = |model| grid_median(dataset, sigma, model);
            cells += 1;
            let plain = [m(ModelKind::Kan), m(ModelKind::Mlp)];
            if plain.iter().all(|p| m(ModelKind::ArKan) < *p) {
                ar_kan_beats_plain += 1;
            }
            if plain.iter().all(|p| m(ModelKind::Arima) < *p) {
                arima_beats_plain += 1;
            }
            if m(ModelKind::ArKan) < m(ModelKind::ArMlp) {
                ar_kan_beats_ar_mlp += 1;
            }
        }
    }
    let ok = cells == 8
        && ar_kan_beats_plain >= 7
        && arima_beats_plain >= 7
        && ar_kan_beats_ar_mlp >= 6
        && *elapsed < 1800.0;
    verdict(
        1,
        "model ordering on the synthetic grid",
        ok,
        &format!(
            "ar-kan beats plain {ar_kan_beats_plain}/8, arima beats plain {arima_beats_plain}/8, \
             ar-kan beats ar-mlp {ar_kan_beats_ar_mlp}/8, grid took {elapsed:.0}s"
        ),
    );
}

#[test]
fn c02_error_magnitude_bands() {
    let f1_low_noise = grid_median("f1", 0.1, ModelKind::ArKan);
    let f2_high_noise = grid_median("f2", 0.4, ModelKind::ArKan);
    let ok = (0.01..=0.08).contains(&f1_low_noise) && (0.15..=0.55).contains(&f2_high_noise);
    verdict(
        2,
        "error magnitude bands",
        ok,
        &format!(
            "f1 sigma 0.1 median {f1_low_noise:.4} in [0.01, 0.08], \
             f2 sigma 0.4 median {f2_high_noise:.4} in [0.15, 0.55]"
        ),
    );
}

#[test]
fn c03_noiseless_signals_are_nearly_memorized() {
    let mut detail = String::new();
    let mut ok = true;
    for function in [SynthFunction::F1, SynthFunction::F2] {
        let series = generate(&SynthSpec::standard(function, 0.0, 1)).unwrap();
        let (train, _) = split(&series, 0.8).unwrap();
        let config = TrainConfig {
            seed: 1,
            ..TrainConfig::default()
        };
        let (model, _) = fit_model(ModelKind::ArKan, &train, &config, DEFAULT_P).unwrap();
        let (mse, _) = evaluate(&model, &series, 0.8).unwrap();
        ok &= mse < 1e-3;
        write!(detail, "{function} mse {mse:.2e} ").unwrap();
    }
    verdict(
        3,
        "noiseless signals are nearly memorized",
        ok,
        detail.trim_end(),
    );
}

#[test]
fn c04_yule_walker_solutions_check_out() {
    let mut rng = ChaCha20Rng::seed_from_u64(40);
    let mut worst_gap = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut perturbations_worse = 0;
    for i in 0..100 {
        let p = 1 + (i % 20);
        let a = rng.random_range(-0.85..0.85);
        let mut x = vec![0.0; 400];
        let mut prev = 0.0;
        for v in &mut x {
            let e: f64 = rng.sample(StandardNormal);
            prev = a * prev + e;
            *v = prev;
        }
        let ts = TimeSeries::new("sim", x).unwrap();
        let r = autocorrelation(&ts, p).unwrap();

        let fast = levinson_durbin(&r, p).unwrap();
        let dense = solve_dense(&r, p).unwrap();
        for (f, d) in fast.iter().zip(&dense) {
            worst_gap = worst_gap.max((f - d).abs());
        }
        worst_residual = worst_residual.max(yule_walker_residual(&r, &fast).unwrap());

        let matrix: Array2<f64> = r.toeplitz(p).unwrap();
        let rho = r.rho(p).unwrap().to_vec();
        let at_solution = memory_objective(&fast, &matrix, &rho).unwrap();
        let nudged: Vec<f64> = fast
            .iter()
            .map(|w| w + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if memory_objective(&nudged, &matrix, &rho).unwrap() < at_solution {
            perturbations_worse += 1;
        }
    }
    let ok = worst_gap <= 1e-8 && worst_residual <= 1e-8 && perturbations_worse == 100;
    verdict(
        4,
        "yule-walker solutions check out",
        ok,
        &format!(
            "levinson-durbin vs dense gap {worst_gap:.2e}, residual {worst_residual:.2e}, \
             objective fell for {perturbations_worse}/100 perturbations"
        ),
    );
}

fn finite_difference<F: FnMut(&[f64]) -> f64>(theta: &[f64], mut f: F) -> Vec<f64> {
    let h = 1e-5;
    let mut grad = vec![0.0; theta.len()];
    let mut probe = theta.to_vec();
    for i in 0..theta.len() {
        probe[i] = theta[i] + h;
        let up = f(&probe);
        probe[i] = theta[i] - h;
        let down = f(&probe);
        probe[i] = theta[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

fn relative_gap(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

#[test]
fn c05_analytic_gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(50);
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        if i % 2 == 0 {
            let half = i as usize / 2;
            let grid = SplineGrid::new(-2.0, 2.0, 2 + half % 4, 2 + half % 2).unwrap();
            let net = KanNetwork::init(&[2, 3, 1], grid, i).unwrap();
            let input: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
            let upstream = normal_vec(&mut rng, 1);

            let (_, cache) = kan_forward(&net, &input).unwrap();
            let grads = kan_backward(&net, &cache, &upstream).unwrap();

            let theta = net.flatten_params();
            let mut scratch = net.clone();
            let fd_params = finite_difference(&theta, |t| {
                scratch.set_params(t).unwrap();
                let (out, _) = kan_forward(&scratch, &input).unwrap();
                out.iter().zip(&upstream).map(|(o, u)| o * u).sum()
            });
            let fd_input = finite_difference(&input, |x| {
                let (out, _) = kan_forward(&net, x).unwrap();
                out.iter().zip(&upstream).map(|(o, u)| o * u).sum()
            });
            worst = worst.max(relative_gap(&grads.params, &fd_params));
            worst = worst.max(relative_gap(&grads.input, &fd_input));
        } else {
            let net = MlpNetwork::init(&[3, 4, 2], i).unwrap();
            let input = normal_vec(&mut rng, 3);
            let upstream = normal_vec(&mut rng, 2);

            let (_, cache) = mlp_forward(&net, &input).unwrap();
            let grads = mlp_backward(&net, &cache, &upstream).unwrap();

            let theta = net.flatten_params();
            let mut scratch = net.clone();
            let fd_params = finite_difference(&theta, |t| {
                scratch.set_params(t).unwrap();
                let (out, _) = mlp_forward(&scratch, &input).unwrap();
                out.iter().zip(&upstream).map(|(o, u)| o * u).sum()
            });
            let fd_input = finite_difference(&input, |x| {
                let (out, _) = mlp_forward(&net, x).unwrap();
                out.iter().zip(&upstream).map(|(o, u)| o * u).sum()
            });
            worst = worst.max(relative_gap(&grads.params, &fd_params));
            worst = worst.max(relative_gap(&grads.input, &fd_input));
        }
    }
    let ok = worst < 1e-4;
    verdict(
        5,
        "analytic gradients match finite differences",
        ok,
        &format!("worst relative gap {worst:.2e} over 100 networks"),
    );
}

#[test]
fn c06_spline_basis_partitions_unity_with_local_support() {
    let mut rng = ChaCha20Rng::seed_from_u64(60);
    let mut worst_sum_gap = 0.0f64;
    let mut support_violations = 0usize;
    for intervals in 1..=5 {
        for degree in 1..=3 {
            let grid = SplineGrid::new(-3.0, 3.0, intervals, degree).unwrap();
            let knots = grid.knots().to_vec();
            for _ in 0..1000 {
                let x = rng.random_range(grid.lo()..grid.hi());
                let basis = grid.basis(x);
                let sum: f64 = basis.iter().sum();
                worst_sum_gap = worst_sum_gap.max((sum - 1.0).abs());
                for (j, b) in basis.iter().enumerate() {
                    if (x < knots[j] || x > knots[j + degree + 1]) && *b != 0.0 {
                        support_violations += 1;
                    }
                }
            }
        }
    }
    let ok = worst_sum_gap <= 1e-9 && support_violations == 0;
    verdict(
        6,
        "spline basis partitions unity with local support",
        ok,
        &format!(
            "worst partition gap {worst_sum_gap:.2e}, {support_violations} values \
             outside their knot span"
        ),
    );
}

#[test]
fn c07_simulated_processes_are_recovered() {
    let mut rng = ChaCha20Rng::seed_from_u64(70);

    let (phi1, phi2) = (0.5, -0.3);
    let mut x = Vec::with_capacity(5000);
    let (mut a, mut b) = (0.0, 0.0);
    for i in 0..5500 {
        let e: f64 = rng.sample(StandardNormal);
        let next = phi1 * a + phi2 * b + e;
        b = a;
        a = next;
        if i >= 500 {
            x.push(next);
        }
    }
    let ts = TimeSeries::new("ar2", standardized(&x)).unwrap();
    let ar = fit_ar(&ts, 2, 0).unwrap();
    let ar_gap = (ar.coeffs[0] - phi1).abs().max((ar.coeffs[1] - phi2).abs());

    let theta = 0.6;
    let mut w = Vec::with_capacity(10000);
    let mut prev: f64 = rng.sample(StandardNormal);
    for i in 0..10500 {
        let e: f64 = rng.sample(StandardNormal);
        if i >= 500 {
            w.push(e + theta * prev);
        }
        prev = e;
    }
    let arima = ArimaModel::fit(&standardized(&w), 1, 0, 1).unwrap();
    let theta_gap = (arima.theta[0] - theta).abs();

    let ok = ar_gap < 0.05 && theta_gap < 0.1;
    verdict(
        7,
        "simulated processes are recovered",
        ok,
        &format!(
            "ar(2) coefficient gap {ar_gap:.3} (limit 0.05), ma(1) theta gap \
             {theta_gap:.3} (limit 0.1)"
        ),
    );
}

#[test]
fn c08_periodicity_statistic_behaves() {
    let periodic: Vec<f64> = (0..400)
        .map(|i| {
            let t = i as f64;
            (std::f64::consts::TAU * t / 20.0).sin() + 0.5 * (std::f64::consts::TAU * t / 10.0).cos()
        })
        .collect();
    let strong = periodicity_strength(&TimeSeries::new("periodic", periodic).unwrap()).unwrap();

    let mut rng = ChaCha20Rng::seed_from_u64(80);
    let noise = normal_vec(&mut rng, 1000);
    let weak = periodicity_strength(&TimeSeries::new("noise", noise).unwrap()).unwrap();

    let monthly: Vec<f64> = (0..240)
        .map(|i| (std::f64::consts::TAU * i as f64 / 12.0).sin())
        .collect();
    let detected = periodicity_strength(&TimeSeries::new("monthly", monthly).unwrap()).unwrap();

    let seasonal_like: Vec<f64> = (0..144)
        .map(|i| {
            let t = i as f64;
            100.0 + 0.5 * t
                + 30.0 * (std::f64::consts::TAU * t / 12.0).sin()
                + 5.0 * (std::f64::consts::TAU * t / 6.0).cos()
        })
        .collect();
    let trending_like: Vec<f64> = (0..200)
        .map(|i| {
            let t = i as f64;
            100.0 + 1.2 * t
                + 10.0 * (std::f64::consts::TAU * t / 173.0).sin()
                + 6.0 * (std::f64::consts::TAU * t / 61.0).sin()
        })
        .collect();
    let seasonal_score =
        periodicity_strength(&TimeSeries::new("seasonal", seasonal_like).unwrap()).unwrap();
    let trending_score =
        periodicity_strength(&TimeSeries::new("trending", trending_like).unwrap()).unwrap();

    let ok = strong.strength >= 0.9
        && weak.strength <= 0.05
        && detected.period == 12
        && seasonal_score.strength > trending_score.strength;
    verdict(
        8,
        "periodicity statistic behaves",
        ok,
        &format!(
            "periodic {:.3}, iid noise {:.3}, detected period {}, seasonal {:.3} > trending {:.3}",
            strong.strength,
            weak.strength,
            detected.period,
            seasonal_score.strength,
            trending_score.strength
        ),
    );
}

fn arkan_cli(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_arkan"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn without_train_seconds(csv: &str) -> String {
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
fn c09_repeated_runs_write_identical_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("quick.json"), r#"{"max_epochs": 40, "patience": 15}"#).unwrap();
    let ok_run = |args: &[&str]| {
        let out = arkan_cli(args, dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    ok_run(&["synth", "--function", "f1", "--sigma", "0.1", "--seed", "3", "--out", "data.csv"]);

    for model in ["m1.json", "m2.json"] {
        ok_run(&[
            "fit", "--model", "ar-kan", "--data", "data.csv", "--seed", "5", "--config",
            "quick.json", "--out", model,
        ]);
    }
    let fits_identical =
        std::fs::read(dir.join("m1.json")).unwrap() == std::fs::read(dir.join("m2.json")).unwrap();

    for report in ["e1.json", "e2.json"] {
        ok_run(&["eval", "--model", "m1.json", "--data", "data.csv", "--out", report]);
    }
    let evals_identical =
        std::fs::read(dir.join("e1.json")).unwrap() == std::fs::read(dir.join("e2.json")).unwrap();

    for (csv, md) in [("b1.csv", "p1.md"), ("b2.csv", "p2.md")] {
        ok_run(&[
            "bench", "--functions", "f1", "--sigmas", "0.2", "--models", "ar-kan,arima",
            "--seeds", "1,2", "--p", "8", "--config", "quick.json", "--out-csv", csv,
            "--out-md", md,
        ]);
    }
    let b1 = std::fs::read_to_string(dir.join("b1.csv")).unwrap();
    let b2 = std::fs::read_to_string(dir.join("b2.csv")).unwrap();
    let benches_identical = without_train_seconds(&b1) == without_train_seconds(&b2);
    let pivots_identical =
        std::fs::read(dir.join("p1.md")).unwrap() == std::fs::read(dir.join("p2.md")).unwrap();

    let ok = fits_identical && evals_identical && benches_identical && pivots_identical;
    verdict(
        9,
        "repeated runs write identical files",
        ok,
        &format!(
            "fit {fits_identical}, eval {evals_identical}, bench csv modulo wall-clock \
             train_seconds column {benches_identical}, pivot {pivots_identical}"
        ),
    );
}

#[test]
fn c10_foreign_csv_runs_every_model() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let mut rng = ChaCha20Rng::seed_from_u64(100);
    let mut csv = String::from("t,value\n");
    for i in 0..160 {
        let t = i as f64;
        let noise: f64 = rng.sample(StandardNormal);
        let v = 0.2 * t + 12.0 * (std::f64::consts::TAU * t / 16.0).sin() + noise;
        writeln!(csv, "{i},{v}").unwrap();
    }
    std::fs::write(dir.join("foreign.csv"), csv).unwrap();
    std::fs::write(dir.join("quick.json"), r#"{"max_epochs": 300, "patience": 60}"#).unwrap();

    let out = arkan_cli(
        &[
            "bench", "--data", "foreign.csv", "--models", "ar-kan,ar-mlp,kan,mlp,arima",
            "--seeds", "1", "--config", "quick.json", "--out-csv", "grid.csv",
        ],
        dir,
    );
    let grid = std::fs::read_to_string(dir.join("grid.csv")).unwrap_or_default();
    let ok_rows = grid.lines().skip(1).filter(|l| l.ends_with(",ok")).count();
    let ok = out.status.success() && ok_rows == 5;
    verdict(
        10,
        "foreign csv runs every model",
        ok,
        &format!(
            "exit {:?}, {ok_rows}/5 models completed on a 160-row csv",
            out.status.code()
        ),
    );
}
