//! Command-line harness over the forecasting library: data synthesis,
//! single fits, rolling evaluation, benchmark grids, and periodicity
//! reports. Exit codes: 0 success, 1 internal or numeric failure, 2 bad
//! usage or bad input.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use arkan_core::analysis::{periodicity_strength, PeriodicityReport};
use arkan_core::bench::{run_grid, BenchSpec, DatasetSource, ModelConfigs, SPLIT_RATIO};
use arkan_core::exec::configure_jobs;
use arkan_core::models::{
    evaluate_threaded, fit_model, load_model, save_model, ModelKind, DEFAULT_P,
};
use arkan_core::synth::{generate, SynthFunction, SynthSpec};
use arkan_core::{ArkanError, Result, Threading, TimeSeries};

#[derive(Parser)]
#[command(
    name = "arkan",
    version,
    about = "One-step forecasting with an autoregressive memory feeding a spline network"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a noisy almost-periodic benchmark series as a t,value CSV.
    Synth {
        /// Signal family: f1 (cos 2t + cos 2 pi t) or f2 (sin 3t + sin 2e t).
        #[arg(long)]
        function: SynthFunction,
        /// Noise standard deviation.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of samples over [0, tmax].
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 8.0 * std::f64::consts::PI)]
        tmax: f64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model on a data CSV and write a model document.
    Fit {
        /// Model variant: ar-kan, ar-mlp, kan, mlp, or arima.
        #[arg(long)]
        model: ModelKind,
        /// Training data CSV (t,value).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lag window length.
        #[arg(long, default_value_t = DEFAULT_P)]
        p: usize,
        /// JSON training config: flat keys adjust every model, blocks named
        /// ar_kan, ar_mlp, kan, mlp override per variant.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output model JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rolling one-step evaluation of a saved model on the test tail of a
    /// series. Prints a JSON report.
    Eval {
        /// Model document written by fit.
        #[arg(long)]
        model: PathBuf,
        /// Data CSV; the model is scored on the final (1 - split) fraction.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = SPLIT_RATIO)]
        split: f64,
        /// Also write the JSON report to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a t,actual,predicted CSV of the test tail, handy for
        /// plotting forecasts over the truth.
        #[arg(long)]
        out_predictions: Option<PathBuf>,
    },
    /// Fit and score a grid of models over datasets, seeds, and noise
    /// levels; writes a long-form CSV and a median pivot table.
    Bench {
        /// Synthetic functions to include (comma separated: f1,f2).
        #[arg(long, value_delimiter = ',')]
        functions: Vec<SynthFunction>,
        /// CSV datasets to include (repeatable).
        #[arg(long)]
        data: Vec<PathBuf>,
        /// Noise levels for the synthetic functions.
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4])]
        sigmas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = ModelKind::ALL)]
        models: Vec<ModelKind>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5])]
        seeds: Vec<u64>,
        /// Lag window length.
        #[arg(long, default_value_t = DEFAULT_P)]
        p: usize,
        /// JSON training config shared by the whole grid.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Long-form results CSV path.
        #[arg(long)]
        out_csv: PathBuf,
        /// Markdown pivot path (the pivot always prints to stdout too).
        #[arg(long)]
        out_md: Option<PathBuf>,
    },
    /// Report detected period and periodicity strength for one or more
    /// CSVs (directories expand to the *.csv files inside).
    Periodicity {
        /// Files or directories to analyze.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ARKAN_LOG", "error")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(jobs) = cli.jobs {
        configure_jobs(jobs)?;
    }
    match cli.command {
        Command::Synth {
            function,
            sigma,
            seed,
            samples,
            tmax,
            out,
        } => {
            let spec = SynthSpec {
                function,
                sigma,
                n: samples,
                t_max: tmax,
                seed,
            };
            let ts = generate(&spec)?;
            ts.write_csv(&out)?;
            println!("wrote {} rows to {}", ts.len(), out.display());
            Ok(0)
        }
        Command::Fit {
            model,
            data,
            seed,
            p,
            config,
            out,
        } => {
            let train = TimeSeries::load_csv(&data)?;
            let mut train_config = load_configs(config.as_deref())?.resolve(model);
            train_config.seed = seed;
            let started = Instant::now();
            let (fitted, history) = fit_model(model, &train, &train_config, p)?;
            let elapsed = started.elapsed().as_secs_f64();
            save_model(&fitted, &out)?;
            match &history {
                Some(h) => println!(
                    "fit {model} in {elapsed:.2}s, best validation loss {:.6e} at epoch {}",
                    h.best_val_loss, h.best_epoch
                ),
                None => println!("fit {model} in {elapsed:.2}s"),
            }
            println!("saved {}", out.display());
            Ok(0)
        }
        Command::Eval {
            model,
            data,
            split,
            out,
            out_predictions,
        } => {
            let fitted = load_model(&model)?;
            let full = TimeSeries::load_csv(&data)?;
            let (test_mse, predictions) =
                evaluate_threaded(&fitted, &full, split, Threading::default())?;
            if let Some(path) = &out_predictions {
                write_predictions_csv(path, &full, &predictions)?;
            }
            let report = EvalReport {
                test_mse,
                n_test: predictions.len(),
                predictions,
            };
            let text = to_json(&report)?;
            if let Some(path) = &out {
                write_text(path, &text)?;
            }
            print!("{text}");
            Ok(0)
        }
        Command::Bench {
            functions,
            data,
            sigmas,
            models,
            seeds,
            p,
            config,
            out_csv,
            out_md,
        } => {
            let mut sources: Vec<DatasetSource> = functions
                .into_iter()
                .map(DatasetSource::Synthetic)
                .collect();
            sources.extend(data.into_iter().map(DatasetSource::Csv));
            let mut spec = BenchSpec::new(sources, sigmas, models, seeds);
            spec.p = p;
            spec.configs = load_configs(config.as_deref())?;
            let report = run_grid(&spec, Threading::default())?;
            report.write_csv(&out_csv)?;
            let markdown = report.to_markdown();
            if let Some(path) = &out_md {
                write_text(path, &markdown)?;
            }
            print!("{markdown}");
            let failed = report.failed_rows();
            if failed > 0 {
                eprintln!("{failed} of {} cells failed", report.rows().len());
                Ok(1)
            } else {
                Ok(0)
            }
        }
        Command::Periodicity { paths } => {
            let single_file = paths.len() == 1 && paths[0].is_file();
            let files = expand_csv_paths(&paths)?;
            if single_file {
                let report = periodicity_strength(&TimeSeries::load_csv(&files[0])?)?;
                print!("{}", to_json(&report)?);
                return Ok(0);
            }
            let mut entries: Vec<PeriodicityEntry> = files
                .iter()
                .map(|path| {
                    let file = path.display().to_string();
                    match TimeSeries::load_csv(path).and_then(|ts| periodicity_strength(&ts)) {
                        Ok(report) => PeriodicityEntry::Ok(FileReport { file, report }),
                        Err(e) => PeriodicityEntry::Err {
                            file,
                            error: e.to_string(),
                        },
                    }
                })
                .collect();
            entries.sort_by(|a, b| {
                b.strength()
                    .partial_cmp(&a.strength())
                    .expect("finite strengths")
                    .then_with(|| a.file().cmp(b.file()))
            });
            print!("{}", to_json(&entries)?);
            Ok(0)
        }
    }
}

#[derive(Serialize)]
struct EvalReport {
    test_mse: f64,
    n_test: usize,
    predictions: Vec<f64>,
}

#[derive(Serialize)]
struct FileReport {
    file: String,
    #[serde(flatten)]
    report: PeriodicityReport,
}

#[derive(Serialize)]
#[serde(untagged)]
enum PeriodicityEntry {
    Ok(FileReport),
    Err { file: String, error: String },
}

impl PeriodicityEntry {
    fn strength(&self) -> f64 {
        match self {
            PeriodicityEntry::Ok(r) => r.report.strength,
            PeriodicityEntry::Err { .. } => f64::NEG_INFINITY,
        }
    }

    fn file(&self) -> &str {
        match self {
            PeriodicityEntry::Ok(r) => &r.file,
            PeriodicityEntry::Err { file, .. } => file,
        }
    }
}

fn load_configs(path: Option<&Path>) -> Result<ModelConfigs> {
    let Some(path) = path else {
        return Ok(ModelConfigs::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| ArkanError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| ArkanError::BadDocument(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| ArkanError::BadDocument(format!("serializing report: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| ArkanError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_predictions_csv(path: &Path, full: &TimeSeries, predictions: &[f64]) -> Result<()> {
    let offset = full.len() - predictions.len();
    let mut text = String::from("t,actual,predicted\n");
    for (j, pred) in predictions.iter().enumerate() {
        let i = offset + j;
        let row = format!("{},{},{}\n", full.time_at(i), full.values()[i], pred);
        text.push_str(&row);
    }
    write_text(path, &text)
}

/// Files stay files; directories contribute their *.csv entries in name
/// order. Missing paths surface as IO errors.
fn expand_csv_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut inside: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| ArkanError::Io {
                    path: path.clone(),
                    source: e,
                })?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| {
                    p.is_file() && p.extension().map(|e| e == "csv").unwrap_or(false)
                })
                .collect();
            inside.sort();
            files.extend(inside);
        } else {
            files.push(path.clone());
        }
    }
    Ok(files)
}
