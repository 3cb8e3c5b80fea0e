//! Experiment grid: every (dataset, model, seed) cell is fit and scored,
//! failures become rows rather than aborting the run, and the results are
//! written as a long-form CSV plus a pivot table of per-cell medians.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{ArkanError, Result};
use crate::exec::{self, Threading};
use crate::models::{evaluate_threaded, fit_model, ModelKind, DEFAULT_P};
use crate::nn::TrainConfig;
use crate::series::TimeSeries;
use crate::synth::{generate, SynthFunction, SynthSpec};

/// Training split fraction; the final fifth of every series is the test set.
pub const SPLIT_RATIO: f64 = 0.8;

/// Partial training settings: unset fields fall back to the base they are
/// applied onto. The seed is deliberately absent, it always comes from the
/// grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverride {
    pub learning_rate: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub val_fraction: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
}

impl TrainOverride {
    pub fn applied_to(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            max_epochs: self.max_epochs.unwrap_or(base.max_epochs),
            patience: self.patience.unwrap_or(base.patience),
            val_fraction: self.val_fraction.unwrap_or(base.val_fraction),
            seed: base.seed,
            beta1: self.beta1.unwrap_or(base.beta1),
            beta2: self.beta2.unwrap_or(base.beta2),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
        }
    }
}

/// Training settings as read from a config file: flat keys adjust every
/// model, per-variant blocks win over the flat keys. Unknown keys are
/// rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfigs {
    #[serde(flatten)]
    pub base: TrainOverride,
    pub ar_kan: Option<TrainOverride>,
    pub ar_mlp: Option<TrainOverride>,
    pub kan: Option<TrainOverride>,
    pub mlp: Option<TrainOverride>,
}

impl ModelConfigs {
    /// Effective config for one variant, seeded later by the caller.
    pub fn resolve(&self, kind: ModelKind) -> TrainConfig {
        let base = self.base.applied_to(&TrainConfig::default());
        let per_kind = match kind {
            ModelKind::ArKan => &self.ar_kan,
            ModelKind::ArMlp => &self.ar_mlp,
            ModelKind::Kan => &self.kan,
            ModelKind::Mlp => &self.mlp,
            ModelKind::Arima => &None,
        };
        match per_kind {
            Some(over) => over.applied_to(&base),
            None => base,
        }
    }
}

/// One data source for the grid: a synthetic generator (crossed with every
/// sigma) or a CSV file on disk (used as-is).
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Synthetic(SynthFunction),
    Csv(PathBuf),
}

/// Full grid description.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub sources: Vec<DatasetSource>,
    pub sigmas: Vec<f64>,
    pub models: Vec<ModelKind>,
    pub seeds: Vec<u64>,
    pub p: usize,
    pub configs: ModelConfigs,
}

impl BenchSpec {
    pub fn new(sources: Vec<DatasetSource>, sigmas: Vec<f64>, models: Vec<ModelKind>, seeds: Vec<u64>) -> Self {
        BenchSpec {
            sources,
            sigmas,
            models,
            seeds,
            p: DEFAULT_P,
            configs: ModelConfigs::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(ArkanError::InvalidConfig("no datasets requested".into()));
        }
        if self.models.is_empty() {
            return Err(ArkanError::InvalidConfig("no models requested".into()));
        }
        if self.seeds.is_empty() {
            return Err(ArkanError::InvalidConfig("no seeds requested".into()));
        }
        let synthetic = self
            .sources
            .iter()
            .any(|s| matches!(s, DatasetSource::Synthetic(_)));
        if synthetic && self.sigmas.is_empty() {
            return Err(ArkanError::InvalidConfig(
                "synthetic datasets need at least one sigma".into(),
            ));
        }
        if let Some(bad) = self.sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(ArkanError::InvalidConfig(format!(
                "sigma must be finite and non-negative, got {bad}"
            )));
        }
        if self.p == 0 {
            return Err(ArkanError::InvalidConfig("order p must be positive".into()));
        }
        for kind in &self.models {
            self.configs.resolve(*kind).validate()?;
        }
        Ok(())
    }
}

/// Outcome of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub sigma: Option<f64>,
    pub model: ModelKind,
    pub seed: u64,
    pub test_mse: Option<f64>,
    pub train_seconds: Option<f64>,
    pub status: String,
}

impl BenchRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// All rows of a finished run, in requested order.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    rows: Vec<BenchRow>,
}

/// One pivot line: a dataset crossed with the requested model columns.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotRow {
    pub dataset: String,
    pub sigma: Option<f64>,
    /// Median test MSE per model column; `None` when every seed failed.
    pub medians: Vec<Option<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct DataKey<'a> {
    dataset: &'a str,
    sigma: Option<f64>,
}

impl BenchReport {
    pub fn rows(&self) -> &[BenchRow] {
        &self.rows
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// Long-form CSV with one row per grid cell.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| ArkanError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })?;
        writer
            .write_record([
                "dataset",
                "sigma",
                "model",
                "seed",
                "test_mse",
                "train_seconds",
                "status",
            ])
            .map_err(|e| ArkanError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e),
            })?;
        for row in &self.rows {
            writer
                .write_record([
                    row.dataset.clone(),
                    row.sigma.map(|s| s.to_string()).unwrap_or_default(),
                    row.model.to_string(),
                    row.seed.to_string(),
                    row.test_mse.map(|m| m.to_string()).unwrap_or_default(),
                    row.train_seconds
                        .map(|t| format!("{t:.3}"))
                        .unwrap_or_default(),
                    row.status.clone(),
                ])
                .map_err(|e| ArkanError::Io {
                    path: path.to_path_buf(),
                    source: std::io::Error::other(e),
                })?;
        }
        writer.flush().map_err(|e| ArkanError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// Model order used for pivot columns: first appearance in the rows.
    pub fn model_columns(&self) -> Vec<ModelKind> {
        let mut out: Vec<ModelKind> = Vec::new();
        for row in &self.rows {
            if !out.contains(&row.model) {
                out.push(row.model);
            }
        }
        out
    }

    /// Per-dataset medians over seeds, one line per (dataset, sigma) in row
    /// order, one column per model.
    pub fn pivot(&self) -> Vec<PivotRow> {
        let models = self.model_columns();
        let mut keys: Vec<DataKey> = Vec::new();
        for row in &self.rows {
            let key = DataKey {
                dataset: &row.dataset,
                sigma: row.sigma,
            };
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.iter()
            .map(|key| {
                let medians = models
                    .iter()
                    .map(|model| {
                        let mut values: Vec<f64> = self
                            .rows
                            .iter()
                            .filter(|r| {
                                r.dataset == key.dataset
                                    && r.sigma == key.sigma
                                    && r.model == *model
                                    && r.is_ok()
                            })
                            .filter_map(|r| r.test_mse)
                            .collect();
                        median(&mut values)
                    })
                    .collect();
                PivotRow {
                    dataset: key.dataset.to_string(),
                    sigma: key.sigma,
                    medians,
                }
            })
            .collect()
    }

    /// Markdown pivot table; the minimum of each line is bold.
    pub fn to_markdown(&self) -> String {
        let models = self.model_columns();
        let mut out = String::from("| dataset | sigma |");
        for model in &models {
            let _ = write!(out, " {model} |");
        }
        out.push('\n');
        out.push_str("| --- | --- |");
        for _ in &models {
            out.push_str(" --- |");
        }
        out.push('\n');
        for line in self.pivot() {
            let sigma = line
                .sigma
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".to_string());
            let _ = write!(out, "| {} | {sigma} |", line.dataset);
            let min = line
                .medians
                .iter()
                .flatten()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            for cell in &line.medians {
                match cell {
                    Some(v) if *v == min => {
                        let _ = write!(out, " **{v:.4}** |");
                    }
                    Some(v) => {
                        let _ = write!(out, " {v:.4} |");
                    }
                    None => {
                        let _ = write!(out, " err |");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_markdown(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_markdown()).map_err(|e| ArkanError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Median of the values, averaging the middle pair for even counts. Empty
/// input gives `None`.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        Some(values[n / 2])
    } else {
        Some(0.5 * (values[n / 2 - 1] + values[n / 2]))
    }
}

struct Cell {
    dataset: String,
    sigma: Option<f64>,
    series: CellSeries,
    model: ModelKind,
    seed: u64,
}

enum CellSeries {
    Synthetic(SynthFunction, f64),
    Loaded(usize),
}

/// Runs the whole grid. Cells run independently (in parallel when asked);
/// fit or evaluation failures become error rows, not run failures.
pub fn run_grid(spec: &BenchSpec, threading: Threading) -> Result<BenchReport> {
    spec.validate()?;
    let mut loaded: Vec<TimeSeries> = Vec::new();
    let mut cells: Vec<Cell> = Vec::new();
    for source in &spec.sources {
        let (names, series_refs): (Vec<String>, Vec<CellSeries>) = match source {
            DatasetSource::Synthetic(function) => spec
                .sigmas
                .iter()
                .map(|sigma| {
                    (
                        function.tag().to_string(),
                        CellSeries::Synthetic(*function, *sigma),
                    )
                })
                .unzip(),
            DatasetSource::Csv(path) => {
                let ts = TimeSeries::load_csv(path)?;
                loaded.push(ts);
                let idx = loaded.len() - 1;
                (
                    vec![loaded[idx].name().to_string()],
                    vec![CellSeries::Loaded(idx)],
                )
            }
        };
        for (name, cell_series) in names.into_iter().zip(series_refs) {
            let sigma = match &cell_series {
                CellSeries::Synthetic(_, s) => Some(*s),
                CellSeries::Loaded(_) => None,
            };
            for model in &spec.models {
                for seed in &spec.seeds {
                    cells.push(Cell {
                        dataset: name.clone(),
                        sigma,
                        series: match &cell_series {
                            CellSeries::Synthetic(f, s) => CellSeries::Synthetic(*f, *s),
                            CellSeries::Loaded(i) => CellSeries::Loaded(*i),
                        },
                        model: *model,
                        seed: *seed,
                    });
                }
            }
        }
    }

    let total = cells.len();
    let rows = exec::map_indexed(threading, total, |i| {
        let cell = &cells[i];
        let row = run_cell(spec, &loaded, cell);
        log::info!(
            "cell {}/{total}: {} sigma={} {} seed={} -> {}",
            i + 1,
            cell.dataset,
            cell.sigma.map_or("-".to_string(), |s| s.to_string()),
            cell.model,
            cell.seed,
            row.status
        );
        row
    });
    Ok(BenchReport { rows })
}

fn run_cell(spec: &BenchSpec, loaded: &[TimeSeries], cell: &Cell) -> BenchRow {
    let mut row = BenchRow {
        dataset: cell.dataset.clone(),
        sigma: cell.sigma,
        model: cell.model,
        seed: cell.seed,
        test_mse: None,
        train_seconds: None,
        status: "ok".to_string(),
    };
    let result = (|| -> Result<(f64, f64)> {
        let full = match &cell.series {
            CellSeries::Synthetic(function, sigma) => {
                generate(&SynthSpec::standard(*function, *sigma, cell.seed))?
            }
            CellSeries::Loaded(i) => loaded[*i].clone(),
        };
        let (train, _) = crate::series::split(&full, SPLIT_RATIO)?;
        let mut config = spec.configs.resolve(cell.model);
        config.seed = cell.seed;
        let started = Instant::now();
        let (model, _) = fit_model(cell.model, &train, &config, spec.p)?;
        let train_seconds = started.elapsed().as_secs_f64();
        let (test_mse, _) =
            evaluate_threaded(&model, &full, SPLIT_RATIO, Threading::Sequential)?;
        if !test_mse.is_finite() {
            return Err(ArkanError::Estimation {
                what: "model evaluation",
                reason: "test mse is not finite",
                condition: 0.0,
            });
        }
        Ok((test_mse, train_seconds))
    })();
    match result {
        Ok((test_mse, train_seconds)) => {
            row.test_mse = Some(test_mse);
            row.train_seconds = Some(train_seconds);
        }
        Err(e) => row.status = e.to_string(),
    }
    row
}
