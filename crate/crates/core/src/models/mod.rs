//! The five forecasters behind a single one-step interface.
//!
//! Every gradient-trained variant shares the same pipeline: standardize the
//! training series and keep the stats, window it, train a network on the
//! windows, and forecast by standardizing incoming history with the stored
//! stats. The memory variants first fit autoregressive coefficients on the
//! standardized series, freeze them, and scale each lag of every window by
//! its coefficient before the network sees it. The ARIMA variant replaces
//! the network with a closed-form two-stage least-squares fit.

mod arima;
mod document;

pub use arima::ArimaModel;
pub use document::{load_model, save_model};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::armemory::{apply_memory, fit_ar, ArModel};
use crate::error::{ArkanError, Result};
use crate::exec::{self, Threading};
use crate::kan::{kan_forward, KanNetwork, SplineGrid};
use crate::nn::{mlp_forward, train, MlpNetwork, TrainConfig, TrainHistory, Trainable};
use crate::series::{
    apply_standardize, fit_standardize, make_windows, split, StandardizationStats, TimeSeries,
    WindowDataset,
};

/// Default lag-window length.
pub const DEFAULT_P: usize = 20;

/// Spline grid shared by every network with spline edges.
pub fn default_grid() -> SplineGrid {
    SplineGrid::new(-3.0, 3.0, 3, 3).expect("valid default grid")
}

const KAN_HIDDEN: usize = 50;
const MLP_HIDDEN: [usize; 3] = [128, 256, 128];

/// The five supported forecaster variants. The command-line tag is
/// kebab-case (`ar-kan`); serialized documents use snake_case (`ar_kan`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ArKan,
    ArMlp,
    Kan,
    Mlp,
    Arima,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::ArKan,
        ModelKind::ArMlp,
        ModelKind::Kan,
        ModelKind::Mlp,
        ModelKind::Arima,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::ArKan => "ar-kan",
            ModelKind::ArMlp => "ar-mlp",
            ModelKind::Kan => "kan",
            ModelKind::Mlp => "mlp",
            ModelKind::Arima => "arima",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = ArkanError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ar-kan" => Ok(ModelKind::ArKan),
            "ar-mlp" => Ok(ModelKind::ArMlp),
            "kan" => Ok(ModelKind::Kan),
            "mlp" => Ok(ModelKind::Mlp),
            "arima" => Ok(ModelKind::Arima),
            other => Err(ArkanError::UnknownTag {
                tag: other.to_string(),
                expected: "ar-kan|ar-mlp|kan|mlp|arima",
            }),
        }
    }
}

/// Variant-specific parameters of a fitted forecaster.
#[derive(Clone, Debug)]
pub enum ModelBody {
    ArKan { memory: ArModel, net: KanNetwork },
    ArMlp { memory: ArModel, net: MlpNetwork },
    Kan { net: KanNetwork },
    Mlp { net: MlpNetwork },
    Arima(ArimaModel),
}

/// A fitted forecaster plus everything needed to apply it to raw data.
#[derive(Clone, Debug)]
pub struct ForecastModel {
    stats: StandardizationStats,
    p: usize,
    body: ModelBody,
}

impl ForecastModel {
    pub(crate) fn new(stats: StandardizationStats, p: usize, body: ModelBody) -> Self {
        ForecastModel { stats, p, body }
    }

    pub fn kind(&self) -> ModelKind {
        match self.body {
            ModelBody::ArKan { .. } => ModelKind::ArKan,
            ModelBody::ArMlp { .. } => ModelKind::ArMlp,
            ModelBody::Kan { .. } => ModelKind::Kan,
            ModelBody::Mlp { .. } => ModelKind::Mlp,
            ModelBody::Arima(_) => ModelKind::Arima,
        }
    }

    /// Lag-window length; also the network input width where one exists.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn stats(&self) -> &StandardizationStats {
        &self.stats
    }

    pub fn body(&self) -> &ModelBody {
        &self.body
    }
}

fn standardize_train(train: &TimeSeries, p: usize) -> Result<(StandardizationStats, TimeSeries)> {
    if p == 0 {
        return Err(ArkanError::InvalidConfig("order p must be positive".into()));
    }
    if train.len() <= p + 2 {
        return Err(ArkanError::SeriesTooShort {
            len: train.len(),
            min: p + 3,
        });
    }
    let stats = fit_standardize(train)?;
    let z = apply_standardize(train, &stats, false);
    Ok((stats, z))
}

fn memory_windows(memory: &ArModel, mut dataset: WindowDataset) -> WindowDataset {
    for (i, a) in memory.coeffs.iter().enumerate() {
        dataset.inputs.column_mut(i).mapv_inplace(|v| v * a);
    }
    dataset
}

fn fit_network<M: Trainable>(
    net: &mut M,
    dataset: &WindowDataset,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    train(net, dataset, config)
}

/// Fits the memory-plus-spline-network forecaster.
///
/// The autoregressive coefficients are estimated once on the standardized
/// training series and never touched by network training.
pub fn fit_ar_kan(
    train_series: &TimeSeries,
    config: &TrainConfig,
    p: usize,
) -> Result<(ForecastModel, TrainHistory)> {
    let (stats, z) = standardize_train(train_series, p)?;
    let memory = fit_ar(&z, p, 0)?;
    let dataset = memory_windows(&memory, make_windows(&z, p, None)?);
    let mut net = KanNetwork::init(&[p, KAN_HIDDEN, 1], default_grid(), config.seed)?;
    let history = fit_network(&mut net, &dataset, config)?;
    Ok((
        ForecastModel::new(stats, p, ModelBody::ArKan { memory, net }),
        history,
    ))
}

/// Same memory pipeline as [`fit_ar_kan`] with a plain feed-forward head.
pub fn fit_ar_mlp(
    train_series: &TimeSeries,
    config: &TrainConfig,
    p: usize,
) -> Result<(ForecastModel, TrainHistory)> {
    let (stats, z) = standardize_train(train_series, p)?;
    let memory = fit_ar(&z, p, 0)?;
    let dataset = memory_windows(&memory, make_windows(&z, p, None)?);
    let widths = [p, MLP_HIDDEN[0], MLP_HIDDEN[1], MLP_HIDDEN[2], 1];
    let mut net = MlpNetwork::init(&widths, config.seed)?;
    let history = fit_network(&mut net, &dataset, config)?;
    Ok((
        ForecastModel::new(stats, p, ModelBody::ArMlp { memory, net }),
        history,
    ))
}

/// Fits a network directly on raw lag windows, no memory stage.
/// Only the `kan` and `mlp` kinds are valid here.
pub fn fit_plain(
    kind: ModelKind,
    train_series: &TimeSeries,
    config: &TrainConfig,
    p: usize,
) -> Result<(ForecastModel, TrainHistory)> {
    let (stats, z) = standardize_train(train_series, p)?;
    let dataset = make_windows(&z, p, None)?;
    match kind {
        ModelKind::Kan => {
            let mut net = KanNetwork::init(&[p, KAN_HIDDEN, 1], default_grid(), config.seed)?;
            let history = fit_network(&mut net, &dataset, config)?;
            Ok((
                ForecastModel::new(stats, p, ModelBody::Kan { net }),
                history,
            ))
        }
        ModelKind::Mlp => {
            let widths = [p, MLP_HIDDEN[0], MLP_HIDDEN[1], MLP_HIDDEN[2], 1];
            let mut net = MlpNetwork::init(&widths, config.seed)?;
            let history = fit_network(&mut net, &dataset, config)?;
            Ok((
                ForecastModel::new(stats, p, ModelBody::Mlp { net }),
                history,
            ))
        }
        other => Err(ArkanError::InvalidConfig(format!(
            "fit_plain only handles kan and mlp, got {other}"
        ))),
    }
}

/// Fits the ARIMA baseline; `d` and `q` are selected internally.
pub fn fit_arima(train_series: &TimeSeries, p: usize) -> Result<ForecastModel> {
    let (stats, z) = standardize_train(train_series, p)?;
    let model = arima::fit(z.values(), p)?;
    Ok(ForecastModel::new(stats, p, ModelBody::Arima(model)))
}

/// Dispatches to the right fit function for `kind`, using `config` for the
/// gradient-trained variants.
pub fn fit_model(
    kind: ModelKind,
    train_series: &TimeSeries,
    config: &TrainConfig,
    p: usize,
) -> Result<(ForecastModel, Option<TrainHistory>)> {
    match kind {
        ModelKind::ArKan => {
            let (model, history) = fit_ar_kan(train_series, config, p)?;
            Ok((model, Some(history)))
        }
        ModelKind::ArMlp => {
            let (model, history) = fit_ar_mlp(train_series, config, p)?;
            Ok((model, Some(history)))
        }
        ModelKind::Kan | ModelKind::Mlp => {
            let (model, history) = fit_plain(kind, train_series, config, p)?;
            Ok((model, Some(history)))
        }
        ModelKind::Arima => Ok((fit_arima(train_series, p)?, None)),
    }
}

fn latest_window(z: &[f64], p: usize) -> Result<Vec<f64>> {
    if z.len() < p {
        return Err(ArkanError::SeriesTooShort {
            len: z.len(),
            min: p,
        });
    }
    let n = z.len();
    Ok((0..p).map(|i| z[n - 1 - i]).collect())
}

fn forecast_z(model: &ForecastModel, z: &[f64]) -> Result<f64> {
    match &model.body {
        ModelBody::ArKan { memory, net } => {
            let window = latest_window(z, model.p)?;
            let filtered = apply_memory(memory, &window)?;
            Ok(kan_forward(net, &filtered)?.0[0])
        }
        ModelBody::ArMlp { memory, net } => {
            let window = latest_window(z, model.p)?;
            let filtered = apply_memory(memory, &window)?;
            Ok(mlp_forward(net, &filtered)?.0[0])
        }
        ModelBody::Kan { net } => {
            let window = latest_window(z, model.p)?;
            Ok(kan_forward(net, &window)?.0[0])
        }
        ModelBody::Mlp { net } => {
            let window = latest_window(z, model.p)?;
            Ok(mlp_forward(net, &window)?.0[0])
        }
        ModelBody::Arima(arima_model) => arima::one_step(arima_model, z),
    }
}

/// Predicts the sample after `history` in raw units.
///
/// The history is standardized with the model's stored stats, the variant
/// pipeline runs in standardized space, and the prediction is mapped back.
pub fn forecast_one_step(model: &ForecastModel, history: &TimeSeries) -> Result<f64> {
    let z: Vec<f64> = history
        .values()
        .iter()
        .map(|v| (v - model.stats.mean) / model.stats.std)
        .collect();
    let pred = forecast_z(model, &z)?;
    Ok(pred * model.stats.std + model.stats.mean)
}

/// Rolling teacher-forced one-step evaluation over the test split.
///
/// The series is split chronologically, every test index is predicted from
/// the true history before it, and the error is measured in standardized
/// units while the returned predictions are in raw units.
pub fn evaluate(
    model: &ForecastModel,
    full: &TimeSeries,
    split_ratio: f64,
) -> Result<(f64, Vec<f64>)> {
    evaluate_threaded(model, full, split_ratio, Threading::default())
}

pub fn evaluate_threaded(
    model: &ForecastModel,
    full: &TimeSeries,
    split_ratio: f64,
    threading: Threading,
) -> Result<(f64, Vec<f64>)> {
    let (train_part, test_part) = split(full, split_ratio)?;
    let n_train = train_part.len();
    let z: Vec<f64> = full
        .values()
        .iter()
        .map(|v| (v - model.stats.mean) / model.stats.std)
        .collect();
    let preds_z = exec::try_map_indexed(threading, test_part.len(), |j| {
        forecast_z(model, &z[..n_train + j])
    })?;
    let mut sum = 0.0;
    for (j, pred) in preds_z.iter().enumerate() {
        let err = pred - z[n_train + j];
        sum += err * err;
    }
    let test_mse = sum / preds_z.len() as f64;
    let predictions = preds_z
        .iter()
        .map(|pz| pz * model.stats.std + model.stats.mean)
        .collect();
    Ok((test_mse, predictions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::armemory::ar_predict;
    use crate::synth::{generate, SynthFunction, SynthSpec};
    use approx::assert_relative_eq;

    fn quick_config() -> TrainConfig {
        TrainConfig {
            max_epochs: 30,
            patience: 30,
            ..TrainConfig::default()
        }
    }

    fn sine_series(n: usize) -> TimeSeries {
        let values: Vec<f64> = (0..n).map(|i| (0.37 * i as f64).sin() + 2.0).collect();
        TimeSeries::new("sine", values).unwrap()
    }

    #[test]
    fn model_kind_tags_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.tag().parse::<ModelKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.tag().replace('-', "_")));
            assert_eq!(serde_json::from_str::<ModelKind>(&json).unwrap(), kind);
        }
        assert!("lstm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn memory_coefficients_stay_frozen_through_training() {
        let train_series = sine_series(120);
        let (model, _) = fit_ar_kan(&train_series, &quick_config(), 8).unwrap();
        let stats = fit_standardize(&train_series).unwrap();
        let z = apply_standardize(&train_series, &stats, false);
        let reference = fit_ar(&z, 8, 0).unwrap();
        match model.body() {
            ModelBody::ArKan { memory, .. } => assert_eq!(memory, &reference),
            other => panic!("wrong body {other:?}"),
        }
    }

    #[test]
    fn unit_memory_matches_plain_network() {
        let train_series = sine_series(100);
        let config = quick_config();
        let (plain, _) = fit_plain(ModelKind::Kan, &train_series, &config, 6).unwrap();
        let ModelBody::Kan { net } = plain.body() else {
            panic!("expected plain body");
        };
        let with_unit_memory = ForecastModel::new(
            *plain.stats(),
            6,
            ModelBody::ArKan {
                memory: ArModel {
                    p: 6,
                    coeffs: vec![1.0; 6],
                    d: 0,
                },
                net: net.clone(),
            },
        );
        let history = sine_series(40);
        let a = forecast_one_step(&plain, &history).unwrap();
        let b = forecast_one_step(&with_unit_memory, &history).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_network_forecasts_the_training_mean() {
        let train_series = sine_series(90);
        let (model, _) = fit_ar_kan(&train_series, &quick_config(), 5).unwrap();
        let ModelBody::ArKan { memory, net } = model.body() else {
            panic!("expected memory body");
        };
        let mut zeroed = net.clone();
        zeroed
            .set_params(&vec![0.0; zeroed.param_count()])
            .unwrap();
        let silenced = ForecastModel::new(
            *model.stats(),
            5,
            ModelBody::ArKan {
                memory: memory.clone(),
                net: zeroed,
            },
        );
        let pred = forecast_one_step(&silenced, &sine_series(50)).unwrap();
        assert_relative_eq!(pred, model.stats().mean, epsilon = 1e-12);
    }

    #[test]
    fn pure_ar_body_reproduces_ar_predict() {
        let train_series = sine_series(150);
        let stats = fit_standardize(&train_series).unwrap();
        let z = apply_standardize(&train_series, &stats, false);
        let ar = fit_ar(&z, 6, 0).unwrap();
        let as_arima = ForecastModel::new(
            stats,
            6,
            ModelBody::Arima(ArimaModel {
                p: 6,
                d: 0,
                q: 0,
                phi: ar.coeffs.clone(),
                theta: vec![],
                residual_history: vec![],
            }),
        );
        let history = sine_series(60);
        let zh: Vec<f64> = history
            .values()
            .iter()
            .map(|v| (v - stats.mean) / stats.std)
            .collect();
        let window = latest_window(&zh, 6).unwrap();
        let expected = ar_predict(&ar, &window).unwrap() * stats.std + stats.mean;
        let got = forecast_one_step(&as_arima, &history).unwrap();
        assert_relative_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn fitting_is_seed_deterministic() {
        let train_series = sine_series(110);
        let config = quick_config();
        let (a, ha) = fit_plain(ModelKind::Mlp, &train_series, &config, 6).unwrap();
        let (b, hb) = fit_plain(ModelKind::Mlp, &train_series, &config, 6).unwrap();
        assert_eq!(ha, hb);
        let history = sine_series(45);
        assert_eq!(
            forecast_one_step(&a, &history).unwrap(),
            forecast_one_step(&b, &history).unwrap()
        );
        let other_seed = TrainConfig {
            seed: 5,
            ..config
        };
        let (c, _) = fit_plain(ModelKind::Mlp, &train_series, &other_seed, 6).unwrap();
        assert_ne!(
            forecast_one_step(&a, &history).unwrap(),
            forecast_one_step(&c, &history).unwrap()
        );
    }

    #[test]
    fn rejects_short_or_degenerate_training_series() {
        let config = quick_config();
        let short = sine_series(8);
        assert!(fit_ar_kan(&short, &config, 6).is_err());
        let constant = TimeSeries::new("flat", vec![3.0; 50]).unwrap();
        assert!(fit_plain(ModelKind::Kan, &constant, &config, 6).is_err());
        assert!(fit_plain(ModelKind::Arima, &sine_series(100), &config, 6).is_err());
    }

    #[test]
    fn evaluate_matches_forecast_one_step_exactly() {
        let spec = SynthSpec {
            n: 120,
            ..SynthSpec::standard(SynthFunction::F1, 0.2, 3)
        };
        let full = generate(&spec).unwrap();
        let (train_part, _) = split(&full, 0.8).unwrap();
        let model = fit_arima(&train_part, 10).unwrap();
        let (mse_val, preds) = evaluate(&model, &full, 0.8).unwrap();
        assert_eq!(preds.len(), full.len() - train_part.len());
        assert!(mse_val.is_finite());

        for j in [0usize, 5, preds.len() - 1] {
            let k = train_part.len() + j;
            let history = TimeSeries::new("h", full.values()[..k].to_vec()).unwrap();
            let single = forecast_one_step(&model, &history).unwrap();
            assert_eq!(single, preds[j]);
        }

        let (mse_again, preds_again) = evaluate(&model, &full, 0.8).unwrap();
        assert_eq!(mse_val, mse_again);
        assert_eq!(preds, preds_again);
    }

    #[test]
    fn evaluate_agrees_across_threading_modes() {
        let spec = SynthSpec {
            n: 140,
            ..SynthSpec::standard(SynthFunction::F2, 0.1, 9)
        };
        let full = generate(&spec).unwrap();
        let (train_part, _) = split(&full, 0.8).unwrap();
        let model = fit_arima(&train_part, 12).unwrap();
        let seq = evaluate_threaded(&model, &full, 0.8, Threading::Sequential).unwrap();
        let par = evaluate_threaded(&model, &full, 0.8, Threading::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn perfect_and_zero_stubs_bound_the_metric() {
        let spec = SynthSpec {
            n: 200,
            ..SynthSpec::standard(SynthFunction::F1, 0.3, 5)
        };
        let full = generate(&spec).unwrap();
        let stats = {
            let (train_part, _) = split(&full, 0.8).unwrap();
            fit_standardize(&train_part).unwrap()
        };
        let z: Vec<f64> = full
            .values()
            .iter()
            .map(|v| (v - stats.mean) / stats.std)
            .collect();
        let n_train = ((0.8 * full.len() as f64 + 1e-9).floor()) as usize;
        let n_test = full.len() - n_train;

        let oracle: Vec<f64> = (0..n_test).map(|j| z[n_train + j]).collect();
        let oracle_mse = crate::analysis::mse(&oracle, &z[n_train..]).unwrap();
        assert_eq!(oracle_mse, 0.0);

        let zeros = vec![0.0; n_test];
        let zero_mse = crate::analysis::mse(&zeros, &z[n_train..]).unwrap();
        assert!(
            (0.2..5.0).contains(&zero_mse),
            "standardized test energy {zero_mse}"
        );
    }

    #[test]
    fn forecast_requires_enough_history() {
        let train_series = sine_series(120);
        let (model, _) = fit_ar_kan(&train_series, &quick_config(), 10).unwrap();
        let short = sine_series(5);
        assert!(forecast_one_step(&model, &short).is_err());
    }
}
