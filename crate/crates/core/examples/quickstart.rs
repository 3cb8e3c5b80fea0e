//! Generates a noisy benchmark series, fits the memory-backed spline
//! forecaster, and scores it on the held-out tail.
//!
//! Run with: cargo run --release --example quickstart

use arkan_core::models::{evaluate, fit_model, ModelKind, DEFAULT_P};
use arkan_core::nn::TrainConfig;
use arkan_core::series::split;
use arkan_core::synth::{SynthFunction, SynthSpec};
use arkan_core::Result;

fn main() -> Result<()> {
    let spec = SynthSpec::standard(SynthFunction::F1, 0.1, 1);
    let series = arkan_core::synth::generate(&spec)?;
    let (train, _test) = split(&series, 0.8)?;

    let config = TrainConfig {
        max_epochs: 400,
        patience: 50,
        seed: 1,
        ..TrainConfig::default()
    };
    let (model, history) = fit_model(ModelKind::ArKan, &train, &config, DEFAULT_P)?;
    if let Some(h) = history {
        println!(
            "trained {} epochs, best validation loss {:.6} at epoch {}",
            h.val_loss.len(),
            h.best_val_loss,
            h.best_epoch
        );
    }

    let (test_mse, predictions) = evaluate(&model, &series, 0.8)?;
    println!("test mse over {} held-out points: {test_mse:.6}", predictions.len());
    Ok(())
}
