//! Fitted-model persistence.
//!
//! Models are stored as pretty-printed JSON behind a format version gate.
//! Struct field order fixes the key order, so saving the same model twice
//! produces identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::armemory::ArModel;
use crate::error::{ArkanError, Result};
use crate::kan::{KanNetwork, SplineGrid};
use crate::models::{ArimaModel, ForecastModel, ModelBody, ModelKind};
use crate::nn::MlpNetwork;
use crate::series::StandardizationStats;
use crate::FORMAT_VERSION;

#[derive(Serialize, Deserialize)]
struct KanDoc {
    widths: Vec<usize>,
    grid: SplineGrid,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MlpDoc {
    widths: Vec<usize>,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    variant: ModelKind,
    p: usize,
    stats: StandardizationStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    memory: Option<ArModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kan: Option<KanDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mlp: Option<MlpDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arima: Option<ArimaModel>,
}

fn kan_doc(net: &KanNetwork) -> KanDoc {
    KanDoc {
        widths: net.widths().to_vec(),
        grid: net.grid().clone(),
        params: net.flatten_params(),
    }
}

fn mlp_doc(net: &MlpNetwork) -> MlpDoc {
    MlpDoc {
        widths: net.widths().to_vec(),
        params: net.flatten_params(),
    }
}

/// Writes `model` to `path` as JSON.
pub fn save_model(model: &ForecastModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut doc = ModelDoc {
        format_version: FORMAT_VERSION,
        variant: model.kind(),
        p: model.p(),
        stats: *model.stats(),
        memory: None,
        kan: None,
        mlp: None,
        arima: None,
    };
    match model.body() {
        ModelBody::ArKan { memory, net } => {
            doc.memory = Some(memory.clone());
            doc.kan = Some(kan_doc(net));
        }
        ModelBody::ArMlp { memory, net } => {
            doc.memory = Some(memory.clone());
            doc.mlp = Some(mlp_doc(net));
        }
        ModelBody::Kan { net } => doc.kan = Some(kan_doc(net)),
        ModelBody::Mlp { net } => doc.mlp = Some(mlp_doc(net)),
        ModelBody::Arima(arima_model) => doc.arima = Some(arima_model.clone()),
    }
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| ArkanError::BadDocument(format!("serializing model: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| ArkanError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn bad(path: &Path, reason: impl std::fmt::Display) -> ArkanError {
    ArkanError::BadDocument(format!("{}: {reason}", path.display()))
}

fn rebuild_kan(path: &Path, p: usize, doc: &KanDoc) -> Result<KanNetwork> {
    if doc.widths.first() != Some(&p) {
        return Err(bad(path, format!("network input width disagrees with p={p}")));
    }
    let mut net = KanNetwork::init(&doc.widths, doc.grid.clone(), 0)?;
    if doc.params.len() != net.param_count() {
        return Err(bad(
            path,
            format!(
                "expected {} spline-network parameters, got {}",
                net.param_count(),
                doc.params.len()
            ),
        ));
    }
    net.set_params(&doc.params)?;
    Ok(net)
}

fn rebuild_mlp(path: &Path, p: usize, doc: &MlpDoc) -> Result<MlpNetwork> {
    if doc.widths.first() != Some(&p) {
        return Err(bad(path, format!("network input width disagrees with p={p}")));
    }
    let mut net = MlpNetwork::init(&doc.widths, 0)?;
    if doc.params.len() != net.param_count() {
        return Err(bad(
            path,
            format!(
                "expected {} network parameters, got {}",
                net.param_count(),
                doc.params.len()
            ),
        ));
    }
    net.set_params(&doc.params)?;
    Ok(net)
}

/// Reads a model written by [`save_model`], rejecting version or payload
/// mismatches.
pub fn load_model(path: impl AsRef<Path>) -> Result<ForecastModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ArkanError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let doc: ModelDoc = serde_json::from_str(&text).map_err(|e| bad(path, e))?;

    if doc.format_version != FORMAT_VERSION {
        return Err(bad(
            path,
            format!(
                "format version {} is not supported, expected {FORMAT_VERSION}",
                doc.format_version
            ),
        ));
    }
    if !(doc.stats.std.is_finite() && doc.stats.std > 0.0 && doc.stats.mean.is_finite()) {
        return Err(bad(path, "standardization stats are not usable"));
    }
    let finite = |params: &[f64]| params.iter().all(|v| v.is_finite());
    match (&doc.kan, &doc.mlp, &doc.arima) {
        (Some(k), None, None) if !finite(&k.params) => {
            return Err(bad(path, "non-finite parameter"));
        }
        (None, Some(m), None) if !finite(&m.params) => {
            return Err(bad(path, "non-finite parameter"));
        }
        _ => {}
    }
    if let Some(memory) = &doc.memory {
        if memory.p != doc.p || !finite(&memory.coeffs) {
            return Err(bad(path, "memory coefficients are not usable"));
        }
    }

    let body = match (doc.variant, doc.memory, doc.kan, doc.mlp, doc.arima) {
        (ModelKind::ArKan, Some(memory), Some(k), None, None) => ModelBody::ArKan {
            memory,
            net: rebuild_kan(path, doc.p, &k)?,
        },
        (ModelKind::ArMlp, Some(memory), None, Some(m), None) => ModelBody::ArMlp {
            memory,
            net: rebuild_mlp(path, doc.p, &m)?,
        },
        (ModelKind::Kan, None, Some(k), None, None) => ModelBody::Kan {
            net: rebuild_kan(path, doc.p, &k)?,
        },
        (ModelKind::Mlp, None, None, Some(m), None) => ModelBody::Mlp {
            net: rebuild_mlp(path, doc.p, &m)?,
        },
        (ModelKind::Arima, None, None, None, Some(arima_model)) => {
            if arima_model.p != doc.p {
                return Err(bad(path, format!("order disagrees with p={}", doc.p)));
            }
            ModelBody::Arima(arima_model)
        }
        (variant, ..) => {
            return Err(bad(
                path,
                format!("payload does not match declared variant {variant}"),
            ));
        }
    };
    Ok(ForecastModel::new(doc.stats, doc.p, body))
}
