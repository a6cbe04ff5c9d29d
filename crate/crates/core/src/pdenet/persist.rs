//! Versioned JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, NormStats};
use super::mlp::{check_layer_sizes, Activation, AdamState, MlpModel, Params, TrainMeta};
use super::{PdeNetError, Target};
use crate::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    target: Option<Target>,
    layer_sizes: Vec<usize>,
    activation: Activation,
    /// `weights[l][out][in]`
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
    feature_config: Option<FeatureConfig>,
    norm_stats: Option<NormStats>,
    train_meta: Option<TrainMeta>,
}

fn format_err(msg: impl Into<String>) -> PdeNetError {
    PdeNetError::Format(msg.into())
}

impl<T: Scalar> MlpModel<T> {
    /// Serialize weights, featurization and training metadata. Optimizer
    /// moments are not stored; a loaded model starts a fresh Adam state.
    pub fn to_json(&self) -> String {
        let weights = self
            .params
            .w
            .iter()
            .enumerate()
            .map(|(l, w)| {
                w.chunks(self.layer_sizes[l])
                    .map(|row| row.iter().map(|v| v.as_f64()).collect())
                    .collect()
            })
            .collect();
        let doc = ModelDoc {
            format_version: MODEL_FORMAT_VERSION,
            target: self.target.clone(),
            layer_sizes: self.layer_sizes.clone(),
            activation: self.activation,
            weights,
            biases: self
                .params
                .b
                .iter()
                .map(|b| b.iter().map(|v| v.as_f64()).collect())
                .collect(),
            feature_config: self.feature_config.clone(),
            norm_stats: self.norm_stats.clone(),
            train_meta: self.train_meta.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    /// Parse and validate every shape and the format version.
    pub fn from_json(text: &str) -> Result<Self, PdeNetError> {
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| format_err(e.to_string()))?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(format_err(format!(
                "format_version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let sizes = &doc.layer_sizes;
        check_layer_sizes(sizes)?;
        let layers = sizes.len() - 1;
        if doc.weights.len() != layers || doc.biases.len() != layers {
            return Err(format_err(format!(
                "expected {layers} weight and bias layers"
            )));
        }
        let mut params = Params::<T>::zeros(sizes);
        for l in 0..layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let rows = &doc.weights[l];
            if rows.len() != n_out || rows.iter().any(|r| r.len() != n_in) {
                return Err(format_err(format!(
                    "layer {l} weights must be {n_out}x{n_in}"
                )));
            }
            if doc.biases[l].len() != n_out {
                return Err(format_err(format!(
                    "layer {l} bias must have {n_out} entries"
                )));
            }
            let flat = rows.iter().flatten().chain(&doc.biases[l]);
            if flat.clone().any(|v| !v.is_finite()) {
                return Err(format_err(format!("layer {l} has non-finite parameters")));
            }
            params.w[l] = rows.iter().flatten().map(|&v| T::of(v)).collect();
            params.b[l] = doc.biases[l].iter().map(|&v| T::of(v)).collect();
        }
        match (&doc.feature_config, &doc.norm_stats) {
            (Some(fc), Some(ns)) => {
                ns.validate()?;
                if ns.raw_len != fc.raw_len() {
                    return Err(format_err("norm_stats do not match feature_config"));
                }
                if ns.input_len() != sizes[0] {
                    return Err(format_err(
                        "norm_stats keep a different number of inputs than layer 0",
                    ));
                }
            }
            (None, None) => {}
            _ => {
                return Err(format_err(
                    "feature_config and norm_stats must appear together",
                ))
            }
        }
        Ok(MlpModel {
            layer_sizes: sizes.clone(),
            activation: doc.activation,
            params,
            adam: AdamState {
                m: Params::zeros(sizes),
                v: Params::zeros(sizes),
                step: 0,
            },
            target: doc.target,
            feature_config: doc.feature_config,
            norm_stats: doc.norm_stats,
            train_meta: doc.train_meta,
        })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    pub fn load(path: &Path) -> Result<Self, PdeNetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
