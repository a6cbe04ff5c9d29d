//! Molecule → network input: fingerprint bits followed by descriptor values,
//! standardized with statistics from the training rows.

use serde::{Deserialize, Serialize};

use super::PdeNetError;
use crate::chem::Molecule;
use crate::descriptors::{compute_descriptors, Constants, DescriptorSet};
use crate::fingerprint::{circular_fingerprint, FingerprintConfig};
use crate::Scalar;

/// Features whose training standard deviation is at or below this are dropped.
pub const MIN_FEATURE_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub fingerprint: FingerprintConfig,
    /// Names from [`DescriptorSet::FEATURE_NAMES`], in input order.
    pub descriptors: Vec<String>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            fingerprint: FingerprintConfig::default(),
            descriptors: DescriptorSet::FEATURE_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl FeatureConfig {
    pub fn raw_len(&self) -> usize {
        self.fingerprint.nbits() + self.descriptors.len()
    }

    fn descriptor_indices(&self) -> Result<Vec<usize>, PdeNetError> {
        self.descriptors
            .iter()
            .map(|name| {
                DescriptorSet::FEATURE_NAMES
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| {
                        PdeNetError::InvalidConfig(format!("unknown descriptor `{name}`"))
                    })
            })
            .collect()
    }

    /// Unnormalized feature vector of length [`raw_len`](Self::raw_len).
    pub fn raw_features(
        &self,
        mol: &Molecule,
        constants: &Constants,
    ) -> Result<Vec<f64>, PdeNetError> {
        let idx = self.descriptor_indices()?;
        let mut out: Vec<f64> = circular_fingerprint(mol, &self.fingerprint).to_dense();
        let d = compute_descriptors(mol, constants)
            .map_err(|e| PdeNetError::FeaturizationFailure(e.to_string()))?;
        let values = d.as_features();
        out.extend(idx.iter().map(|&i| values[i]));
        Ok(out)
    }
}

/// Per-feature mean and population standard deviation over the training
/// rows, for the retained (non-constant) features only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub raw_len: usize,
    /// Raw indices kept as network inputs, ascending.
    pub kept: Vec<usize>,
    /// Raw indices dropped for zero variance.
    pub dropped: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, PdeNetError> {
        let first = rows.first().ok_or(PdeNetError::EmptyDataset)?;
        let raw_len = first.len();
        if let Some(r) = rows.iter().find(|r| r.len() != raw_len) {
            return Err(PdeNetError::LengthMismatch(r.len(), raw_len));
        }
        let n = rows.len() as f64;
        let mut stats = NormStats {
            raw_len,
            kept: Vec::new(),
            dropped: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
        };
        for j in 0..raw_len {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if std > MIN_FEATURE_STD {
                stats.kept.push(j);
                stats.mean.push(mean);
                stats.std.push(std);
            } else {
                stats.dropped.push(j);
            }
        }
        if stats.kept.is_empty() {
            return Err(PdeNetError::FeaturizationFailure(
                "every feature is constant over the training rows".into(),
            ));
        }
        Ok(stats)
    }

    pub fn input_len(&self) -> usize {
        self.kept.len()
    }

    pub fn apply<T: Scalar>(&self, raw: &[f64]) -> Result<Vec<T>, PdeNetError> {
        if raw.len() != self.raw_len {
            return Err(PdeNetError::ShapeMismatch(format!(
                "raw feature vector has {} entries, expected {}",
                raw.len(),
                self.raw_len
            )));
        }
        Ok(self
            .kept
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&j, (&m, &s))| T::of((raw[j] - m) / s))
            .collect())
    }

    pub(crate) fn validate(&self) -> Result<(), PdeNetError> {
        let n = self.kept.len();
        let ok = self.mean.len() == n
            && self.std.len() == n
            && self.std.iter().all(|&s| s.is_finite() && s > 0.0)
            && self.kept.windows(2).all(|w| w[0] < w[1])
            && self
                .kept
                .iter()
                .chain(&self.dropped)
                .all(|&j| j < self.raw_len)
            && n + self.dropped.len() == self.raw_len;
        if ok {
            Ok(())
        } else {
            Err(PdeNetError::ShapeMismatch(
                "inconsistent normalization statistics".into(),
            ))
        }
    }
}
