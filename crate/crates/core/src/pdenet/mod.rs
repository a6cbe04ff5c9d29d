//! pIC50 regression: dataset records, the 78/12 split, featurization, the
//! MLP itself, evaluation and the activity gate.

pub mod features;
mod mlp;
mod persist;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::Molecule;
use crate::descriptors::Constants;
use crate::hash::derive_seed;
use crate::Scalar;

pub use features::{FeatureConfig, NormStats};
pub use mlp::{
    init_model, mse_loss, Activation, AdamState, Gradients, LossCurve, MlpModel, Params, TrainMeta,
    ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON,
};
pub use persist::MODEL_FORMAT_VERSION;

/// Predicted pIC50 must exceed this for a compound to pass the screen.
pub const SCREEN_GATE_PIC50: f64 = 5.7;
/// Training labels: a measured pIC50 at or above this counts as active.
pub const ACTIVE_LABEL_PIC50: f64 = 6.0;
/// Allowed gap between a stored pIC50 and the one implied by IC50.
pub const PIC50_CONSISTENCY_TOL: f64 = 1e-6;
pub const MIN_SPLIT_RECORDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeNetError {
    #[error("IC50 must be positive, got {0}")]
    NonPositiveIC50(f64),
    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("featurization failed: {0}")]
    FeaturizationFailure(String),
    #[error("inconsistent record {id}: {msg}")]
    InvalidRecord { id: String, msg: String },
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Pde4,
    Pde7,
    Xo,
    Custom(String),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Pde4 => f.write_str("PDE4"),
            Target::Pde7 => f.write_str("PDE7"),
            Target::Xo => f.write_str("XO"),
            Target::Custom(s) => f.write_str(s),
        }
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty target name".into());
        }
        Ok(match s.to_ascii_uppercase().as_str() {
            "PDE4" => Target::Pde4,
            "PDE7" => Target::Pde7,
            "XO" | "XOI" => Target::Xo,
            _ => Target::Custom(s.to_string()),
        })
    }
}

impl Serialize for Target {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// `9 − log10(IC50 / nM)`.
pub fn ic50_to_pic50(ic50_nm: f64) -> Result<f64, PdeNetError> {
    if !(ic50_nm.is_finite() && ic50_nm > 0.0) {
        return Err(PdeNetError::NonPositiveIC50(ic50_nm));
    }
    Ok(9.0 - ic50_nm.log10())
}

/// Strict gate: active iff `pic50 > threshold`.
pub fn passes_gate(pic50: f64, threshold: f64) -> bool {
    pic50 > threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub name: Option<String>,
    pub smiles: String,
    pub canonical_smiles: String,
    pub ic50_nm: Option<f64>,
    pub pic50: Option<f64>,
    pub target: Target,
    pub active: Option<bool>,
    /// Free-form structural class label, used by class summaries.
    pub class: Option<String>,
}

impl DatasetRecord {
    /// Fills `pic50` from `ic50_nm` when only the latter is given and checks
    /// agreement when both are.
    pub fn normalized(mut self) -> Result<Self, PdeNetError> {
        let invalid = |msg: String| PdeNetError::InvalidRecord {
            id: self.id.clone(),
            msg,
        };
        if let Some(ic50) = self.ic50_nm {
            let derived = ic50_to_pic50(ic50).map_err(|e| invalid(e.to_string()))?;
            match self.pic50 {
                Some(p) if (p - derived).abs() > PIC50_CONSISTENCY_TOL => {
                    return Err(invalid(format!(
                        "pIC50 {p} disagrees with IC50 {ic50} nM ({derived})"
                    )));
                }
                Some(_) => {}
                None => self.pic50 = Some(derived),
            }
        }
        if let Some(p) = self.pic50 {
            if !p.is_finite() {
                return Err(invalid(format!("pIC50 {p} is not finite")));
            }
        }
        Ok(self)
    }

    /// Stored label, else the pIC50 rule.
    pub fn activity_label(&self) -> Option<bool> {
        self.active.or(self.pic50.map(|p| p >= ACTIVE_LABEL_PIC50))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub seed: u64,
    pub train_frac: f64,
    pub test_frac: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 100,
            hidden_layers: vec![256, 64],
            activation: Activation::Relu,
            dropout_rate: 0.0,
            seed: 0,
            train_frac: 0.78,
            test_frac: 0.12,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PdeNetError> {
        let bad = |m: &str| Err(PdeNetError::InvalidConfig(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.hidden_layers.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must lie in [0, 1)");
        }
        if !(self.train_frac >= 0.0
            && self.test_frac >= 0.0
            && self.train_frac + self.test_frac <= 1.0)
        {
            return bad("train and test fractions must be non-negative and sum to at most 1");
        }
        Ok(())
    }
}

/// Parts per million, so that split sizes use integer arithmetic.
fn ppm(frac: f64) -> u64 {
    (frac * 1e6).round() as u64
}

/// Index partition `(train, test, holdout)`: seeded shuffle, then
/// `floor(train_frac·n)`, `floor(test_frac·n)` and the remainder.
pub fn split_indices(n: usize, cfg: &TrainConfig) -> Result<[Vec<usize>; 3], PdeNetError> {
    cfg.validate()?;
    if n < MIN_SPLIT_RECORDS {
        return Err(PdeNetError::TooFewRecords {
            needed: MIN_SPLIT_RECORDS,
            got: n,
        });
    }
    let n_train = (n as u64 * ppm(cfg.train_frac) / 1_000_000) as usize;
    let n_test = (n as u64 * ppm(cfg.test_frac) / 1_000_000) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let holdout = order.split_off(n_train + n_test);
    let test = order.split_off(n_train);
    Ok([order, test, holdout])
}

/// Records in (train, test, holdout) order.
pub type Split<R> = (Vec<R>, Vec<R>, Vec<R>);

pub fn split_dataset<R: Clone>(records: &[R], cfg: &TrainConfig) -> Result<Split<R>, PdeNetError> {
    let [a, b, c] = split_indices(records.len(), cfg)?;
    let take = |idx: Vec<usize>| idx.into_iter().map(|i| records[i].clone()).collect();
    Ok((take(a), take(b), take(c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mse: f64,
    pub r2: f64,
    pub confusion: Confusion,
}

/// MSE, coefficient of determination and the confusion table, with both
/// predicted and measured values classified by the strict gate.
///
/// When every measured value is equal, `r2` is 1 for a perfect predictor
/// and 0 otherwise.
pub fn evaluate_predictions(
    predicted: &[f64],
    actual: &[f64],
    gate: f64,
) -> Result<Evaluation, PdeNetError> {
    let mse = mse_loss(predicted, actual)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    let ss_res: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    let mut c = Confusion::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (passes_gate(p, gate), passes_gate(a, gate)) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, false) => c.true_negative += 1,
            (false, true) => c.false_negative += 1,
        }
    }
    Ok(Evaluation {
        mse,
        r2,
        confusion: c,
    })
}

impl<T: Scalar> MlpModel<T> {
    /// Normalized network input for a molecule; needs the stored feature
    /// configuration and statistics.
    pub fn featurize(&self, mol: &Molecule, constants: &Constants) -> Result<Vec<T>, PdeNetError> {
        let (Some(fc), Some(stats)) = (&self.feature_config, &self.norm_stats) else {
            return Err(PdeNetError::InvalidConfig(
                "model carries no feature configuration".into(),
            ));
        };
        stats.apply(&fc.raw_features(mol, constants)?)
    }

    pub fn predict_molecule(
        &self,
        mol: &Molecule,
        constants: &Constants,
    ) -> Result<f64, PdeNetError> {
        Ok(self.forward(&self.featurize(mol, constants)?)?.as_f64())
    }

    /// MSE, r² and gate confusion on labelled rows.
    pub fn evaluate(&self, rows: &[(Vec<T>, T)], gate: f64) -> Result<Evaluation, PdeNetError> {
        let predicted = rows
            .iter()
            .map(|(x, _)| self.forward(x).map(Scalar::as_f64))
            .collect::<Result<Vec<_>, _>>()?;
        let actual: Vec<f64> = rows.iter().map(|r| r.1.as_f64()).collect();
        evaluate_predictions(&predicted, &actual, gate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub pic50: f64,
    pub active: bool,
}

/// Sort by predicted pIC50 descending, ties by id ascending.
pub fn rank_predictions(preds: &mut [Prediction]) {
    preds.sort_by(|a, b| b.pic50.total_cmp(&a.pic50).then_with(|| a.id.cmp(&b.id)));
}

/// Predict every molecule, gate at `threshold` and rank. Molecules that
/// cannot be featurized are logged and left out.
pub fn predict_and_gate<T: Scalar>(
    model: &MlpModel<T>,
    molecules: &[(String, Molecule)],
    threshold: f64,
    constants: &Constants,
) -> Vec<Prediction> {
    let mut out: Vec<Prediction> = molecules
        .par_iter()
        .filter_map(|(id, mol)| match model.predict_molecule(mol, constants) {
            Ok(p) => Some(Prediction {
                id: id.clone(),
                pic50: p,
                active: passes_gate(p, threshold),
            }),
            Err(e) => {
                log::warn!("{id}: skipped, {e}");
                None
            }
        })
        .collect();
    rank_predictions(&mut out);
    out
}

/// Everything produced by [`fit_pdenet`].
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: MlpModel<T>,
    pub curve: LossCurve<T>,
    /// Metrics on the test partition.
    pub test: Evaluation,
    /// Records in (train, test, holdout) after featurization failures.
    pub split_sizes: [usize; 3],
    pub skipped: Vec<String>,
}

/// Train one model for `target` from labelled records.
///
/// Records of other targets or without pIC50 are ignored. The split, the
/// weight initialization and the training stream use seeds derived from
/// `cfg.seed` with the stage names `split`, `init` and `train`. The holdout
/// partition is the per-epoch validation set.
pub fn fit_pdenet<T: Scalar>(
    records: &[DatasetRecord],
    target: &Target,
    cfg: &TrainConfig,
    feature_config: &FeatureConfig,
    constants: &Constants,
) -> Result<TrainOutcome<T>, PdeNetError> {
    cfg.validate()?;
    let usable: Vec<&DatasetRecord> = records
        .iter()
        .filter(|r| &r.target == target && r.pic50.is_some())
        .collect();
    let mut rows: Vec<(String, Vec<f64>, f64)> = Vec::new();
    let mut skipped = Vec::new();
    let featurized: Vec<_> = usable
        .par_iter()
        .map(|r| {
            crate::chem::parse_smiles(&r.canonical_smiles)
                .map_err(|e| PdeNetError::FeaturizationFailure(e.to_string()))
                .and_then(|m| feature_config.raw_features(&m, constants))
        })
        .collect();
    for (r, f) in usable.iter().zip(featurized) {
        match f {
            Ok(x) => rows.push((r.id.clone(), x, r.pic50.expect("filtered"))),
            Err(e) => {
                log::warn!("{}: skipped, {e}", r.id);
                skipped.push(r.id.clone());
            }
        }
    }
    let split_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, "split"),
        ..cfg.clone()
    };
    let [tr, te, ho] = split_indices(rows.len(), &split_cfg)?;
    let raw_train: Vec<Vec<f64>> = tr.iter().map(|&i| rows[i].1.clone()).collect();
    let stats = NormStats::fit(&raw_train)?;
    let norm = |idx: &[usize]| -> Result<Vec<(Vec<T>, T)>, PdeNetError> {
        idx.iter()
            .map(|&i| Ok((stats.apply(&rows[i].1)?, T::of(rows[i].2))))
            .collect()
    };
    let (train, test, holdout) = (norm(&tr)?, norm(&te)?, norm(&ho)?);

    let mut sizes = vec![stats.input_len()];
    sizes.extend(&cfg.hidden_layers);
    sizes.push(1);
    let mut model: MlpModel<T> = init_model(&sizes, cfg.activation, derive_seed(cfg.seed, "init"))?;
    model.target = Some(target.clone());
    model.feature_config = Some(feature_config.clone());
    model.norm_stats = Some(stats);
    let train_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, "train"),
        ..cfg.clone()
    };
    let validation = if holdout.is_empty() { &test } else { &holdout };
    let curve = model.train(&train, validation, &train_cfg)?;
    if let Some(meta) = model.train_meta.as_mut() {
        meta.seed = cfg.seed;
    }
    let test_eval = model.evaluate(
        if test.is_empty() { &train } else { &test },
        SCREEN_GATE_PIC50,
    )?;
    Ok(TrainOutcome {
        model,
        curve,
        test: test_eval,
        split_sizes: [tr.len(), te.len(), ho.len()],
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pic50_conversion() {
        assert_eq!(ic50_to_pic50(1.0).unwrap(), 9.0);
        assert_eq!(ic50_to_pic50(1000.0).unwrap(), 6.0);
        assert!((ic50_to_pic50(0.59).unwrap() - 9.229).abs() < 1e-3);
        assert!(matches!(
            ic50_to_pic50(0.0),
            Err(PdeNetError::NonPositiveIC50(_))
        ));
        assert!(ic50_to_pic50(-3.0).is_err());
    }

    #[test]
    fn split_sizes() {
        let cfg = TrainConfig::default();
        for (n, expect) in [
            (100, [78, 12, 10]),
            (1261, [983, 151, 127]),
            (10, [7, 1, 2]),
        ] {
            let parts = split_indices(n, &cfg).unwrap();
            assert_eq!(parts.each_ref().map(Vec::len), expect, "n = {n}");
            let mut all: Vec<usize> = parts.concat();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        assert!(matches!(
            split_indices(9, &cfg),
            Err(PdeNetError::TooFewRecords { .. })
        ));
        assert_eq!(
            split_indices(50, &cfg).unwrap(),
            split_indices(50, &cfg).unwrap()
        );
        let other = TrainConfig {
            seed: 1,
            ..cfg.clone()
        };
        assert_ne!(
            split_indices(50, &cfg).unwrap(),
            split_indices(50, &other).unwrap()
        );
    }

    #[test]
    fn gate_is_strict() {
        let actives: Vec<f64> = [5.69, 5.70, 5.71]
            .into_iter()
            .filter(|&p| passes_gate(p, 5.7))
            .collect();
        assert_eq!(actives, vec![5.71]);
    }

    #[test]
    fn evaluation_edges() {
        let perfect = evaluate_predictions(&[5.0, 6.0, 7.0], &[5.0, 6.0, 7.0], 5.7).unwrap();
        assert_eq!((perfect.mse, perfect.r2), (0.0, 1.0));
        let mean = evaluate_predictions(&[6.0, 6.0, 6.0], &[5.0, 6.0, 7.0], 5.7).unwrap();
        assert_eq!(mean.r2, 0.0);
        let c = evaluate_predictions(&[6.0, 6.0, 5.0, 5.0], &[6.0, 5.0, 5.0, 6.0], 5.7)
            .unwrap()
            .confusion;
        assert_eq!(
            c,
            Confusion {
                true_positive: 1,
                false_positive: 1,
                true_negative: 1,
                false_negative: 1
            }
        );
    }

    #[test]
    fn record_normalization() {
        let rec = DatasetRecord {
            id: "1".into(),
            name: None,
            smiles: "C".into(),
            canonical_smiles: "C".into(),
            ic50_nm: Some(0.59),
            pic50: None,
            target: Target::Xo,
            active: None,
            class: None,
        };
        let r = rec.clone().normalized().unwrap();
        assert!((r.pic50.unwrap() - 9.229).abs() < 1e-3);
        assert_eq!(r.activity_label(), Some(true));
        let bad = DatasetRecord {
            pic50: Some(5.0),
            ..rec
        };
        assert!(bad.normalized().is_err());
    }

    #[test]
    fn target_names() {
        assert_eq!("pde4".parse::<Target>().unwrap(), Target::Pde4);
        assert_eq!("XOI".parse::<Target>().unwrap(), Target::Xo);
        assert_eq!(
            "COX2".parse::<Target>().unwrap(),
            Target::Custom("COX2".into())
        );
        assert_eq!(serde_json::to_string(&Target::Pde7).unwrap(), "\"PDE7\"");
    }

    #[test]
    fn ranking_ties_by_id() {
        let mut p = vec![
            Prediction {
                id: "b".into(),
                pic50: 6.0,
                active: true,
            },
            Prediction {
                id: "a".into(),
                pic50: 6.0,
                active: true,
            },
            Prediction {
                id: "c".into(),
                pic50: 7.0,
                active: true,
            },
        ];
        rank_predictions(&mut p);
        let ids: Vec<_> = p.iter().map(|x| x.id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }
}
