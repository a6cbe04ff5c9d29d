//! Fully connected regression network with manual backpropagation and Adam.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, NormStats};
use super::{PdeNetError, Target, TrainConfig};
use crate::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                T::one() - t * t
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(format!("unknown activation `{other}` (relu, tanh)")),
        }
    }
}

/// Per-layer parameter-shaped buffers: `w[l]` is `out × in` row-major,
/// `b[l]` has `out` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub w: Vec<Vec<T>>,
    pub b: Vec<Vec<T>>,
}

impl<T: Scalar> Params<T> {
    pub fn zeros(layer_sizes: &[usize]) -> Self {
        let pairs = layer_sizes.windows(2);
        Params {
            w: pairs
                .clone()
                .map(|p| vec![T::zero(); p[0] * p[1]])
                .collect(),
            b: pairs.map(|p| vec![T::zero(); p[1]]).collect(),
        }
    }

    fn same_shape(&self, other: &Params<T>) -> bool {
        self.w.len() == other.w.len()
            && self.b.len() == other.b.len()
            && self.w.iter().zip(&other.w).all(|(a, b)| a.len() == b.len())
            && self.b.iter().zip(&other.b).all(|(a, b)| a.len() == b.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.w.iter().flatten().chain(self.b.iter().flatten())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.w
            .iter_mut()
            .flatten()
            .chain(self.b.iter_mut().flatten())
    }
}

pub type Gradients<T> = Params<T>;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Params<T>,
    pub v: Params<T>,
    pub step: u64,
}

/// Training hyperparameters recorded with a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

/// Per-epoch mean squared errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve<T> {
    pub train_mse: Vec<T>,
    pub validation_mse: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub params: Params<T>,
    pub adam: AdamState<T>,
    pub target: Option<Target>,
    /// Present for models that consume molecules rather than raw vectors.
    pub feature_config: Option<FeatureConfig>,
    pub norm_stats: Option<NormStats>,
    pub train_meta: Option<TrainMeta>,
}

pub(super) fn check_layer_sizes(layer_sizes: &[usize]) -> Result<(), PdeNetError> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) || *layer_sizes.last().unwrap() != 1 {
        return Err(PdeNetError::InvalidConfig(format!(
            "layer sizes {layer_sizes:?} must have >= 2 positive entries ending in 1"
        )));
    }
    Ok(())
}

/// Weights uniform in `±1/√fan_in` from a ChaCha8 stream seeded with `seed`,
/// drawn layer by layer in row-major order; biases and Adam moments zero.
pub fn init_model<T: Scalar>(
    layer_sizes: &[usize],
    activation: Activation,
    seed: u64,
) -> Result<MlpModel<T>, PdeNetError> {
    check_layer_sizes(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Params::zeros(layer_sizes);
    for (l, w) in params.w.iter_mut().enumerate() {
        let bound = 1.0 / (layer_sizes[l] as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        for x in w.iter_mut() {
            *x = T::of(dist.sample(&mut rng));
        }
    }
    Ok(MlpModel {
        layer_sizes: layer_sizes.to_vec(),
        activation,
        adam: AdamState {
            m: Params::zeros(layer_sizes),
            v: Params::zeros(layer_sizes),
            step: 0,
        },
        params,
        target: None,
        feature_config: None,
        norm_stats: None,
        train_meta: None,
    })
}

/// Mean of squared differences.
pub fn mse_loss<T: Scalar>(predictions: &[T], targets: &[T]) -> Result<T, PdeNetError> {
    if predictions.len() != targets.len() {
        return Err(PdeNetError::LengthMismatch(
            predictions.len(),
            targets.len(),
        ));
    }
    if predictions.is_empty() {
        return Err(PdeNetError::EmptyDataset);
    }
    let sum: T = predictions
        .iter()
        .zip(targets)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum();
    Ok(sum / T::of(predictions.len() as f64))
}

struct Trace<T> {
    /// Pre-activations per layer.
    z: Vec<Vec<T>>,
    /// Layer inputs: `a[0]` is the sample, `a[l]` feeds layer `l`.
    a: Vec<Vec<T>>,
    /// Inverted-dropout multipliers applied to hidden outputs.
    masks: Vec<Vec<T>>,
}

impl<T: Scalar> MlpModel<T> {
    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn layer_count(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn affine(&self, l: usize, input: &[T]) -> Vec<T> {
        let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let w = &self.params.w[l];
        (0..n_out)
            .map(|o| {
                let row = &w[o * n_in..(o + 1) * n_in];
                row.iter().zip(input).map(|(&a, &b)| a * b).sum::<T>() + self.params.b[l][o]
            })
            .collect()
    }

    fn check_input(&self, x: &[T]) -> Result<(), PdeNetError> {
        if x.len() != self.input_size() {
            return Err(PdeNetError::ShapeMismatch(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.input_size()
            )));
        }
        Ok(())
    }

    /// Affine-activation chain with a linear output unit.
    pub fn forward(&self, x: &[T]) -> Result<T, PdeNetError> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for l in 0..self.layer_count() {
            let z = self.affine(l, &a);
            a = if l + 1 == self.layer_count() {
                z
            } else {
                z.into_iter().map(|v| self.activation.apply(v)).collect()
            };
        }
        Ok(a[0])
    }

    fn forward_trace(&self, x: &[T], dropout: Option<(f64, &mut ChaCha8Rng)>) -> Trace<T> {
        let last = self.layer_count() - 1;
        let mut trace = Trace {
            z: Vec::new(),
            a: vec![x.to_vec()],
            masks: Vec::new(),
        };
        let mut dropout = dropout;
        for l in 0..=last {
            let z = self.affine(l, &trace.a[l]);
            if l < last {
                let mut out: Vec<T> = z.iter().map(|&v| self.activation.apply(v)).collect();
                let mask: Vec<T> = match dropout.as_mut() {
                    Some((rate, rng)) if *rate > 0.0 => {
                        let keep = T::of(1.0 / (1.0 - *rate));
                        (0..out.len())
                            .map(|_| {
                                if rng.gen::<f64>() < *rate {
                                    T::zero()
                                } else {
                                    keep
                                }
                            })
                            .collect()
                    }
                    _ => vec![T::one(); out.len()],
                };
                for (o, &m) in out.iter_mut().zip(&mask) {
                    *o *= m;
                }
                trace.masks.push(mask);
                trace.a.push(out);
            }
            trace.z.push(z);
        }
        trace
    }

    fn accumulate(&self, trace: &Trace<T>, dl_dy: T, grads: &mut Gradients<T>) {
        let mut delta = vec![dl_dy];
        for l in (0..self.layer_count()).rev() {
            let n_in = self.layer_sizes[l];
            let input = &trace.a[l];
            for (o, &d) in delta.iter().enumerate() {
                grads.b[l][o] += d;
                let row = &mut grads.w[l][o * n_in..(o + 1) * n_in];
                for (g, &x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params.w[l];
            delta = (0..n_in)
                .map(|i| {
                    let back: T = delta
                        .iter()
                        .enumerate()
                        .map(|(o, &d)| w[o * n_in + i] * d)
                        .sum();
                    back * trace.masks[l - 1][i] * self.activation.derivative(trace.z[l - 1][i])
                })
                .collect();
        }
    }

    fn batch_gradients(
        &self,
        xs: &[&[T]],
        ys: &[T],
        mut dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<(T, Gradients<T>), PdeNetError> {
        if xs.len() != ys.len() {
            return Err(PdeNetError::LengthMismatch(xs.len(), ys.len()));
        }
        if xs.is_empty() {
            return Err(PdeNetError::EmptyDataset);
        }
        let n = T::of(xs.len() as f64);
        let mut grads = Params::zeros(&self.layer_sizes);
        let mut loss = T::zero();
        for (x, &y) in xs.iter().zip(ys) {
            self.check_input(x)?;
            let d = dropout.as_mut().map(|(r, rng)| (*r, &mut **rng));
            let trace = self.forward_trace(x, d);
            let err = trace.z.last().unwrap()[0] - y;
            loss += err * err;
            self.accumulate(&trace, T::of(2.0) * err / n, &mut grads);
        }
        Ok((loss / n, grads))
    }

    /// Batch MSE and its gradient with respect to every parameter.
    pub fn loss_and_gradients(
        &self,
        xs: &[&[T]],
        ys: &[T],
    ) -> Result<(T, Gradients<T>), PdeNetError> {
        self.batch_gradients(xs, ys, None)
    }

    /// One bias-corrected Adam update; increments the step counter.
    pub fn adam_step(&mut self, grads: &Gradients<T>, lr: T) -> Result<(), PdeNetError> {
        if !grads.same_shape(&self.params) {
            return Err(PdeNetError::ShapeMismatch(
                "gradient shapes differ from parameters".into(),
            ));
        }
        self.adam.step += 1;
        let t = self.adam.step as f64;
        let (b1, b2) = (T::of(ADAM_BETA1), T::of(ADAM_BETA2));
        let c1 = T::of(1.0 - ADAM_BETA1.powf(t));
        let c2 = T::of(1.0 - ADAM_BETA2.powf(t));
        let eps = T::of(ADAM_EPSILON);
        let AdamState { m, v, .. } = &mut self.adam;
        for (((p, &g), m), v) in self
            .params
            .iter_mut()
            .zip(grads.iter())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }

    pub fn predict_many(&self, xs: &[Vec<T>]) -> Result<Vec<T>, PdeNetError> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    /// Mini-batch Adam on MSE.
    ///
    /// Each epoch reshuffles the training rows with a ChaCha8 stream seeded by
    /// `cfg.seed` (the same stream drives dropout), cuts batches of
    /// `cfg.batch_size` with a possibly short final batch, and records the
    /// full-pass training and validation MSE without dropout.
    pub fn train(
        &mut self,
        train: &[(Vec<T>, T)],
        validation: &[(Vec<T>, T)],
        cfg: &TrainConfig,
    ) -> Result<LossCurve<T>, PdeNetError> {
        cfg.validate()?;
        let mut curve = LossCurve {
            train_mse: Vec::with_capacity(cfg.epochs),
            validation_mse: Vec::with_capacity(cfg.epochs),
        };
        if cfg.epochs == 0 {
            return Ok(curve);
        }
        if train.is_empty() || validation.is_empty() {
            return Err(PdeNetError::EmptyDataset);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let lr = T::of(cfg.learning_rate);
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size) {
                let xs: Vec<&[T]> = batch.iter().map(|&i| train[i].0.as_slice()).collect();
                let ys: Vec<T> = batch.iter().map(|&i| train[i].1).collect();
                let (_, grads) =
                    self.batch_gradients(&xs, &ys, Some((cfg.dropout_rate, &mut rng)))?;
                self.adam_step(&grads, lr)?;
            }
            curve.train_mse.push(self.dataset_mse(train)?);
            curve.validation_mse.push(self.dataset_mse(validation)?);
        }
        self.train_meta = Some(TrainMeta {
            seed: cfg.seed,
            epochs: cfg.epochs,
            lr: cfg.learning_rate,
            batch_size: cfg.batch_size,
        });
        Ok(curve)
    }

    pub fn dataset_mse(&self, rows: &[(Vec<T>, T)]) -> Result<T, PdeNetError> {
        let preds = rows
            .iter()
            .map(|(x, _)| self.forward(x))
            .collect::<Result<Vec<_>, _>>()?;
        let targets: Vec<T> = rows.iter().map(|r| r.1).collect();
        mse_loss(&preds, &targets)
    }
}
