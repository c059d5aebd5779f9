//! L2-regularized logistic regression trained by full-batch gradient descent.
//!
//! The objective is `mean_i log(1 + exp(-s_i z_i)) + (lambda / 2) * |w|^2` with
//! `z_i = w . x_i + b`, `s_i = +-1` and an unregularized bias. Steps use a
//! Barzilai-Borwein trial length with Armijo backtracking. Sums over samples
//! are reduced over fixed shards in a fixed pairwise tree, so the result
//! does not depend on the number of threads.

use std::io::Write;
use std::path::Path;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::write_atomic;
use crate::vectorize::{FeatureSpace, FeatureVector, Vectorizer};

const SHARD: usize = 8192;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Armijo compares against the worst of the last few losses, which lets
/// Barzilai-Borwein steps climb briefly on ill-conditioned problems.
const NONMONOTONE_WINDOW: usize = 10;

pub const MODEL_FORMAT: &str = "sentibench-linear-model";
pub const MODEL_VERSION: u32 = 1;

/// Initial parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zeros,
    /// Uniform in `[-scale, scale]`, drawn from the training seed.
    Random {
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// L2 strength; `None` means `1 / n_samples` (C = 1).
    pub lambda: Option<f64>,
    pub tol: f64,
    pub max_epochs: usize,
    pub init: Init,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: None,
            tol: 1e-5,
            max_epochs: 500,
            init: Init::Zeros,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxEpochs,
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs: usize,
    pub final_loss: f64,
    pub grad_inf_norm: f64,
    pub stop: StopReason,
}

/// Evaluate `leaf` on fixed shards of `0..n` and combine pairwise in a tree
/// whose shape depends only on `n`.
fn tree_reduce<T, L, C>(n: usize, leaf: &L, combine: &C) -> T
where
    T: Send,
    L: Fn(std::ops::Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    fn go<T: Send, L: Fn(std::ops::Range<usize>) -> T + Sync, C: Fn(T, T) -> T + Sync>(
        lo: usize,
        hi: usize,
        n: usize,
        leaf: &L,
        combine: &C,
    ) -> T {
        if hi - lo == 1 {
            return leaf(lo * SHARD..((lo + 1) * SHARD).min(n));
        }
        let mid = lo + (hi - lo) / 2;
        let (a, b) = rayon::join(|| go(lo, mid, n, leaf, combine), || go(mid, hi, n, leaf, combine));
        combine(a, b)
    }
    let shards = n.div_ceil(SHARD).max(1);
    go(0, shards, n, leaf, combine)
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// The regularized mean logistic loss over a fixed training set.
pub struct LogisticObjective<'a, V> {
    vectors: &'a [V],
    labels: &'a [bool],
    dims: usize,
    pub lambda: f64,
}

impl<'a, V: FeatureVector + Sync> LogisticObjective<'a, V> {
    pub fn new(vectors: &'a [V], labels: &'a [bool], lambda: f64) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: vectors.len(),
                actual: labels.len(),
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!(
                "regularization must be finite and >= 0, got {lambda}"
            )));
        }
        let dims = vectors.first().map_or(0, |v| v.dims());
        if let Some(v) = vectors.iter().find(|v| v.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: v.dims(),
            });
        }
        if vectors.par_iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("feature vectors contain non-finite values".into()));
        }
        Ok(LogisticObjective {
            vectors,
            labels,
            dims,
            lambda,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_samples(&self) -> usize {
        self.vectors.len()
    }

    fn margins(&self, weights: &[f64], bias: f64) -> Vec<f64> {
        self.vectors.par_iter().map(|x| x.dot(weights) + bias).collect()
    }

    fn loss_from_margins(&self, weights: &[f64], margins: &[f64]) -> f64 {
        let n = self.vectors.len();
        let sum = tree_reduce(
            n,
            &|r: std::ops::Range<usize>| {
                r.map(|i| {
                    let z = margins[i];
                    if self.labels[i] {
                        softplus(-z)
                    } else {
                        softplus(z)
                    }
                })
                .sum::<f64>()
            },
            &|a, b| a + b,
        );
        let sq: f64 = weights.iter().map(|w| w * w).sum();
        sum / n as f64 + 0.5 * self.lambda * sq
    }

    /// Gradient with respect to `(weights, bias)`; the bias is the last entry.
    fn gradient_from_margins(&self, weights: &[f64], margins: &[f64]) -> Vec<f64> {
        let n = self.vectors.len();
        let dims = self.dims;
        let mut g = tree_reduce(
            n,
            &|r: std::ops::Range<usize>| {
                let mut acc = vec![0.0; dims + 1];
                for i in r {
                    let y = if self.labels[i] { 1.0 } else { 0.0 };
                    let resid = sigmoid(margins[i]) - y;
                    self.vectors[i].add_scaled_to(resid, &mut acc[..dims]);
                    acc[dims] += resid;
                }
                acc
            },
            &|mut a: Vec<f64>, b: Vec<f64>| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );
        let inv_n = 1.0 / n as f64;
        for (gi, wi) in g[..dims].iter_mut().zip(weights) {
            *gi = *gi * inv_n + self.lambda * wi;
        }
        g[dims] *= inv_n;
        g
    }

    pub fn value(&self, weights: &[f64], bias: f64) -> f64 {
        let m = self.margins(weights, bias);
        self.loss_from_margins(weights, &m)
    }

    /// Returns `(loss, gradient)`; the gradient's last entry is `d/d bias`.
    pub fn value_and_gradient(&self, weights: &[f64], bias: f64) -> (f64, Vec<f64>) {
        let m = self.margins(weights, bias);
        (
            self.loss_from_margins(weights, &m),
            self.gradient_from_margins(weights, &m),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub regularization: f64,
    pub feature_space: FeatureSpace,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fit a logistic regression on `vectors` with boolean labels (true = positive).
pub fn train<V: FeatureVector + Sync>(
    vectors: &[V],
    labels: &[bool],
    config: &TrainConfig,
    feature_space: FeatureSpace,
) -> Result<(LinearModel, TrainSummary)> {
    let n = labels.len();
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == n {
        return Err(Error::SingleClass { split: "train".into() });
    }
    let lambda = config.lambda.unwrap_or(1.0 / n as f64);
    let objective = LogisticObjective::new(vectors, labels, lambda)?;
    if objective.dims() != feature_space.dims {
        return Err(Error::DimensionMismatch {
            expected: feature_space.dims,
            actual: objective.dims(),
        });
    }
    let dims = objective.dims();

    // theta = (weights..., bias)
    let mut theta = match config.init {
        Init::Zeros => vec![0.0; dims + 1],
        Init::Random { scale } => {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
            (0..=dims)
                .map(|_| {
                    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                    (2.0 * u - 1.0) * scale
                })
                .collect()
        }
    };
    let (mut loss, mut grad) = objective.value_and_gradient(&theta[..dims], theta[dims]);
    let mut step = 1.0;
    let mut epochs = 0;
    let mut stop = StopReason::MaxEpochs;
    let mut recent = std::collections::VecDeque::from([loss]);

    while epochs < config.max_epochs {
        let gnorm_sq: f64 = grad.iter().map(|g| g * g).sum();
        if inf_norm(&grad) < config.tol {
            stop = StopReason::Converged;
            break;
        }
        let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let margins = objective.margins(&trial[..dims], trial[dims]);
            let trial_loss = objective.loss_from_margins(&trial[..dims], &margins);
            if trial_loss <= reference - ARMIJO_C * step * gnorm_sq {
                accepted = Some((trial, margins, trial_loss));
                break;
            }
            step *= 0.5;
        }
        let Some((next, margins, next_loss)) = accepted else {
            stop = StopReason::LineSearchStalled;
            break;
        };
        let next_grad = objective.gradient_from_margins(&next[..dims], &margins);

        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..=dims {
            let s = next[i] - theta[i];
            ss += s * s;
            sy += s * (next_grad[i] - grad[i]);
        }
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-10, 1e10)
        } else {
            (step * 2.0).min(1e10)
        };

        theta = next;
        loss = next_loss;
        if recent.len() == NONMONOTONE_WINDOW {
            recent.pop_front();
        }
        recent.push_back(loss);
        grad = next_grad;
        epochs += 1;
    }
    if stop == StopReason::MaxEpochs && inf_norm(&grad) < config.tol {
        stop = StopReason::Converged;
    }

    let bias = theta.pop().unwrap_or(0.0);
    let model = LinearModel {
        weights: theta,
        bias,
        regularization: lambda,
        feature_space,
    };
    let summary = TrainSummary {
        epochs,
        final_loss: loss,
        grad_inf_norm: inf_norm(&grad),
        stop,
    };
    Ok((model, summary))
}

/// Something that maps a feature vector to a positive-class score.
pub trait BinaryScorer<V> {
    fn score(&self, x: &V) -> Result<f64>;
}

/// `sigmoid(w . x + b)`.
pub fn predict_score<V: FeatureVector>(model: &LinearModel, x: &V) -> Result<f64> {
    if x.dims() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            actual: x.dims(),
        });
    }
    Ok(sigmoid(x.dot(&model.weights) + model.bias))
}

impl<V: FeatureVector> BinaryScorer<V> for LinearModel {
    fn score(&self, x: &V) -> Result<f64> {
        predict_score(self, x)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    feature_space: FeatureSpace,
    regularization: f64,
    bias: f64,
    weights: Vec<f64>,
}

impl LinearModel {
    /// The model whose scores are `1 - score` of this one.
    pub fn negated(&self) -> LinearModel {
        LinearModel {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: -self.bias,
            ..self.clone()
        }
    }

    /// Refuse vectors from any feature space other than the training one.
    pub fn check_space(&self, space: &FeatureSpace) -> Result<()> {
        if *space != self.feature_space {
            return Err(Error::FeatureSpaceMismatch {
                model: self.feature_space.to_string(),
                vectors: space.to_string(),
            });
        }
        Ok(())
    }

    /// Vectorize `tokens` with `vectorizer` and score, after checking that the
    /// vectorizer matches the training feature space.
    pub fn score_tokens<Z: Vectorizer>(&self, vectorizer: &Z, tokens: &[String]) -> Result<f64> {
        self.check_space(&vectorizer.feature_space())?;
        predict_score(self, &vectorizer.transform(tokens))
    }

    pub fn to_json_writer<W: Write>(&self, w: W) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_space: self.feature_space.clone(),
            regularization: self.regularization,
            bias: self.bias,
            weights: self.weights.clone(),
        };
        serde_json::to_writer(w, &file).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Parse a model file, validating format, version and invariants.
    pub fn from_json_slice(bytes: &[u8]) -> Result<LinearModel> {
        let file: ModelFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("model file: {e}"),
        })?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model format `{}` v{}",
                file.format, file.version
            )));
        }
        if file.weights.len() != file.feature_space.dims {
            return Err(Error::Schema(format!(
                "model has {} weights for a {}-dimensional feature space",
                file.weights.len(),
                file.feature_space.dims
            )));
        }
        if !file.bias.is_finite() || !file.regularization.is_finite() || file.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Schema("model parameters must be finite".into()));
        }
        Ok(LinearModel {
            weights: file.weights,
            bias: file.bias,
            regularization: file.regularization,
            feature_space: file.feature_space,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), |w| self.to_json_writer(w))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LinearModel> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_slice(&bytes)
    }
}
