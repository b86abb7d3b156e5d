use rand::seq::SliceRandom;

use super::model::{check_rows, label_order, ClassifierKind, ModelParams, TrainedModel};
use super::tfidf::{sparse_dot, FeatureMatrix, SparseRow};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    LogisticRegression,
    LinearSvm,
}

impl From<LinearKind> for ClassifierKind {
    fn from(k: LinearKind) -> Self {
        match k {
            LinearKind::LogisticRegression => ClassifierKind::LogisticRegression,
            LinearKind::LinearSvm => ClassifierKind::LinearSvm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConfig<T> {
    pub learning_rate: T,
    pub l2: T,
    pub epochs: usize,
    pub seed: u64,
}

impl<T: Real> Default for LinearConfig<T> {
    fn default() -> Self {
        LinearConfig {
            learning_rate: T::lit(0.01),
            l2: T::lit(1e-4),
            epochs: 100,
            seed: seed::DEFAULT_SEED,
        }
    }
}

/// ln(1 + e^m) without overflow.
fn softplus<T: Real>(m: T) -> T {
    m.max(T::zero()) + (-m.abs()).exp().ln_1p()
}

fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Per-sample loss and its derivative with respect to the decision value
/// `z`, for a target `y` in {-1, +1}.
fn sample_loss<T: Real>(kind: LinearKind, z: T, y: T) -> (T, T) {
    match kind {
        LinearKind::LogisticRegression => (softplus(-y * z), -y * sigmoid(-y * z)),
        LinearKind::LinearSvm => {
            let margin = y * z;
            if margin < T::one() {
                (T::one() - margin, -y)
            } else {
                (T::zero(), T::zero())
            }
        }
    }
}

/// Mean log-loss plus `l2 / 2 · ‖w‖²`; targets are ±1.
pub fn log_loss<T: Real>(weights: &[T], bias: T, rows: &[SparseRow<T>], targets: &[T], l2: T) -> T {
    let n = T::from_count(rows.len());
    let data: T = rows
        .iter()
        .zip(targets)
        .map(|(r, &y)| sample_loss(LinearKind::LogisticRegression, sparse_dot(weights, r) + bias, y).0)
        .sum();
    let penalty = weights.iter().map(|w| *w * *w).sum::<T>() * l2 / T::lit(2.0);
    data / n + penalty
}

/// Analytic gradient of [`log_loss`] with respect to `(weights, bias)`.
pub fn log_loss_gradient<T: Real>(weights: &[T], bias: T, rows: &[SparseRow<T>], targets: &[T], l2: T) -> (Vec<T>, T) {
    let n = T::from_count(rows.len());
    let mut grad: Vec<T> = weights.iter().map(|w| *w * l2).collect();
    let mut grad_bias = T::zero();
    for (r, &y) in rows.iter().zip(targets) {
        let (_, dz) = sample_loss(LinearKind::LogisticRegression, sparse_dot(weights, r) + bias, y);
        let scaled = dz / n;
        for &(i, x) in r {
            grad[i] = grad[i] + scaled * x;
        }
        grad_bias = grad_bias + scaled;
    }
    (grad, grad_bias)
}

/// Plain SGD on log-loss or hinge loss with L2 shrinkage. The sample order
/// of every epoch is drawn from a ChaCha stream seeded by `config.seed`.
pub fn train_linear<T: Real>(
    kind: LinearKind,
    features: &FeatureMatrix<T>,
    labels: &[String],
    config: &LinearConfig<T>,
) -> Result<TrainedModel<T>> {
    check_rows(features, labels)?;
    let order = label_order(labels)?;
    if order.len() != 2 {
        return Err(Error::UnsupportedLabel(format!(
            "linear models are binary, found {} labels",
            order.len()
        )));
    }
    let lr = config.learning_rate;
    let decay = T::one() - lr * config.l2;
    if !(lr > T::zero() && config.l2 >= T::zero() && decay > T::zero()) {
        return Err(Error::Validation(
            "need learning_rate > 0, l2 >= 0 and learning_rate * l2 < 1".into(),
        ));
    }
    let targets: Vec<T> = labels
        .iter()
        .map(|l| if *l == order[1] { T::one() } else { -T::one() })
        .collect();

    // weights are stored as scale * direction so the shrink step is O(1)
    let mut direction = vec![T::zero(); features.n_features];
    let mut scale = T::one();
    let mut bias = T::zero();
    let mut rng = seed::rng(config.seed);
    let mut idx: Vec<usize> = (0..features.rows.len()).collect();
    for epoch in 0..config.epochs {
        idx.shuffle(&mut rng);
        let mut epoch_loss = T::zero();
        for &i in &idx {
            let row = &features.rows[i];
            let z = scale * sparse_dot(&direction, row) + bias;
            let (loss, dz) = sample_loss(kind, z, targets[i]);
            epoch_loss = epoch_loss + loss;
            scale = scale * decay;
            if dz != T::zero() {
                let step = lr * dz / scale;
                for &(c, x) in row {
                    direction[c] = direction[c] - step * x;
                }
                bias = bias - lr * dz;
            }
            if scale < T::lit(1e-9) {
                for w in &mut direction {
                    *w = *w * scale;
                }
                scale = T::one();
            }
        }
        if !epoch_loss.is_finite() || direction.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
    }
    let weights = direction.into_iter().map(|w| w * scale).collect();
    Ok(TrainedModel {
        kind: kind.into(),
        params: ModelParams::Linear { weights, bias },
        label_order: order,
        train_year: None,
    })
}
