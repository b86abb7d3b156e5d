use super::model::{check_rows, label_order, ClassifierKind, ModelParams, TrainedModel};
use super::tfidf::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Multinomial naive Bayes with additive smoothing. Feature values are used
/// as (possibly fractional) counts.
pub fn train_mnb<T: Real>(features: &FeatureMatrix<T>, labels: &[String], alpha: T) -> Result<TrainedModel<T>> {
    check_rows(features, labels)?;
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(Error::Validation(format!(
            "smoothing alpha must be positive, got {alpha}"
        )));
    }
    let order = label_order(labels)?;
    let n_classes = order.len();
    let d = features.n_features;

    let mut class_docs = vec![0usize; n_classes];
    let mut feature_mass = vec![vec![T::zero(); d]; n_classes];
    for (row, label) in features.rows.iter().zip(labels) {
        let c = order.binary_search(label).expect("label in order");
        class_docs[c] += 1;
        for &(col, x) in row {
            if x < T::zero() || !x.is_finite() {
                return Err(Error::Validation(
                    "naive Bayes needs non-negative finite features".into(),
                ));
            }
            feature_mass[c][col] = feature_mass[c][col] + x;
        }
    }

    let total = T::from_count(labels.len());
    let class_log_prior = class_docs.iter().map(|&n| (T::from_count(n) / total).ln()).collect();
    let feature_log_prob = feature_mass
        .into_iter()
        .map(|mass| {
            let denom = mass.iter().copied().sum::<T>() + alpha * T::from_count(d);
            mass.into_iter().map(|m| ((m + alpha) / denom).ln()).collect()
        })
        .collect();

    Ok(TrainedModel {
        kind: ClassifierKind::MultinomialNb,
        params: ModelParams::NaiveBayes {
            class_log_prior,
            feature_log_prob,
        },
        label_order: order,
        train_year: None,
    })
}
