use std::fmt;
use std::str::FromStr;

use super::tfidf::{sparse_dot, FeatureMatrix, SparseRow};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    MultinomialNb,
    LogisticRegression,
    LinearSvm,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::MultinomialNb => "mnb",
            ClassifierKind::LogisticRegression => "logreg",
            ClassifierKind::LinearSvm => "svm",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnb" | "multinomial_nb" => Ok(ClassifierKind::MultinomialNb),
            "logreg" | "logistic_regression" => Ok(ClassifierKind::LogisticRegression),
            "svm" | "linear_svm" => Ok(ClassifierKind::LinearSvm),
            other => Err(Error::Validation(format!("unknown classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams<T> {
    NaiveBayes {
        class_log_prior: Vec<T>,
        /// Indexed `[class][feature]`.
        feature_log_prob: Vec<Vec<T>>,
    },
    Linear {
        weights: Vec<T>,
        bias: T,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    pub kind: ClassifierKind,
    pub params: ModelParams<T>,
    pub label_order: Vec<String>,
    pub train_year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub label: String,
    /// Posterior of the chosen label for naive Bayes, decision value for the
    /// linear models.
    pub score: T,
}

impl<T: Real> TrainedModel<T> {
    pub fn n_features(&self) -> usize {
        match &self.params {
            ModelParams::NaiveBayes { feature_log_prob, .. } => feature_log_prob.first().map_or(0, Vec::len),
            ModelParams::Linear { weights, .. } => weights.len(),
        }
    }

    /// Checks shapes and finiteness after deserialization.
    pub fn validate(&self) -> Result<()> {
        let n_labels = self.label_order.len();
        let finite = |xs: &[T]| xs.iter().all(|x| x.is_finite());
        match &self.params {
            ModelParams::NaiveBayes {
                class_log_prior,
                feature_log_prob,
            } => {
                if class_log_prior.len() != n_labels || feature_log_prob.len() != n_labels {
                    return Err(Error::Shape {
                        expected: n_labels,
                        found: class_log_prior.len(),
                    });
                }
                let d = self.n_features();
                if feature_log_prob.iter().any(|r| r.len() != d || !finite(r)) || !finite(class_log_prior) {
                    return Err(Error::Validation("naive Bayes parameters malformed".into()));
                }
            }
            ModelParams::Linear { weights, bias } => {
                if n_labels != 2 {
                    return Err(Error::UnsupportedLabel(format!("linear model with {n_labels} labels")));
                }
                if !finite(weights) || !bias.is_finite() {
                    return Err(Error::Validation("linear parameters are not finite".into()));
                }
            }
        }
        Ok(())
    }

    /// w·x + b. Positive values select `label_order[1]`.
    pub fn decision_value(&self, row: &SparseRow<T>) -> Option<T> {
        match &self.params {
            ModelParams::Linear { weights, bias } => Some(sparse_dot(weights, row) + *bias),
            ModelParams::NaiveBayes { .. } => None,
        }
    }

    /// Unnormalized joint log-likelihood per class (naive Bayes only).
    pub fn joint_log_likelihood(&self, row: &SparseRow<T>) -> Option<Vec<T>> {
        match &self.params {
            ModelParams::NaiveBayes {
                class_log_prior,
                feature_log_prob,
            } => Some(
                class_log_prior
                    .iter()
                    .zip(feature_log_prob)
                    .map(|(prior, flp)| *prior + sparse_dot(flp, row))
                    .collect(),
            ),
            ModelParams::Linear { .. } => None,
        }
    }

    /// Class posteriors in `label_order` (naive Bayes only).
    pub fn posterior(&self, row: &SparseRow<T>) -> Option<Vec<T>> {
        let jll = self.joint_log_likelihood(row)?;
        let max = jll.iter().copied().fold(T::neg_infinity(), T::max);
        let exp: Vec<T> = jll.iter().map(|l| (*l - max).exp()).collect();
        let total: T = exp.iter().copied().sum();
        Some(exp.into_iter().map(|e| e / total).collect())
    }

    pub fn predict_row(&self, row: &SparseRow<T>) -> Prediction<T> {
        match &self.params {
            ModelParams::Linear { .. } => {
                let z = self.decision_value(row).expect("linear model");
                let idx = usize::from(z > T::zero());
                Prediction {
                    label: self.label_order[idx].clone(),
                    score: z,
                }
            }
            ModelParams::NaiveBayes { .. } => {
                let post = self.posterior(row).expect("naive Bayes model");
                let mut best = 0;
                for (i, p) in post.iter().enumerate() {
                    if *p > post[best] {
                        best = i;
                    }
                }
                Prediction {
                    label: self.label_order[best].clone(),
                    score: post[best],
                }
            }
        }
    }

    /// Pointwise prediction; ties go to the first label in `label_order`.
    pub fn predict(&self, features: &FeatureMatrix<T>) -> Result<Vec<Prediction<T>>> {
        if features.n_features != self.n_features() {
            return Err(Error::Shape {
                expected: self.n_features(),
                found: features.n_features,
            });
        }
        Ok(features.rows.iter().map(|r| self.predict_row(r)).collect())
    }
}

/// Sorted distinct labels, requiring at least two.
pub(crate) fn label_order(labels: &[String]) -> Result<Vec<String>> {
    let mut order: Vec<String> = labels.to_vec();
    order.sort();
    order.dedup();
    if order.len() < 2 {
        return Err(Error::DegenerateTraining(format!(
            "need at least two classes, found {}",
            order.len()
        )));
    }
    Ok(order)
}

pub(crate) fn check_rows<T>(features: &FeatureMatrix<T>, labels: &[String]) -> Result<()> {
    if features.rows.len() != labels.len() {
        return Err(Error::Shape {
            expected: features.rows.len(),
            found: labels.len(),
        });
    }
    Ok(())
}
