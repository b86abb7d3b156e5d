//! Native classical text classifiers over tf-idf features: multinomial
//! naive Bayes, logistic regression and a linear SVM.

mod linear;
mod model;
mod naive_bayes;
mod tfidf;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use linear::{log_loss, log_loss_gradient, train_linear, LinearConfig, LinearKind};
pub use model::{ClassifierKind, ModelParams, Prediction, TrainedModel};
pub use naive_bayes::train_mnb;
pub use tfidf::{FeatureMatrix, SparseRow, TfidfVectorizer};

use crate::error::{Error, Result};
use crate::scalar::{parse_real, Real};

/// Which document representation a classifier consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// L2-normalized tf-idf rows.
    Tfidf,
    /// Raw in-vocabulary term counts.
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig<T> {
    pub kind: ClassifierKind,
    pub features: FeatureMode,
    pub nb_alpha: T,
    pub linear: LinearConfig<T>,
}

impl<T: Real> ClassifierConfig<T> {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierConfig {
            kind,
            features: FeatureMode::Tfidf,
            nb_alpha: T::one(),
            linear: LinearConfig::default(),
        }
    }
}

/// A fitted vectorizer together with the model trained on its output.
#[derive(Debug, Clone, PartialEq)]
pub struct TextClassifier<T> {
    pub vectorizer: TfidfVectorizer<T>,
    pub features: FeatureMode,
    pub model: TrainedModel<T>,
}

impl<T: Real> TextClassifier<T> {
    pub fn fit(
        config: &ClassifierConfig<T>,
        docs: &[Vec<String>],
        labels: &[String],
        train_year: Option<i32>,
    ) -> Result<Self> {
        let vectorizer = TfidfVectorizer::fit(docs, train_year)?;
        let x = match config.features {
            FeatureMode::Tfidf => vectorizer.transform(docs),
            FeatureMode::Counts => vectorizer.transform_counts(docs),
        };
        let mut model = match config.kind {
            ClassifierKind::MultinomialNb => train_mnb(&x, labels, config.nb_alpha)?,
            ClassifierKind::LogisticRegression => {
                train_linear(LinearKind::LogisticRegression, &x, labels, &config.linear)?
            }
            ClassifierKind::LinearSvm => train_linear(LinearKind::LinearSvm, &x, labels, &config.linear)?,
        };
        model.train_year = train_year;
        Ok(TextClassifier {
            vectorizer,
            features: config.features,
            model,
        })
    }

    pub fn featurize(&self, docs: &[Vec<String>]) -> FeatureMatrix<T> {
        match self.features {
            FeatureMode::Tfidf => self.vectorizer.transform(docs),
            FeatureMode::Counts => self.vectorizer.transform_counts(docs),
        }
    }

    pub fn predict(&self, docs: &[Vec<String>]) -> Result<Vec<Prediction<T>>> {
        self.model.predict(&self.featurize(docs))
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &SavedModel::from_classifier(self))?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let saved: SavedModel = serde_json::from_reader(reader)?;
        saved.into_classifier()
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Versioned JSON document; every real is stored as a decimal string that
/// parses back to the identical value.
#[derive(Debug, Serialize, Deserialize)]
struct SavedModel {
    format_version: u32,
    kind: String,
    train_year: Option<i32>,
    features: FeatureMode,
    label_order: Vec<String>,
    vocabulary: Vec<String>,
    idf: Vec<String>,
    params: SavedParams,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SavedParams {
    NaiveBayes {
        class_log_prior: Vec<String>,
        feature_log_prob: Vec<Vec<String>>,
    },
    Linear {
        weights: Vec<String>,
        bias: String,
    },
}

fn encode<T: Real>(xs: &[T]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

fn decode<T: Real>(xs: &[String]) -> Result<Vec<T>> {
    xs.iter()
        .map(|s| parse_real(s).ok_or_else(|| Error::Validation(format!("bad number `{s}` in model"))))
        .collect()
}

impl SavedModel {
    fn from_classifier<T: Real>(c: &TextClassifier<T>) -> Self {
        let params = match &c.model.params {
            ModelParams::NaiveBayes {
                class_log_prior,
                feature_log_prob,
            } => SavedParams::NaiveBayes {
                class_log_prior: encode(class_log_prior),
                feature_log_prob: feature_log_prob.iter().map(|r| encode(r)).collect(),
            },
            ModelParams::Linear { weights, bias } => SavedParams::Linear {
                weights: encode(weights),
                bias: bias.to_string(),
            },
        };
        SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: c.model.kind.name().to_string(),
            train_year: c.model.train_year,
            features: c.features,
            label_order: c.model.label_order.clone(),
            vocabulary: c.vectorizer.terms(),
            idf: encode(c.vectorizer.idf()),
            params,
        }
    }

    fn into_classifier<T: Real>(self) -> Result<TextClassifier<T>> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        let vectorizer = TfidfVectorizer::from_parts(self.vocabulary, decode(&self.idf)?, self.train_year)?;
        let params = match self.params {
            SavedParams::NaiveBayes {
                class_log_prior,
                feature_log_prob,
            } => ModelParams::NaiveBayes {
                class_log_prior: decode(&class_log_prior)?,
                feature_log_prob: feature_log_prob.iter().map(|r| decode(r)).collect::<Result<_>>()?,
            },
            SavedParams::Linear { weights, bias } => ModelParams::Linear {
                weights: decode(&weights)?,
                bias: decode(&[bias])?[0],
            },
        };
        let model = TrainedModel {
            kind: self.kind.parse()?,
            params,
            label_order: self.label_order,
            train_year: self.train_year,
        };
        model.validate()?;
        if model.n_features() != vectorizer.n_features() {
            return Err(Error::Shape {
                expected: vectorizer.n_features(),
                found: model.n_features(),
            });
        }
        Ok(TextClassifier {
            vectorizer,
            features: self.features,
            model,
        })
    }
}
