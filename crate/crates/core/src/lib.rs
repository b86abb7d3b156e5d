//! Temporal persistence of text classifiers: year-pair evaluation grouped
//! by temporal gap, lexical divergence metrics between years, and aspect
//! drift ranking.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

pub mod classifiers;
pub mod corpus;
pub mod drift;
pub mod error;
pub mod lexmetrics;
pub mod scalar;
pub mod seed;
pub mod synthetic;
pub mod tempeval;
pub mod vocab;

pub use error::{Error, Result};

pub type MetricValue = lexmetrics::MetricValue<f64>;
pub type PredictionRecord = tempeval::PredictionRecord<f64>;
pub type PairResult = tempeval::PairResult<f64>;
pub type GapAggregate = tempeval::GapAggregate<f64>;
pub type CorrelationResult = tempeval::CorrelationResult<f64>;
pub type Correlation = tempeval::Correlation<f64>;
pub type HarnessOutput = tempeval::HarnessOutput<f64>;
pub type ClassifierConfig = classifiers::ClassifierConfig<f64>;
pub type TextClassifier = classifiers::TextClassifier<f64>;
pub type TrainedModel = classifiers::TrainedModel<f64>;
pub type EmbeddingTable = drift::EmbeddingTable<f64>;
pub type SimilaritySeries = drift::SimilaritySeries<f64>;
pub type DriftRank = drift::DriftRank<f64>;
pub type DriftOutput = drift::DriftOutput<f64>;
