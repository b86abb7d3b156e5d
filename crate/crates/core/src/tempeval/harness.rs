use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::scoring::{macro_f1_report, BinaryCounts};
use super::{enumerate_pairs, pearson, temporal_gap, CorrelationResult, PairResult, PredictionRecord};
use crate::classifiers::{ClassifierConfig, TextClassifier};
use crate::corpus::{Document, TemporalSplit};
use crate::error::{Error, Result};
use crate::lexmetrics::{MetricKind, MetricValue};
use crate::scalar::{mean, Real};
use crate::vocab::tokenize;

/// Where per-pair predictions come from.
#[derive(Debug, Clone)]
pub enum ModelSource<'a, T> {
    /// Train a native classifier on every year's training partition.
    Native(ClassifierConfig<T>),
    /// Prediction records, one slice per run; per-pair scores are averaged
    /// across runs.
    Predictions(&'a [Vec<PredictionRecord<T>>]),
}

#[derive(Debug, Clone, Default)]
pub struct HarnessOptions {
    /// Label treated as positive for TP/FP rates. Defaults to the last label
    /// in sorted order.
    pub positive_label: Option<String>,
}

#[derive(Debug, Clone)]
pub struct HarnessOutput<T> {
    pub pairs: Vec<PairResult<T>>,
    /// Predictions produced by native models (empty in file mode).
    pub predictions: Vec<PredictionRecord<T>>,
    pub models: Vec<TextClassifier<T>>,
    pub label_set: BTreeSet<String>,
    pub warnings: Vec<String>,
}

struct PairScore<T> {
    f_macro: T,
    rates: Option<(T, T)>,
    counts: BinaryCounts,
}

struct Scorer<'a> {
    label_set: &'a BTreeSet<String>,
    positive: Option<&'a str>,
}

impl Scorer<'_> {
    fn score<T: Real>(
        &self,
        golds: &[&str],
        preds: &[&str],
        pair: (i32, i32),
        warnings: &mut Vec<String>,
    ) -> Result<PairScore<T>> {
        let report = macro_f1_report::<T, _>(golds, preds, self.label_set)?;
        for label in report.absent_labels {
            warnings.push(format!(
                "pair {}->{}: label `{label}` absent from golds and predictions, scored as F1 = 0",
                pair.0, pair.1
            ));
        }
        let (rates, counts) = match self.positive {
            Some(pos) => {
                let counts = BinaryCounts::tally(golds, preds, pos);
                (Some(counts.rates()), counts)
            }
            None => (None, BinaryCounts::default()),
        };
        Ok(PairScore {
            f_macro: report.value,
            rates,
            counts,
        })
    }
}

fn label_set_of(splits: &[TemporalSplit]) -> BTreeSet<String> {
    splits
        .iter()
        .flat_map(|s| s.documents().map(|d| d.label.clone()))
        .collect()
}

/// Evaluates every (train year, test year) pair on the test partitions.
pub fn run_harness<T: Real>(
    splits: &[TemporalSplit],
    source: ModelSource<'_, T>,
    options: &HarnessOptions,
) -> Result<HarnessOutput<T>> {
    if splits.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut splits: Vec<&TemporalSplit> = splits.iter().collect();
    splits.sort_by_key(|s| s.year);
    if splits.windows(2).any(|w| w[0].year == w[1].year) {
        return Err(Error::Validation("duplicate year in splits".into()));
    }
    if let Some(s) = splits.iter().find(|s| s.test.is_empty()) {
        return Err(Error::Validation(format!(
            "year {} has an empty test partition",
            s.year
        )));
    }

    let owned: Vec<TemporalSplit> = splits.iter().map(|s| (*s).clone()).collect();
    let label_set = label_set_of(&owned);
    let mut warnings = Vec::new();
    let positive = match (&options.positive_label, label_set.len()) {
        (Some(p), _) if !label_set.contains(p) => {
            return Err(Error::Validation(format!(
                "positive label `{p}` is not in the label set"
            )));
        }
        (Some(p), 2) => Some(p.clone()),
        (None, 2) => label_set.iter().next_back().cloned(),
        (_, n) => {
            warnings.push(format!("label set has {n} labels; TP/FP rates are reported as nan"));
            None
        }
    };
    let scorer = Scorer {
        label_set: &label_set,
        positive: positive.as_deref(),
    };

    let years: Vec<i32> = splits.iter().map(|s| s.year).collect();
    let by_year: BTreeMap<i32, &TemporalSplit> = splits.iter().map(|s| (s.year, *s)).collect();

    let mut output = HarnessOutput {
        pairs: Vec::new(),
        predictions: Vec::new(),
        models: Vec::new(),
        label_set: label_set.clone(),
        warnings: Vec::new(),
    };

    let mut scores: BTreeMap<(i32, i32), Vec<PairScore<T>>> = BTreeMap::new();
    match source {
        ModelSource::Native(config) => {
            let test_tokens: BTreeMap<i32, Vec<Vec<String>>> = by_year
                .iter()
                .map(|(y, s)| (*y, s.test.iter().map(|d| tokenize(&d.text)).collect()))
                .collect();
            for &i in &years {
                let train = &by_year[&i].train;
                let docs: Vec<Vec<String>> = train.iter().map(|d| tokenize(&d.text)).collect();
                let labels: Vec<String> = train.iter().map(|d| d.label.clone()).collect();
                let model = TextClassifier::fit(&config, &docs, &labels, Some(i))?;
                for &j in &years {
                    let test = &by_year[&j].test;
                    let preds = model.predict(&test_tokens[&j])?;
                    let golds: Vec<&str> = test.iter().map(|d| d.label.as_str()).collect();
                    let predicted: Vec<&str> = preds.iter().map(|p| p.label.as_str()).collect();
                    let score = scorer.score(&golds, &predicted, (i, j), &mut warnings)?;
                    scores.entry((i, j)).or_default().push(score);
                    output
                        .predictions
                        .extend(test.iter().zip(&preds).map(|(d, p)| PredictionRecord {
                            train_year: i,
                            test_year: j,
                            doc_id: d.id.clone(),
                            gold: d.label.clone(),
                            predicted: p.label.clone(),
                            score: Some(p.score),
                        }));
                }
                output.models.push(model);
            }
        }
        ModelSource::Predictions(runs) => {
            if runs.is_empty() {
                return Err(Error::Validation("no prediction runs supplied".into()));
            }
            for (run_idx, run) in runs.iter().enumerate() {
                let index = index_run(run, &by_year, &label_set, run_idx)?;
                for (i, j) in enumerate_pairs(&years) {
                    let test = &by_year[&j].test;
                    let got = index.get(&(i, j));
                    let found: Vec<Option<&PredictionRecord<T>>> = test
                        .iter()
                        .map(|d| got.and_then(|m| m.get(d.id.as_str()).copied()))
                        .collect();
                    let missing = found.iter().filter(|f| f.is_none()).count();
                    if missing > 0 {
                        return Err(Error::Coverage {
                            gap: temporal_gap(i, j),
                            train_year: i,
                            test_year: j,
                            missing,
                            expected: test.len(),
                        });
                    }
                    let golds: Vec<&str> = test.iter().map(|d| d.label.as_str()).collect();
                    let predicted: Vec<&str> = found.iter().map(|r| r.expect("covered").predicted.as_str()).collect();
                    let score = scorer.score(&golds, &predicted, (i, j), &mut warnings)?;
                    scores.entry((i, j)).or_default().push(score);
                }
            }
        }
    }

    for ((i, j), runs) in scores {
        let f: Vec<T> = runs.iter().map(|s| s.f_macro).collect();
        let (tp_rate, fp_rate) = match runs.iter().map(|s| s.rates).collect::<Option<Vec<_>>>() {
            Some(rates) => (
                mean(&rates.iter().map(|r| r.0).collect::<Vec<_>>()).expect("one run at least"),
                mean(&rates.iter().map(|r| r.1).collect::<Vec<_>>()).expect("one run at least"),
            ),
            None => (T::nan(), T::nan()),
        };
        output.pairs.push(PairResult {
            train_year: i,
            test_year: j,
            gap: temporal_gap(i, j),
            f_macro: mean(&f).expect("one run at least"),
            tp_rate,
            fp_rate,
            n_test: by_year[&j].test.len(),
            counts: runs.iter().fold(BinaryCounts::default(), |acc, s| acc + s.counts),
            runs: runs.len(),
        });
    }
    output.warnings = warnings;
    Ok(output)
}

type RunIndex<'r, T> = HashMap<(i32, i32), HashMap<&'r str, &'r PredictionRecord<T>>>;

fn index_run<'r, T>(
    run: &'r [PredictionRecord<T>],
    by_year: &BTreeMap<i32, &TemporalSplit>,
    label_set: &BTreeSet<String>,
    run_idx: usize,
) -> Result<RunIndex<'r, T>> {
    let test_golds: HashMap<i32, HashMap<&str, &Document>> = by_year
        .iter()
        .map(|(y, s)| (*y, s.test.iter().map(|d| (d.id.as_str(), d)).collect()))
        .collect();
    let mut index: RunIndex<'r, T> = HashMap::new();
    for rec in run {
        let ctx = || {
            format!(
                "run {}: {}->{} `{}`",
                run_idx + 1,
                rec.train_year,
                rec.test_year,
                rec.doc_id
            )
        };
        if !by_year.contains_key(&rec.train_year) {
            return Err(Error::Validation(format!("{}: unknown train year", ctx())));
        }
        let Some(tests) = test_golds.get(&rec.test_year) else {
            return Err(Error::Validation(format!("{}: unknown test year", ctx())));
        };
        let Some(doc) = tests.get(rec.doc_id.as_str()) else {
            return Err(Error::Validation(format!(
                "{}: not a test document of that year",
                ctx()
            )));
        };
        for label in [&rec.gold, &rec.predicted] {
            if !label_set.contains(label) {
                return Err(Error::Validation(format!("{}: unknown label `{label}`", ctx())));
            }
        }
        if rec.gold != doc.label {
            return Err(Error::Validation(format!(
                "{}: gold `{}` disagrees with the dataset label `{}`",
                ctx(),
                rec.gold,
                doc.label
            )));
        }
        let slot = index.entry((rec.train_year, rec.test_year)).or_default();
        if slot.insert(rec.doc_id.as_str(), rec).is_some() {
            return Err(Error::Validation(format!("{}: duplicate prediction", ctx())));
        }
    }
    Ok(index)
}

#[derive(Debug)]
pub struct CorrelationOutcome<T> {
    pub results: Vec<(MetricKind, Result<CorrelationResult<T>>)>,
    pub warnings: Vec<String>,
}

/// Joins metric values (source → train year, target → test year) with
/// pair performance and correlates each metric with f_macro. Non-finite
/// metric values are dropped with a warning.
pub fn correlate<T: Real>(
    metrics: &[MetricValue<T>],
    performance: &[(i32, i32, T)],
    seed: u64,
) -> CorrelationOutcome<T> {
    let perf: BTreeMap<(i32, i32), T> = performance.iter().map(|&(i, j, f)| ((i, j), f)).collect();
    let mut grouped: BTreeMap<MetricKind, BTreeMap<(i32, i32), T>> = BTreeMap::new();
    for m in metrics {
        grouped
            .entry(m.metric)
            .or_default()
            .insert((m.source_year, m.target_year), m.value);
    }
    let mut warnings = Vec::new();
    let mut results = Vec::new();
    for (metric, values) in grouped {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (key, x) in values {
            let Some(&y) = perf.get(&key) else {
                continue;
            };
            if !x.is_finite() {
                warnings.push(format!(
                    "{metric}: dropped non-finite value {} for pair {}->{}",
                    crate::scalar::format_real(x),
                    key.0,
                    key.1
                ));
                continue;
            }
            xs.push(x);
            ys.push(y);
        }
        let result = pearson(&xs, &ys, seed).map(|c| CorrelationResult {
            metric,
            r: c.r,
            p_two_tailed: c.p,
            n: c.n,
        });
        results.push((metric, result));
    }
    CorrelationOutcome { results, warnings }
}
