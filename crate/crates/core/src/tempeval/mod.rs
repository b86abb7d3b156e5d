//! The temporal evaluation harness: train/test year pairs, macro-F1 per
//! pair, aggregation by temporal gap, TP/FP rates and correlation of
//! lexical metrics with performance.

mod correlation;
mod harness;
pub mod io;
mod scoring;

use std::collections::BTreeMap;

pub use correlation::{pearson, Correlation, EXACT_PERMUTATION_LIMIT, RANDOM_PERMUTATIONS};
pub use harness::{correlate, run_harness, CorrelationOutcome, HarnessOptions, HarnessOutput, ModelSource};
pub use scoring::{macro_f1, macro_f1_report, tp_fp_rates, BinaryCounts, ClassScores, MacroF1Report};

use crate::lexmetrics::MetricKind;
use crate::scalar::{mean, Real};

/// Signed distance from training year to test year: negative when testing
/// on the past, positive when testing on the future.
pub fn temporal_gap(train_year: i32, test_year: i32) -> i32 {
    test_year - train_year
}

/// All ordered (train, test) year pairs, ordered by gap and then by
/// training year.
pub fn enumerate_pairs(years: &[i32]) -> Vec<(i32, i32)> {
    let mut years = years.to_vec();
    years.sort_unstable();
    years.dedup();
    let mut pairs: Vec<(i32, i32)> = years.iter().flat_map(|&i| years.iter().map(move |&j| (i, j))).collect();
    pairs.sort_by_key(|&(i, j)| (temporal_gap(i, j), i));
    pairs
}

pub fn pairs_by_gap(years: &[i32]) -> BTreeMap<i32, Vec<(i32, i32)>> {
    let mut groups: BTreeMap<i32, Vec<(i32, i32)>> = BTreeMap::new();
    for (i, j) in enumerate_pairs(years) {
        groups.entry(temporal_gap(i, j)).or_default().push((i, j));
    }
    groups
}

/// One prediction in the interchange format.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord<T> {
    pub train_year: i32,
    pub test_year: i32,
    pub doc_id: String,
    pub gold: String,
    pub predicted: String,
    pub score: Option<T>,
}

/// Outcome of training on one year and testing on another.
#[derive(Debug, Clone, PartialEq)]
pub struct PairResult<T> {
    pub train_year: i32,
    pub test_year: i32,
    pub gap: i32,
    pub f_macro: T,
    pub tp_rate: T,
    pub fp_rate: T,
    pub n_test: usize,
    /// Confusion counts summed over runs.
    pub counts: BinaryCounts,
    pub runs: usize,
}

/// Per-gap average performance, P(G).
#[derive(Debug, Clone, PartialEq)]
pub struct GapAggregate<T> {
    pub gap: i32,
    pub mean_f_macro: T,
    pub n_pairs: usize,
    pub pairs: Vec<(i32, i32)>,
    pub mean_tp_rate: T,
    pub mean_fp_rate: T,
    pub pooled_tp_rate: T,
    pub pooled_fp_rate: T,
}

/// Groups pair results by gap and averages them. Means are taken over the
/// pairs sorted by (train, test) so the result does not depend on input
/// order.
pub fn performance_change<T: Real>(pairs: &[PairResult<T>]) -> Vec<GapAggregate<T>> {
    let mut sorted: Vec<&PairResult<T>> = pairs.iter().collect();
    sorted.sort_by_key(|p| (p.train_year, p.test_year));
    let mut groups: BTreeMap<i32, Vec<&PairResult<T>>> = BTreeMap::new();
    for p in sorted {
        groups.entry(p.gap).or_default().push(p);
    }
    groups
        .into_iter()
        .map(|(gap, members)| {
            let pick = |f: fn(&PairResult<T>) -> T| -> T {
                mean(&members.iter().map(|p| f(p)).collect::<Vec<_>>()).expect("non-empty group")
            };
            let pooled = members.iter().fold(BinaryCounts::default(), |acc, p| acc + p.counts);
            let (pooled_tp_rate, pooled_fp_rate) = pooled.rates();
            GapAggregate {
                gap,
                mean_f_macro: pick(|p| p.f_macro),
                n_pairs: members.len(),
                pairs: members.iter().map(|p| (p.train_year, p.test_year)).collect(),
                mean_tp_rate: pick(|p| p.tp_rate),
                mean_fp_rate: pick(|p| p.fp_rate),
                pooled_tp_rate,
                pooled_fp_rate,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult<T> {
    pub metric: MetricKind,
    pub r: T,
    pub p_two_tailed: T,
    pub n: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn pair(i: i32, j: i32, f: f64) -> PairResult<f64> {
        PairResult {
            train_year: i,
            test_year: j,
            gap: temporal_gap(i, j),
            f_macro: f,
            tp_rate: f,
            fp_rate: 1.0 - f,
            n_test: 10,
            counts: BinaryCounts {
                tp: 1,
                fp: 1,
                fn_: 0,
                tn: 2,
            },
            runs: 1,
        }
    }

    #[test]
    fn gap_sign_convention() {
        assert_eq!(temporal_gap(2015, 2018), 3);
        assert_eq!(temporal_gap(2018, 2015), -3);
        assert_eq!(temporal_gap(2017, 2017), 0);
    }

    #[test]
    fn four_year_listing() {
        let groups = pairs_by_gap(&[2015, 2016, 2017, 2018]);
        assert_eq!(groups.keys().copied().collect::<Vec<_>>(), (-3..=3).collect::<Vec<_>>());
        assert_eq!(groups[&-2], vec![(2017, 2015), (2018, 2016)]);
        assert_eq!(groups[&0], vec![(2015, 2015), (2016, 2016), (2017, 2017), (2018, 2018)]);
        assert_eq!(groups[&3], vec![(2015, 2018)]);
        assert_eq!(enumerate_pairs(&[2020]), vec![(2020, 2020)]);
    }

    #[test]
    fn gap_group_sizes() {
        for n in 2..=6 {
            let years: Vec<i32> = (0..n).map(|k| 2000 + k).collect();
            let groups = pairs_by_gap(&years);
            assert_eq!(enumerate_pairs(&years).len(), (n * n) as usize);
            for (g, members) in groups {
                assert_eq!(members.len(), (n - g.abs()) as usize);
                assert!(members.iter().all(|&(i, j)| temporal_gap(i, j) == g));
            }
        }
    }

    #[test]
    fn mean_per_gap() {
        let pairs = vec![
            pair(1, 1, 1.0),
            pair(2, 2, 0.8),
            pair(3, 3, 0.9),
            pair(4, 4, 0.9),
            pair(1, 2, 0.7),
        ];
        let aggs = performance_change(&pairs);
        assert_eq!(aggs.len(), 2);
        assert!((aggs[0].mean_f_macro - 0.9).abs() < 1e-12);
        assert_eq!(aggs[0].n_pairs, 4);
        assert_eq!(aggs[1].mean_f_macro, 0.7);
        assert_eq!(aggs[1].pairs, vec![(1, 2)]);
        assert_eq!(aggs[0].pooled_tp_rate, 1.0);
        assert!((aggs[0].pooled_fp_rate - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn aggregation_ignores_input_order() {
        let mut pairs: Vec<PairResult<f64>> = enumerate_pairs(&[1, 2, 3, 4, 5])
            .into_iter()
            .map(|(i, j)| pair(i, j, 0.1 + 0.037 * f64::from(i * 7 + j * 3 % 5)))
            .collect();
        let base = performance_change(&pairs);
        let mut rng = crate::seed::rng(4);
        for _ in 0..10 {
            pairs.shuffle(&mut rng);
            assert_eq!(performance_change(&pairs), base);
        }
    }
}
