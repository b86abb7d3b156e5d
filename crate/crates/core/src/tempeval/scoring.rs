use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores<T> {
    pub label: String,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroF1Report<T> {
    pub value: T,
    pub per_class: Vec<ClassScores<T>>,
    /// Labels of the label set seen in neither golds nor predictions; each
    /// contributes an F1 of zero.
    pub absent_labels: Vec<String>,
}

fn ratio<T: Real>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_count(num) / T::from_count(den)
    }
}

fn check_inputs<S: AsRef<str>>(golds: &[S], preds: &[S], label_set: &BTreeSet<String>) -> Result<()> {
    if golds.len() != preds.len() {
        return Err(Error::Shape {
            expected: golds.len(),
            found: preds.len(),
        });
    }
    if golds.is_empty() {
        return Err(Error::Validation("cannot score an empty prediction set".into()));
    }
    if let Some(l) = golds.iter().chain(preds).find(|l| !label_set.contains(l.as_ref())) {
        return Err(Error::Validation(format!(
            "label `{}` is not in the label set",
            l.as_ref()
        )));
    }
    Ok(())
}

/// Per-class precision/recall/F1 and their unweighted mean over the whole
/// label set. Any 0/0 is taken as 0.
pub fn macro_f1_report<T: Real, S: AsRef<str>>(
    golds: &[S],
    preds: &[S],
    label_set: &BTreeSet<String>,
) -> Result<MacroF1Report<T>> {
    check_inputs(golds, preds, label_set)?;
    let index: HashMap<&str, usize> = label_set.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let k = label_set.len();
    let (mut tp, mut fp, mut fneg) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (g, p) in golds.iter().zip(preds) {
        let (g, p) = (index[g.as_ref()], index[p.as_ref()]);
        if g == p {
            tp[g] += 1;
        } else {
            fp[p] += 1;
            fneg[g] += 1;
        }
    }
    let mut per_class = Vec::with_capacity(k);
    let mut absent_labels = Vec::new();
    for (i, label) in label_set.iter().enumerate() {
        let precision: T = ratio(tp[i], tp[i] + fp[i]);
        let recall: T = ratio(tp[i], tp[i] + fneg[i]);
        let f1 = if precision + recall > T::zero() {
            T::lit(2.0) * precision * recall / (precision + recall)
        } else {
            T::zero()
        };
        if tp[i] + fp[i] + fneg[i] == 0 {
            absent_labels.push(label.clone());
        }
        per_class.push(ClassScores {
            label: label.clone(),
            precision,
            recall,
            f1,
            support: tp[i] + fneg[i],
        });
    }
    let value = per_class.iter().map(|c| c.f1).sum::<T>() / T::from_count(k);
    Ok(MacroF1Report {
        value,
        per_class,
        absent_labels,
    })
}

pub fn macro_f1<T: Real, S: AsRef<str>>(golds: &[S], preds: &[S], label_set: &BTreeSet<String>) -> Result<T> {
    macro_f1_report(golds, preds, label_set).map(|r| r.value)
}

/// Binary confusion counts with respect to a positive label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl BinaryCounts {
    pub fn tally<S: AsRef<str>>(golds: &[S], preds: &[S], positive: &str) -> Self {
        let mut c = BinaryCounts::default();
        for (g, p) in golds.iter().zip(preds) {
            match (g.as_ref() == positive, p.as_ref() == positive) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    /// `(TP / (TP + FN), FP / (FP + TN))`, 0/0 taken as 0.
    pub fn rates<T: Real>(&self) -> (T, T) {
        (ratio(self.tp, self.tp + self.fn_), ratio(self.fp, self.fp + self.tn))
    }
}

impl std::ops::Add for BinaryCounts {
    type Output = BinaryCounts;

    fn add(self, o: BinaryCounts) -> BinaryCounts {
        BinaryCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

pub fn tp_fp_rates<T: Real, S: AsRef<str>>(
    golds: &[S],
    preds: &[S],
    positive_label: &str,
    label_set: &BTreeSet<String>,
) -> Result<(T, T)> {
    if label_set.len() != 2 {
        return Err(Error::UnsupportedLabel(format!(
            "TP/FP rates need a binary label set, got {} labels",
            label_set.len()
        )));
    }
    if !label_set.contains(positive_label) {
        return Err(Error::Validation(format!(
            "positive label `{positive_label}` is not in the label set"
        )));
    }
    check_inputs(golds, preds, label_set)?;
    Ok(BinaryCounts::tally(golds, preds, positive_label).rates())
}
