//! Unsupervised divergence metrics between a source (training) year and a
//! target (test) year: familiarity, Jaccard index, tf-idf similarity and
//! information rate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::scalar::{format_real, parse_real, Real};
use crate::vocab::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    Familiarity,
    Jaccard,
    TfidfSimilarity,
    InformationRate,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Familiarity,
        MetricKind::Jaccard,
        MetricKind::TfidfSimilarity,
        MetricKind::InformationRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Familiarity => "familiarity",
            MetricKind::Jaccard => "jaccard",
            MetricKind::TfidfSimilarity => "tfidf_similarity",
            MetricKind::InformationRate => "information_rate",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue<T> {
    pub metric: MetricKind,
    pub source_year: i32,
    pub target_year: i32,
    pub value: T,
}

/// Documents of one year, already tokenized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSlice {
    pub year: i32,
    pub docs: Vec<Vec<String>>,
}

impl TokenizedSlice {
    pub fn new(year: i32, docs: Vec<Vec<String>>) -> Self {
        TokenizedSlice { year, docs }
    }

    pub fn from_texts<'a>(year: i32, texts: impl IntoIterator<Item = &'a str>) -> Self {
        TokenizedSlice {
            year,
            docs: texts.into_iter().map(tokenize).collect(),
        }
    }

    pub fn from_documents<'a>(year: i32, docs: impl IntoIterator<Item = &'a Document>) -> Self {
        Self::from_texts(year, docs.into_iter().map(|d| d.text.as_str()))
    }

    pub fn term_set(&self) -> BTreeSet<String> {
        self.docs.iter().flatten().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// |U ∩ V| / |V − U|. `+inf` when V ⊆ U and the overlap is non-empty.
pub fn familiarity<T: Real, K: Ord>(u: &BTreeSet<K>, v: &BTreeSet<K>) -> Result<T> {
    let overlap = v.intersection(u).count();
    let novel = v.len() - overlap;
    match (overlap, novel) {
        (0, 0) => Err(Error::UndefinedMetric("familiarity: target vocabulary is empty".into())),
        (_, 0) => Ok(T::infinity()),
        (o, n) => Ok(T::from_count(o) / T::from_count(n)),
    }
}

/// |U ∩ V| / |U ∪ V|.
pub fn jaccard<T: Real, K: Ord>(u: &BTreeSet<K>, v: &BTreeSet<K>) -> Result<T> {
    let overlap = u.intersection(v).count();
    let union = u.len() + v.len() - overlap;
    if union == 0 {
        return Err(Error::UndefinedMetric("jaccard: both vocabularies are empty".into()));
    }
    Ok(T::from_count(overlap) / T::from_count(union))
}

/// Slice-level tf-idf weights: tf = count / total tokens,
/// idf = ln((1 + D) / (1 + df)) + 1.
pub fn slice_tfidf<T: Real>(slice: &TokenizedSlice) -> BTreeMap<&str, T> {
    let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for doc in &slice.docs {
        let mut seen = BTreeSet::new();
        for tok in doc {
            *tf.entry(tok).or_default() += 1;
            total += 1;
            if seen.insert(tok.as_str()) {
                *df.entry(tok).or_default() += 1;
            }
        }
    }
    let n_docs = T::from_count(slice.docs.len());
    tf.into_iter()
        .map(|(term, count)| {
            let idf = ((T::one() + n_docs) / (T::one() + T::from_count(df[term]))).ln() + T::one();
            (term, T::from_count(count) / T::from_count(total) * idf)
        })
        .collect()
}

/// Cosine between the two slices' tf-idf vectors over the union vocabulary.
pub fn tfidf_similarity<T: Real>(source: &TokenizedSlice, target: &TokenizedSlice) -> Result<T> {
    let a = slice_tfidf::<T>(source);
    let b = slice_tfidf::<T>(target);
    if a.is_empty() || b.is_empty() {
        return Err(Error::UndefinedMetric("tfidf_similarity: a slice has no tokens".into()));
    }
    let dot: T = a.iter().filter_map(|(t, wa)| b.get(t).map(|wb| *wa * *wb)).sum();
    let na: T = a.values().map(|w| *w * *w).sum();
    let nb: T = b.values().map(|w| *w * *w).sum();
    Ok((dot / (na * nb).sqrt()).min(T::one()))
}

const BOS: u32 = 0;
const EOS: u32 = 1;
const UNK: u32 = 2;

/// Order-1 Markov model with add-one smoothing over the source vocabulary
/// plus `<unk>` and `</s>`.
#[derive(Debug, Clone)]
pub struct BigramModel {
    ids: HashMap<String, u32>,
    transitions: HashMap<(u32, u32), u64>,
    context: HashMap<u32, u64>,
}

impl BigramModel {
    pub fn fit(source: &TokenizedSlice) -> Result<Self> {
        if source.is_empty() {
            return Err(Error::Precondition("information_rate: source slice is empty".into()));
        }
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut transitions = HashMap::new();
        let mut context = HashMap::new();
        for doc in &source.docs {
            let mut prev = BOS;
            for tok in doc {
                let next_id = ids.len() as u32 + 3;
                let id = *ids.entry(tok.clone()).or_insert(next_id);
                *transitions.entry((prev, id)).or_insert(0) += 1;
                *context.entry(prev).or_insert(0) += 1;
                prev = id;
            }
            *transitions.entry((prev, EOS)).or_insert(0) += 1;
            *context.entry(prev).or_insert(0) += 1;
        }
        Ok(BigramModel {
            ids,
            transitions,
            context,
        })
    }

    /// Size of the prediction space: source types plus `<unk>` and `</s>`.
    pub fn support_size(&self) -> usize {
        self.ids.len() + 2
    }

    fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    /// Natural-log probability of `next` following `prev`.
    fn ln_prob<T: Real>(&self, prev: u32, next: u32) -> T {
        let joint = self.transitions.get(&(prev, next)).copied().unwrap_or(0);
        let ctx = self.context.get(&prev).copied().unwrap_or(0);
        let num = T::lit((joint + 1) as f64);
        let den = T::lit((ctx + self.support_size() as u64) as f64);
        (num / den).ln()
    }

    /// Mean surprisal per transition of the target, in units of `log_base`.
    pub fn cross_entropy<T: Real>(&self, target: &TokenizedSlice, base: T) -> Result<T> {
        if !(base > T::zero() && base != T::one() && base.is_finite()) {
            return Err(Error::Validation(format!("invalid logarithm base {base}")));
        }
        let mut total = T::zero();
        let mut n = 0usize;
        for doc in &target.docs {
            let mut prev = BOS;
            for tok in doc {
                let id = self.id(tok);
                total = total + self.ln_prob::<T>(prev, id);
                n += 1;
                prev = id;
            }
            total = total + self.ln_prob::<T>(prev, EOS);
            n += 1;
        }
        if n == 0 {
            return Err(Error::UndefinedMetric(
                "information_rate: target has no transitions".into(),
            ));
        }
        Ok(-total / T::from_count(n) / base.ln())
    }
}

/// Empirical conditional entropy of the target under a bigram model of the
/// source, in bits per token for `base = 2`.
pub fn information_rate<T: Real>(source: &TokenizedSlice, target: &TokenizedSlice, base: T) -> Result<T> {
    BigramModel::fit(source)?.cross_entropy(target, base)
}

/// Computes one metric between two tokenized slices.
pub fn compute<T: Real>(
    metric: MetricKind,
    source: &TokenizedSlice,
    target: &TokenizedSlice,
    base: T,
) -> Result<MetricValue<T>> {
    let value = match metric {
        MetricKind::Familiarity => familiarity(&source.term_set(), &target.term_set())?,
        MetricKind::Jaccard => jaccard(&source.term_set(), &target.term_set())?,
        MetricKind::TfidfSimilarity => tfidf_similarity(source, target)?,
        MetricKind::InformationRate => information_rate(source, target, base)?,
    };
    Ok(MetricValue {
        metric,
        source_year: source.year,
        target_year: target.year,
        value,
    })
}

/// Every metric over every ordered (source, target) pair. A metric that is
/// undefined on a pair is recorded as nan with a warning.
pub fn pairwise<T: Real>(
    sources: &[TokenizedSlice],
    targets: &[TokenizedSlice],
    metrics: &[MetricKind],
    base: T,
) -> (Vec<MetricValue<T>>, Vec<String>) {
    let mut values = Vec::new();
    let mut warnings = Vec::new();
    for &metric in metrics {
        for source in sources {
            let model = match metric {
                MetricKind::InformationRate => Some(BigramModel::fit(source)),
                _ => None,
            };
            for target in targets {
                let result = match &model {
                    Some(Ok(m)) => m.cross_entropy(target, base),
                    Some(Err(e)) => Err(Error::UndefinedMetric(e.to_string())),
                    None => compute(metric, source, target, base).map(|v| v.value),
                };
                let value = result.unwrap_or_else(|e| {
                    warnings.push(format!("{metric} {}->{}: {e}", source.year, target.year));
                    T::nan()
                });
                values.push(MetricValue {
                    metric,
                    source_year: source.year,
                    target_year: target.year,
                    value,
                });
            }
        }
    }
    (values, warnings)
}

/// Writes `metric,source_year,target_year,value`.
pub fn write_metrics<T: Real, W: Write>(writer: W, values: &[MetricValue<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["metric", "source_year", "target_year", "value"])?;
    for v in values {
        wtr.write_record([
            v.metric.name().to_string(),
            v.source_year.to_string(),
            v.target_year.to_string(),
            format_real(v.value),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<metrics>", e))?;
    Ok(())
}

pub fn read_metrics<T: Real, R: Read>(reader: R) -> Result<Vec<MetricValue<T>>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let expected = ["metric", "source_year", "target_year", "value"];
    if rdr.headers()?.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        out.push(MetricValue {
            metric: record[0].parse().map_err(|_| bad("metric"))?,
            source_year: record[1].trim().parse().map_err(|_| bad("source_year"))?,
            target_year: record[2].trim().parse().map_err(|_| bad("target_year"))?,
            value: parse_real(&record[3]).ok_or_else(|| bad("value"))?,
        });
    }
    Ok(out)
}
