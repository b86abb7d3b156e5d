use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sparse feature row: `(column, value)` pairs with ascending columns.
pub type SparseRow<T> = Vec<(usize, T)>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub n_features: usize,
    pub rows: Vec<SparseRow<T>>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(n_features: usize, rows: Vec<SparseRow<T>>) -> Result<Self> {
        for row in &rows {
            if let Some(&(col, _)) = row.iter().find(|(c, _)| *c >= n_features) {
                return Err(Error::Shape {
                    expected: n_features,
                    found: col + 1,
                });
            }
        }
        Ok(FeatureMatrix { n_features, rows })
    }

    /// Builds a matrix from dense rows, dropping zeros.
    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        let sparse = rows
            .iter()
            .map(|r| {
                if r.len() != n_features {
                    return Err(Error::Shape {
                        expected: n_features,
                        found: r.len(),
                    });
                }
                Ok(r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != T::zero())
                    .map(|(i, v)| (i, *v))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            n_features,
            rows: sparse,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub(crate) fn sparse_dot<T: Real>(dense: &[T], row: &[(usize, T)]) -> T {
    row.iter().fold(T::zero(), |acc, &(i, x)| acc + dense[i] * x)
}

/// Vocabulary and smoothed idf weights learned from training documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfVectorizer<T> {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<T>,
    pub fitted_on_year: Option<i32>,
}

impl<T: Real> TfidfVectorizer<T> {
    /// Columns follow the lexicographic order of the terms;
    /// idf(t) = ln((1 + D) / (1 + df(t))) + 1.
    pub fn fit(docs: &[Vec<String>], year: Option<i32>) -> Result<Self> {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let unique: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
            for term in unique {
                *df.entry(term).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let n_docs = T::from_count(docs.len());
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (col, (term, count)) in df.into_iter().enumerate() {
            vocabulary.insert(term.to_string(), col);
            idf.push(((T::one() + n_docs) / (T::one() + T::from_count(count))).ln() + T::one());
        }
        Ok(TfidfVectorizer {
            vocabulary,
            idf,
            fitted_on_year: year,
        })
    }

    /// Rebuilds a vectorizer from stored terms (column order) and weights.
    pub fn from_parts(terms: Vec<String>, idf: Vec<T>, fitted_on_year: Option<i32>) -> Result<Self> {
        if terms.len() != idf.len() {
            return Err(Error::Shape {
                expected: terms.len(),
                found: idf.len(),
            });
        }
        if idf.iter().any(|w| !w.is_finite() || *w <= T::zero()) {
            return Err(Error::Validation("idf weights must be finite and positive".into()));
        }
        let n = terms.len();
        let vocabulary: BTreeMap<String, usize> = terms.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
        if vocabulary.len() != n {
            return Err(Error::Validation("duplicate vocabulary term".into()));
        }
        Ok(TfidfVectorizer {
            vocabulary,
            idf,
            fitted_on_year,
        })
    }

    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    /// Terms in column order.
    pub fn terms(&self) -> Vec<String> {
        let mut terms = vec![String::new(); self.vocabulary.len()];
        for (t, &i) in &self.vocabulary {
            terms[i] = t.clone();
        }
        terms
    }

    pub fn idf(&self) -> &[T] {
        &self.idf
    }

    pub fn n_features(&self) -> usize {
        self.idf.len()
    }

    fn counts_row(&self, doc: &[String]) -> SparseRow<T> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for tok in doc {
            if let Some(&col) = self.vocabulary.get(tok) {
                *counts.entry(col).or_default() += 1;
            }
        }
        counts.into_iter().map(|(c, n)| (c, T::from_count(n))).collect()
    }

    /// Raw in-vocabulary term counts.
    pub fn transform_counts(&self, docs: &[Vec<String>]) -> FeatureMatrix<T> {
        FeatureMatrix {
            n_features: self.n_features(),
            rows: docs.iter().map(|d| self.counts_row(d)).collect(),
        }
    }

    /// count × idf, L2-normalized per document. Out-of-vocabulary terms are
    /// ignored; a document with none left maps to the zero vector.
    pub fn transform(&self, docs: &[Vec<String>]) -> FeatureMatrix<T> {
        let rows = docs
            .iter()
            .map(|doc| {
                let mut row = self.counts_row(doc);
                for (col, v) in &mut row {
                    *v = *v * self.idf[*col];
                }
                let norm = row.iter().map(|(_, v)| *v * *v).sum::<T>().sqrt();
                if norm > T::zero() {
                    for (_, v) in &mut row {
                        *v = *v / norm;
                    }
                }
                row
            })
            .collect();
        FeatureMatrix {
            n_features: self.n_features(),
            rows,
        }
    }
}
