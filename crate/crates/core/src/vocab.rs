//! Tokenization, per-year vocabulary profiles and the word-lifetime
//! taxonomy (dying, unique, emerging, common, seasonal).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, YearSlice};
use crate::error::{Error, Result};

/// Lowercases and splits on whitespace and punctuation. A leading `#` or `@`
/// stays attached to the word it introduces; apostrophes between two
/// alphanumeric characters are kept (`don't`).
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            tokens.push(std::mem::take(current));
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        let next_is_word = chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() {
            current.push(c);
        } else if c == '#' || c == '@' {
            flush(&mut current, &mut tokens);
            if next_is_word {
                current.push(c);
            }
        } else if (c == '\'' || c == '\u{2019}')
            && next_is_word
            && current.chars().last().is_some_and(char::is_alphanumeric)
        {
            current.push('\'');
        } else {
            flush(&mut current, &mut tokens);
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

/// Term occurrence counts for one year.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VocabularyProfile {
    pub year: i32,
    counts: BTreeMap<String, u64>,
}

impl VocabularyProfile {
    pub fn from_texts<'a>(year: i32, texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for text in texts {
            for token in tokenize(text) {
                *counts.entry(token).or_default() += 1;
            }
        }
        VocabularyProfile { year, counts }
    }

    pub fn from_documents<'a>(year: i32, docs: impl IntoIterator<Item = &'a Document>) -> Self {
        Self::from_texts(year, docs.into_iter().map(|d| d.text.as_str()))
    }

    /// Drops terms seen fewer than `min_count` times.
    pub fn with_floor(mut self, min_count: u64) -> Self {
        self.counts.retain(|_, c| *c >= min_count);
        self
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn term_set(&self) -> BTreeSet<String> {
        self.counts.keys().cloned().collect()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.counts.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.counts.values().sum()
    }
}

pub fn build_profile(slice: &YearSlice) -> VocabularyProfile {
    VocabularyProfile::from_texts(slice.year, slice.texts())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LifetimeClass {
    Dying,
    Unique,
    Emerging,
    Common,
    Seasonal,
}

impl LifetimeClass {
    pub const ALL: [LifetimeClass; 5] = [
        LifetimeClass::Dying,
        LifetimeClass::Unique,
        LifetimeClass::Emerging,
        LifetimeClass::Common,
        LifetimeClass::Seasonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LifetimeClass::Dying => "dying",
            LifetimeClass::Unique => "unique",
            LifetimeClass::Emerging => "emerging",
            LifetimeClass::Common => "common",
            LifetimeClass::Seasonal => "seasonal",
        }
    }
}

impl fmt::Display for LifetimeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LifetimeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LifetimeClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown lifetime class `{s}`")))
    }
}

/// Per-year class counts plus the class of every (term, year) pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaxonomyReport {
    pub per_year: BTreeMap<i32, BTreeMap<LifetimeClass, usize>>,
    pub assignments: BTreeMap<(String, i32), LifetimeClass>,
}

impl TaxonomyReport {
    pub fn count(&self, year: i32, class: LifetimeClass) -> usize {
        self.per_year
            .get(&year)
            .and_then(|m| m.get(&class))
            .copied()
            .unwrap_or(0)
    }

    pub fn class_of(&self, term: &str, year: i32) -> Option<LifetimeClass> {
        self.assignments.get(&(term.to_string(), year)).copied()
    }

    /// Writes `year,class,count`, all five classes for every year.
    pub fn write_counts<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["year", "class", "count"])?;
        for (year, classes) in &self.per_year {
            for class in LifetimeClass::ALL {
                let n = classes.get(&class).copied().unwrap_or(0);
                wtr.write_record([year.to_string(), class.to_string(), n.to_string()])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<taxonomy>", e))?;
        Ok(())
    }

    /// Writes `term,year,class` sorted by term then year.
    pub fn write_assignments<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["term", "year", "class"])?;
        for ((term, year), class) in &self.assignments {
            wtr.write_record([term.as_str(), &year.to_string(), class.name()])?;
        }
        wtr.flush().map_err(|e| Error::io("<assignments>", e))?;
        Ok(())
    }
}

/// Classifies keys observed per year. Shared by word and aspect taxonomies.
///
/// For a key present at year `t`, the first matching rule wins:
/// common (present every year), unique (present only at `t`), emerging
/// (`t` is its first year), dying (`t` is its last year and not the final
/// year of the span), otherwise seasonal.
pub fn classify_presence<K>(years: &[(i32, BTreeSet<K>)]) -> Result<TaxonomyReport>
where
    K: Ord + Clone + Into<String>,
{
    if years.len() < 3 {
        return Err(Error::Precondition(format!(
            "lifetime classes need at least 3 years, got {}",
            years.len()
        )));
    }
    if years.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Precondition("years must be strictly increasing".into()));
    }
    let n = years.len();

    // first index, last index, number of years present
    let mut spans: BTreeMap<&K, (usize, usize, usize)> = BTreeMap::new();
    for (idx, (_, keys)) in years.iter().enumerate() {
        for key in keys {
            spans
                .entry(key)
                .and_modify(|s| {
                    s.1 = idx;
                    s.2 += 1;
                })
                .or_insert((idx, idx, 1));
        }
    }

    let mut report = TaxonomyReport::default();
    for (idx, (year, keys)) in years.iter().enumerate() {
        let counts = report.per_year.entry(*year).or_default();
        for class in LifetimeClass::ALL {
            counts.insert(class, 0);
        }
        for key in keys {
            let (first, last, present) = spans[key];
            let class = if present == n {
                LifetimeClass::Common
            } else if present == 1 {
                LifetimeClass::Unique
            } else if idx == first {
                LifetimeClass::Emerging
            } else if idx == last && idx + 1 < n {
                LifetimeClass::Dying
            } else {
                LifetimeClass::Seasonal
            };
            *counts.get_mut(&class).expect("all classes seeded") += 1;
            report.assignments.insert((key.clone().into(), *year), class);
        }
    }
    Ok(report)
}

/// Lifetime taxonomy over per-year vocabulary profiles (any order; years
/// must be distinct).
pub fn classify_lifetimes(profiles: &[VocabularyProfile]) -> Result<TaxonomyReport> {
    let mut years: Vec<(i32, BTreeSet<String>)> = profiles.iter().map(|p| (p.year, p.term_set())).collect();
    years.sort_by_key(|(y, _)| *y);
    classify_presence(&years)
}
