//! Document ingestion, per-year bucketing, label rebalancing and stratified
//! train/dev/test splitting.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Utc};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

const FRACTION_TOLERANCE: f64 = 1e-9;

/// One timestamped, labeled text instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: String,
    pub year: i32,
}

/// All documents of one calendar year, in ingestion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearSlice {
    pub year: i32,
    pub documents: Vec<Document>,
}

impl YearSlice {
    pub fn new(year: i32, documents: Vec<Document>) -> Result<Self> {
        if let Some(d) = documents.iter().find(|d| d.year != year) {
            return Err(Error::Validation(format!(
                "document `{}` has year {} but the slice is {}",
                d.id, d.year, year
            )));
        }
        Ok(YearSlice { year, documents })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.text.as_str())
    }
}

/// A corpus bucketed into ascending, non-empty year slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalDataset {
    slices: Vec<YearSlice>,
    label_set: BTreeSet<String>,
}

impl TemporalDataset {
    /// Buckets documents by year, keeping ingestion order inside each year.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::with_capacity(documents.len());
        let mut buckets: BTreeMap<i32, Vec<Document>> = BTreeMap::new();
        let mut label_set = BTreeSet::new();
        for doc in documents {
            validate_document(&doc)?;
            if !seen.insert(doc.id.clone()) {
                return Err(Error::DuplicateId(doc.id));
            }
            label_set.insert(doc.label.clone());
            buckets.entry(doc.year).or_default().push(doc);
        }
        let slices = buckets
            .into_iter()
            .map(|(year, documents)| YearSlice { year, documents })
            .collect();
        Ok(TemporalDataset { slices, label_set })
    }

    pub fn slices(&self) -> &[YearSlice] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<YearSlice> {
        self.slices
    }

    pub fn label_set(&self) -> &BTreeSet<String> {
        &self.label_set
    }

    pub fn years(&self) -> Vec<i32> {
        self.slices.iter().map(|s| s.year).collect()
    }

    /// Number of years spanned (N).
    pub fn n_years(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, year: i32) -> Option<&YearSlice> {
        self.slices.iter().find(|s| s.year == year)
    }

    pub fn len(&self) -> usize {
        self.slices.iter().map(YearSlice::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Label fractions pooled over every year.
    pub fn label_distribution(&self) -> BTreeMap<String, f64> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for doc in self.slices.iter().flat_map(|s| &s.documents) {
            *counts.entry(doc.label.clone()).or_default() += 1;
        }
        let total = self.len() as f64;
        counts.into_iter().map(|(label, n)| (label, n as f64 / total)).collect()
    }
}

fn validate_document(doc: &Document) -> Result<()> {
    if doc.id.is_empty() {
        return Err(Error::Validation("document with empty id".into()));
    }
    if doc.text.trim().is_empty() {
        return Err(Error::Validation(format!("document `{}` has empty text", doc.id)));
    }
    if doc.label.is_empty() {
        return Err(Error::Validation(format!("document `{}` has empty label", doc.id)));
    }
    Ok(())
}

/// On-disk document encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }

    /// Guesses the format from a file extension (`.csv`, `.jsonl`, `.json`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "jsonl" | "json" | "ndjson" => Some(Format::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json" => Ok(Format::Jsonl),
            other => Err(Error::Validation(format!("unknown document format `{other}`"))),
        }
    }
}

/// Reads a documents file and buckets it by year.
pub fn ingest(path: &Path, format: Format) -> Result<TemporalDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let documents = read_documents(BufReader::new(file), format)?;
    TemporalDataset::from_documents(documents)
}

/// Parses documents without bucketing them.
pub fn read_documents<R: Read>(reader: R, format: Format) -> Result<Vec<Document>> {
    match format {
        Format::Csv => read_csv(reader),
        Format::Jsonl => read_jsonl(reader),
    }
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<Document>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (id_col, text_col, label_col) = (column("id"), column("text"), column("label"));
    let (year_col, ts_col) = (column("year"), column("timestamp"));
    for (name, col) in [("id", id_col), ("text", text_col), ("label", label_col)] {
        if col.is_none() {
            return Err(Error::Parse {
                line: 1,
                message: format!("header is missing the `{name}` column"),
            });
        }
    }
    if year_col.is_none() && ts_col.is_none() {
        return Err(Error::Parse {
            line: 1,
            message: "header needs a `year` or `timestamp` column".into(),
        });
    }

    let mut documents = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: Option<usize>| {
            col.and_then(|c| record.get(c))
                .filter(|v| !v.is_empty())
                .map(str::to_string)
        };
        let raw = RawRecord {
            id: field(id_col),
            text: field(text_col),
            label: field(label_col),
            year: field(year_col),
            timestamp: field(ts_col),
        };
        documents.push(raw.into_document(line)?);
    }
    Ok(documents)
}

fn read_jsonl<R: Read>(reader: R) -> Result<Vec<Document>> {
    let mut documents = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        let field = |key: &str| match obj.get(key) {
            Some(serde_json::Value::String(s)) if !s.is_empty() => Some(s.clone()),
            Some(serde_json::Value::Number(n)) => Some(n.to_string()),
            _ => None,
        };
        let raw = RawRecord {
            id: field("id"),
            text: field("text"),
            label: field("label"),
            year: field("year"),
            timestamp: field("timestamp"),
        };
        documents.push(raw.into_document(line_no)?);
    }
    Ok(documents)
}

struct RawRecord {
    id: Option<String>,
    text: Option<String>,
    label: Option<String>,
    year: Option<String>,
    timestamp: Option<String>,
}

impl RawRecord {
    fn into_document(self, line: u64) -> Result<Document> {
        let missing = |name: &str| Error::Parse {
            line,
            message: format!("record is missing `{name}`"),
        };
        let id = self.id.ok_or_else(|| missing("id"))?;
        let text = self.text.ok_or_else(|| missing("text"))?;
        let label = self.label.ok_or_else(|| missing("label"))?;
        let when = self.year.or(self.timestamp).ok_or_else(|| missing("year"))?;
        let year = parse_year(&when).ok_or_else(|| Error::Parse {
            line,
            message: format!("cannot read a year from `{when}`"),
        })?;
        if text.trim().is_empty() {
            return Err(Error::Parse {
                line,
                message: "text is empty".into(),
            });
        }
        Ok(Document { id, text, label, year })
    }
}

/// Accepts a bare integer year or an ISO-8601 timestamp; timestamps are
/// converted to their UTC calendar year.
pub fn parse_year(s: &str) -> Option<i32> {
    let s = s.trim();
    if let Ok(y) = s.parse::<i32>() {
        return Some(y);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc).year());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.year());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(|d| d.year())
}

pub fn write_documents<W: Write>(writer: W, documents: &[Document], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            wtr.write_record(["id", "text", "label", "year"])?;
            for d in documents {
                wtr.write_record([d.id.as_str(), &d.text, &d.label, &d.year.to_string()])?;
            }
            wtr.flush().map_err(|e| Error::io("<documents>", e))?;
        }
        Format::Jsonl => {
            let mut w = BufWriter::new(writer);
            for d in documents {
                serde_json::to_writer(&mut w, d)?;
                w.write_all(b"\n").map_err(|e| Error::io("<documents>", e))?;
            }
            w.flush().map_err(|e| Error::io("<documents>", e))?;
        }
    }
    Ok(())
}

/// Splits `total` into integer parts proportional to `fractions` using the
/// largest-remainder method. Ties go to the earlier index.
pub fn largest_remainder(total: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor().max(0.0) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    if assigned <= total {
        for &i in order.iter().cycle().take(total - assigned) {
            counts[i] += 1;
        }
    } else {
        // only reachable when fractions overshoot 1 by rounding noise
        for &i in order.iter().rev().cycle().take(assigned - total) {
            counts[i] = counts[i].saturating_sub(1);
        }
    }
    counts
}

fn check_fractions<'a>(fractions: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    let mut sum = 0.0;
    for &f in fractions {
        if !f.is_finite() || f < 0.0 {
            return Err(Error::Validation(format!("invalid fraction {f}")));
        }
        sum += f;
    }
    if (sum - 1.0).abs() > FRACTION_TOLERANCE {
        return Err(Error::Validation(format!("fractions sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Down-samples a slice to exactly `per_year_size` documents with the given
/// label distribution. Documents keep their ingestion order.
pub fn rebalance(
    slice: &YearSlice,
    per_year_size: usize,
    label_dist: &BTreeMap<String, f64>,
    seed: u64,
) -> Result<YearSlice> {
    if per_year_size == 0 {
        return Err(Error::Validation("per-year size must be positive".into()));
    }
    check_fractions(label_dist.values())?;
    let fractions: Vec<f64> = label_dist.values().copied().collect();
    let targets = largest_remainder(per_year_size, &fractions);

    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, doc) in slice.documents.iter().enumerate() {
        by_label.entry(doc.label.as_str()).or_default().push(idx);
    }

    let mut rng = seed::rng(seed);
    let mut keep = Vec::with_capacity(per_year_size);
    for (label, &want) in label_dist.keys().zip(&targets) {
        let mut pool = by_label.get(label.as_str()).cloned().unwrap_or_default();
        if pool.len() < want {
            return Err(Error::Capacity {
                label: label.clone(),
                requested: want,
                available: pool.len(),
            });
        }
        pool.shuffle(&mut rng);
        keep.extend_from_slice(&pool[..want]);
    }
    keep.sort_unstable();
    Ok(YearSlice {
        year: slice.year,
        documents: keep.into_iter().map(|i| slice.documents[i].clone()).collect(),
    })
}

/// Train/dev/test proportions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.75,
            dev: 0.10,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self> {
        let f = SplitFractions { train, dev, test };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|&p| p <= 0.0) {
            return Err(Error::Validation("split fractions must be positive".into()));
        }
        check_fractions(&parts)
    }
}

/// Per-year train/dev/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalSplit {
    pub year: i32,
    pub train: Vec<Document>,
    pub dev: Vec<Document>,
    pub test: Vec<Document>,
}

impl TemporalSplit {
    pub fn part(&self, part: Part) -> &[Document] {
        match part {
            Part::Train => &self.train,
            Part::Dev => &self.dev,
            Part::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every document of the year, train then dev then test.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.train.iter().chain(&self.dev).chain(&self.test)
    }

    pub fn labels(&self) -> BTreeSet<String> {
        self.documents().map(|d| d.label.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Train,
    Dev,
    Test,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Train, Part::Dev, Part::Test];

    pub fn name(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Dev => "dev",
            Part::Test => "test",
        }
    }
}

impl FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Part::Train),
            "dev" => Ok(Part::Dev),
            "test" => Ok(Part::Test),
            other => Err(Error::Validation(format!("unknown split part `{other}`"))),
        }
    }
}

/// Stratified split: each label stratum is shuffled with `seed` and cut by
/// largest-remainder counts. Parts keep ingestion order.
pub fn stratified_split(slice: &YearSlice, fractions: SplitFractions, seed: u64) -> Result<TemporalSplit> {
    fractions.validate()?;
    let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, doc) in slice.documents.iter().enumerate() {
        strata.entry(doc.label.as_str()).or_default().push(idx);
    }
    if let Some((label, members)) = strata.iter().find(|(_, m)| m.len() < 3) {
        return Err(Error::Stratification {
            label: label.to_string(),
            count: members.len(),
        });
    }

    let weights = [fractions.train, fractions.dev, fractions.test];
    let mut rng = seed::rng(seed);
    let mut assigned: [Vec<usize>; 3] = Default::default();
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        let counts = largest_remainder(members.len(), &weights);
        let mut rest = members.as_slice();
        for (part, n) in assigned.iter_mut().zip(counts) {
            let (head, tail) = rest.split_at(n);
            part.extend_from_slice(head);
            rest = tail;
        }
    }
    let [train, dev, test] = assigned.map(|mut idx| {
        idx.sort_unstable();
        idx.into_iter().map(|i| slice.documents[i].clone()).collect::<Vec<_>>()
    });
    Ok(TemporalSplit {
        year: slice.year,
        train,
        dev,
        test,
    })
}

/// Splits every year of a dataset; each year draws from its own stream
/// derived from `seed`.
pub fn split_dataset(dataset: &TemporalDataset, fractions: SplitFractions, seed: u64) -> Result<Vec<TemporalSplit>> {
    dataset
        .slices()
        .iter()
        .map(|slice| stratified_split(slice, fractions, seed::derive(seed, slice.year as i64)))
        .collect()
}

/// File name of one split part, e.g. `2016.train.csv`.
pub fn split_file_name(year: i32, part: Part, format: Format) -> String {
    format!("{year}.{}.{}", part.name(), format.extension())
}

pub fn write_splits(dir: &Path, splits: &[TemporalSplit], format: Format) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for split in splits {
        for part in Part::ALL {
            let path = dir.join(split_file_name(split.year, part, format));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_documents(BufWriter::new(file), split.part(part), format)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Loads every `<year>.<part>.<ext>` triple from a split directory.
pub fn load_splits(dir: &Path) -> Result<Vec<TemporalSplit>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: BTreeMap<i32, BTreeMap<Part, PathBuf>> = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let pieces: Vec<&str> = name.split('.').collect();
        let [year, part, ext] = pieces.as_slice() else {
            continue;
        };
        let (Ok(year), Ok(part), true) = (
            year.parse::<i32>(),
            part.parse::<Part>(),
            matches!(*ext, "csv" | "jsonl"),
        ) else {
            continue;
        };
        if files.entry(year).or_default().insert(part, path.clone()).is_some() {
            return Err(Error::Validation(format!(
                "year {year} has more than one {} file",
                part.name()
            )));
        }
    }
    if files.is_empty() {
        return Err(Error::Validation(format!("no split files found in {}", dir.display())));
    }

    let mut splits = Vec::with_capacity(files.len());
    let mut seen_ids = HashSet::new();
    for (year, parts) in files {
        let mut loaded: BTreeMap<Part, Vec<Document>> = BTreeMap::new();
        for part in Part::ALL {
            let path = parts
                .get(&part)
                .ok_or_else(|| Error::Validation(format!("year {year} is missing its {} split", part.name())))?;
            let format = Format::from_path(path).unwrap_or(Format::Csv);
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let docs = read_documents(BufReader::new(file), format)?;
            for d in &docs {
                if d.year != year {
                    return Err(Error::Validation(format!(
                        "{}: document `{}` has year {}",
                        path.display(),
                        d.id,
                        d.year
                    )));
                }
                if !seen_ids.insert(d.id.clone()) {
                    return Err(Error::DuplicateId(d.id.clone()));
                }
            }
            loaded.insert(part, docs);
        }
        splits.push(TemporalSplit {
            year,
            train: loaded.remove(&Part::Train).unwrap_or_default(),
            dev: loaded.remove(&Part::Dev).unwrap_or_default(),
            test: loaded.remove(&Part::Test).unwrap_or_default(),
        });
    }
    Ok(splits)
}
