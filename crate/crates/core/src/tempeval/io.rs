//! CSV and JSON files produced and consumed by the harness.

use std::io::{Read, Write};

use super::{CorrelationResult, GapAggregate, PairResult, PredictionRecord};
use crate::error::{Error, Result};
use crate::lexmetrics::MetricKind;
use crate::scalar::{format_real, parse_real, Real};

pub const PREDICTION_HEADER: [&str; 6] = ["train_year", "test_year", "doc_id", "gold", "predicted", "score"];
pub const PAIRS_HEADER: [&str; 7] = [
    "train_year",
    "test_year",
    "gap",
    "f_macro",
    "tp_rate",
    "fp_rate",
    "n_test",
];
pub const GAPS_HEADER: [&str; 3] = ["gap", "mean_f_macro", "n_pairs"];
pub const GAP_RATES_HEADER: [&str; 6] = [
    "gap",
    "mean_tp_rate",
    "mean_fp_rate",
    "pooled_tp_rate",
    "pooled_fp_rate",
    "n_pairs",
];
pub const CORRELATIONS_HEADER: [&str; 4] = ["metric", "r", "p", "n"];
pub const HEATMAP_HEADER: [&str; 3] = ["train_year", "test_year", "value"];

fn finish<W: Write>(mut wtr: csv::Writer<W>, what: &str) -> Result<()> {
    wtr.flush().map_err(|e| Error::io(what, e))
}

struct Rows<R: Read> {
    rdr: csv::Reader<R>,
}

struct Row {
    record: csv::StringRecord,
    line: u64,
}

impl Row {
    fn err(&self, message: String) -> Error {
        Error::Parse {
            line: self.line,
            message,
        }
    }

    fn str(&self, idx: usize, name: &str) -> Result<&str> {
        self.record
            .get(idx)
            .ok_or_else(|| self.err(format!("missing column `{name}`")))
    }

    fn parse<V: std::str::FromStr>(&self, idx: usize, name: &str) -> Result<V> {
        let raw = self.str(idx, name)?;
        raw.trim()
            .parse()
            .map_err(|_| self.err(format!("invalid {name} `{raw}`")))
    }

    fn real<T: Real>(&self, idx: usize, name: &str) -> Result<T> {
        let raw = self.str(idx, name)?;
        parse_real(raw.trim()).ok_or_else(|| self.err(format!("invalid {name} `{raw}`")))
    }
}

impl<R: Read> Rows<R> {
    fn open(reader: R, header: &[&str]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let found: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if found != header {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
            });
        }
        Ok(Rows { rdr })
    }

    fn next_row(&mut self) -> Option<Result<Row>> {
        let mut record = csv::StringRecord::new();
        match self.rdr.read_record(&mut record) {
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                Some(Ok(Row { record, line }))
            }
            Ok(false) => None,
            Err(e) => Some(Err(e.into())),
        }
    }
}

pub fn write_predictions<T: Real, W: Write>(writer: W, records: &[PredictionRecord<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(PREDICTION_HEADER)?;
    for r in records {
        wtr.write_record([
            r.train_year.to_string(),
            r.test_year.to_string(),
            r.doc_id.clone(),
            r.gold.clone(),
            r.predicted.clone(),
            r.score.map(format_real).unwrap_or_default(),
        ])?;
    }
    finish(wtr, "<predictions>")
}

/// Reads a prediction file. The `score` column may be absent or empty.
pub fn read_predictions<T: Real, R: Read>(reader: R) -> Result<Vec<PredictionRecord<T>>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let has_score = match found.len() {
        6 if found == PREDICTION_HEADER => true,
        5 if found == PREDICTION_HEADER[..5] => false,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{}`", PREDICTION_HEADER.join(",")),
            })
        }
    };
    let mut rows = Rows { rdr };
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let row = row?;
        let score = if has_score {
            match row.record.get(5).map(str::trim) {
                None | Some("") => None,
                Some(_) => Some(row.real(5, "score")?),
            }
        } else {
            None
        };
        let doc_id = row.str(2, "doc_id")?.to_string();
        if doc_id.is_empty() {
            return Err(row.err("empty doc_id".into()));
        }
        out.push(PredictionRecord {
            train_year: row.parse(0, "train_year")?,
            test_year: row.parse(1, "test_year")?,
            doc_id,
            gold: row.str(3, "gold")?.to_string(),
            predicted: row.str(4, "predicted")?.to_string(),
            score,
        });
    }
    Ok(out)
}

pub fn write_pairs<T: Real, W: Write>(writer: W, pairs: &[PairResult<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(PAIRS_HEADER)?;
    for p in pairs {
        wtr.write_record([
            p.train_year.to_string(),
            p.test_year.to_string(),
            p.gap.to_string(),
            format_real(p.f_macro),
            format_real(p.tp_rate),
            format_real(p.fp_rate),
            p.n_test.to_string(),
        ])?;
    }
    finish(wtr, "<pairs>")
}

/// Reads `pairs.csv`. Confusion counts are not stored there, so they come
/// back as zero.
pub fn read_pairs<T: Real, R: Read>(reader: R) -> Result<Vec<PairResult<T>>> {
    let mut rows = Rows::open(reader, &PAIRS_HEADER)?;
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let row = row?;
        let pair = PairResult {
            train_year: row.parse(0, "train_year")?,
            test_year: row.parse(1, "test_year")?,
            gap: row.parse(2, "gap")?,
            f_macro: row.real(3, "f_macro")?,
            tp_rate: row.real(4, "tp_rate")?,
            fp_rate: row.real(5, "fp_rate")?,
            n_test: row.parse(6, "n_test")?,
            counts: Default::default(),
            runs: 1,
        };
        if pair.gap != pair.test_year - pair.train_year {
            return Err(row.err(format!("gap {} does not match the years", pair.gap)));
        }
        out.push(pair);
    }
    Ok(out)
}

pub fn write_gaps<T: Real, W: Write>(writer: W, gaps: &[GapAggregate<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(GAPS_HEADER)?;
    for g in gaps {
        wtr.write_record([g.gap.to_string(), format_real(g.mean_f_macro), g.n_pairs.to_string()])?;
    }
    finish(wtr, "<gaps>")
}

pub fn read_gaps<T: Real, R: Read>(reader: R) -> Result<Vec<(i32, T, usize)>> {
    let mut rows = Rows::open(reader, &GAPS_HEADER)?;
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let row = row?;
        out.push((
            row.parse(0, "gap")?,
            row.real(1, "mean_f_macro")?,
            row.parse(2, "n_pairs")?,
        ));
    }
    Ok(out)
}

pub fn write_gap_rates<T: Real, W: Write>(writer: W, gaps: &[GapAggregate<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(GAP_RATES_HEADER)?;
    for g in gaps {
        wtr.write_record([
            g.gap.to_string(),
            format_real(g.mean_tp_rate),
            format_real(g.mean_fp_rate),
            format_real(g.pooled_tp_rate),
            format_real(g.pooled_fp_rate),
            g.n_pairs.to_string(),
        ])?;
    }
    finish(wtr, "<gap_rates>")
}

/// Writes one row per metric; failed correlations are written as nan with
/// the number of usable pairs left blank.
pub fn write_correlations<T: Real, W: Write>(
    writer: W,
    results: &[(MetricKind, Result<CorrelationResult<T>>)],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CORRELATIONS_HEADER)?;
    for (metric, result) in results {
        let row = match result {
            Ok(c) => [
                metric.name().to_string(),
                format_real(c.r),
                format_real(c.p_two_tailed),
                c.n.to_string(),
            ],
            Err(_) => [metric.name().to_string(), "nan".into(), "nan".into(), String::new()],
        };
        wtr.write_record(row)?;
    }
    finish(wtr, "<correlations>")
}

pub fn read_correlations<T: Real, R: Read>(reader: R) -> Result<Vec<CorrelationResult<T>>> {
    let mut rows = Rows::open(reader, &CORRELATIONS_HEADER)?;
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let row = row?;
        let n = match row.str(3, "n")?.trim() {
            "" => 0,
            _ => row.parse(3, "n")?,
        };
        out.push(CorrelationResult {
            metric: row.parse(0, "metric")?,
            r: row.real(1, "r")?,
            p_two_tailed: row.real(2, "p")?,
            n,
        });
    }
    Ok(out)
}

/// Train-year by test-year matrix in long form.
pub fn write_heatmap<T: Real, W: Write>(writer: W, cells: &[(i32, i32, T)]) -> Result<()> {
    let mut sorted = cells.to_vec();
    sorted.sort_by_key(|c| (c.0, c.1));
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(HEATMAP_HEADER)?;
    for (i, j, v) in sorted {
        wtr.write_record([i.to_string(), j.to_string(), format_real(v)])?;
    }
    finish(wtr, "<heatmap>")
}

/// Writes warnings as a JSON array of strings, in the given order.
pub fn write_warnings<W: Write>(mut writer: W, warnings: &[String]) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, warnings)?;
    writer.write_all(b"\n").map_err(|e| Error::io("<warnings>", e))
}
