use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_real, mean, Real};
use crate::vocab::{LifetimeClass, TaxonomyReport};

/// One year's aspect vectors, all of dimension `dimension`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    pub year: i32,
    dimension: usize,
    vectors: BTreeMap<String, Vec<T>>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingLine {
    aspect: String,
    vector: Vec<f64>,
}

impl<T: Real> EmbeddingTable<T> {
    pub fn new(year: i32, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Validation("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            year,
            dimension,
            vectors: BTreeMap::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn insert(&mut self, aspect: impl Into<String>, vector: Vec<T>) -> Result<()> {
        let aspect = aspect.into();
        if vector.len() != self.dimension {
            return Err(Error::Shape {
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "aspect `{aspect}` has a non-finite component"
            )));
        }
        if vector.iter().all(|x| x.is_zero()) {
            return Err(Error::Validation(format!("aspect `{aspect}` has a zero vector")));
        }
        if self.vectors.insert(aspect.clone(), vector).is_some() {
            return Err(Error::Validation(format!(
                "aspect `{aspect}` appears twice in year {}",
                self.year
            )));
        }
        Ok(())
    }

    pub fn get(&self, aspect: &str) -> Option<&[T]> {
        self.vectors.get(aspect).map(Vec::as_slice)
    }

    pub fn aspects(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Reads `{"aspect": ..., "vector": [...]}` lines.
    pub fn read_jsonl<R: Read>(reader: R, year: i32, dimension: usize) -> Result<Self> {
        let mut table = Self::new(year, dimension)?;
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io("<embeddings>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let at = |message: String| Error::Parse {
                line: idx as u64 + 1,
                message,
            };
            let parsed: EmbeddingLine = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
            let vector = parsed
                .vector
                .iter()
                .map(|&x| T::from_f64(x).ok_or_else(|| at(format!("component {x} is not representable"))))
                .collect::<Result<Vec<T>>>()?;
            table.insert(parsed.aspect, vector).map_err(|e| at(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for (aspect, vector) in &self.vectors {
            let line = EmbeddingLine {
                aspect: aspect.clone(),
                vector: vector.iter().map(|x| x.to_f64().expect("finite")).collect(),
            };
            serde_json::to_writer(&mut writer, &line)?;
            writer.write_all(b"\n").map_err(|e| Error::io("<embeddings>", e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub year: i32,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub dimension: usize,
    pub tables: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Validation("manifest dimension must be positive".into()));
        }
        if self.tables.is_empty() {
            return Err(Error::Validation("manifest lists no tables".into()));
        }
        let mut years = BTreeSet::new();
        for t in &self.tables {
            if !years.insert(t.year) {
                return Err(Error::Validation(format!("manifest lists year {} twice", t.year)));
            }
        }
        Ok(())
    }

    pub fn years(&self) -> Vec<i32> {
        let mut ys: Vec<i32> = self.tables.iter().map(|t| t.year).collect();
        ys.sort_unstable();
        ys
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let m: Manifest = serde_json::from_reader(reader)?;
        m.validate()?;
        Ok(m)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<manifest>", e))
    }
}

/// Loads a manifest and every table it lists, sorted by year.
pub fn load_manifest<T: Real>(path: &Path) -> Result<(Manifest, Vec<EmbeddingTable<T>>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let manifest = Manifest::read(file).map_err(|e| match e {
        Error::Json(j) if !j.is_io() => Error::Validation(format!("{}: {j}", path.display())),
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = manifest.tables.clone();
    entries.sort_by_key(|t| t.year);
    let tables = entries
        .iter()
        .map(|entry| {
            let table_path = base.join(&entry.path);
            let file = fs::File::open(&table_path).map_err(|e| Error::io(&table_path, e))?;
            EmbeddingTable::read_jsonl(file, entry.year, manifest.dimension).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{}: {message}", table_path.display()),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, tables))
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine<T: Real>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::Shape {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (mut dot, mut uu, mut vv) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in u.iter().zip(v) {
        dot = dot + a * b;
        uu = uu + a * a;
        vv = vv + b * b;
    }
    if uu.is_zero() || vv.is_zero() {
        return Err(Error::UndefinedSimilarity);
    }
    let s = dot / (uu * vv).sqrt();
    Ok(s.max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilaritySeries<T> {
    pub aspect: String,
    pub pivot_year: i32,
    /// (year, cosine against the pivot vector), sorted by year.
    pub sims: Vec<(i32, T)>,
    /// Later years whose table lacks the aspect.
    pub gaps: Vec<i32>,
    pub mean: Option<T>,
}

impl<T: Real> SimilaritySeries<T> {
    pub fn values(&self) -> Vec<T> {
        self.sims.iter().map(|s| s.1).collect()
    }
}

/// Similarity of the aspect in every year after the pivot to its pivot
/// vector.
pub fn similarity_series<T: Real>(
    tables: &[EmbeddingTable<T>],
    aspect: &str,
    pivot_year: i32,
) -> Result<SimilaritySeries<T>> {
    let pivot = tables
        .iter()
        .find(|t| t.year == pivot_year)
        .ok_or_else(|| Error::Validation(format!("no embedding table for pivot year {pivot_year}")))?;
    let anchor = pivot.get(aspect).ok_or_else(|| Error::MissingPivot {
        aspect: aspect.to_string(),
        pivot_year,
    })?;
    let mut later: Vec<&EmbeddingTable<T>> = tables.iter().filter(|t| t.year > pivot_year).collect();
    later.sort_by_key(|t| t.year);
    let mut sims = Vec::new();
    let mut gaps = Vec::new();
    for table in later {
        match table.get(aspect) {
            Some(v) => sims.push((table.year, cosine(anchor, v)?)),
            None => gaps.push(table.year),
        }
    }
    let mean = mean(&sims.iter().map(|s| s.1).collect::<Vec<_>>());
    Ok(SimilaritySeries {
        aspect: aspect.to_string(),
        pivot_year,
        sims,
        gaps,
        mean,
    })
}

/// Population variance (denominator N). `None` for an empty slice.
pub fn population_variance<T: Real>(xs: &[T]) -> Option<T> {
    let mu = mean(xs)?;
    let ss: T = xs.iter().map(|&x| (x - mu) * (x - mu)).sum();
    Some(ss / T::from_count(xs.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRank<T> {
    pub aspect: String,
    pub variance: T,
    pub class: Option<LifetimeClass>,
}

fn class_at_latest(report: &TaxonomyReport, aspect: &str) -> Option<LifetimeClass> {
    report
        .assignments
        .range((aspect.to_string(), i32::MIN)..=(aspect.to_string(), i32::MAX))
        .next_back()
        .map(|(_, c)| *c)
}

/// Ranks series by variance, largest first; ties go to the smaller
/// canonical form. The class is the aspect's class in the latest year it
/// occurs in the taxonomy.
pub fn variance_rank<T: Real>(
    series: &[SimilaritySeries<T>],
    taxonomy: Option<&TaxonomyReport>,
) -> Result<Vec<DriftRank<T>>> {
    let mut ranks = series
        .iter()
        .map(|s| {
            if s.sims.len() < 2 {
                return Err(Error::InsufficientSeries {
                    aspect: s.aspect.clone(),
                    n: s.sims.len(),
                });
            }
            Ok(DriftRank {
                aspect: s.aspect.clone(),
                variance: population_variance(&s.values()).expect("non-empty"),
                class: taxonomy.and_then(|t| class_at_latest(t, &s.aspect)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranks.sort_by(|a, b| {
        b.variance
            .partial_cmp(&a.variance)
            .expect("finite")
            .then_with(|| a.aspect.cmp(&b.aspect))
    });
    Ok(ranks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftOutput<T> {
    pub series: Vec<SimilaritySeries<T>>,
    pub ranks: Vec<DriftRank<T>>,
    pub warnings: Vec<String>,
}

/// Series and ranking for a set of aspects. With `lenient`, aspects
/// missing from the pivot year or with fewer than two values are skipped
/// with a warning instead of failing the run.
pub fn rank_aspects<T: Real>(
    tables: &[EmbeddingTable<T>],
    aspects: &BTreeSet<String>,
    pivot_year: i32,
    taxonomy: Option<&TaxonomyReport>,
    lenient: bool,
) -> Result<DriftOutput<T>> {
    let mut series = Vec::new();
    let mut warnings = Vec::new();
    for aspect in aspects {
        let s = match similarity_series(tables, aspect, pivot_year) {
            Ok(s) => s,
            Err(e @ Error::MissingPivot { .. }) if lenient => {
                warnings.push(format!("skipped: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        if s.sims.len() < 2 {
            let e = Error::InsufficientSeries {
                aspect: s.aspect.clone(),
                n: s.sims.len(),
            };
            if lenient {
                warnings.push(format!("skipped: {e}"));
                continue;
            }
            return Err(e);
        }
        if !s.gaps.is_empty() {
            let gaps: Vec<String> = s.gaps.iter().map(i32::to_string).collect();
            warnings.push(format!("aspect `{}` has gaps in {}", s.aspect, gaps.join(", ")));
        }
        series.push(s);
    }
    let ranks = variance_rank(&series, taxonomy)?;
    Ok(DriftOutput {
        series,
        ranks,
        warnings,
    })
}

/// Writes `aspect,year,similarity`, aspects in order, years ascending.
pub fn write_series<T: Real, W: Write>(writer: W, series: &[SimilaritySeries<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["aspect", "year", "similarity"])?;
    for s in series {
        for (year, sim) in &s.sims {
            wtr.write_record([s.aspect.clone(), year.to_string(), format_real(*sim)])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<series>", e))
}

/// Writes `aspect,class,variance`; an unknown class is left empty.
pub fn write_drift_rank<T: Real, W: Write>(writer: W, ranks: &[DriftRank<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["aspect", "class", "variance"])?;
    for r in ranks {
        wtr.write_record([
            r.aspect.as_str(),
            r.class.map_or("", LifetimeClass::name),
            &format_real(r.variance),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<drift_rank>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TRAJECTORY: [f64; 7] = [0.8542, 0.7838, 0.6222, 0.6222, 0.6119, 0.5368, 0.5171];

    fn fixture_tables() -> Vec<EmbeddingTable<f64>> {
        let mut pivot = EmbeddingTable::new(2013, 2).unwrap();
        pivot.insert("@realdonaldtrump great", vec![1.0, 0.0]).unwrap();
        pivot.insert("steady", vec![0.3, 0.4]).unwrap();
        let mut tables = vec![pivot];
        for (k, s) in TRAJECTORY.iter().enumerate() {
            let mut t = EmbeddingTable::new(2014 + k as i32, 2).unwrap();
            let angle = s.acos();
            t.insert("@realdonaldtrump great", vec![angle.cos(), angle.sin()])
                .unwrap();
            t.insert("steady", vec![3.0, 4.0]).unwrap();
            tables.push(t);
        }
        tables
    }

    #[test]
    fn cosine_hand_cases() {
        assert_eq!(cosine(&[1.0, 2.0], &[2.0, 1.0]).unwrap(), 0.8);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[0.3, -0.7, 2.0], &[0.3, -0.7, 2.0]).unwrap(), 1.0);
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::UndefinedSimilarity)
        ));
        assert!(matches!(cosine(&[1.0], &[1.0, 1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn reference_trajectory_reproduces() {
        let tables = fixture_tables();
        let s = similarity_series(&tables, "@realdonaldtrump great", 2013).unwrap();
        assert_eq!(s.sims.len(), 7);
        for ((year, got), (k, want)) in s.sims.iter().zip(TRAJECTORY.iter().enumerate()) {
            assert_eq!(*year, 2014 + k as i32);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let ranks = variance_rank(&[s], None).unwrap();
        assert!((ranks[0].variance - 6515149.0 / 490000000.0).abs() < 1e-12);
    }

    #[test]
    fn constant_vectors_have_zero_variance() {
        let s = similarity_series(&fixture_tables(), "steady", 2013).unwrap();
        assert!(s.sims.iter().all(|(_, v)| (*v - 1.0).abs() < 1e-15));
        assert!(variance_rank(&[s], None).unwrap()[0].variance < 1e-15);
    }

    #[test]
    fn gaps_and_missing_pivot() {
        let mut tables = fixture_tables();
        tables[3].vectors.remove("steady");
        let s = similarity_series(&tables, "steady", 2013).unwrap();
        assert_eq!(s.gaps, vec![2016]);
        assert_eq!(s.sims.len(), tables.len() - 2);
        assert!(matches!(
            similarity_series(&tables, "nope", 2013),
            Err(Error::MissingPivot { pivot_year: 2013, .. })
        ));
    }

    #[test]
    fn variance_hand_cases() {
        assert_eq!(population_variance(&[1.0, 0.0]), Some(0.25));
        assert_eq!(population_variance(&[0.4; 5]), Some(0.0));
        let short = SimilaritySeries {
            aspect: "x".into(),
            pivot_year: 1,
            sims: vec![(2, 0.5)],
            gaps: vec![],
            mean: Some(0.5),
        };
        assert!(matches!(
            variance_rank(&[short], None),
            Err(Error::InsufficientSeries { n: 1, .. })
        ));
    }

    #[test]
    fn ranking_order_and_ties() {
        let mk = |a: &str, v: &[f64]| SimilaritySeries {
            aspect: a.into(),
            pivot_year: 0,
            sims: v.iter().enumerate().map(|(i, x)| (i as i32 + 1, *x)).collect(),
            gaps: vec![],
            mean: mean(v),
        };
        let ranks = variance_rank(
            &[
                mk("b", &[1.0, 0.0]),
                mk("c", &[0.5, 0.5]),
                mk("a", &[0.0, 1.0]),
                mk("d", &[0.9, 0.1, 0.5]),
            ],
            None,
        )
        .unwrap();
        let order: Vec<&str> = ranks.iter().map(|r| r.aspect.as_str()).collect();
        assert_eq!(order, ["a", "b", "d", "c"]);
    }

    #[test]
    fn lenient_ranking_skips() {
        let tables = fixture_tables();
        let aspects: BTreeSet<String> = ["steady", "absent"].iter().map(|s| s.to_string()).collect();
        assert!(rank_aspects(&tables, &aspects, 2013, None, false).is_err());
        let out = rank_aspects(&tables, &aspects, 2013, None, true).unwrap();
        assert_eq!(out.ranks.len(), 1);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn table_validation_and_round_trip() {
        let mut t = EmbeddingTable::<f64>::new(2020, 2).unwrap();
        assert!(t.insert("z", vec![0.0, 0.0]).is_err());
        assert!(matches!(t.insert("a", vec![1.0]), Err(Error::Shape { .. })));
        t.insert("great day", vec![0.1, -2.5]).unwrap();
        assert!(t.insert("great day", vec![1.0, 1.0]).is_err());
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        assert_eq!(EmbeddingTable::<f64>::read_jsonl(&buf[..], 2020, 2).unwrap(), t);
        assert!(matches!(
            EmbeddingTable::<f64>::read_jsonl(&buf[..], 2020, 3),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn manifest_loading() {
        let dir = tempfile::tempdir().unwrap();
        let tables = fixture_tables();
        let mut entries = Vec::new();
        for t in &tables {
            let name = format!("emb_{}.jsonl", t.year);
            t.write_jsonl(fs::File::create(dir.path().join(&name)).unwrap())
                .unwrap();
            entries.push(ManifestEntry {
                year: t.year,
                path: name.into(),
            });
        }
        entries.reverse();
        let manifest = Manifest {
            dimension: 2,
            tables: entries,
        };
        let path = dir.path().join("manifest.json");
        manifest.write(fs::File::create(&path).unwrap()).unwrap();
        let (m, loaded) = load_manifest::<f64>(&path).unwrap();
        assert_eq!(m, manifest);
        assert_eq!(loaded, tables);
        let dup = Manifest {
            dimension: 2,
            tables: vec![
                ManifestEntry {
                    year: 1,
                    path: "a".into(),
                },
                ManifestEntry {
                    year: 1,
                    path: "b".into(),
                },
            ],
        };
        assert!(dup.validate().is_err());
    }

    proptest! {
        #[test]
        fn cosine_symmetric_scale_invariant(
            u in prop::collection::vec(-10.0f64..10.0, 1..8),
            seed in prop::collection::vec(-10.0f64..10.0, 8),
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            let v: Vec<f64> = seed[..u.len()].to_vec();
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let c = cosine(&u, &v).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
            prop_assert!((c - cosine(&v, &u).unwrap()).abs() < 1e-12);
            let su: Vec<f64> = u.iter().map(|x| a * x).collect();
            let sv: Vec<f64> = v.iter().map(|x| b * x).collect();
            prop_assert!((c - cosine(&su, &sv).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn nonnegative_vectors_give_nonnegative_cosine(
            u in prop::collection::vec(0.0f64..5.0, 4),
            v in prop::collection::vec(0.0f64..5.0, 4),
        ) {
            prop_assume!(u.iter().any(|x| *x > 1e-3) && v.iter().any(|x| *x > 1e-3));
            let c = cosine(&u, &v).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn variance_permutation_invariant(mut xs in prop::collection::vec(-1.0f64..1.0, 2..12), rot in 0usize..12) {
            let v1 = population_variance(&xs).unwrap();
            prop_assert!(v1 >= 0.0);
            let k = rot % xs.len();
            xs.rotate_left(k);
            xs.reverse();
            prop_assert!((v1 - population_variance(&xs).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn ranks_are_non_increasing(vals in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2..6), 1..10)) {
            let series: Vec<SimilaritySeries<f64>> = vals.iter().enumerate().map(|(i, v)| SimilaritySeries {
                aspect: format!("a{}", i % 3),
                pivot_year: 0,
                sims: v.iter().enumerate().map(|(k, x)| (k as i32 + 1, *x)).collect(),
                gaps: vec![],
                mean: mean(v),
            }).collect();
            let ranks = variance_rank(&series, None).unwrap();
            for w in ranks.windows(2) {
                prop_assert!(w[0].variance >= w[1].variance);
                if w[0].variance == w[1].variance {
                    prop_assert!(w[0].aspect <= w[1].aspect);
                }
            }
        }
    }
}
