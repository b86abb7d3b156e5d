use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use chronoeval::classifiers::{ClassifierConfig, ClassifierKind, FeatureMode, LinearConfig};
use chronoeval::corpus::{
    ingest, load_splits, rebalance, split_dataset, write_documents, write_splits, Format, SplitFractions,
    TemporalDataset, TemporalSplit,
};
use chronoeval::drift::{
    aspect_lifetimes, count_aspects, default_patterns, extract_aspects, load_manifest, rank_aspects, read_patterns,
    read_tagged_dir, write_aspect_counts, write_drift_rank, write_series, AspectLexicon,
};
use chronoeval::lexmetrics::{pairwise, read_metrics, write_metrics, MetricKind, TokenizedSlice};
use chronoeval::scalar::format_real;
use chronoeval::synthetic::{drifting_corpus, DriftConfig};
use chronoeval::tempeval::io::{
    read_pairs, read_predictions, write_correlations, write_gap_rates, write_gaps, write_heatmap, write_pairs,
    write_predictions,
};
use chronoeval::tempeval::{correlate, performance_change, run_harness, HarnessOptions, ModelSource};
use chronoeval::vocab::{classify_lifetimes, VocabularyProfile};
use chronoeval::{seed, Error, PredictionRecord};

use crate::output::{open, OutDir};
use crate::{
    Cli, Command, CorrelateArgs, DriftArgs, EvalArgs, FeatureChoice, LexArgs, ModelChoice, PartChoice, SplitArgs,
    SynthArgs, ValidateArgs, ValidateTarget, VocabArgs,
};

/// Runs one subcommand; the returned line is printed to stderr.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Split(a) => split(a, cli.seed),
        Command::VocabReport(a) => vocab_report(a),
        Command::Lexmetrics(a) => lexmetrics(a),
        Command::Evaluate(a) => evaluate(a, cli.seed),
        Command::Correlate(a) => correlate_cmd(a, cli.seed),
        Command::Drift(a) => drift(a),
        Command::Synth(a) => synth(a, cli.seed),
        Command::Validate(a) => validate(a),
    }
}

fn invalid(message: impl Into<String>) -> anyhow::Error {
    Error::Validation(message.into()).into()
}

fn require_file(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        }
        .into());
    }
    Ok(())
}

fn warning_summary(warnings: &[String]) -> String {
    match warnings.len() {
        0 => String::new(),
        n => format!("{n} warning(s) written to warnings.json"),
    }
}

fn parse_label_dist(spec: &str) -> Result<BTreeMap<String, f64>> {
    let mut dist = BTreeMap::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (label, value) = item
            .split_once('=')
            .ok_or_else(|| invalid(format!("label distribution entry `{item}` is not label=fraction")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| invalid(format!("invalid fraction in `{item}`")))?;
        if dist.insert(label.trim().to_string(), value).is_some() {
            return Err(invalid(format!("label `{}` listed twice", label.trim())));
        }
    }
    Ok(dist)
}

fn split(a: &SplitArgs, seed: u64) -> Result<String> {
    require_file(&a.input)?;
    let format = match a.format {
        Some(f) => f.into(),
        None => Format::from_path(&a.input)
            .ok_or_else(|| invalid(format!("{}: cannot infer the format, pass --format", a.input.display())))?,
    };
    let fractions = SplitFractions::new(a.train, a.dev, a.test)?;
    let mut dataset = ingest(&a.input, format)?;
    if let Some(size) = a.per_year_size {
        let dist = match &a.label_dist {
            Some(spec) => parse_label_dist(spec)?,
            None => dataset.label_distribution(),
        };
        let stream = seed::derive(seed, 1);
        let mut docs = Vec::new();
        for slice in dataset.slices() {
            let kept = rebalance(slice, size, &dist, seed::derive(stream, slice.year as i64))
                .with_context(|| format!("rebalancing year {}", slice.year))?;
            docs.extend(kept.documents);
        }
        dataset = TemporalDataset::from_documents(docs)?;
    }
    let splits = split_dataset(&dataset, fractions, seed)?;
    let out = OutDir::create(&a.out)?;
    let written = write_splits(&a.out, &splits, a.output_format.into())?;
    out.warnings(&[])?;
    Ok(format!(
        "wrote {} split files for {} years",
        written.len(),
        splits.len()
    ))
}

fn load_split_dir(dir: &Path) -> Result<Vec<TemporalSplit>> {
    require_file(dir)?;
    Ok(load_splits(dir)?)
}

fn vocab_report(a: &VocabArgs) -> Result<String> {
    let splits = load_split_dir(&a.splits)?;
    let mut profiles = Vec::new();
    for s in &splits {
        let docs: Vec<_> = match a.part {
            PartChoice::All => s.documents().collect(),
            PartChoice::Train => s.train.iter().collect(),
            PartChoice::Dev => s.dev.iter().collect(),
            PartChoice::Test => s.test.iter().collect(),
        };
        let profile = VocabularyProfile::from_documents(s.year, docs).with_floor(a.min_count);
        if profile.is_empty() {
            return Err(invalid(format!("year {} has an empty vocabulary", s.year)));
        }
        profiles.push(profile);
    }
    let report = classify_lifetimes(&profiles)?;
    let out = OutDir::create(&a.out)?;
    out.write("taxonomy_counts.csv", |w| report.write_counts(w))?;
    out.write("taxonomy_terms.csv", |w| report.write_assignments(w))?;
    out.warnings(&[])?;
    Ok(format!("classified {} years", profiles.len()))
}

fn parse_metrics(names: &[String]) -> Result<Vec<MetricKind>> {
    let mut kinds = Vec::new();
    for name in names {
        let kind: MetricKind = name.trim().parse()?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(invalid("no metrics selected"));
    }
    Ok(kinds)
}

fn lexmetrics(a: &LexArgs) -> Result<String> {
    let kinds = parse_metrics(&a.metrics)?;
    if !(a.base > 0.0 && a.base != 1.0 && a.base.is_finite()) {
        return Err(invalid(format!("invalid logarithm base {}", a.base)));
    }
    let splits = load_split_dir(&a.splits)?;
    let sources: Vec<TokenizedSlice> = splits
        .iter()
        .map(|s| TokenizedSlice::from_documents(s.year, &s.train))
        .collect();
    let targets: Vec<TokenizedSlice> = splits
        .iter()
        .map(|s| TokenizedSlice::from_documents(s.year, &s.test))
        .collect();
    let (values, warnings) = pairwise(&sources, &targets, &kinds, a.base);
    let out = OutDir::create(&a.out)?;
    out.write("metrics.csv", |w| write_metrics(w, &values))?;
    for kind in &kinds {
        let cells: Vec<(i32, i32, f64)> = values
            .iter()
            .filter(|v| v.metric == *kind)
            .map(|v| (v.source_year, v.target_year, v.value))
            .collect();
        out.write(&format!("heatmap_{}.csv", kind.name()), |w| write_heatmap(w, &cells))?;
    }
    out.warnings(&warnings)?;
    Ok(warning_summary(&warnings))
}

/// A prediction file, or every `.csv` file of a directory in name order.
fn read_run(path: &Path) -> Result<Vec<PredictionRecord>> {
    require_file(path)?;
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(invalid(format!("{}: no prediction files", path.display())));
        }
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut records = Vec::new();
    for f in files {
        let parsed = read_predictions(BufReader::new(open(&f)?)).with_context(|| format!("{}", f.display()))?;
        records.extend(parsed);
    }
    Ok(records)
}

fn classifier_config(a: &EvalArgs, model: ModelChoice, seed: u64) -> ClassifierConfig<f64> {
    let kind = match model {
        ModelChoice::Mnb => ClassifierKind::MultinomialNb,
        ModelChoice::Logreg => ClassifierKind::LogisticRegression,
        ModelChoice::Svm => ClassifierKind::LinearSvm,
    };
    let mut config = ClassifierConfig::new(kind);
    config.features = match a.features {
        FeatureChoice::Tfidf => FeatureMode::Tfidf,
        FeatureChoice::Counts => FeatureMode::Counts,
    };
    config.nb_alpha = a.alpha;
    config.linear = LinearConfig {
        learning_rate: a.learning_rate,
        l2: a.l2,
        epochs: a.epochs,
        seed,
    };
    config
}

fn evaluate(a: &EvalArgs, seed: u64) -> Result<String> {
    let splits = load_split_dir(&a.splits)?;
    let options = HarnessOptions {
        positive_label: a.positive_label.clone(),
    };
    let runs: Vec<Vec<PredictionRecord>> = a.predictions.iter().map(|p| read_run(p)).collect::<Result<_>>()?;
    let output = match (a.model, runs.is_empty()) {
        (Some(model), true) => run_harness(
            &splits,
            ModelSource::Native(classifier_config(a, model, seed)),
            &options,
        )?,
        (None, false) => run_harness(&splits, ModelSource::Predictions(&runs), &options)?,
        (None, true) => return Err(invalid("pass either --model or --predictions")),
        (Some(_), false) => return Err(invalid("--model and --predictions are exclusive")),
    };

    let out = OutDir::create(&a.out)?;
    let gaps = performance_change(&output.pairs);
    out.write("pairs.csv", |w| write_pairs(w, &output.pairs))?;
    out.write("gaps.csv", |w| write_gaps(w, &gaps))?;
    out.write("gap_rates.csv", |w| write_gap_rates(w, &gaps))?;
    let cells: Vec<(i32, i32, f64)> = output
        .pairs
        .iter()
        .map(|p| (p.train_year, p.test_year, p.f_macro))
        .collect();
    out.write("heatmap.csv", |w| write_heatmap(w, &cells))?;

    let mut per_pair: BTreeMap<(i32, i32), Vec<PredictionRecord>> = BTreeMap::new();
    for r in &output.predictions {
        per_pair.entry((r.train_year, r.test_year)).or_default().push(r.clone());
    }
    for ((i, j), records) in &per_pair {
        out.write(&format!("predictions/{i}_{j}.csv"), |w| write_predictions(w, records))?;
    }
    if a.save_models {
        for model in &output.models {
            let year = model.model.train_year.expect("native models record their year");
            out.write(&format!("models/{year}.json"), |w| model.save(w))?;
        }
    }
    out.warnings(&output.warnings)?;

    let mut summary = format!("evaluated {} pairs over {} gaps", output.pairs.len(), gaps.len());
    let w = warning_summary(&output.warnings);
    if !w.is_empty() {
        summary.push_str("; ");
        summary.push_str(&w);
    }
    Ok(summary)
}

fn correlate_cmd(a: &CorrelateArgs, seed: u64) -> Result<String> {
    let metrics = read_metrics::<f64, _>(BufReader::new(open(&a.metrics)?))
        .with_context(|| format!("{}", a.metrics.display()))?;
    let pairs =
        read_pairs::<f64, _>(BufReader::new(open(&a.pairs)?)).with_context(|| format!("{}", a.pairs.display()))?;
    let perf: Vec<(i32, i32, f64)> = pairs.iter().map(|p| (p.train_year, p.test_year, p.f_macro)).collect();
    let outcome = correlate(&metrics, &perf, seed);
    if outcome.results.is_empty() {
        return Err(invalid("the metrics file has no rows"));
    }
    let mut warnings = outcome.warnings;
    for (metric, result) in &outcome.results {
        if let Err(e) = result {
            if !a.lenient {
                return Err(invalid(format!("{metric}: {e}")));
            }
            warnings.push(format!("{metric}: {e}"));
        }
    }
    let out = OutDir::create(&a.out)?;
    out.write("correlations.csv", |w| write_correlations(w, &outcome.results))?;
    out.warnings(&warnings)?;
    let lines: Vec<String> = outcome
        .results
        .iter()
        .filter_map(|(m, r)| {
            r.as_ref()
                .ok()
                .map(|c| format!("{m}: r={} p={}", format_real(c.r), format_real(c.p_two_tailed)))
        })
        .collect();
    Ok(lines.join("\n"))
}

fn drift(a: &DriftArgs) -> Result<String> {
    require_file(&a.manifest)?;
    let (manifest, tables) = load_manifest::<f64>(&a.manifest)?;
    let years = manifest.years();
    let pivot = a.pivot.unwrap_or(years[0]);
    if !years.contains(&pivot) {
        return Err(invalid(format!("pivot year {pivot} is not in the manifest")));
    }
    let out = OutDir::create(&a.out)?;
    let mut warnings = Vec::new();

    let (aspects, taxonomy) = match &a.tagged {
        Some(dir) => {
            require_file(dir)?;
            let lexicon_path = a.lexicon.as_ref().ok_or_else(|| invalid("--tagged needs --lexicon"))?;
            let lexicon = AspectLexicon::read(BufReader::new(open(lexicon_path)?))?;
            let patterns = match &a.patterns {
                Some(p) => read_patterns(BufReader::new(open(p)?))?,
                None => default_patterns(),
            };
            let tagged = read_tagged_dir(dir)?;
            let mut per_year = Vec::new();
            for (year, sentences) in &tagged {
                if !years.contains(year) {
                    return Err(invalid(format!(
                        "tagged year {year} has no embedding table in the manifest"
                    )));
                }
                per_year.push((*year, count_aspects(&extract_aspects(sentences, &lexicon, &patterns))));
            }
            out.write("aspect_counts.csv", |w| write_aspect_counts(w, &per_year))?;
            let taxonomy = if per_year.len() >= 3 {
                let report = aspect_lifetimes(&per_year)?;
                out.write("aspect_taxonomy.csv", |w| report.write_counts(w))?;
                out.write("aspect_classes.csv", |w| report.write_assignments(w))?;
                Some(report)
            } else {
                warnings.push(format!(
                    "{} tagged years; lifetime classes need at least 3 and are left empty",
                    per_year.len()
                ));
                None
            };
            let aspects: BTreeSet<String> = per_year.iter().flat_map(|(_, c)| c.keys().cloned()).collect();
            (aspects, taxonomy)
        }
        None => {
            let pivot_table = tables.iter().find(|t| t.year == pivot).expect("pivot checked");
            (pivot_table.aspects().map(str::to_string).collect(), None)
        }
    };

    let result = rank_aspects(&tables, &aspects, pivot, taxonomy.as_ref(), a.lenient)?;
    warnings.extend(result.warnings);
    out.write("series.csv", |w| write_series(w, &result.series))?;
    out.write("drift_rank.csv", |w| write_drift_rank(w, &result.ranks))?;
    out.warnings(&warnings)?;
    Ok(format!("ranked {} aspects against pivot {pivot}", result.ranks.len()))
}

fn synth(a: &SynthArgs, seed: u64) -> Result<String> {
    if !(0.0..=1.0).contains(&a.replace) {
        return Err(invalid("--replace must lie in [0, 1]"));
    }
    if a.years == 0 || a.docs_per_year < 2 {
        return Err(invalid("need at least one year and two documents per year"));
    }
    let config = DriftConfig {
        first_year: a.first_year,
        n_years: a.years,
        docs_per_year: a.docs_per_year,
        replace_fraction: a.replace,
        seed,
        ..DriftConfig::default()
    };
    let docs = drifting_corpus(&config);
    let parent = a
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let out = OutDir::create(parent)?;
    let name = a
        .out
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| invalid("invalid output path"))?;
    out.write(name, |w| write_documents(w, &docs, a.format.into()))?;
    Ok(format!("wrote {} documents", docs.len()))
}

fn validate(a: &ValidateArgs) -> Result<String> {
    match &a.target {
        ValidateTarget::Predictions { splits, files } => {
            let splits = load_split_dir(splits)?;
            let runs: Vec<Vec<PredictionRecord>> = files.iter().map(|p| read_run(p)).collect::<Result<_>>()?;
            let output = run_harness(&splits, ModelSource::Predictions(&runs), &HarnessOptions::default())?;
            Ok(format!("ok: {} runs cover {} pairs", runs.len(), output.pairs.len()))
        }
        ValidateTarget::Embeddings { manifest } => {
            require_file(manifest)?;
            let (m, tables) = load_manifest::<f64>(manifest)?;
            let n: usize = tables.iter().map(|t| t.len()).sum();
            Ok(format!(
                "ok: {} tables, dimension {}, {n} vectors",
                tables.len(),
                m.dimension
            ))
        }
        ValidateTarget::Splits { dir } => {
            let splits = load_split_dir(dir)?;
            let n: usize = splits.iter().map(|s| s.len()).sum();
            if splits.iter().any(|s| s.test.is_empty() || s.train.is_empty()) {
                bail!(invalid("a year has an empty train or test partition"));
            }
            Ok(format!("ok: {} years, {n} documents", splits.len()))
        }
    }
}
