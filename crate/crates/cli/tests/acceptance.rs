//! Acceptance suite: one PASS/FAIL line per criterion, with its time limit.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;

use chronoeval::classifiers::{log_loss, log_loss_gradient, ClassifierConfig, ClassifierKind, SparseRow};
use chronoeval::corpus::{split_dataset, SplitFractions, TemporalDataset, TemporalSplit};
use chronoeval::drift::{variance_rank, SimilaritySeries};
use chronoeval::lexmetrics::{familiarity, information_rate, jaccard, pairwise, MetricKind, TokenizedSlice};
use chronoeval::synthetic::{drifting_corpus, random_corpus, DriftConfig};
use chronoeval::tempeval::{
    correlate, enumerate_pairs, macro_f1, performance_change, run_harness, HarnessOptions, ModelSource,
};
use chronoeval::vocab::{classify_lifetimes, LifetimeClass, VocabularyProfile};
use chronoeval::{seed, PredictionRecord};

use common::{drift_fixture, run, run_ok, s, tree_bytes};

type Check = fn() -> Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gap_enumeration() -> Result<(), String> {
    let expected: Vec<(i32, Vec<(i32, i32)>)> = vec![
        (-3, vec![(2018, 2015)]),
        (-2, vec![(2017, 2015), (2018, 2016)]),
        (-1, vec![(2016, 2015), (2017, 2016), (2018, 2017)]),
        (0, vec![(2015, 2015), (2016, 2016), (2017, 2017), (2018, 2018)]),
        (1, vec![(2015, 2016), (2016, 2017), (2017, 2018)]),
        (2, vec![(2015, 2017), (2016, 2018)]),
        (3, vec![(2015, 2018)]),
    ];
    let splits = toy_splits(&[2015, 2016, 2017, 2018]);
    let runs = vec![perfect_predictions(&splits)];
    let out =
        run_harness(&splits, ModelSource::Predictions(&runs), &HarnessOptions::default()).map_err(|e| e.to_string())?;
    let got: Vec<(i32, Vec<(i32, i32)>)> = performance_change(&out.pairs)
        .into_iter()
        .map(|g| (g.gap, g.pairs))
        .collect();
    ensure(got == expected, || format!("got {got:?}"))
}

fn brute_macro_f1(golds: &[&str], preds: &[&str], labels: &[&str]) -> f64 {
    let mut total = 0.0;
    for &l in labels {
        let mut m = [[0u32; 2]; 2];
        for (g, p) in golds.iter().zip(preds) {
            m[(*g == l) as usize][(*p == l) as usize] += 1;
        }
        let (tp, fp, fn_) = (m[1][1] as f64, m[0][1] as f64, m[1][0] as f64);
        let prec = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let rec = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        total += if prec + rec > 0.0 {
            2.0 * prec * rec / (prec + rec)
        } else {
            0.0
        };
    }
    total / labels.len() as f64
}

fn macro_f1_oracle() -> Result<(), String> {
    let labels = ["neg", "pos"];
    let label_set: BTreeSet<String> = labels.iter().map(|l| l.to_string()).collect();
    let mut rng = seed::rng(2024);
    for case in 0..1000 {
        let bias: f64 = rng.random_range(0.05..0.95);
        let golds: Vec<&str> = (0..50).map(|_| labels[rng.random_bool(bias) as usize]).collect();
        let preds: Vec<&str> = (0..50).map(|_| labels[rng.random_bool(0.5) as usize]).collect();
        let got: f64 = macro_f1(&golds, &preds, &label_set).map_err(|e| e.to_string())?;
        let want = brute_macro_f1(&golds, &preds, &labels);
        ensure((got - want).abs() <= 1e-12, || format!("case {case}: {got} vs {want}"))?;
    }
    Ok(())
}

fn toy_splits(years: &[i32]) -> Vec<TemporalSplit> {
    let docs = random_corpus(5, years, 40, 30, 6);
    let dataset = TemporalDataset::from_documents(docs).unwrap();
    split_dataset(&dataset, SplitFractions::default(), 42).unwrap()
}

fn perfect_predictions(splits: &[TemporalSplit]) -> Vec<PredictionRecord> {
    let years: Vec<i32> = splits.iter().map(|s| s.year).collect();
    let mut out = Vec::new();
    for (i, j) in enumerate_pairs(&years) {
        for d in &splits.iter().find(|s| s.year == j).unwrap().test {
            out.push(PredictionRecord {
                train_year: i,
                test_year: j,
                doc_id: d.id.clone(),
                gold: d.label.clone(),
                predicted: d.label.clone(),
                score: None,
            });
        }
    }
    out
}

fn perfect_classifier() -> Result<(), String> {
    let splits = toy_splits(&[2015, 2016, 2017, 2018]);
    let runs = vec![perfect_predictions(&splits)];
    let out =
        run_harness(&splits, ModelSource::Predictions(&runs), &HarnessOptions::default()).map_err(|e| e.to_string())?;
    let gaps = performance_change(&out.pairs);
    ensure(gaps.len() == 7, || format!("{} gaps", gaps.len()))?;
    for g in gaps {
        ensure(g.mean_f_macro == 1.0, || format!("P({}) = {}", g.gap, g.mean_f_macro))?;
    }
    Ok(())
}

fn lexical_hand_cases() -> Result<(), String> {
    let set = |xs: &[&str]| -> BTreeSet<String> { xs.iter().map(|x| x.to_string()).collect() };
    let (u, v) = (set(&["a", "b", "c"]), set(&["b", "c", "d"]));
    let fam: f64 = familiarity(&u, &v).map_err(|e| e.to_string())?;
    ensure(fam == 2.0, || format!("familiarity {fam}"))?;
    let jac: f64 = jaccard(&u, &v).map_err(|e| e.to_string())?;
    ensure(jac == 0.5, || format!("jaccard {jac}"))?;
    let src = TokenizedSlice::from_texts(1, ["the cat sat", "the dog sat down"]);
    let tgt = TokenizedSlice::from_texts(2, ["the cat ran", "a dog sat"]);
    let cases = [
        (information_rate(&src, &tgt, 2.0), 2.4636809186454127),
        (information_rate(&tgt, &src, 2.0), 2.6292673553809554),
        (information_rate(&src, &tgt, std::f64::consts::E), 1.707693482558404),
    ];
    for (got, want) in cases {
        let got = got.map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= 1e-12, || {
            format!("information rate {got} vs {want}")
        })?;
    }
    Ok(())
}

fn variance_fixture() -> Result<(), String> {
    let values = [0.8542f64, 0.7838, 0.6222, 0.6222, 0.6119, 0.5368, 0.5171];
    let series = SimilaritySeries {
        aspect: "@realdonaldtrump great".into(),
        pivot_year: 2013,
        sims: values.iter().enumerate().map(|(k, v)| (2014 + k as i32, *v)).collect(),
        gaps: vec![],
        mean: None,
    };
    let ranks = variance_rank(&[series], None).map_err(|e| e.to_string())?;
    // population variance over the decimal inputs, computed exactly
    let want = 6515149.0 / 490000000.0;
    ensure((ranks[0].variance - want).abs() <= 1e-12, || {
        format!("{} vs {want}", ranks[0].variance)
    })
}

fn taxonomy_partition() -> Result<(), String> {
    let years = [2015, 2016, 2017, 2018];
    for case in 0..100u64 {
        let docs = random_corpus(case, &years, 6, 25, 5);
        let profiles: Vec<VocabularyProfile> = years
            .iter()
            .map(|&y| VocabularyProfile::from_documents(y, docs.iter().filter(|d| d.year == y)))
            .collect();
        let report = classify_lifetimes(&profiles).map_err(|e| e.to_string())?;
        let presence: BTreeMap<String, Vec<usize>> = {
            let mut m: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (idx, p) in profiles.iter().enumerate() {
                for t in p.term_set() {
                    m.entry(t).or_default().push(idx);
                }
            }
            m
        };
        let mut common = None;
        for (idx, p) in profiles.iter().enumerate() {
            let year = p.year;
            let total: usize = LifetimeClass::ALL.iter().map(|&c| report.count(year, c)).sum();
            ensure(total == p.len(), || {
                format!("case {case} year {year}: {total} vs {}", p.len())
            })?;
            let c = report.count(year, LifetimeClass::Common);
            ensure(*common.get_or_insert(c) == c, || {
                format!("case {case}: common count varies")
            })?;
            for term in p.term_set() {
                let seen = &presence[&term];
                let (first, last) = (seen[0], *seen.last().unwrap());
                let want = if seen.len() == years.len() {
                    LifetimeClass::Common
                } else if seen.len() == 1 {
                    LifetimeClass::Unique
                } else if idx == first {
                    LifetimeClass::Emerging
                } else if idx == last && last != years.len() - 1 {
                    LifetimeClass::Dying
                } else {
                    LifetimeClass::Seasonal
                };
                let got = report.class_of(&term, year);
                ensure(got == Some(want), || {
                    format!("case {case}: `{term}` {year} {got:?} vs {want:?}")
                })?;
            }
        }
    }
    Ok(())
}

fn gradient_check() -> Result<(), String> {
    let mut rng = seed::rng(99);
    let h = 1e-6;
    for probe in 0..100 {
        let d = rng.random_range(2..8);
        let n = rng.random_range(3..12);
        let rows: Vec<SparseRow<f64>> = (0..n)
            .map(|_| {
                let mut row = Vec::new();
                for c in 0..d {
                    if rng.random_bool(0.7) {
                        row.push((c, rng.random_range(-2.0..2.0)));
                    }
                }
                row
            })
            .collect();
        let targets: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let b = rng.random_range(-1.0..1.0);
        let l2 = rng.random_range(0.0..0.1);
        let (g, gb) = log_loss_gradient(&w, b, &rows, &targets, l2);
        let rel = |fd: f64, an: f64| (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
        for k in 0..d {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (log_loss(&up, b, &rows, &targets, l2) - log_loss(&down, b, &rows, &targets, l2)) / (2.0 * h);
            if fd.abs().max(g[k].abs()) > 1e-6 {
                ensure(rel(fd, g[k]) <= 1e-5, || {
                    format!("probe {probe} w{k}: {fd} vs {}", g[k])
                })?;
            }
        }
        let fd = (log_loss(&w, b + h, &rows, &targets, l2) - log_loss(&w, b - h, &rows, &targets, l2)) / (2.0 * h);
        if fd.abs().max(gb.abs()) > 1e-6 {
            ensure(rel(fd, gb) <= 1e-5, || format!("probe {probe} bias: {fd} vs {gb}"))?;
        }
    }
    Ok(())
}

fn synthetic_drift() -> Result<(), String> {
    let docs = drifting_corpus(&DriftConfig::default());
    let dataset = TemporalDataset::from_documents(docs).map_err(|e| e.to_string())?;
    let splits = split_dataset(&dataset, SplitFractions::default(), 42).map_err(|e| e.to_string())?;
    let config = ClassifierConfig::new(ClassifierKind::MultinomialNb);
    let out =
        run_harness(&splits, ModelSource::Native(config), &HarnessOptions::default()).map_err(|e| e.to_string())?;
    let gaps = performance_change(&out.pairs);
    let p = |gap: i32| gaps.iter().find(|g| g.gap == gap).map(|g| g.mean_f_macro).unwrap();
    for k in 0..5 {
        ensure(p(k + 1) <= p(k) + 0.02, || {
            format!("P({}) = {} above P({k}) = {}", k + 1, p(k + 1), p(k))
        })?;
        ensure(p(-k - 1) <= p(-k) + 0.02, || {
            format!("P({}) = {} above P({}) = {}", -k - 1, p(-k - 1), -k, p(-k))
        })?;
    }
    let sources: Vec<TokenizedSlice> = splits
        .iter()
        .map(|s| TokenizedSlice::from_documents(s.year, &s.train))
        .collect();
    let targets: Vec<TokenizedSlice> = splits
        .iter()
        .map(|s| TokenizedSlice::from_documents(s.year, &s.test))
        .collect();
    let (metrics, _) = pairwise(&sources, &targets, &[MetricKind::Familiarity], 2.0);
    let perf: Vec<(i32, i32, f64)> = out
        .pairs
        .iter()
        .map(|p| (p.train_year, p.test_year, p.f_macro))
        .collect();
    let outcome = correlate(&metrics, &perf, 42);
    let r = outcome.results[0].1.as_ref().map_err(|e| e.to_string())?;
    ensure(r.r > 0.5, || format!("familiarity r = {}", r.r))?;
    println!(
        "      P(0) = {:.4}, P(-5) = {:.4}, P(5) = {:.4}, r = {:.4}",
        p(0),
        p(-5),
        p(5),
        r.r
    );
    Ok(())
}

fn determinism() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fx = drift_fixture(dir.path());
    let corpus = dir.path().join("corpus.csv");
    run_ok(&["synth", "--out", s(&corpus), "--docs-per-year", "200", "--years", "4"]);
    let mut outputs = Vec::new();
    for attempt in 0..2 {
        let root = dir.path().join(format!("run{attempt}"));
        let p = |name: &str| root.join(name);
        run_ok(&[
            "synth",
            "--out",
            s(&p("synth/corpus.jsonl")),
            "--format",
            "jsonl",
            "--docs-per-year",
            "50",
        ]);
        run_ok(&["split", "--input", s(&corpus), "--out", s(&p("splits"))]);
        run_ok(&[
            "split",
            "--input",
            s(&corpus),
            "--out",
            s(&p("splits_small")),
            "--per-year-size",
            "100",
            "--label-dist",
            "neg=0.4,pos=0.6",
            "--output-format",
            "jsonl",
        ]);
        run_ok(&["vocab-report", "--splits", s(&p("splits")), "--out", s(&p("vocab"))]);
        run_ok(&["lexmetrics", "--splits", s(&p("splits")), "--out", s(&p("lex"))]);
        run_ok(&[
            "evaluate",
            "--splits",
            s(&p("splits")),
            "--out",
            s(&p("eval_mnb")),
            "--model",
            "mnb",
        ]);
        run_ok(&[
            "evaluate",
            "--splits",
            s(&p("splits")),
            "--out",
            s(&p("eval_lr")),
            "--model",
            "logreg",
            "--epochs",
            "5",
            "--save-models",
        ]);
        run_ok(&[
            "evaluate",
            "--splits",
            s(&p("splits")),
            "--out",
            s(&p("eval_svm")),
            "--model",
            "svm",
            "--epochs",
            "5",
        ]);
        run_ok(&[
            "evaluate",
            "--splits",
            s(&p("splits")),
            "--out",
            s(&p("eval_file")),
            "--predictions",
            s(&p("eval_mnb/predictions")),
            "--predictions",
            s(&p("eval_svm/predictions")),
        ]);
        run_ok(&[
            "correlate",
            "--metrics",
            s(&p("lex/metrics.csv")),
            "--pairs",
            s(&p("eval_mnb/pairs.csv")),
            "--out",
            s(&p("corr")),
        ]);
        run_ok(&[
            "drift",
            "--manifest",
            s(&fx.manifest),
            "--tagged",
            s(&fx.tagged),
            "--lexicon",
            s(&fx.lexicon),
            "--out",
            s(&p("drift")),
        ]);
        run_ok(&["drift", "--manifest", s(&fx.manifest), "--out", s(&p("drift_pivot"))]);
        let mut streams = Vec::new();
        for args in [
            vec!["validate", "splits", s(&p("splits"))],
            vec!["validate", "embeddings", s(&fx.manifest)],
            vec![
                "validate",
                "predictions",
                "--splits",
                s(&p("splits")),
                s(&p("eval_mnb/predictions")),
            ],
        ] {
            let out = run_ok(&args);
            streams.push((out.stdout, out.stderr));
        }
        outputs.push((tree_bytes(&root), streams));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    ensure(a.0.len() > 40, || format!("only {} files written", a.0.len()))?;
    ensure(a.0.keys().eq(b.0.keys()), || "file sets differ".into())?;
    for (path, bytes) in &a.0 {
        ensure(b.0[path] == *bytes, || {
            format!("{} differs between runs", path.display())
        })?;
    }
    ensure(a.1 == b.1, || "validator output differs".into())?;
    // exit codes are part of the contract
    let missing = run(&[
        "split",
        "--input",
        s(&dir.path().join("absent.csv")),
        "--out",
        s(&dir.path().join("x")),
    ]);
    ensure(missing.status.code() == Some(1), || {
        "missing input did not exit 1".into()
    })
}

#[test]
fn acceptance() {
    let criteria: [(&str, Check, u64); 9] = [
        ("gap enumeration for 2015-2018", gap_enumeration, 1),
        ("macro-F1 equals brute-force oracle on 1000 sets", macro_f1_oracle, 5),
        ("perfect classifier gives P(G) = 1", perfect_classifier, 1),
        ("lexical metric hand cases and information rate", lexical_hand_cases, 1),
        ("reference similarity series variance", variance_fixture, 1),
        ("taxonomy partition on 100 random corpora", taxonomy_partition, 10),
        ("log-loss gradient on 100 probes", gradient_check, 5),
        ("synthetic drift end-to-end", synthetic_drift, 60),
        ("CLI determinism", determinism, 30),
    ];
    let mut failures = Vec::new();
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|()| {
            ensure(elapsed <= Duration::from_secs(limit), || {
                format!("took {elapsed:?}, limit {limit}s")
            })
        });
        match &result {
            Ok(()) => println!("PASS  {name}  ({:.3}s, limit {limit}s)", elapsed.as_secs_f64()),
            Err(e) => {
                println!("FAIL  {name}  ({:.3}s, limit {limit}s): {e}", elapsed.as_secs_f64());
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed: {failures:?}");
}
