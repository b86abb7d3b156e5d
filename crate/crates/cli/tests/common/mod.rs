#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronoeval"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Every file under `root`, keyed by relative path.
pub fn tree_bytes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub const DRIFT_SENTENCES: [&str; 3] = [
    "Great/ADJ book/NOUN ./PUNCT",
    "really/ADV good/ADJ coffee/NOUN",
    "the/DET service/NOUN was/AUX awful/ADJ",
];

pub struct DriftFixture {
    pub tagged: PathBuf,
    pub lexicon: PathBuf,
    pub manifest: PathBuf,
}

/// Three tagged years, a lexicon and embedding tables holding every
/// aspect the default patterns extract.
pub fn drift_fixture(dir: &Path) -> DriftFixture {
    let tagged = dir.join("tagged");
    fs::create_dir_all(&tagged).unwrap();
    for year in [2019, 2020, 2021] {
        let mut text = String::new();
        for sentence in DRIFT_SENTENCES {
            for tok in sentence.split(' ') {
                let (t, tag) = tok.split_once('/').unwrap();
                text.push_str(&format!("{t}\t{tag}\n"));
            }
            text.push('\n');
        }
        fs::write(tagged.join(format!("{year}.conll")), text).unwrap();
    }
    let lexicon = dir.join("lexicon.txt");
    fs::write(&lexicon, "great\tpositive\ngood\tpositive\nawful\tnegative\n").unwrap();

    let aspects = [
        "awful",
        "good",
        "good coffee",
        "great",
        "great book",
        "really good",
        "really good coffee",
    ];
    let emb = dir.join("emb");
    fs::create_dir_all(&emb).unwrap();
    let mut entries = Vec::new();
    for (y, year) in [2019, 2020, 2021].iter().enumerate() {
        let mut lines = String::new();
        for (a, aspect) in aspects.iter().enumerate() {
            let v = [1.0, 0.1 * (a as f64 + 1.0) * y as f64, 0.5];
            lines.push_str(&format!(
                "{{\"aspect\":\"{aspect}\",\"vector\":[{},{},{}]}}\n",
                v[0], v[1], v[2]
            ));
        }
        fs::write(emb.join(format!("{year}.jsonl")), lines).unwrap();
        entries.push(format!("{{\"year\":{year},\"path\":\"emb/{year}.jsonl\"}}"));
    }
    let manifest = dir.join("manifest.json");
    fs::write(
        &manifest,
        format!("{{\"dimension\":3,\"tables\":[{}]}}", entries.join(",")),
    )
    .unwrap();
    DriftFixture {
        tagged,
        lexicon,
        manifest,
    }
}
