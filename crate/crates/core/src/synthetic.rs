//! Synthetic corpora with controlled vocabulary drift.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::Document;
use crate::seed;

/// Binary corpus whose class-indicative vocabulary is partly replaced by
/// fresh words every year.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub first_year: i32,
    pub n_years: usize,
    pub docs_per_year: usize,
    /// Indicative words per class in any one year.
    pub class_vocab: usize,
    /// Fraction of each class's indicative words replaced per year.
    pub replace_fraction: f64,
    pub neutral_vocab: usize,
    pub indicative_per_doc: usize,
    pub neutral_per_doc: usize,
    /// Probability that an indicative token is drawn from the other class.
    pub cross_prob: f64,
    /// Probability that a document carries one never-repeated token.
    pub hapax_prob: f64,
    pub seed: u64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            first_year: 2015,
            n_years: 6,
            docs_per_year: 2000,
            class_vocab: 60,
            replace_fraction: 0.15,
            neutral_vocab: 300,
            indicative_per_doc: 2,
            neutral_per_doc: 10,
            cross_prob: 0.1,
            hapax_prob: 0.3,
            seed: seed::DEFAULT_SEED,
        }
    }
}

pub const DRIFT_LABELS: [&str; 2] = ["neg", "pos"];

/// Documents for every year, balanced between the two labels.
pub fn drifting_corpus(config: &DriftConfig) -> Vec<Document> {
    let mut rng = seed::rng(config.seed);
    let mut fresh = [0usize; 2];
    let new_word = |class: usize, fresh: &mut [usize; 2]| {
        let w = format!("{}w{}", &DRIFT_LABELS[class][..1], fresh[class]);
        fresh[class] += 1;
        w
    };
    let mut vocab: Vec<Vec<String>> = (0..2)
        .map(|c| (0..config.class_vocab).map(|_| new_word(c, &mut fresh)).collect())
        .collect();
    let neutral: Vec<String> = (0..config.neutral_vocab).map(|i| format!("n{i}")).collect();
    let n_replace = (config.replace_fraction * config.class_vocab as f64).round() as usize;

    let mut docs = Vec::with_capacity(config.n_years * config.docs_per_year);
    let mut hapax = 0usize;
    for y in 0..config.n_years {
        let year = config.first_year + y as i32;
        if y > 0 {
            for (class, words) in vocab.iter_mut().enumerate() {
                let slots = rand::seq::index::sample(&mut rng, words.len(), n_replace);
                for slot in slots {
                    words[slot] = new_word(class, &mut fresh);
                }
            }
        }
        for d in 0..config.docs_per_year {
            let class = d % 2;
            let mut tokens: Vec<String> = Vec::with_capacity(config.indicative_per_doc + config.neutral_per_doc + 1);
            for _ in 0..config.indicative_per_doc {
                let source = if rng.random_bool(config.cross_prob) {
                    1 - class
                } else {
                    class
                };
                tokens.push(vocab[source].choose(&mut rng).expect("non-empty vocab").clone());
            }
            for _ in 0..config.neutral_per_doc {
                tokens.push(neutral.choose(&mut rng).expect("non-empty vocab").clone());
            }
            if rng.random_bool(config.hapax_prob) {
                tokens.push(format!("h{hapax}"));
                hapax += 1;
            }
            let order = rand::seq::index::sample(&mut rng, tokens.len(), tokens.len());
            let text: Vec<&str> = order.iter().map(|i| tokens[i].as_str()).collect();
            docs.push(Document {
                id: format!("{year}-{d:05}"),
                text: text.join(" "),
                label: DRIFT_LABELS[class].to_string(),
                year,
            });
        }
    }
    docs
}

/// Small random corpus: every document draws its words uniformly from a
/// shared pool, so terms come and go between years at random.
pub fn random_corpus(seed: u64, years: &[i32], docs_per_year: usize, pool: usize, max_len: usize) -> Vec<Document> {
    let mut rng = seed::rng(seed);
    let mut docs = Vec::new();
    for &year in years {
        for d in 0..docs_per_year {
            let len = rng.random_range(1..=max_len.max(1));
            let words: Vec<String> = (0..len)
                .map(|_| format!("t{}", rng.random_range(0..pool.max(1))))
                .collect();
            docs.push(Document {
                id: format!("{year}-{d}"),
                text: words.join(" "),
                label: if d % 2 == 0 { "a".into() } else { "b".into() },
                year,
            });
        }
    }
    docs
}
