//! Opinionated multi-word aspects from POS-tagged text, their per-year
//! cosine-similarity trajectories against a pivot year, and a ranking by
//! contextual-change variance.

mod embedding;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use embedding::{
    cosine, load_manifest, population_variance, rank_aspects, similarity_series, variance_rank, write_drift_rank,
    write_series, DriftOutput, DriftRank, EmbeddingTable, Manifest, ManifestEntry, SimilaritySeries,
};

use crate::error::{Error, Result};
use crate::vocab::{classify_presence, TaxonomyReport};

/// Universal POS tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosTag {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl PosTag {
    pub const ALL: [PosTag; 17] = [
        PosTag::Adj,
        PosTag::Adp,
        PosTag::Adv,
        PosTag::Aux,
        PosTag::Cconj,
        PosTag::Det,
        PosTag::Intj,
        PosTag::Noun,
        PosTag::Num,
        PosTag::Part,
        PosTag::Pron,
        PosTag::Propn,
        PosTag::Punct,
        PosTag::Sconj,
        PosTag::Sym,
        PosTag::Verb,
        PosTag::X,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosTag::Adj => "ADJ",
            PosTag::Adp => "ADP",
            PosTag::Adv => "ADV",
            PosTag::Aux => "AUX",
            PosTag::Cconj => "CCONJ",
            PosTag::Det => "DET",
            PosTag::Intj => "INTJ",
            PosTag::Noun => "NOUN",
            PosTag::Num => "NUM",
            PosTag::Part => "PART",
            PosTag::Pron => "PRON",
            PosTag::Propn => "PROPN",
            PosTag::Punct => "PUNCT",
            PosTag::Sconj => "SCONJ",
            PosTag::Sym => "SYM",
            PosTag::Verb => "VERB",
            PosTag::X => "X",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        PosTag::ALL
            .into_iter()
            .find(|t| t.name() == upper)
            .ok_or_else(|| Error::Tagset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub token: String,
    pub pos: PosTag,
}

impl TaggedToken {
    pub fn new(token: impl Into<String>, pos: PosTag) -> Result<Self> {
        let token = token.into();
        if token.is_empty() {
            return Err(Error::Validation("empty token".into()));
        }
        Ok(TaggedToken { token, pos })
    }
}

pub type Sentence = Vec<TaggedToken>;

/// Reads `token<TAB>tag` lines with a blank line between sentences. Lines
/// starting with `#` and containing no tab are comments.
pub fn read_tagged<R: Read>(reader: R) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<tagged>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') && !line.contains('\t') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: idx as u64 + 1,
            message,
        };
        let (token, tag) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `token<TAB>tag`".into()))?;
        let pos: PosTag = tag.parse()?;
        let token = token.trim();
        if token.is_empty() {
            return Err(parse_err("empty token".into()));
        }
        current.push(TaggedToken::new(token, pos)?);
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Reads every `<year>.<ext>` file of a directory as tagged text, sorted by
/// year.
pub fn read_tagged_dir(dir: &Path) -> Result<Vec<(i32, Vec<Sentence>)>> {
    let mut files: BTreeMap<i32, PathBuf> = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file()
            || path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'))
        {
            continue;
        }
        let year: i32 = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Validation(format!("{}: tagged file name must be <year>.<ext>", path.display())))?;
        if let Some(prev) = files.insert(year, path.clone()) {
            return Err(Error::Validation(format!(
                "year {year} has two tagged files: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    if files.is_empty() {
        return Err(Error::Validation(format!("{}: no tagged files", dir.display())));
    }
    files
        .into_iter()
        .map(|(year, path)| {
            let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
            let sentences = read_tagged(file).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse {
                    line,
                    message: format!("{}: {message}", path.display()),
                },
                other => other,
            })?;
            Ok((year, sentences))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LexiconSource {
    Opinion,
    Positive,
    Negative,
}

impl FromStr for LexiconSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "opinion" => Ok(LexiconSource::Opinion),
            "positive" => Ok(LexiconSource::Positive),
            "negative" => Ok(LexiconSource::Negative),
            other => Err(Error::Validation(format!("unknown lexicon source `{other}`"))),
        }
    }
}

/// Opinion words, stored lowercase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectLexicon {
    terms: BTreeMap<String, LexiconSource>,
}

impl AspectLexicon {
    pub fn new<S: AsRef<str>>(terms: impl IntoIterator<Item = (S, LexiconSource)>) -> Result<Self> {
        let terms: BTreeMap<String, LexiconSource> = terms
            .into_iter()
            .map(|(t, s)| (t.as_ref().trim().to_lowercase(), s))
            .filter(|(t, _)| !t.is_empty())
            .collect();
        if terms.is_empty() {
            return Err(Error::Validation("aspect lexicon is empty".into()));
        }
        Ok(AspectLexicon { terms })
    }

    pub fn from_words<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(words.into_iter().map(|w| (w, LexiconSource::Opinion)))
    }

    /// One `term` or `term<TAB>source` per line; blank lines and `#`
    /// comments are skipped.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut terms = Vec::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io("<lexicon>", e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, source) = match line.split_once('\t') {
                Some((t, s)) => (
                    t,
                    s.parse().map_err(|e: Error| Error::Parse {
                        line: idx as u64 + 1,
                        message: e.to_string(),
                    })?,
                ),
                None => (line, LexiconSource::Opinion),
            };
            terms.push((term.to_string(), source));
        }
        Self::new(terms)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.terms.contains_key(&token.to_lowercase())
    }

    pub fn source(&self, token: &str) -> Option<LexiconSource> {
        self.terms.get(&token.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// One position of a POS pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagMatcher {
    Any,
    OneOf(Vec<PosTag>),
}

impl TagMatcher {
    pub fn matches(&self, tag: PosTag) -> bool {
        match self {
            TagMatcher::Any => true,
            TagMatcher::OneOf(tags) => tags.contains(&tag),
        }
    }
}

impl FromStr for TagMatcher {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "*" {
            return Ok(TagMatcher::Any);
        }
        let tags = s.split('|').map(str::parse).collect::<Result<Vec<PosTag>>>()?;
        Ok(TagMatcher::OneOf(tags))
    }
}

impl fmt::Display for TagMatcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagMatcher::Any => f.write_str("*"),
            TagMatcher::OneOf(tags) => {
                let names: Vec<&str> = tags.iter().map(|t| t.name()).collect();
                f.write_str(&names.join("|"))
            }
        }
    }
}

pub const MAX_PATTERN_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosPattern {
    pub id: String,
    pub sequence: Vec<TagMatcher>,
}

impl PosPattern {
    pub fn new(id: impl Into<String>, sequence: Vec<TagMatcher>) -> Result<Self> {
        let id = id.into();
        if sequence.is_empty() || sequence.len() > MAX_PATTERN_LEN {
            return Err(Error::Validation(format!(
                "pattern `{id}` has length {}; allowed 1..={MAX_PATTERN_LEN}",
                sequence.len()
            )));
        }
        Ok(PosPattern { id, sequence })
    }

    /// Parses `TAG TAG ...` where each position is a tag, `A|B` or `*`.
    pub fn parse(id: impl Into<String>, spec: &str) -> Result<Self> {
        let sequence = spec.split_whitespace().map(str::parse).collect::<Result<Vec<_>>>()?;
        Self::new(id, sequence)
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn matches(&self, window: &[TaggedToken]) -> bool {
        window.len() == self.sequence.len() && self.sequence.iter().zip(window).all(|(m, t)| m.matches(t.pos))
    }
}

pub const DEFAULT_PATTERNS: [(&str, &str); 10] = [
    ("adj_noun", "ADJ NOUN"),
    ("adv_adj", "ADV ADJ"),
    ("adj_adj_noun", "ADJ ADJ NOUN"),
    ("verb_adv", "VERB ADV"),
    ("noun_adj", "NOUN ADJ"),
    ("adv_verb", "ADV VERB"),
    ("adj", "ADJ"),
    ("adv_adj_noun", "ADV ADJ NOUN"),
    ("verb_adj", "VERB ADJ"),
    ("noun_noun", "NOUN NOUN"),
];

pub fn default_patterns() -> Vec<PosPattern> {
    DEFAULT_PATTERNS
        .iter()
        .map(|(id, spec)| PosPattern::parse(*id, spec).expect("default patterns are valid"))
        .collect()
}

/// One `id<TAB>TAG TAG ...` per line; blank lines and `#` comments are
/// skipped.
pub fn read_patterns<R: Read>(reader: R) -> Result<Vec<PosPattern>> {
    let mut patterns = Vec::new();
    let mut ids = BTreeSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<patterns>", e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |message: String| Error::Parse {
            line: idx as u64 + 1,
            message,
        };
        let (id, spec) = line
            .split_once('\t')
            .ok_or_else(|| at("expected `id<TAB>TAG TAG ...`".into()))?;
        let pattern = PosPattern::parse(id.trim(), spec).map_err(|e| match e {
            Error::Tagset(t) => Error::Tagset(t),
            other => at(other.to_string()),
        })?;
        if !ids.insert(pattern.id.clone()) {
            return Err(at(format!("duplicate pattern id `{}`", pattern.id)));
        }
        patterns.push(pattern);
    }
    if patterns.is_empty() {
        return Err(Error::Validation("pattern file has no patterns".into()));
    }
    Ok(patterns)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Aspect {
    pub tokens: Vec<String>,
}

impl Aspect {
    pub fn canonical(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.to_lowercase())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Every adjacent token window whose tags match at least one pattern and
/// which contains a lexicon term. A window matched by several patterns is
/// emitted once; overlapping windows are all emitted.
pub fn extract_aspects(sentences: &[Sentence], lexicon: &AspectLexicon, patterns: &[PosPattern]) -> Vec<Aspect> {
    let mut by_len: BTreeMap<usize, Vec<&PosPattern>> = BTreeMap::new();
    for p in patterns {
        by_len.entry(p.len()).or_default().push(p);
    }
    let mut out = Vec::new();
    for sentence in sentences {
        let opinion: Vec<bool> = sentence.iter().map(|t| lexicon.contains(&t.token)).collect();
        for start in 0..sentence.len() {
            for (&len, group) in &by_len {
                let end = start + len;
                if end > sentence.len() {
                    break;
                }
                let window = &sentence[start..end];
                if opinion[start..end].iter().any(|&o| o) && group.iter().any(|p| p.matches(window)) {
                    out.push(Aspect {
                        tokens: window.iter().map(|t| t.token.clone()).collect(),
                    });
                }
            }
        }
    }
    out
}

/// Occurrence counts per canonical form.
pub fn count_aspects(aspects: &[Aspect]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for a in aspects {
        *counts.entry(a.canonical()).or_insert(0) += 1;
    }
    counts
}

/// Writes `aspect,year,count` rows, years in the given order.
pub fn write_aspect_counts<W: Write>(writer: W, per_year: &[(i32, BTreeMap<String, usize>)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["aspect", "year", "count"])?;
    for (year, counts) in per_year {
        for (aspect, n) in counts {
            wtr.write_record([aspect.as_str(), &year.to_string(), &n.to_string()])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<aspect_counts>", e))
}

/// Lifetime taxonomy over aspect canonical forms, using the vocabulary
/// rules.
pub fn aspect_lifetimes(per_year: &[(i32, BTreeMap<String, usize>)]) -> Result<TaxonomyReport> {
    let presence: Vec<(i32, BTreeSet<String>)> = per_year
        .iter()
        .map(|(y, counts)| {
            (
                *y,
                counts.iter().filter(|(_, &c)| c > 0).map(|(a, _)| a.clone()).collect(),
            )
        })
        .collect();
    classify_presence(&presence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::LifetimeClass;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sent(spec: &str) -> Sentence {
        spec.split_whitespace()
            .map(|w| {
                let (tok, tag) = w.split_once('/').unwrap();
                TaggedToken::new(tok, tag.parse().unwrap()).unwrap()
            })
            .collect()
    }

    fn canon(aspects: &[Aspect]) -> Vec<String> {
        aspects.iter().map(Aspect::canonical).collect()
    }

    #[test]
    fn direct_match_and_lexicon_filter() {
        let lex = AspectLexicon::from_words(["great"]).unwrap();
        let pats = vec![PosPattern::parse("p", "ADJ NOUN").unwrap()];
        assert_eq!(
            canon(&extract_aspects(&[sent("great/ADJ book/NOUN")], &lex, &pats)),
            ["great book"]
        );
        assert!(extract_aspects(&[sent("the/DET book/NOUN")], &lex, &pats).is_empty());
    }

    #[test]
    fn overlapping_matches_all_emitted() {
        let lex = AspectLexicon::from_words(["really", "good"]).unwrap();
        let aspects = extract_aspects(&[sent("Really/ADV good/ADJ coffee/NOUN")], &lex, &default_patterns());
        let mut got = canon(&aspects);
        got.sort();
        assert_eq!(got, ["good", "good coffee", "really good", "really good coffee"]);
    }

    #[test]
    fn wildcards_and_alternatives() {
        let p = PosPattern::parse("w", "ADV|ADJ * NOUN").unwrap();
        assert!(p.matches(&sent("so/ADV very/X cool/NOUN")));
        assert!(p.matches(&sent("bad/ADJ ./PUNCT day/NOUN")));
        assert!(!p.matches(&sent("the/DET very/X cool/NOUN")));
        assert_eq!(p.sequence[0].to_string(), "ADV|ADJ");
    }

    #[test]
    fn tag_and_pattern_errors() {
        assert!(matches!("BLAH".parse::<PosTag>(), Err(Error::Tagset(t)) if t == "BLAH"));
        assert!(matches!(read_tagged("good\tADJ\nfun\tFOO\n".as_bytes()), Err(Error::Tagset(t)) if t == "FOO"));
        assert!(matches!(
            read_tagged("good ADJ\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(PosPattern::parse("long", "ADJ ADJ ADJ ADJ ADJ ADJ").is_err());
        assert!(matches!(
            read_patterns("a\tADJ QQQ\n".as_bytes()),
            Err(Error::Tagset(_))
        ));
        assert!(read_patterns("a\tADJ\na\tNOUN\n".as_bytes()).is_err());
        assert!(AspectLexicon::read("# nothing\n\n".as_bytes()).is_err());
    }

    #[test]
    fn tagged_reader_splits_sentences() {
        let text = "# doc 1\nGreat\tADJ\nbook\tNOUN\n\n\n#tag\tNOUN\nrocks\tVERB\n";
        let s = read_tagged(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1][0].token, "#tag");
        assert_eq!(s[0][0].pos, PosTag::Adj);
    }

    #[test]
    fn lexicon_file() {
        let lex = AspectLexicon::read("Good\tpositive\nawful\tnegative\nmeh\n".as_bytes()).unwrap();
        assert_eq!(lex.len(), 3);
        assert!(lex.contains("GOOD"));
        assert_eq!(lex.source("awful"), Some(LexiconSource::Negative));
        assert_eq!(lex.source("meh"), Some(LexiconSource::Opinion));
    }

    #[test]
    fn default_pattern_file_round_trip() {
        let text: String = DEFAULT_PATTERNS.iter().map(|(id, s)| format!("{id}\t{s}\n")).collect();
        assert_eq!(read_patterns(text.as_bytes()).unwrap(), default_patterns());
    }

    fn brute_force(
        sentences: &[Sentence],
        lexicon: &AspectLexicon,
        patterns: &[PosPattern],
    ) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for s in sentences {
            for i in 0..s.len() {
                for j in i + 1..=s.len() {
                    let w = &s[i..j];
                    let tag_ok = patterns.iter().any(|p| {
                        p.sequence.len() == w.len()
                            && (0..w.len()).all(|k| match &p.sequence[k] {
                                TagMatcher::Any => true,
                                TagMatcher::OneOf(ts) => ts.iter().any(|t| *t == w[k].pos),
                            })
                    });
                    let lex_ok = w.iter().any(|t| lexicon.terms.contains_key(&t.token.to_lowercase()));
                    if tag_ok && lex_ok {
                        let form = w.iter().map(|t| t.token.to_lowercase()).collect::<Vec<_>>().join(" ");
                        *out.entry(form).or_insert(0) += 1;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matches_all_windows_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let words = [
            "good", "bad", "Nice", "book", "film", "very", "run", "the", "quite", "awful",
        ];
        let tags = [PosTag::Adj, PosTag::Noun, PosTag::Adv, PosTag::Verb, PosTag::Det];
        let lex = AspectLexicon::from_words(["good", "bad", "nice", "awful"]).unwrap();
        let mut patterns = default_patterns();
        patterns.push(PosPattern::parse("wild", "DET * NOUN|ADJ").unwrap());
        let sentences: Vec<Sentence> = (0..200)
            .map(|_| {
                let n = rng.random_range(1..=12);
                (0..n)
                    .map(|_| TaggedToken {
                        token: words[rng.random_range(0..words.len())].to_string(),
                        pos: tags[rng.random_range(0..tags.len())],
                    })
                    .collect()
            })
            .collect();
        let got = count_aspects(&extract_aspects(&sentences, &lex, &patterns));
        assert_eq!(got, brute_force(&sentences, &lex, &patterns));
        assert!(!got.is_empty());
    }

    #[test]
    fn aspect_lifetimes_reuse_vocab_rules() {
        let year = |y: i32, forms: &[&str]| (y, forms.iter().map(|f| (f.to_string(), 1usize)).collect());
        let per_year = vec![
            year(2019, &["great book", "bad day", "old news"]),
            year(2020, &["great book", "old news", "new hit"]),
            year(2021, &["great book", "new hit", "one off"]),
        ];
        let report = aspect_lifetimes(&per_year).unwrap();
        assert_eq!(report.class_of("great book", 2020), Some(LifetimeClass::Common));
        assert_eq!(report.class_of("bad day", 2019), Some(LifetimeClass::Unique));
        assert_eq!(report.class_of("new hit", 2020), Some(LifetimeClass::Emerging));
        assert_eq!(report.class_of("old news", 2020), Some(LifetimeClass::Dying));
        assert!(aspect_lifetimes(&per_year[..2]).is_err());
    }
}
