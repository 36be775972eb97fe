//! Six-step text preprocessing into word and term frequency matrices.
//!
//! Per document: tokenize, keep tokens of acceptable length, classify each
//! token as a dictionary word or a non-dictionary term, lemmatize words,
//! drop stopwords from both streams. Across the corpus: prune unigrams
//! whose total count is below `min_frequency`, then drop documents left
//! without any word or without any term.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::CorpusSet;

const BUILTIN_DICTIONARY: &str = include_str!("../resources/dictionary.txt");
const BUILTIN_LEMMAS: &str = include_str!("../resources/lemmas.tsv");
const BUILTIN_STOPWORDS: &str = include_str!("../resources/stopwords.txt");

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Resource {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid preprocessing config: {0}")]
    Config(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("every document was excluded after pruning")]
    AllExcluded,
    #[error("malformed matrix export: {0}")]
    Export(String),
}

/// Dictionary, noun lemma table and stopword list. All entries are lowercase.
#[derive(Debug, Clone, Default)]
pub struct LexiconResources {
    pub dictionary: HashSet<String>,
    pub lemma_table: HashMap<String, String>,
    pub stopwords: HashSet<String>,
}

fn word_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

impl LexiconResources {
    /// Resources bundled with the crate: a technical English word list,
    /// regular noun plurals, and the common 179-entry English stopword list.
    pub fn builtin() -> Self {
        let path = Path::new("<builtin>");
        Self::parse(
            BUILTIN_DICTIONARY,
            BUILTIN_LEMMAS,
            BUILTIN_STOPWORDS,
            [path, path, path],
        )
        .expect("bundled lexicon is well formed")
    }

    pub fn from_files(dictionary: &Path, lemmas: &Path, stopwords: &Path) -> Result<Self, PrepError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| PrepError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        Self::parse(
            &read(dictionary)?,
            &read(lemmas)?,
            &read(stopwords)?,
            [dictionary, lemmas, stopwords],
        )
    }

    /// Like [`LexiconResources::from_files`], with the bundled resource used
    /// for every path left out.
    pub fn with_overrides(
        dictionary: Option<&Path>,
        lemmas: Option<&Path>,
        stopwords: Option<&Path>,
    ) -> Result<Self, PrepError> {
        let builtin = Path::new("<builtin>");
        let read = |p: Option<&Path>, fallback: &str| -> Result<String, PrepError> {
            match p {
                Some(p) => fs::read_to_string(p).map_err(|source| PrepError::Io {
                    path: p.to_path_buf(),
                    source,
                }),
                None => Ok(fallback.to_string()),
            }
        };
        Self::parse(
            &read(dictionary, BUILTIN_DICTIONARY)?,
            &read(lemmas, BUILTIN_LEMMAS)?,
            &read(stopwords, BUILTIN_STOPWORDS)?,
            [
                dictionary.unwrap_or(builtin),
                lemmas.unwrap_or(builtin),
                stopwords.unwrap_or(builtin),
            ],
        )
    }

    fn parse(dictionary: &str, lemmas: &str, stopwords: &str, paths: [&Path; 3]) -> Result<Self, PrepError> {
        let dictionary = word_lines(dictionary).map(|(_, w)| w.to_lowercase()).collect();
        let stopwords = word_lines(stopwords).map(|(_, w)| w.to_lowercase()).collect();
        let mut lemma_table = HashMap::new();
        for (line, l) in word_lines(lemmas) {
            let mut parts = l.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(form), Some(lemma), None) if !form.trim().is_empty() && !lemma.trim().is_empty() => {
                    lemma_table.insert(form.trim().to_lowercase(), lemma.trim().to_lowercase());
                }
                _ => {
                    return Err(PrepError::Resource {
                        path: paths[1].to_path_buf(),
                        line,
                        message: format!("expected `inflected<TAB>lemma`, got `{l}`"),
                    })
                }
            }
        }
        Ok(LexiconResources {
            dictionary,
            lemma_table,
            stopwords,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepConfig {
    pub min_token_len: usize,
    pub max_token_len: usize,
    pub min_frequency: u64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            min_token_len: 4,
            max_token_len: 20,
            min_frequency: 20,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<(), PrepError> {
        if self.min_token_len < 1 || self.min_token_len > self.max_token_len {
            return Err(PrepError::Config(format!(
                "need 1 <= min_token_len ({}) <= max_token_len ({})",
                self.min_token_len, self.max_token_len
            )));
        }
        if self.min_frequency < 1 {
            return Err(PrepError::Config("min_frequency must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Term,
}

/// Whitespace split, edge punctuation stripped, lowercased. Inner
/// punctuation (`index.php?id=1`, `/bin/sh`, `snake_case`) is kept intact.
pub fn tokenize(raw_text: &str) -> Vec<String> {
    raw_text
        .split_whitespace()
        .map(|piece| piece.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn length_filter(tokens: Vec<String>, cfg: &PrepConfig) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| {
            let n = t.chars().count();
            n >= cfg.min_token_len && n <= cfg.max_token_len
        })
        .collect()
}

pub fn classify_token(token: &str, lex: &LexiconResources) -> TokenKind {
    if lex.dictionary.contains(token) {
        TokenKind::Word
    } else {
        TokenKind::Term
    }
}

/// Table lookup; words without an entry are their own lemma.
pub fn lemmatize<'a>(word: &'a str, lex: &'a LexiconResources) -> &'a str {
    lex.lemma_table.get(word).map(String::as_str).unwrap_or(word)
}

pub fn remove_stopwords(words: Vec<String>, lex: &LexiconResources) -> Vec<String> {
    words.into_iter().filter(|w| !lex.stopwords.contains(w)).collect()
}

/// Output of the per-document steps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocTokens {
    pub words: Vec<String>,
    pub terms: Vec<String>,
}

pub fn process_document(raw_text: &str, lex: &LexiconResources, cfg: &PrepConfig) -> DocTokens {
    let tokens = length_filter(tokenize(raw_text), cfg);
    let mut doc = DocTokens::default();
    for t in tokens {
        match classify_token(&t, lex) {
            TokenKind::Word => doc.words.push(lemmatize(&t, lex).to_string()),
            TokenKind::Term => doc.terms.push(t),
        }
    }
    doc.words = remove_stopwords(doc.words, lex);
    doc.terms = remove_stopwords(doc.terms, lex);
    doc
}

/// Sparse documents x unigrams count matrix.
///
/// Rows hold `(column, count)` pairs sorted by column; the vocabulary is
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyMatrix {
    pub doc_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    rows: Vec<Vec<(u32, u32)>>,
}

impl FrequencyMatrix {
    pub fn from_rows(
        doc_ids: Vec<String>,
        vocabulary: Vec<String>,
        rows: Vec<Vec<(u32, u32)>>,
    ) -> Result<Self, PrepError> {
        if doc_ids.len() != rows.len() {
            return Err(PrepError::Export(format!(
                "{} doc ids for {} rows",
                doc_ids.len(),
                rows.len()
            )));
        }
        if vocabulary.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PrepError::Export("vocabulary is not strictly sorted".into()));
        }
        for (d, row) in rows.iter().enumerate() {
            if row.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(PrepError::Export(format!("row {d} columns not strictly increasing")));
            }
            if row.iter().any(|&(j, c)| j as usize >= vocabulary.len() || c == 0) {
                return Err(PrepError::Export(format!(
                    "row {d} has an out-of-range column or zero count"
                )));
            }
        }
        Ok(FrequencyMatrix {
            doc_ids,
            vocabulary,
            rows,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_unigrams(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn row(&self, d: usize) -> &[(u32, u32)] {
        &self.rows[d]
    }

    pub fn get(&self, d: usize, j: usize) -> u32 {
        let row = &self.rows[d];
        row.binary_search_by_key(&(j as u32), |&(c, _)| c)
            .map(|i| row[i].1)
            .unwrap_or(0)
    }

    pub fn column_index(&self, unigram: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|v| v.as_str().cmp(unigram)).ok()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, c)| u64::from(c)).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.vocabulary.len()];
        for row in &self.rows {
            for &(j, c) in row {
                sums[j as usize] += u64::from(c);
            }
        }
        sums
    }

    pub fn total_mass(&self) -> u64 {
        self.row_sums().iter().sum()
    }

    /// Writes `<stem>.counts.tsv` (`doc_index<TAB>unigram_index<TAB>count`,
    /// zero-based), `<stem>.docs.txt` and `<stem>.vocab.txt`.
    pub fn write_export(&self, dir: &Path, stem: &str) -> io::Result<()> {
        let mut counts = BufWriter::new(fs::File::create(dir.join(format!("{stem}.counts.tsv")))?);
        for (d, row) in self.rows.iter().enumerate() {
            for &(j, c) in row {
                writeln!(counts, "{d}\t{j}\t{c}")?;
            }
        }
        counts.flush()?;
        let mut docs = BufWriter::new(fs::File::create(dir.join(format!("{stem}.docs.txt")))?);
        for id in &self.doc_ids {
            writeln!(docs, "{id}")?;
        }
        docs.flush()?;
        let mut vocab = BufWriter::new(fs::File::create(dir.join(format!("{stem}.vocab.txt")))?);
        for v in &self.vocabulary {
            writeln!(vocab, "{v}")?;
        }
        vocab.flush()
    }

    pub fn read_export(dir: &Path, stem: &str) -> Result<Self, PrepError> {
        let open = |name: String| {
            let path = dir.join(name);
            fs::File::open(&path)
                .map(BufReader::new)
                .map_err(|source| PrepError::Io { path, source })
        };
        let lines = |name: String| -> Result<Vec<String>, PrepError> {
            let path = dir.join(&name);
            open(name)?
                .lines()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| PrepError::Io { path, source })
        };
        let doc_ids = lines(format!("{stem}.docs.txt"))?;
        let vocabulary = lines(format!("{stem}.vocab.txt"))?;
        let mut rows: Vec<Vec<(u32, u32)>> = vec![Vec::new(); doc_ids.len()];
        for (i, line) in lines(format!("{stem}.counts.tsv"))?.iter().enumerate() {
            let fields: Vec<u64> = line
                .split('\t')
                .map(|f| f.parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|e| PrepError::Export(format!("{stem}.counts.tsv:{}: {e}", i + 1)))?;
            if fields.len() != 3 || fields[0] as usize >= rows.len() || fields[2] > u64::from(u32::MAX) {
                return Err(PrepError::Export(format!(
                    "{stem}.counts.tsv:{}: bad triplet `{line}`",
                    i + 1
                )));
            }
            rows[fields[0] as usize].push((fields[1] as u32, fields[2] as u32));
        }
        FrequencyMatrix::from_rows(doc_ids, vocabulary, rows)
    }
}

#[derive(Debug, Clone)]
pub struct Matrices {
    pub words: FrequencyMatrix,
    pub terms: FrequencyMatrix,
    /// Ids of documents left without any word or any term, in corpus order.
    pub excluded_ids: Vec<String>,
}

impl Matrices {
    pub fn summary(&self) -> String {
        format!(
            "documents\t{}\nexcluded\t{}\nword_vocabulary\t{}\nterm_vocabulary\t{}\nword_tokens\t{}\nterm_tokens\t{}\n",
            self.words.n_docs(),
            self.excluded_ids.len(),
            self.words.n_unigrams(),
            self.terms.n_unigrams(),
            self.words.total_mass(),
            self.terms.total_mass(),
        )
    }
}

type Bag = BTreeMap<String, u32>;

fn bag(tokens: Vec<String>) -> Bag {
    let mut b = Bag::new();
    for t in tokens {
        *b.entry(t).or_default() += 1;
    }
    b
}

fn surviving_vocabulary<'a>(bags: impl Iterator<Item = &'a Bag>, min_frequency: u64) -> Vec<String> {
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for b in bags {
        for (t, c) in b {
            *totals.entry(t.as_str()).or_default() += u64::from(*c);
        }
    }
    totals
        .into_iter()
        .filter(|&(_, c)| c >= min_frequency)
        .map(|(t, _)| t.to_string())
        .collect()
}

fn project(bag: &Bag, vocabulary: &[String]) -> Vec<(u32, u32)> {
    bag.iter()
        .filter_map(|(t, &c)| vocabulary.binary_search(t).ok().map(|j| (j as u32, c)))
        .collect()
}

/// Runs the full preprocessing pipeline over `corpus`.
///
/// Pruning and document exclusion are repeated until neither changes, so
/// the returned matrices have every column sum at least `min_frequency`
/// and every row non-empty.
pub fn build_matrices(corpus: &CorpusSet, lex: &LexiconResources, cfg: &PrepConfig) -> Result<Matrices, PrepError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(PrepError::EmptyCorpus);
    }
    let bags: Vec<(Bag, Bag)> = corpus
        .records
        .par_iter()
        .map(|r| {
            let doc = process_document(&r.raw_text, lex, cfg);
            (bag(doc.words), bag(doc.terms))
        })
        .collect();

    let mut alive: Vec<usize> = (0..bags.len()).collect();
    let (word_vocab, term_vocab) = loop {
        let word_vocab = surviving_vocabulary(alive.iter().map(|&d| &bags[d].0), cfg.min_frequency);
        let term_vocab = surviving_vocabulary(alive.iter().map(|&d| &bags[d].1), cfg.min_frequency);
        let has_any = |b: &Bag, v: &[String]| b.keys().any(|t| v.binary_search(t).is_ok());
        let next: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&d| has_any(&bags[d].0, &word_vocab) && has_any(&bags[d].1, &term_vocab))
            .collect();
        if next.len() == alive.len() {
            break (word_vocab, term_vocab);
        }
        alive = next;
    };
    if alive.is_empty() {
        return Err(PrepError::AllExcluded);
    }

    let doc_ids: Vec<String> = alive.iter().map(|&d| corpus.records[d].id.clone()).collect();
    let mut is_alive = vec![false; bags.len()];
    for &d in &alive {
        is_alive[d] = true;
    }
    let excluded_ids = corpus
        .records
        .iter()
        .zip(&is_alive)
        .filter(|(_, a)| !**a)
        .map(|(r, _)| r.id.clone())
        .collect();
    let word_rows = alive.iter().map(|&d| project(&bags[d].0, &word_vocab)).collect();
    let term_rows = alive.iter().map(|&d| project(&bags[d].1, &term_vocab)).collect();
    Ok(Matrices {
        words: FrequencyMatrix::from_rows(doc_ids.clone(), word_vocab, word_rows)?,
        terms: FrequencyMatrix::from_rows(doc_ids, term_vocab, term_rows)?,
        excluded_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> LexiconResources {
        LexiconResources::builtin()
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("SQL injection in /index.php?id=1"),
            ["sql", "injection", "in", "index.php?id=1"]
        );
        assert_eq!(tokenize("buffer\toverflow\nparser"), ["buffer", "overflow", "parser"]);
        assert_eq!(tokenize("'quoted', (paren) --- ..."), ["quoted", "paren"]);
        assert_eq!(
            tokenize("CamelCase under_score slash/notation dot.notation"),
            ["camelcase", "under_score", "slash/notation", "dot.notation"]
        );
    }

    #[test]
    fn length_bounds_are_inclusive() {
        let cfg = PrepConfig::default();
        assert_eq!(length_filter(vec!["cat".into(), "code".into()], &cfg), ["code"]);
        assert_eq!(length_filter(vec!["ruby".into()], &cfg), ["ruby"]);
        let twenty = "a".repeat(20);
        let twenty_one = "b".repeat(21);
        assert_eq!(length_filter(vec![twenty.clone(), twenty_one], &cfg), [twenty]);
        // character count, not bytes
        assert_eq!(length_filter(vec!["äöüß".into()], &cfg), ["äöüß"]);
    }

    #[test]
    fn classification() {
        let lex = lex();
        assert_eq!(classify_token("vulnerability", &lex), TokenKind::Word);
        assert_eq!(classify_token("overflow", &lex), TokenKind::Word);
        assert_eq!(classify_token("index.php?id=1", &lex), TokenKind::Term);
    }

    #[test]
    fn lemmatizer_never_truncates() {
        let lex = lex();
        assert_eq!(lemmatize("vulnerabilities", &lex), "vulnerability");
        assert_eq!(lemmatize("vulnerability", &lex), "vulnerability");
        assert_eq!(lemmatize("exploit", &lex), "exploit");
        assert_eq!(lemmatize("exploits", &lex), "exploit");
    }

    #[test]
    fn stopwords() {
        let lex = lex();
        let words = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(
            remove_stopwords(words(&["the", "remote", "overflow"]), &lex),
            ["remote", "overflow"]
        );
        assert!(remove_stopwords(vec![], &lex).is_empty());
        assert_eq!(
            remove_stopwords(words(&["remote", "overflow"]), &lex),
            ["remote", "overflow"]
        );
    }

    #[test]
    fn config_validation() {
        assert!(PrepConfig::default().validate().is_ok());
        let bad = PrepConfig {
            min_token_len: 5,
            max_token_len: 4,
            ..PrepConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PrepConfig {
            min_frequency: 0,
            ..PrepConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lemma_table_rejects_bad_lines() {
        let p = Path::new("x");
        assert!(LexiconResources::parse("a\n", "only-one-column\n", "", [p, p, p]).is_err());
    }

    #[test]
    fn export_round_trip() {
        let m = FrequencyMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec!["alpha".into(), "beta".into()],
            vec![vec![(0, 3)], vec![(0, 1), (1, 2)]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.write_export(dir.path(), "words").unwrap();
        let back = FrequencyMatrix::read_export(dir.path(), "words").unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get(1, 1), 2);
        assert_eq!(back.get(0, 1), 0);
        assert_eq!(back.column_sums(), [4, 2]);
    }

    #[test]
    fn unsorted_vocabulary_rejected() {
        let err = FrequencyMatrix::from_rows(vec![], vec!["b".into(), "a".into()], vec![]);
        assert!(err.is_err());
    }
}
