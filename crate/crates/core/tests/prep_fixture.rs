//! Hand-authored ten-document corpus with counts tallied by hand in
//! `fixtures/prep/expected.tsv`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use exploit_topics::corpus::{load_corpus, CorpusFormat, LoadOptions};
use exploit_topics::textprep::{length_filter, process_document, tokenize, FrequencyMatrix};
use exploit_topics::{build_matrices, CorpusSet, LexiconResources, PrepConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/prep")
        .join(name)
}

fn lexicon() -> LexiconResources {
    LexiconResources::from_files(
        &fixture("dictionary.txt"),
        &fixture("lemmas.tsv"),
        &fixture("stopwords.txt"),
    )
    .unwrap()
}

fn corpus() -> CorpusSet {
    load_corpus(
        &fixture("corpus.jsonl"),
        CorpusFormat::JsonLines,
        &LoadOptions::default(),
    )
    .unwrap()
    .corpus
}

type Cells = BTreeMap<(String, String), u32>;

fn expected() -> (Cells, Cells) {
    let text = std::fs::read_to_string(fixture("expected.tsv")).unwrap();
    let (mut words, mut terms) = (Cells::new(), Cells::new());
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let cell = ((f[1].to_string(), f[2].to_string()), f[3].parse().unwrap());
        match f[0] {
            "words" => words.insert(cell.0, cell.1),
            "terms" => terms.insert(cell.0, cell.1),
            s => panic!("bad stream {s}"),
        };
    }
    (words, terms)
}

fn cells(m: &FrequencyMatrix) -> Cells {
    let mut out = Cells::new();
    for (d, id) in m.doc_ids.iter().enumerate() {
        for &(j, c) in m.row(d) {
            out.insert((id.clone(), m.vocabulary[j as usize].clone()), c);
        }
    }
    out
}

#[test]
fn matrices_equal_hand_tally() {
    let m = build_matrices(&corpus(), &lexicon(), &PrepConfig::default()).unwrap();
    let (words, terms) = expected();
    assert_eq!(cells(&m.words), words);
    assert_eq!(cells(&m.terms), terms);
    let docs: Vec<String> = (1..=9).map(|d| format!("fx-{d:02}")).collect();
    assert_eq!(m.words.doc_ids, docs);
    assert_eq!(m.terms.doc_ids, docs);
    assert_eq!(m.excluded_ids, vec!["fx-10".to_string()]);
    assert_eq!(
        m.words.vocabulary,
        ["code", "exploit", "internationalization", "server"]
    );
    assert_eq!(m.terms.vocabulary, ["0x41414141", "heap_spray", "payload_aaaaaaaaaaaa"]);
}

#[test]
fn length_boundaries() {
    let cfg = PrepConfig::default();
    let kept = length_filter(
        tokenize("bug Code internationalization internationalizations payload_aaaaaaaaaaaa payload_aaaaaaaaaaaab"),
        &cfg,
    );
    assert_eq!(kept, ["code", "internationalization", "payload_aaaaaaaaaaaa"]);
}

#[test]
fn frequency_boundary_at_nineteen() {
    let cfg = PrepConfig {
        min_frequency: 19,
        ..PrepConfig::default()
    };
    let m = build_matrices(&corpus(), &lexicon(), &cfg).unwrap();
    assert!(m.excluded_ids.is_empty());
    let words = cells(&m.words);
    let terms = cells(&m.terms);
    for d in 1..=9 {
        let id = format!("fx-{d:02}");
        assert_eq!(words[&(id.clone(), "client".to_string())], 2);
        assert_eq!(terms[&(id, "shellcode".to_string())], 2);
    }
    assert_eq!(words[&("fx-10".to_string(), "client".to_string())], 1);
    assert_eq!(terms[&("fx-10".to_string(), "shellcode".to_string())], 1);
    let (hand_words, hand_terms) = expected();
    assert_eq!(words.len(), hand_words.len() + 10);
    assert_eq!(terms.len(), hand_terms.len() + 10);
}

#[test]
fn stopwords_and_lemmas() {
    let lex = lexicon();
    let doc = process_document("This servers, (Servers) With server eip", &lex, &PrepConfig::default());
    assert_eq!(doc.words, ["server", "server", "server"]);
    assert!(doc.terms.is_empty());
}

#[test]
fn bundled_lexicon_splits_code_from_prose() {
    let lex = LexiconResources::builtin();
    let doc = process_document(
        "The vulnerable parameter allows remote attackers: index.php?id=1 union+select /bin/sh",
        &lex,
        &PrepConfig::default(),
    );
    assert_eq!(doc.words, ["vulnerable", "parameter", "allows", "remote", "attacker"]);
    assert_eq!(doc.terms, ["index.php?id=1", "union+select", "bin/sh"]);
}

#[test]
fn three_document_toy_corpus() {
    let lex = LexiconResources {
        dictionary: ["remote", "overflow", "servers", "server"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        lemma_table: [("servers".to_string(), "server".to_string())].into_iter().collect(),
        stopwords: ["with".to_string()].into_iter().collect(),
    };
    let mut corpus = corpus();
    corpus.records.truncate(3);
    corpus.records[0].raw_text = "Remote overflow: /bin/sh /bin/sh".into();
    corpus.records[1].raw_text = "servers SERVER with 0xdeadbeef".into();
    corpus.records[2].raw_text = "remote remote eax 0xdeadbeef!".into();
    let cfg = PrepConfig {
        min_frequency: 1,
        ..PrepConfig::default()
    };
    let m = build_matrices(&corpus, &lex, &cfg).unwrap();
    let cell = |id: &str, u: &str, c: u32| ((id.to_string(), u.to_string()), c);
    let words: Cells = [
        cell("fx-01", "overflow", 1),
        cell("fx-01", "remote", 1),
        cell("fx-02", "server", 2),
        cell("fx-03", "remote", 2),
    ]
    .into_iter()
    .collect();
    let terms: Cells = [
        cell("fx-01", "bin/sh", 2),
        cell("fx-02", "0xdeadbeef", 1),
        cell("fx-03", "0xdeadbeef", 1),
    ]
    .into_iter()
    .collect();
    assert_eq!(cells(&m.words), words);
    assert_eq!(cells(&m.terms), terms);
    assert!(m.excluded_ids.is_empty());
}
