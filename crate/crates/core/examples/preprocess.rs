//! Tokenizes one exploit text, then builds word and term matrices for a
//! small synthetic corpus.

use exploit_topics::synth::{generate_corpus, SynthConfig};
use exploit_topics::textprep::{process_document, tokenize};
use exploit_topics::{build_matrices, LexiconResources, PrepConfig};

fn main() {
    let lex = LexiconResources::builtin();
    let cfg = PrepConfig::default();

    let text = "# Exploit Title: Gallery 2.1 SQL Injection\n\
                Vulnerable parameter: news.php?id= (union+select) tested on Apache/2.2";
    println!("tokens: {:?}", tokenize(text));
    let doc = process_document(text, &lex, &cfg);
    println!("words:  {:?}", doc.words);
    println!("terms:  {:?}", doc.terms);

    let synth = generate_corpus(&SynthConfig {
        n_docs: 300,
        ..SynthConfig::default()
    });
    let m = build_matrices(&synth.corpus, &lex, &cfg).expect("matrices");
    print!("\n{}", m.summary());
    let top: Vec<_> = {
        let sums = m.terms.column_sums();
        let mut idx: Vec<usize> = (0..sums.len()).collect();
        idx.sort_by_key(|&j| std::cmp::Reverse(sums[j]));
        idx.into_iter()
            .take(8)
            .map(|j| (m.terms.vocabulary[j].clone(), sums[j]))
            .collect()
    };
    println!("most frequent terms: {top:?}");
}
