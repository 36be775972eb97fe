//! Builds the covariate table with and without topic columns.

use exploit_topics::features::TopicAssignment;
use exploit_topics::synth::{generate_corpus, SynthConfig};
use exploit_topics::{build_covariates, top_developers};

fn main() {
    let synth = generate_corpus(&SynthConfig {
        n_docs: 120,
        ..SynthConfig::default()
    });
    let corpus = &synth.corpus;
    let ranking = top_developers(corpus, 30);
    println!("top authors: {:?}", &ranking.ranked_authors[..5]);

    let ids: Vec<String> = corpus.records.iter().map(|r| r.id.clone()).collect();
    let plain = build_covariates(corpus, &synth.cvss, &ranking, &ids, None, None).expect("covariates");
    println!("without topics: {} columns", plain.column_count());

    let topics = |k: usize| TopicAssignment {
        levels: k,
        values: (0..ids.len()).map(|d| d % k).collect(),
    };
    let full =
        build_covariates(corpus, &synth.cvss, &ranking, &ids, Some(&topics(5)), Some(&topics(5))).expect("covariates");
    println!("with topics:    {} columns", full.column_count());

    let mut out = Vec::new();
    full.select(&[0, 1, 2]).write_csv(&mut out).expect("csv");
    print!("{}", String::from_utf8(out).expect("utf8"));
}
