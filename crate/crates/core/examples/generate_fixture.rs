//! Writes a synthetic corpus and CVSS feed.
//!
//! ```text
//! cargo run --example generate_fixture -- fixture 2000 2016
//! ```

use std::path::PathBuf;

use exploit_topics::synth::{generate_corpus, SynthConfig};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixture".into()));
    let mut cfg = SynthConfig::default();
    if let Some(n) = args.next() {
        cfg.n_docs = n.parse().expect("document count");
    }
    if let Some(s) = args.next() {
        cfg.seed = s.parse().expect("seed");
    }
    std::fs::create_dir_all(&dir)?;
    let synth = generate_corpus(&cfg);
    let (corpus, cvss) = synth.write(&dir)?;
    println!("{}", corpus.display());
    println!("{}", cvss.display());
    print!("{}", synth.corpus.summary().render());
    Ok(())
}
