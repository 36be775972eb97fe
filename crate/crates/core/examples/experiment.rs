//! Runs the whole pipeline on a synthetic corpus with a reduced grid.

use exploit_topics::eval::{EvalReport, LdaSettings};
use exploit_topics::synth::{generate_corpus, SynthConfig};
use exploit_topics::{run_experiment, ExperimentConfig, ForestParams, LexiconResources};

fn main() {
    let synth = generate_corpus(&SynthConfig {
        n_docs: 600,
        ..SynthConfig::default()
    });
    let config = ExperimentConfig {
        ks: vec![0, 5, 10],
        lda: LdaSettings {
            iterations: 150,
            burn_in: 100,
            ..LdaSettings::default()
        },
        forest: ForestParams {
            n_trees: 60,
            ..ForestParams::default()
        },
        seed: 42,
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&synth.corpus, &LexiconResources::builtin(), &synth.cvss, &config).expect("experiment");
    print!("{}", out.matrices.summary());
    println!();
    print!("{}", EvalReport::render_accuracy(&out.report.rows));
    println!();
    print!("{}", EvalReport::render_rho(&out.report.rho));
}
