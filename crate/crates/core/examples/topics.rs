//! Fits LDA on a corpus with two planted topics and shows how well the
//! dominant topics recover them.

use exploit_topics::synth::planted_topic_matrix;
use exploit_topics::topics::dominant_topics;
use exploit_topics::{fit_lda, spearman_rho, LdaParams};

fn main() {
    let planted = planted_topic_matrix(200, 2, 30, 60, 0.9, 11);
    let params = LdaParams {
        iterations: 300,
        burn_in: 200,
        seed: 5,
        ..LdaParams::new(2)
    };
    let model = fit_lda(&planted.matrix, &params).expect("lda");
    let dominant = dominant_topics(&model);
    let agree = dominant.iter().zip(&planted.labels).filter(|(a, b)| a == b).count();
    let purity = agree.max(dominant.len() - agree) as f64 / dominant.len() as f64;
    println!("purity under the best label permutation: {purity:.3}");
    for (t, row) in model.phi.iter().enumerate() {
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
        let top: Vec<&str> = idx[..6]
            .iter()
            .map(|&j| planted.matrix.vocabulary[j].as_str())
            .collect();
        println!("topic {t}: {}", top.join(" "));
    }
    let rho = spearman_rho(&dominant, &planted.labels).expect("rho");
    println!("spearman rho between fitted and planted labels: {rho:.3}");
}
