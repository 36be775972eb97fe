//! Trains a forest on XOR-shaped clusters, which no single split separates.

use exploit_topics::forest::{train_on, Dataset};
use exploit_topics::ForestParams;
use rand::Rng;

fn main() {
    let mut rng = exploit_topics::seed::rng_from(3);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (cx, cy) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        for _ in 0..50 {
            rows.push(vec![cx + rng.gen_range(-0.2..0.2), cy + rng.gen_range(-0.2..0.2)]);
            labels.push(cx != cy);
        }
    }
    let data = Dataset::from_rows(&rows, &labels).expect("dataset");
    let all: Vec<usize> = (0..data.n_rows()).collect();
    let params = ForestParams {
        n_trees: 100,
        mtry: Some(1),
        seed: 7,
        compute_oob: true,
        ..ForestParams::default()
    };
    let forest = train_on(&data, &all, &params).expect("forest");
    let correct = all
        .iter()
        .filter(|&&i| forest.predict_expanded(data.row(i)) == data.labels[i])
        .count();
    println!("training accuracy: {:.3}", correct as f64 / all.len() as f64);
    println!("out-of-bag error:  {:.3}", forest.oob_error.unwrap_or(f64::NAN));
    for probe in [[0.1, 0.05], [0.9, 0.1], [0.05, 0.95], [0.95, 0.9]] {
        println!("{probe:?} -> {}", forest.predict_expanded(&probe));
    }
    let dump = forest.dump();
    println!(
        "dump: {} lines, first tree has {} nodes",
        dump.lines().count(),
        forest.trees[0].nodes.len()
    );
}
