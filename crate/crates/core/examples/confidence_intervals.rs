//! Exact binomial confidence intervals for classifier accuracy.

use exploit_topics::accuracy_ci;

fn main() {
    for (correct, total) in [(998, 1266), (9, 10), (0, 20), (50, 50), (130, 200)] {
        let ci = accuracy_ci(correct, total, 0.95).expect("ci");
        println!(
            "{correct:>4}/{total:<5} accuracy {:.3}  95% CI [{:.3}, {:.3}]",
            ci.accuracy, ci.ci_low, ci.ci_high
        );
    }
    let narrow = accuracy_ci(800, 1000, 0.90).expect("ci");
    println!("800/1000 at 90%: [{:.3}, {:.3}]", narrow.ci_low, narrow.ci_high);
}
