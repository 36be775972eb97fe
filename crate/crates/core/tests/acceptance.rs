//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each, and exits nonzero if any failed.

// `ensure!(x >= bound)` must also fail on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use exploit_topics::corpus::{load_corpus, CorpusFormat, LoadOptions, Target};
use exploit_topics::eval::{EvalReport, LdaSettings};
use exploit_topics::forest::{train_on, Dataset, Forest};
use exploit_topics::seed::rng_from;
use exploit_topics::synth::{generate_corpus, planted_topic_matrix, SynthConfig};
use exploit_topics::textprep::{length_filter, tokenize, FrequencyMatrix};
use exploit_topics::topics::dominant_topics;
use exploit_topics::{
    accuracy_ci, build_matrices, fit_lda, run_experiment, spearman_rho, ExperimentConfig, ForestParams, LdaParams,
    LexiconResources, PrepConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("preprocessing oracle", 1, preprocessing_oracle),
        ("planted-topic recovery", 10, planted_topics),
        ("topic-feature lift", 300, topic_lift),
        ("confidence intervals", 1, confidence_intervals),
        ("spearman oracle", 5, spearman_oracle),
        ("forest sanity", 30, forest_sanity),
        ("end-to-end determinism", 600, end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|d| {
            if elapsed > Duration::from_secs(*limit) {
                Err(format!("{d}; took {:.2} s, limit {limit} s", elapsed.as_secs_f64()))
            } else {
                Ok(d)
            }
        });
        match outcome {
            Ok(detail) => println!(
                "PASS criterion {}: {name}: {detail} [{:.2} s < {limit} s]",
                i + 1,
                elapsed.as_secs_f64()
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "FAIL criterion {}: {name}: {why} [{:.2} s]",
                    i + 1,
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/prep")
        .join(name)
}

fn cells(m: &FrequencyMatrix) -> BTreeMap<(String, String), u32> {
    let mut out = BTreeMap::new();
    for (d, id) in m.doc_ids.iter().enumerate() {
        for &(j, c) in m.row(d) {
            out.insert((id.clone(), m.vocabulary[j as usize].clone()), c);
        }
    }
    out
}

/// 1. Ten hand-authored documents against a hand-tallied count table.
fn preprocessing_oracle() -> Outcome {
    let lex = LexiconResources::from_files(
        &fixture("dictionary.txt"),
        &fixture("lemmas.tsv"),
        &fixture("stopwords.txt"),
    )
    .map_err(|e| e.to_string())?;
    let corpus = load_corpus(
        &fixture("corpus.jsonl"),
        CorpusFormat::JsonLines,
        &LoadOptions::default(),
    )
    .map_err(|e| e.to_string())?
    .corpus;
    ensure!(corpus.n() == 10, "fixture has {} documents", corpus.n());
    let m = build_matrices(&corpus, &lex, &PrepConfig::default()).map_err(|e| e.to_string())?;

    let expected = fs::read_to_string(fixture("expected.tsv")).map_err(|e| e.to_string())?;
    let mut words = BTreeMap::new();
    let mut terms = BTreeMap::new();
    for line in expected.lines().filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let f: Vec<&str> = line.split('\t').collect();
        let key = (f[1].to_string(), f[2].to_string());
        let count: u32 = f[3].parse().map_err(|_| format!("bad count in `{line}`"))?;
        match f[0] {
            "words" => words.insert(key, count),
            _ => terms.insert(key, count),
        };
    }
    ensure!(cells(&m.words) == words, "word matrix differs from the hand tally");
    ensure!(cells(&m.terms) == terms, "term matrix differs from the hand tally");
    ensure!(m.excluded_ids == ["fx-10"], "excluded {:?}", m.excluded_ids);

    let cfg = PrepConfig::default();
    let kept = length_filter(tokenize("abc abcd aaaaaaaaaaaaaaaaaaaa aaaaaaaaaaaaaaaaaaaaa"), &cfg);
    ensure!(kept == ["abcd", "aaaaaaaaaaaaaaaaaaaa"], "length filter kept {kept:?}");
    let has = |m: &FrequencyMatrix, u: &str| m.column_index(u).is_some();
    ensure!(
        has(&m.words, "server") && !has(&m.words, "client"),
        "frequency 20/19 boundary on words"
    );
    ensure!(
        has(&m.terms, "0x41414141") && !has(&m.terms, "shellcode"),
        "frequency 20/19 boundary on terms"
    );
    ensure!(
        has(&m.words, "code") && has(&m.words, "internationalization") && !has(&m.words, "internationalizations"),
        "length 4/20/21 boundary on words"
    );
    ensure!(
        !has(&m.words, "bug") && !has(&m.terms, "eip"),
        "length-3 tokens survived"
    );
    let low = build_matrices(
        &corpus,
        &lex,
        &PrepConfig {
            min_frequency: 19,
            ..cfg
        },
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        has(&low.words, "client") && has(&low.terms, "shellcode"),
        "frequency-19 unigrams missing at min_frequency 19"
    );
    Ok(format!(
        "{} word cells and {} term cells match, boundaries 3/4/20/21 and 19/20 hold",
        words.len(),
        terms.len()
    ))
}

/// 2. Two disjoint-vocabulary topics recovered by k = 2 LDA.
fn planted_topics() -> Outcome {
    let planted = planted_topic_matrix(200, 2, 40, 60, 0.9, 2016);
    let params = LdaParams {
        seed: 7,
        ..LdaParams::new(2)
    };
    let model = fit_lda(&planted.matrix, &params).map_err(|e| e.to_string())?;
    let dominant = dominant_topics(&model);
    let agree = dominant.iter().zip(&planted.labels).filter(|(a, b)| a == b).count();
    let purity = agree.max(dominant.len() - agree) as f64 / dominant.len() as f64;
    let mut worst: f64 = 0.0;
    for row in model.phi.iter().chain(&model.theta) {
        ensure!(row.iter().all(|&x| x >= 0.0), "negative probability");
        worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    ensure!(worst <= 1e-9, "simplex error {worst:e} > 1e-9");
    ensure!(purity >= 0.95, "purity {purity:.3} < 0.95");
    Ok(format!(
        "purity {purity:.3} (>= 0.95), max simplex error {worst:.1e} (<= 1e-9)"
    ))
}

/// 3. Topic covariates lift accuracy on a temporal hold-out.
fn topic_lift() -> Outcome {
    let synth = generate_corpus(&SynthConfig::default());
    let config = ExperimentConfig {
        ks: vec![0, 20],
        lda: LdaSettings {
            iterations: 400,
            burn_in: 300,
            ..LdaSettings::default()
        },
        forest: ForestParams {
            n_trees: 150,
            ..ForestParams::default()
        },
        seed: 2016,
        ..ExperimentConfig::default()
    };
    let out =
        run_experiment(&synth.corpus, &LexiconResources::builtin(), &synth.cvss, &config).map_err(|e| e.to_string())?;
    let acc = |t: Target, k: usize| {
        out.report
            .rows
            .iter()
            .find(|r| r.target == t && r.k == k)
            .map(|r| r.accuracy)
            .ok_or(format!("missing row {t} k={k}"))
    };
    let mut parts = Vec::new();
    for t in Target::ALL {
        let (a0, a20) = (acc(t, 0)?, acc(t, 20)?);
        ensure!(
            a20 - a0 >= 0.10,
            "{t}: lift {:.3} < 0.10 ({a0:.3} -> {a20:.3})",
            a20 - a0
        );
        parts.push(format!("{t} {a0:.3} -> {a20:.3}"));
    }
    let test_n = out.report.rows[0].test_n;
    Ok(format!(
        "{} on {test_n} test documents (lift >= 0.10)",
        parts.join(", ")
    ))
}

fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// `p` where the monotone `f` crosses `target`, by bisection.
fn solve(f: impl Fn(f64) -> f64, target: f64, increasing: bool) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Clopper-Pearson bounds straight from binomial tail sums.
fn brute_force_ci(x: u64, n: u64, level: f64) -> (f64, f64) {
    let a = (1.0 - level) / 2.0;
    let upper_tail = |p: f64| (x..=n).map(|k| binomial_pmf(n, k, p)).sum::<f64>();
    let lower_tail = |p: f64| (0..=x).map(|k| binomial_pmf(n, k, p)).sum::<f64>();
    let lo = if x == 0 { 0.0 } else { solve(upper_tail, a, true) };
    let hi = if x == n { 1.0 } else { solve(lower_tail, a, false) };
    (lo, hi)
}

/// 4. The k = 0 web interval and a brute-force oracle for small totals.
fn confidence_intervals() -> Outcome {
    let ci = accuracy_ci(998, 1266, 0.95).map_err(|e| e.to_string())?;
    ensure!(
        (ci.ci_low - 0.765).abs() <= 0.003 && (ci.ci_high - 0.810).abs() <= 0.003,
        "[{:.4}, {:.4}] not within 0.003 of [0.765, 0.810]",
        ci.ci_low,
        ci.ci_high
    );
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=30u64 {
        for x in 0..=n {
            let got = accuracy_ci(x, n, 0.95).map_err(|e| e.to_string())?;
            let (lo, hi) = brute_force_ci(x, n, 0.95);
            worst = worst.max((got.ci_low - lo).abs()).max((got.ci_high - hi).abs());
            cases += 1;
        }
    }
    ensure!(worst <= 1e-9, "largest deviation from the oracle {worst:e} > 1e-9");
    Ok(format!(
        "998/1266 -> [{:.4}, {:.4}]; {cases} small cases within {worst:.1e} of the oracle",
        ci.ci_low, ci.ci_high
    ))
}

/// Average ranks by counting, then Pearson correlation of the ranks.
fn oracle_rho(a: &[i64], b: &[i64]) -> Option<f64> {
    let rank = |v: &[i64]| -> Vec<f64> {
        v.iter()
            .map(|&x| {
                let below = v.iter().filter(|&&y| y < x).count() as f64;
                let equal = v.iter().filter(|&&y| y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

fn permutations(n: usize) -> Vec<Vec<i64>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, (n - 1) as i64);
            out.push(q);
        }
    }
    out
}

/// 5. Spearman against rank-then-Pearson on permutations and tied vectors.
fn spearman_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut compare = |a: &[i64], b: &[i64]| -> Result<(), String> {
        match (spearman_rho(a, b).ok(), oracle_rho(a, b)) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
            (None, None) => {}
            (x, y) => return Err(format!("{a:?} vs {b:?}: got {x:?}, oracle {y:?}")),
        }
        Ok(())
    };
    let mut perms = 0;
    for n in 1..=6 {
        let identity: Vec<i64> = (0..n as i64).collect();
        for p in permutations(n) {
            compare(&identity, &p)?;
            compare(&p, &identity)?;
            perms += 1;
        }
    }
    let mut rng = rng_from(5);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=50);
        let spread = rng.gen_range(1..=10);
        let a: Vec<i64> = (0..n).map(|_| rng.gen_range(0..spread)).collect();
        let b: Vec<i64> = (0..n).map(|_| rng.gen_range(0..spread)).collect();
        compare(&a, &b)?;
    }
    ensure!(worst <= 1e-12, "largest deviation {worst:e} > 1e-12");
    Ok(format!(
        "{perms} permutations and 1000 tied vectors, max deviation {worst:.1e} (<= 1e-12)"
    ))
}

fn accuracy(forest: &Forest, data: &Dataset) -> f64 {
    let hits = (0..data.n_rows())
        .filter(|&i| forest.predict_expanded(data.row(i)) == data.labels[i])
        .count();
    hits as f64 / data.n_rows() as f64
}

fn xor_data(seed: u64) -> Dataset {
    let mut rng = rng_from(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (cx, cy) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        for _ in 0..50 {
            rows.push(vec![cx + rng.gen_range(-0.3..0.3), cy + rng.gen_range(-0.3..0.3)]);
            labels.push(cx != cy);
        }
    }
    Dataset::from_rows(&rows, &labels).unwrap()
}

/// 6. Separable data, XOR, constant features and reproducibility.
fn forest_sanity() -> Outcome {
    let err = |e: exploit_topics::forest::ForestError| e.to_string();
    let params = |n_trees, seed| ForestParams {
        n_trees,
        seed,
        ..ForestParams::default()
    };

    let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, ((i * 37) % 11) as f64]).collect();
    let labels: Vec<bool> = (0..100).map(|i| i >= 50).collect();
    let sep = Dataset::from_rows(&rows, &labels).unwrap();
    let all: Vec<usize> = (0..100).collect();
    let f = train_on(&sep, &all, &params(50, 1)).map_err(err)?;
    let sep_acc = accuracy(&f, &sep);
    ensure!(sep_acc == 1.0, "separable training accuracy {sep_acc}");

    let xor = xor_data(11);
    let all: Vec<usize> = (0..xor.n_rows()).collect();
    let f = train_on(&xor, &all, &params(100, 2)).map_err(err)?;
    let xor_train = accuracy(&f, &xor);
    let xor_test = accuracy(&f, &xor_data(12));
    ensure!(xor_train >= 0.95, "XOR training accuracy {xor_train:.3} < 0.95");
    ensure!(xor_test >= 0.95, "XOR held-out accuracy {xor_test:.3} < 0.95");

    for positives in [70, 30] {
        let rows = vec![vec![1.0, 2.0, 3.0]; 100];
        let labels: Vec<bool> = (0..100).map(|i| i < positives).collect();
        let data = Dataset::from_rows(&rows, &labels).unwrap();
        let all: Vec<usize> = (0..100).collect();
        let f = train_on(&data, &all, &params(50, 3)).map_err(err)?;
        let majority = positives > 50;
        ensure!(
            (0..100).all(|i| f.predict_expanded(data.row(i)) == majority),
            "constant features with {positives} positives did not predict the majority"
        );
    }

    let a = train_on(&xor, &all, &params(100, 9)).map_err(err)?;
    let b = train_on(&xor, &all, &params(100, 9)).map_err(err)?;
    let serial = train_on(
        &xor,
        &all,
        &ForestParams {
            parallel: false,
            ..params(100, 9)
        },
    )
    .map_err(err)?;
    ensure!(a == b && a.dump() == b.dump(), "two parallel runs differ");
    ensure!(
        a == serial && a.dump() == serial.dump(),
        "parallel and serial forests differ"
    );
    let probe = xor_data(13);
    let preds = |f: &Forest| {
        (0..probe.n_rows())
            .map(|i| f.predict_expanded(probe.row(i)))
            .collect::<Vec<_>>()
    };
    ensure!(
        preds(&a) == preds(&b) && preds(&a) == preds(&serial),
        "predictions differ"
    );
    Ok(format!(
        "separable 1.000, XOR train {xor_train:.3} / held-out {xor_test:.3} (>= 0.95), constant features -> majority, identical forests"
    ))
}

/// 7. Two `experiment` runs of the binary give byte-identical reports.
fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let synth = generate_corpus(&SynthConfig::default());
    let (corpus, cvss) = synth.write(tmp.path()).map_err(|e| e.to_string())?;
    let run = |out: &Path| -> Result<(), String> {
        let o = Command::new(env!("CARGO_BIN_EXE_exploit-topics"))
            .args(["--seed", "2016", "--out-dir"])
            .arg(out)
            .args([
                "--trees",
                "150",
                "experiment",
                "--iters",
                "400",
                "--burn-in",
                "300",
                "--corpus",
            ])
            .arg(&corpus)
            .arg("--cvss")
            .arg(&cvss)
            .env("RUST_LOG", "error")
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            o.status.success(),
            "experiment failed: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        Ok(())
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a)?;
    run(&b)?;
    for name in ["report.csv", "report.txt", "rho.csv", "rho.txt"] {
        let x = fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(x == y, "{name} differs between runs");
    }
    let rows = EvalReport::read_csv(&fs::read_to_string(a.join("report.csv")).unwrap()).map_err(|e| e.to_string())?;
    ensure!(rows.len() == 14, "{} rows, expected 14", rows.len());
    for r in &rows {
        let want = if r.k == 0 { 38 } else { 40 };
        ensure!(
            r.covariates == want,
            "{} k={} has {} covariates",
            r.target,
            r.k,
            r.covariates
        );
    }
    Ok(
        "report.csv, report.txt, rho.csv, rho.txt identical across runs; 14 rows; covariates 38 (k=0) / 40 (k>0)"
            .into(),
    )
}
