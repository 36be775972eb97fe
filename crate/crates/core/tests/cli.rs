use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use exploit_topics::corpus::{load_corpus, CorpusFormat, LoadOptions};
use exploit_topics::eval::EvalReport;
use exploit_topics::synth::{generate_corpus, SynthConfig};

const BIN: &str = env!("CARGO_BIN_EXE_exploit-topics");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small synthetic corpus plus a config file with a fast grid.
fn setup(dir: &Path) -> PathBuf {
    let synth = generate_corpus(&SynthConfig {
        n_docs: 300,
        seed: 5,
        ..SynthConfig::default()
    });
    let (corpus, cvss) = synth.write(dir).unwrap();
    let conf = dir.join("run.conf");
    fs::write(
        &conf,
        format!(
            "corpus = {}\ncvss = {}\niters = 40\nburn_in = 20\ntrees = 15\nmin_freq = 5\nseed = 3\n",
            corpus.display(),
            cvss.display()
        ),
    )
    .unwrap();
    conf
}

fn report_rows(dir: &Path) -> Vec<exploit_topics::eval::ReportRow> {
    EvalReport::read_csv(&fs::read_to_string(dir.join("report.csv")).unwrap()).unwrap()
}

#[test]
fn missing_dictionary_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = setup(tmp.path());
    let missing = tmp.path().join("no-such-dictionary.txt");
    let o = run(&[
        "--config",
        conf.to_str().unwrap(),
        "prep",
        "--dictionary",
        missing.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no-such-dictionary.txt"), "{}", stderr(&o));
}

#[test]
fn target_and_k_restrict_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = setup(tmp.path());
    let conf = conf.to_str().unwrap();

    let web = tmp.path().join("web");
    let o = run(&[
        "--config",
        conf,
        "--out-dir",
        web.to_str().unwrap(),
        "--target",
        "web",
        "experiment",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = report_rows(&web);
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.target.as_str() == "web"));
    assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), [0, 5, 10, 20, 30, 40, 50]);

    let two = tmp.path().join("two");
    let o = run(&[
        "--config",
        conf,
        "--out-dir",
        two.to_str().unwrap(),
        "experiment",
        "--k",
        "0,20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = report_rows(&two);
    assert_eq!(rows.len(), 4);
    let cov: Vec<(usize, usize)> = rows.iter().map(|r| (r.k, r.covariates)).collect();
    assert_eq!(cov, [(0, 38), (20, 40), (0, 38), (20, 40)]);
    for r in &rows {
        assert!(r.ci_low <= r.accuracy && r.accuracy <= r.ci_high);
        assert_eq!(r.tp + r.fp + r.tn + r.fn_, r.test_n);
    }
}

#[test]
fn staged_commands_match_experiment_and_are_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = setup(tmp.path());
    let conf = conf.to_str().unwrap();
    let staged = tmp.path().join("staged");
    let whole = tmp.path().join("whole");
    let again = tmp.path().join("again");
    for out in [&staged, &again] {
        for cmd in ["prep", "lda", "features", "train", "eval"] {
            let o = run(&["--config", conf, "--out-dir", out.to_str().unwrap(), "--k", "0,5", cmd]);
            assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        }
    }
    let o = run(&[
        "--config",
        conf,
        "--out-dir",
        whole.to_str().unwrap(),
        "--k",
        "0,5",
        "experiment",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let mut names: Vec<String> = fs::read_dir(&staged)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for name in &names {
        assert_eq!(
            fs::read(staged.join(name)).unwrap(),
            fs::read(again.join(name)).unwrap(),
            "{name} differs between runs"
        );
    }
    for name in [
        "report.csv",
        "report.txt",
        "rho.csv",
        "words.counts.tsv",
        "terms.vocab.txt",
        "excluded.txt",
    ] {
        assert_eq!(
            fs::read(staged.join(name)).unwrap(),
            fs::read(whole.join(name)).unwrap(),
            "{name} differs from the experiment output"
        );
    }
}

#[test]
fn report_renders_rows_and_empty_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one.csv");
    fs::write(
        &one,
        "target,k,covariates,mtry,train_n,test_n,tp,fp,tn,fn,accuracy,ci_low,ci_high\n\
         web,0,38,6,1000,1266,700,150,298,118,0.788310,0.764912,0.810386\n",
    )
    .unwrap();
    let o = run(&["report", "--report", one.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("0.788 [0.765, 0.810]"), "{text}");
    assert_eq!(text.lines().filter(|l| l.trim_start().starts_with("0 ")).count(), 1);

    let empty = tmp.path().join("empty.csv");
    fs::write(
        &empty,
        "target,k,covariates,mtry,train_n,test_n,tp,fp,tn,fn,accuracy,ci_low,ci_high\n",
    )
    .unwrap();
    let o = run(&["report", "--report", empty.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no rows"));

    let o = run(&["report", "--report", tmp.path().join("absent.csv").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("absent.csv"));

    let corrupt = tmp.path().join("corrupt.csv");
    fs::write(&corrupt, "target,k\nweb,zero\n").unwrap();
    assert!(!run(&["report", "--report", corrupt.to_str().unwrap()]).status.success());
}

#[test]
fn report_with_corpus_prints_shares() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = setup(tmp.path());
    let out = tmp.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(
        out.join("report.csv"),
        "target,k,covariates,mtry,train_n,test_n,tp,fp,tn,fn,accuracy,ci_low,ci_high\n",
    )
    .unwrap();
    let o = run(&[
        "--config",
        conf.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "report",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("web") && text.contains("58.0%"), "{text}");
    assert!(text.contains("php") && text.contains("40.0%"), "{text}");
}

#[test]
fn bad_settings_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = setup(tmp.path());
    let conf = conf.to_str().unwrap();
    for args in [
        vec!["--config", conf, "--target", "asp", "prep"],
        vec!["--config", conf, "--k", "0,x", "prep"],
        vec!["--config", "/nonexistent/run.conf", "prep"],
        vec!["prep"],
    ] {
        let o = run(&args);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(!stderr(&o).is_empty());
    }
    let bad = tmp.path().join("bad.conf");
    fs::write(&bad, "trees = many\n").unwrap();
    let o = run(&["--config", bad.to_str().unwrap(), "prep"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bad.conf:1"), "{}", stderr(&o));
}

#[test]
fn reloading_a_corpus_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let synth = generate_corpus(&SynthConfig {
        n_docs: 80,
        ..SynthConfig::default()
    });
    let (path, _) = synth.write(tmp.path()).unwrap();
    let a = load_corpus(&path, CorpusFormat::JsonLines, &LoadOptions::default()).unwrap();
    let b = load_corpus(&path, CorpusFormat::JsonLines, &LoadOptions::default()).unwrap();
    assert_eq!(a.corpus, b.corpus);
    assert_eq!(a.corpus, synth.corpus);
    let mut bytes = Vec::new();
    a.corpus.write_jsonl(&mut bytes).unwrap();
    assert_eq!(bytes, fs::read(&path).unwrap());
}
