//! Command-line front end. Every subcommand reads its settings from a
//! [`RunConfig`]: defaults, then an optional `key = value` config file, then
//! flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::corpus::{load_corpus, load_cvss, make_response, CorpusFormat, CorpusSet, CvssMap, LoadOptions, Target};
use crate::eval::{
    fit_cell, run_experiment, score_cell, split_rows, EvalReport, ExperimentConfig, LdaSettings, ReportRow, RhoRow,
    SplitMode, SplitSpec, DEFAULT_KS,
};
use crate::features::{build_covariates, top_developers, CovariateTable, TopicAssignment, TOP_DEVELOPERS};
use crate::forest::{Dataset, Forest, ForestParams};
use crate::seed::derive_seed;
use crate::textprep::{build_matrices, FrequencyMatrix, LexiconResources, Matrices, PrepConfig};
use crate::topics::{fit_lda, spearman_rho, TopicModel};

#[derive(Debug, Parser)]
#[command(
    name = "exploit-topics",
    version,
    about = "Topic covariates for exploit classification"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// Flat `key = value` settings file; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// `web`, `php` or `both`.
    #[arg(long, global = true)]
    pub target: Option<String>,
    /// Comma-separated topic counts; 0 means no topic covariates.
    #[arg(long, global = true, value_name = "LIST")]
    pub k: Option<String>,
    #[arg(long, global = true)]
    pub min_freq: Option<u64>,
    #[arg(long, global = true)]
    pub test_year: Option<i32>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub trees: Option<usize>,
    /// Fixed mtry; tuned by cross-validation when absent.
    #[arg(long, global = true)]
    pub mtry: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct CorpusArgs {
    /// Corpus file, `.jsonl` or `.csv`.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    /// Overrides the format implied by the file extension.
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    /// Skip invalid records instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args, Default)]
pub struct LexiconArgs {
    #[arg(long, visible_alias = "dict", value_name = "PATH")]
    pub dictionary: Option<PathBuf>,
    /// Tab-separated `inflected<TAB>lemma` pairs.
    #[arg(long, value_name = "PATH")]
    pub lemmas: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub min_token_len: Option<usize>,
    #[arg(long)]
    pub max_token_len: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct LdaArgs {
    /// Document-topic prior; defaults to 50/k.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build word and term matrices.
    Prep {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        lexicon: LexiconArgs,
    },
    /// Fit topic models on the exported matrices.
    Lda {
        #[command(flatten)]
        lda: LdaArgs,
    },
    /// Assemble covariate tables.
    Features {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Whitespace-separated `CVE score` lines.
        #[arg(long, value_name = "PATH")]
        cvss: Option<PathBuf>,
    },
    /// Tune and fit one forest per target and k.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Score the fitted forests on the test years.
    Eval {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Run every stage in memory.
    Experiment {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[command(flatten)]
        lda: LdaArgs,
        #[arg(long, value_name = "PATH")]
        cvss: Option<PathBuf>,
    },
    /// Render a report as plain-text tables.
    Report {
        /// Defaults to `<out-dir>/report.csv`.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        /// Also print category and platform shares for this corpus.
        #[command(flatten)]
        corpus: CorpusArgs,
    },
}

/// Every setting a run can use.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
    pub lenient: bool,
    pub dictionary: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub cvss: Option<PathBuf>,
    pub prep: PrepConfig,
    pub lda: LdaSettings,
    pub ks: Vec<usize>,
    pub targets: Vec<Target>,
    pub trees: usize,
    pub mtry: Option<usize>,
    pub split: SplitSpec,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            format: None,
            lenient: false,
            dictionary: None,
            lemmas: None,
            stopwords: None,
            cvss: None,
            prep: PrepConfig::default(),
            lda: LdaSettings::default(),
            ks: DEFAULT_KS.to_vec(),
            targets: Target::ALL.to_vec(),
            trees: ForestParams::default().n_trees,
            mtry: None,
            split: SplitSpec::default(),
            out_dir: PathBuf::from("out"),
            seed: 1,
        }
    }
}

pub fn parse_targets(s: &str) -> Result<Vec<Target>> {
    match s.trim() {
        "both" => Ok(Target::ALL.to_vec()),
        t => Ok(vec![t.parse::<Target>().map_err(anyhow::Error::msg)?]),
    }
}

pub fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bad k `{}`", p.trim()))
        })
        .collect::<Result<_>>()?;
    if ks.is_empty() {
        bail!("empty k list");
    }
    Ok(ks)
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("expected a boolean, got `{s}`"),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow::anyhow!("`{key}`: {e}"))
}

impl RunConfig {
    /// Sets one setting by name. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "corpus" => self.corpus = Some(v.into()),
            "format" => self.format = Some(v.parse().map_err(anyhow::Error::msg)?),
            "lenient" => self.lenient = parse_bool(v)?,
            "dictionary" | "dict" => self.dictionary = Some(v.into()),
            "lemmas" => self.lemmas = Some(v.into()),
            "stopwords" => self.stopwords = Some(v.into()),
            "cvss" => self.cvss = Some(v.into()),
            "min_token_len" => self.prep.min_token_len = parse_num(key, v)?,
            "max_token_len" => self.prep.max_token_len = parse_num(key, v)?,
            "min_freq" => self.prep.min_frequency = parse_num(key, v)?,
            "alpha" => self.lda.alpha = Some(parse_num(key, v)?),
            "beta" => self.lda.beta = parse_num(key, v)?,
            "iters" => self.lda.iterations = parse_num(key, v)?,
            "burn_in" => self.lda.burn_in = parse_num(key, v)?,
            "k" => self.ks = parse_k_list(v)?,
            "target" => self.targets = parse_targets(v)?,
            "trees" => self.trees = parse_num(key, v)?,
            "mtry" => self.mtry = Some(parse_num(key, v)?),
            "test_year" => self.split.test_year = parse_num(key, v)?,
            "folds" => self.split.cv_folds = parse_num(key, v)?,
            "out_dir" => self.out_dir = v.into(),
            "seed" => self.seed = parse_num(key, v)?,
            other => bail!("unknown setting `{other}`"),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected `key = value`", origin.display(), i + 1))?;
            self.set(key, value)
                .with_context(|| format!("{}:{}", origin.display(), i + 1))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    fn apply_global(&mut self, g: &GlobalArgs) -> Result<()> {
        if let Some(s) = g.seed {
            self.seed = s;
        }
        if let Some(d) = &g.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(t) = &g.target {
            self.targets = parse_targets(t)?;
        }
        if let Some(k) = &g.k {
            self.ks = parse_k_list(k)?;
        }
        if let Some(m) = g.min_freq {
            self.prep.min_frequency = m;
        }
        if let Some(y) = g.test_year {
            self.split.test_year = y;
        }
        if let Some(f) = g.folds {
            self.split.cv_folds = f;
        }
        if let Some(t) = g.trees {
            self.trees = t;
        }
        if g.mtry.is_some() {
            self.mtry = g.mtry;
        }
        Ok(())
    }

    fn apply_corpus(&mut self, c: &CorpusArgs) {
        if let Some(p) = &c.corpus {
            self.corpus = Some(p.clone());
        }
        if c.format.is_some() {
            self.format = c.format;
        }
        self.lenient |= c.lenient;
    }

    fn apply_lexicon(&mut self, l: &LexiconArgs) {
        for (src, dst) in [
            (&l.dictionary, &mut self.dictionary),
            (&l.lemmas, &mut self.lemmas),
            (&l.stopwords, &mut self.stopwords),
        ] {
            if let Some(p) = src {
                *dst = Some(p.clone());
            }
        }
        if let Some(n) = l.min_token_len {
            self.prep.min_token_len = n;
        }
        if let Some(n) = l.max_token_len {
            self.prep.max_token_len = n;
        }
    }

    fn apply_lda(&mut self, l: &LdaArgs) {
        if l.alpha.is_some() {
            self.lda.alpha = l.alpha;
        }
        if let Some(b) = l.beta {
            self.lda.beta = b;
        }
        if let Some(n) = l.iters {
            self.lda.iterations = n;
        }
        if let Some(n) = l.burn_in {
            self.lda.burn_in = n;
        }
    }

    /// Defaults, then `--config`, then every flag given on the command line.
    pub fn resolve(cli: &Cli) -> Result<RunConfig> {
        let mut cfg = match &cli.global.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_global(&cli.global)?;
        match &cli.command {
            Command::Prep { corpus, lexicon } => {
                cfg.apply_corpus(corpus);
                cfg.apply_lexicon(lexicon);
            }
            Command::Lda { lda } => cfg.apply_lda(lda),
            Command::Features { corpus, cvss } => {
                cfg.apply_corpus(corpus);
                if cvss.is_some() {
                    cfg.cvss = cvss.clone();
                }
            }
            Command::Train { corpus } | Command::Eval { corpus } | Command::Report { corpus, .. } => {
                cfg.apply_corpus(corpus)
            }
            Command::Experiment {
                corpus,
                lexicon,
                lda,
                cvss,
            } => {
                cfg.apply_corpus(corpus);
                cfg.apply_lexicon(lexicon);
                cfg.apply_lda(lda);
                if cvss.is_some() {
                    cfg.cvss = cvss.clone();
                }
            }
        }
        Ok(cfg)
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            mtry: self.mtry,
            seed: self.seed,
            ..ForestParams::default()
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            targets: self.targets.clone(),
            ks: self.ks.clone(),
            prep: self.prep,
            lda: self.lda.clone(),
            forest: self.forest_params(),
            split: SplitSpec {
                mode: SplitMode::Temporal,
                ..self.split.clone()
            },
            seed: self.seed,
        }
    }

    fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .context("no corpus given; pass --corpus or set `corpus` in the config file")
    }

    pub fn load_corpus(&self) -> Result<CorpusSet> {
        let path = self.corpus_path()?;
        let format = self.format.unwrap_or_else(|| CorpusFormat::from_path(path));
        let opts = LoadOptions {
            lenient: self.lenient,
            ..LoadOptions::default()
        };
        let loaded = load_corpus(path, format, &opts)?;
        for r in &loaded.rejected {
            log::warn!("{}:{}: skipped: {}", path.display(), r.line, r.message);
        }
        if loaded.corpus.is_empty() {
            bail!("{} holds no records", path.display());
        }
        Ok(loaded.corpus)
    }

    pub fn load_lexicon(&self) -> Result<LexiconResources> {
        for p in [&self.dictionary, &self.lemmas, &self.stopwords].into_iter().flatten() {
            if !p.is_file() {
                bail!("resource file not found: {}", p.display());
            }
        }
        Ok(LexiconResources::with_overrides(
            self.dictionary.as_deref(),
            self.lemmas.as_deref(),
            self.stopwords.as_deref(),
        )?)
    }

    pub fn load_cvss(&self) -> Result<CvssMap> {
        match &self.cvss {
            None => {
                log::warn!("no CVSS feed given; every mean CVSS will be 0");
                Ok(CvssMap::default())
            }
            Some(p) => {
                let loaded = load_cvss(p)?;
                for w in &loaded.warnings {
                    log::warn!("{w}");
                }
                Ok(loaded.map)
            }
        }
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    Ok(&cfg.out_dir)
}

fn write_matrices(dir: &Path, m: &Matrices) -> Result<()> {
    m.words
        .write_export(dir, "words")
        .with_context(|| format!("cannot export word matrix to {}", dir.display()))?;
    m.terms
        .write_export(dir, "terms")
        .with_context(|| format!("cannot export term matrix to {}", dir.display()))?;
    let mut excluded = m.excluded_ids.join("\n");
    if !excluded.is_empty() {
        excluded.push('\n');
    }
    write_file(&dir.join("excluded.txt"), excluded)?;
    write_file(&dir.join("prep_summary.txt"), m.summary())
}

fn topics_path(dir: &Path, stream: &str, k: usize) -> PathBuf {
    dir.join(format!("topics_{stream}_k{k}.txt"))
}

fn covariates_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("covariates_k{k}.csv"))
}

fn forest_path(dir: &Path, target: Target, k: usize) -> PathBuf {
    dir.join(format!("forest_{target}_k{k}.txt"))
}

fn write_report(dir: &Path, rows: &[ReportRow]) -> Result<String> {
    let report = EvalReport {
        rows: rows.to_vec(),
        rho: Vec::new(),
    };
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(&dir.join("report.csv"), csv)?;
    let text = EvalReport::render_accuracy(rows);
    write_file(&dir.join("report.txt"), &text)?;
    Ok(text)
}

fn write_rho(dir: &Path, rho: &[RhoRow]) -> Result<String> {
    let report = EvalReport {
        rows: Vec::new(),
        rho: rho.to_vec(),
    };
    let mut csv = Vec::new();
    report.write_rho_csv(&mut csv)?;
    write_file(&dir.join("rho.csv"), csv)?;
    let text = EvalReport::render_rho(rho);
    write_file(&dir.join("rho.txt"), &text)?;
    Ok(text)
}

fn topic_ks(ks: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = ks.iter().copied().filter(|&k| k > 0).collect();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn cmd_prep(cfg: &RunConfig) -> Result<()> {
    let lex = cfg.load_lexicon()?;
    let corpus = cfg.load_corpus()?;
    let m = build_matrices(&corpus, &lex, &cfg.prep)?;
    let dir = ensure_out_dir(cfg)?;
    write_matrices(dir, &m)?;
    print!("{}", m.summary());
    Ok(())
}

pub fn cmd_lda(cfg: &RunConfig) -> Result<()> {
    let dir = ensure_out_dir(cfg)?;
    let words = FrequencyMatrix::read_export(dir, "words")?;
    let terms = FrequencyMatrix::read_export(dir, "terms")?;
    let mut rho = Vec::new();
    for k in topic_ks(&cfg.ks) {
        let wp = cfg.lda.params(k, derive_seed(cfg.seed, "lda-words", k as u64));
        let tp = cfg.lda.params(k, derive_seed(cfg.seed, "lda-terms", k as u64));
        let (wm, tm) = rayon::join(|| fit_lda(&words, &wp), || fit_lda(&terms, &tp));
        let (wm, tm) = (wm?, tm?);
        for (stream, model) in [("words", &wm), ("terms", &tm)] {
            let mut buf = Vec::new();
            model.write_dump(&mut buf)?;
            write_file(&topics_path(dir, stream, k), buf)?;
        }
        rho.push(RhoRow {
            k,
            rho: spearman_rho(&wm.dominant, &tm.dominant).ok(),
        });
        log::info!("k = {k}: topics written");
    }
    print!("{}", write_rho(dir, &rho)?);
    Ok(())
}

fn read_topics(dir: &Path, stream: &str, k: usize) -> Result<TopicAssignment> {
    let path = topics_path(dir, stream, k);
    let model = TopicModel::read_dump(&read_file(&path)?).with_context(|| format!("in {}", path.display()))?;
    if model.k != k {
        bail!("{} holds k = {}, expected {k}", path.display(), model.k);
    }
    Ok(TopicAssignment {
        levels: k,
        values: model.dominant,
    })
}

pub fn cmd_features(cfg: &RunConfig) -> Result<()> {
    let corpus = cfg.load_corpus()?;
    let cvss = cfg.load_cvss()?;
    let missing = cvss.missing_references(&corpus);
    if !missing.is_empty() {
        log::warn!("{} referenced CVEs have no CVSS score", missing.len());
        log::debug!("unscored: {}", missing.join(" "));
    }
    let dir = ensure_out_dir(cfg)?;
    let doc_ids = FrequencyMatrix::read_export(dir, "words")?.doc_ids;
    let ranking = top_developers(&corpus, TOP_DEVELOPERS);
    for &k in &cfg.ks {
        let topics = if k > 0 {
            Some((read_topics(dir, "words", k)?, read_topics(dir, "terms", k)?))
        } else {
            None
        };
        let table = build_covariates(
            &corpus,
            &cvss,
            &ranking,
            &doc_ids,
            topics.as_ref().map(|t| &t.0),
            topics.as_ref().map(|t| &t.1),
        )?;
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        write_file(&covariates_path(dir, k), buf)?;
        println!("k = {k}: {} rows, {} covariates", table.n_rows(), table.column_count());
    }
    Ok(())
}

/// A covariate table with labels and the split it is evaluated under.
struct Cell {
    data: Dataset,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn load_cell(cfg: &RunConfig, corpus: &CorpusSet, k: usize, target: Target) -> Result<Cell> {
    let path = covariates_path(&cfg.out_dir, k);
    let table = CovariateTable::read_csv(&read_file(&path)?, (k > 0).then_some(k))
        .with_context(|| format!("in {}", path.display()))?;
    let index = corpus.index_by_id();
    let records = table
        .doc_ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .map(|&i| &corpus.records[i])
                .with_context(|| format!("{}: `{id}` is not in the corpus", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let years: Vec<i32> = records.iter().map(|r| r.published_year).collect();
    let labels: Vec<bool> = records.iter().map(|r| make_response(r, target)).collect();
    let split = cfg.experiment_config().split;
    let (train, test) = split_rows(&years, &split, derive_seed(cfg.seed, "split", 0))?;
    Ok(Cell {
        data: Dataset::new(&table, &labels)?,
        train,
        test,
    })
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let corpus = cfg.load_corpus()?;
    ensure_out_dir(cfg)?;
    for &target in &cfg.targets {
        for &k in &cfg.ks {
            let cell = load_cell(cfg, &corpus, k, target)?;
            let tag = format!("{target}-{k}");
            let base = ForestParams {
                seed: derive_seed(cfg.seed, &format!("forest-{tag}"), 0),
                ..cfg.forest_params()
            };
            let cv_seed = derive_seed(cfg.seed, &format!("cv-{tag}"), 0);
            let (forest, cv) = fit_cell(&cell.data, &cell.train, &base, cfg.split.cv_folds, cv_seed)?;
            write_file(&forest_path(&cfg.out_dir, target, k), forest.dump())?;
            let scores: Vec<String> = cv.scores.iter().map(|s| format!("{s:.4}")).collect();
            println!(
                "{target} k = {k}: mtry {} (cv accuracy {})",
                forest.mtry,
                scores.join(" ")
            );
        }
    }
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<()> {
    let corpus = cfg.load_corpus()?;
    let dir = ensure_out_dir(cfg)?;
    let mut rows = Vec::new();
    for &target in &cfg.targets {
        for &k in &cfg.ks {
            let cell = load_cell(cfg, &corpus, k, target)?;
            let path = forest_path(dir, target, k);
            let forest = Forest::load(&read_file(&path)?).with_context(|| format!("in {}", path.display()))?;
            if forest.schema != cell.data.schema {
                bail!("{} was trained on different covariates", path.display());
            }
            rows.push(score_cell(
                &forest,
                &cell.data,
                &cell.test,
                target,
                k,
                cell.train.len(),
            )?);
        }
    }
    print!("{}", write_report(dir, &rows)?);
    Ok(())
}

pub fn cmd_experiment(cfg: &RunConfig) -> Result<()> {
    let lex = cfg.load_lexicon()?;
    let corpus = cfg.load_corpus()?;
    let cvss = cfg.load_cvss()?;
    let out = run_experiment(&corpus, &lex, &cvss, &cfg.experiment_config())?;
    let dir = ensure_out_dir(cfg)?;
    write_matrices(dir, &out.matrices)?;
    print!("{}", write_report(dir, &out.report.rows)?);
    if !out.report.rho.is_empty() {
        println!();
        print!("{}", write_rho(dir, &out.report.rho)?);
    }
    Ok(())
}

pub fn cmd_report(cfg: &RunConfig, report: Option<&Path>) -> Result<()> {
    let default = cfg.out_dir.join("report.csv");
    let path = report.unwrap_or(&default);
    if cfg.corpus.is_some() {
        print!("{}", cfg.load_corpus()?.summary().render());
        println!();
    }
    let rows = EvalReport::read_csv(&read_file(path)?).with_context(|| format!("in {}", path.display()))?;
    print!("{}", EvalReport::render_accuracy(&rows));
    let rho_path = path.with_file_name("rho.csv");
    if rho_path.is_file() {
        let rho =
            EvalReport::read_rho_csv(&read_file(&rho_path)?).with_context(|| format!("in {}", rho_path.display()))?;
        if !rho.is_empty() {
            println!();
            print!("{}", EvalReport::render_rho(&rho));
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli)?;
    log::debug!("{cfg:?}");
    match &cli.command {
        Command::Prep { .. } => cmd_prep(&cfg),
        Command::Lda { .. } => cmd_lda(&cfg),
        Command::Features { .. } => cmd_features(&cfg),
        Command::Train { .. } => cmd_train(&cfg),
        Command::Eval { .. } => cmd_eval(&cfg),
        Command::Experiment { .. } => cmd_experiment(&cfg),
        Command::Report { report, .. } => cmd_report(&cfg, report.as_deref()),
    }
}
