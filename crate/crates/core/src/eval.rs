//! Experimental protocol: temporal (or random) test split, k-fold tuning of
//! `mtry`, exact binomial confidence intervals, and the two report tables
//! (accuracy per `(target, k)` and word/term topic rank correlation per `k`).

use std::fmt::Write as _;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::corpus::{make_response, CorpusSet, CvssMap, ExploitRecord, Target};
use crate::features::{
    build_covariates, top_developers, CovariateTable, FeatureError, TopicAssignment, TOP_DEVELOPERS,
};
use crate::forest::{default_mtry, train_on, Dataset, Forest, ForestError, ForestParams};
use crate::seed::{derive_seed, rng_from};
use crate::textprep::{build_matrices, LexiconResources, Matrices, PrepConfig, PrepError};
use crate::topics::{fit_lda, spearman_rho, LdaParams, TopicError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test split has no training rows")]
    EmptyTrain,
    #[error("test split has no test rows (test year {0})")]
    EmptyTest(i32),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("fold {0} is empty ({1} rows for {2} folds)")]
    EmptyFold(usize, usize, usize),
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("need 0 <= correct ({correct}) <= total ({total}) and total >= 1")]
    InvalidCounts { correct: u64, total: u64 },
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitMode {
    /// Test set = records published in `test_year`.
    Temporal,
    /// Test set = a seeded random `fraction` of the records.
    Random { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub test_year: i32,
    pub cv_folds: usize,
    pub cv_seed: u64,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_year: 2016,
            cv_folds: 5,
            cv_seed: 0,
            mode: SplitMode::Temporal,
        }
    }
}

/// Row indices `(train, test)`: test rows are those published in `test_year`.
pub fn split_by_year(years: &[i32], test_year: i32) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..years.len()).partition(|&i| years[i] == test_year);
    if test.is_empty() {
        return Err(EvalError::EmptyTest(test_year));
    }
    if train.is_empty() {
        return Err(EvalError::EmptyTrain);
    }
    Ok((train, test))
}

/// Row indices `(train, test)` with `round(fraction * n)` test rows drawn at random.
pub fn random_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::InvalidSplit(format!(
            "test fraction {fraction} outside (0, 1)"
        )));
    }
    let n_test = (fraction * n as f64).round() as usize;
    if n_test == 0 {
        return Err(EvalError::EmptyTest(0));
    }
    if n_test >= n {
        return Err(EvalError::EmptyTrain);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Record ids `(train, test)` under a temporal split of the whole corpus.
pub fn temporal_split(corpus: &CorpusSet, spec: &SplitSpec) -> Result<(Vec<String>, Vec<String>), EvalError> {
    let years: Vec<i32> = corpus.records.iter().map(|r| r.published_year).collect();
    let (train, test) = split_by_year(&years, spec.test_year)?;
    let ids = |v: Vec<usize>| v.into_iter().map(|i| corpus.records[i].id.clone()).collect();
    Ok((ids(train), ids(test)))
}

/// Row indices `(train, test)` for the given publication years.
pub fn split_rows(years: &[i32], spec: &SplitSpec, seed: u64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    match spec.mode {
        SplitMode::Temporal => split_by_year(years, spec.test_year),
        SplitMode::Random { fraction } => random_split(years.len(), fraction, seed),
    }
}

/// Seeded shuffle of `rows` dealt round-robin into `folds` groups.
pub fn make_folds(rows: &[usize], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if folds < 2 {
        return Err(EvalError::InvalidSplit(format!("need at least 2 folds, got {folds}")));
    }
    if rows.len() < folds {
        return Err(EvalError::EmptyFold(rows.len(), rows.len(), folds));
    }
    let mut order = rows.to_vec();
    order.shuffle(&mut rng_from(seed));
    let mut out = vec![Vec::new(); folds];
    for (i, r) in order.into_iter().enumerate() {
        out[i % folds].push(r);
    }
    Ok(out)
}

/// `mtry` candidates `floor(sqrt(p))/2`, `floor(sqrt(p))` and `2 floor(sqrt(p))`,
/// clamped to `1..=p`, deduplicated, ascending.
pub fn mtry_grid(p: usize, base: &ForestParams) -> Vec<ForestParams> {
    let s = default_mtry(p);
    let mut m: Vec<usize> = [s / 2, s, 2 * s].iter().map(|&v| v.clamp(1, p.max(1))).collect();
    m.dedup();
    m.into_iter()
        .map(|mtry| ForestParams {
            mtry: Some(mtry),
            ..base.clone()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best: ForestParams,
    /// Mean held-out accuracy per grid entry, in grid order.
    pub scores: Vec<f64>,
}

fn fold_accuracy(data: &Dataset, train: &[usize], held: &[usize], params: &ForestParams) -> Result<f64, EvalError> {
    let positives = train.iter().filter(|&&i| data.labels[i]).count();
    let predict: Box<dyn Fn(usize) -> bool + '_> = if positives == 0 || positives == train.len() {
        // single-class training fold: predict that class
        let only = positives > 0;
        Box::new(move |_| only)
    } else {
        let forest = train_on(data, train, params)?;
        Box::new(move |i| forest.predict_expanded(data.row(i)))
    };
    let correct = held.iter().filter(|&&i| predict(i) == data.labels[i]).count();
    Ok(correct as f64 / held.len() as f64)
}

/// k-fold cross-validation over `grid`, restricted to `rows` of `data`.
/// The highest mean accuracy wins; ties go to the smaller `mtry`.
pub fn cross_validate(
    data: &Dataset,
    rows: &[usize],
    folds: usize,
    grid: &[ForestParams],
    seed: u64,
) -> Result<CvOutcome, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let groups = make_folds(rows, folds, seed)?;
    let mut scores = Vec::with_capacity(grid.len());
    for params in grid {
        let mut total = 0.0;
        for (f, held) in groups.iter().enumerate() {
            let train: Vec<usize> = groups
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let fold_params = ForestParams {
                seed: derive_seed(params.seed, "cv-fold", f as u64),
                ..params.clone()
            };
            total += fold_accuracy(data, &train, held, &fold_params)?;
        }
        scores.push(total / groups.len() as f64);
    }
    let mtry_of = |p: &ForestParams| p.mtry.unwrap_or_else(|| default_mtry(data.p));
    let mut best = 0;
    for i in 1..grid.len() {
        let better = scores[i] > scores[best] + 1e-12;
        let tie = (scores[i] - scores[best]).abs() <= 1e-12;
        if better || (tie && mtry_of(&grid[i]) < mtry_of(&grid[best])) {
            best = i;
        }
    }
    Ok(CvOutcome {
        best: grid[best].clone(),
        scores,
    })
}

/// Cross-validation over a whole covariate table.
pub fn cross_validate_table(
    table: &CovariateTable,
    labels: &[bool],
    folds: usize,
    grid: &[ForestParams],
    seed: u64,
) -> Result<CvOutcome, EvalError> {
    let data = Dataset::new(table, labels)?;
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    cross_validate(&data, &rows, folds, grid, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyCi {
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Inverse of the regularized incomplete beta function in `x`, by bisection.
fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Accuracy `correct / total` with the exact (Clopper-Pearson) interval.
pub fn accuracy_ci(correct: u64, total: u64, level: f64) -> Result<AccuracyCi, EvalError> {
    if total == 0 || correct > total {
        return Err(EvalError::InvalidCounts { correct, total });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(EvalError::InvalidLevel(level));
    }
    let alpha = 1.0 - level;
    let (x, n) = (correct as f64, total as f64);
    let ci_low = if correct == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, x, n - x + 1.0)
    };
    let ci_high = if correct == total {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, x + 1.0, n - x)
    };
    Ok(AccuracyCi {
        accuracy: x / n,
        ci_low,
        ci_high,
    })
}

/// LDA settings shared by every `k`; `alpha: None` means `50 / k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaSettings {
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
}

impl Default for LdaSettings {
    fn default() -> Self {
        let d = LdaParams::new(1);
        LdaSettings {
            alpha: None,
            beta: d.beta,
            iterations: d.iterations,
            burn_in: d.burn_in,
        }
    }
}

impl LdaSettings {
    pub fn params(&self, k: usize, seed: u64) -> LdaParams {
        let mut p = LdaParams::new(k);
        if let Some(a) = self.alpha {
            p.alpha = a;
        }
        p.beta = self.beta;
        p.iterations = self.iterations;
        p.burn_in = self.burn_in;
        p.seed = seed;
        p
    }
}

pub const DEFAULT_KS: [usize; 7] = [0, 5, 10, 20, 30, 40, 50];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub targets: Vec<Target>,
    /// Topic counts; `0` means no topic covariates.
    pub ks: Vec<usize>,
    pub prep: PrepConfig,
    pub lda: LdaSettings,
    /// Forest settings. A fixed `mtry` replaces the tuning grid.
    pub forest: ForestParams,
    pub split: SplitSpec,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            targets: Target::ALL.to_vec(),
            ks: DEFAULT_KS.to_vec(),
            prep: PrepConfig::default(),
            lda: LdaSettings::default(),
            forest: ForestParams::default(),
            split: SplitSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub target: Target,
    pub k: usize,
    pub covariates: usize,
    pub mtry: usize,
    pub train_n: usize,
    pub test_n: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoRow {
    pub k: usize,
    /// `None` when a ranked vector has zero variance.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub rho: Vec<RhoRow>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: EvalReport,
    pub matrices: Matrices,
}

/// Confusion counts with `true` as the positive class.
pub fn confusion(predicted: &[bool], actual: &[bool]) -> (usize, usize, usize, usize) {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    (tp, fp, tn, fn_)
}

/// Tunes `mtry` on `train` rows, fits the final forest on all of them.
pub fn fit_cell(
    data: &Dataset,
    train: &[usize],
    base: &ForestParams,
    folds: usize,
    cv_seed: u64,
) -> Result<(Forest, CvOutcome), EvalError> {
    let grid = match base.mtry {
        Some(_) => vec![base.clone()],
        None => mtry_grid(data.p, base),
    };
    let cv = cross_validate(data, train, folds, &grid, cv_seed)?;
    let forest = train_on(data, train, &cv.best)?;
    Ok((forest, cv))
}

/// Scores `forest` on `test` rows.
pub fn score_cell(
    forest: &Forest,
    data: &Dataset,
    test: &[usize],
    target: Target,
    k: usize,
    train_n: usize,
) -> Result<ReportRow, EvalError> {
    let predicted: Vec<bool> = test.iter().map(|&i| forest.predict_expanded(data.row(i))).collect();
    let actual: Vec<bool> = test.iter().map(|&i| data.labels[i]).collect();
    let (tp, fp, tn, fn_) = confusion(&predicted, &actual);
    let ci = accuracy_ci((tp + tn) as u64, test.len() as u64, 0.95)?;
    Ok(ReportRow {
        target,
        k,
        covariates: data.schema.column_count(),
        mtry: forest.mtry,
        train_n,
        test_n: test.len(),
        tp,
        fp,
        tn,
        fn_,
        accuracy: ci.accuracy,
        ci_low: ci.ci_low,
        ci_high: ci.ci_high,
    })
}

struct TopicFit {
    k: usize,
    words: TopicAssignment,
    terms: TopicAssignment,
    rho: Option<f64>,
}

/// Runs the full `targets x ks` experiment.
pub fn run_experiment(
    corpus: &CorpusSet,
    lex: &LexiconResources,
    cvss: &CvssMap,
    config: &ExperimentConfig,
) -> Result<ExperimentOutput, EvalError> {
    let matrices = build_matrices(corpus, lex, &config.prep)?;
    let ranking = top_developers(corpus, TOP_DEVELOPERS);
    let missing = cvss.missing_references(corpus);
    if !missing.is_empty() {
        log::warn!("{} referenced CVEs have no CVSS score", missing.len());
        log::debug!("unscored: {}", missing.join(" "));
    }
    let doc_ids = &matrices.words.doc_ids;
    let index = corpus.index_by_id();
    let survivors: Vec<&ExploitRecord> = doc_ids.iter().map(|id| &corpus.records[index[id.as_str()]]).collect();
    let years: Vec<i32> = survivors.iter().map(|r| r.published_year).collect();
    let (train, test) = split_rows(&years, &config.split, derive_seed(config.seed, "split", 0))?;
    log::info!(
        "{} documents ({} excluded), {} train / {} test",
        doc_ids.len(),
        matrices.excluded_ids.len(),
        train.len(),
        test.len()
    );

    let mut topic_ks: Vec<usize> = config.ks.iter().copied().filter(|&k| k > 0).collect();
    topic_ks.sort_unstable();
    topic_ks.dedup();
    let fits: Vec<TopicFit> = topic_ks
        .par_iter()
        .map(|&k| -> Result<TopicFit, EvalError> {
            let wp = config.lda.params(k, derive_seed(config.seed, "lda-words", k as u64));
            let tp = config.lda.params(k, derive_seed(config.seed, "lda-terms", k as u64));
            let (wm, tm) = rayon::join(|| fit_lda(&matrices.words, &wp), || fit_lda(&matrices.terms, &tp));
            let (wm, tm) = (wm?, tm?);
            let rho = spearman_rho(&wm.dominant, &tm.dominant).ok();
            log::info!("k = {k}: topics fitted, rho = {rho:?}");
            Ok(TopicFit {
                k,
                words: TopicAssignment {
                    levels: k,
                    values: wm.dominant,
                },
                terms: TopicAssignment {
                    levels: k,
                    values: tm.dominant,
                },
                rho,
            })
        })
        .collect::<Result<_, _>>()?;

    let tables: Vec<(usize, CovariateTable)> = config
        .ks
        .iter()
        .map(|&k| {
            let fit = fits.iter().find(|f| f.k == k);
            let t = build_covariates(
                corpus,
                cvss,
                &ranking,
                doc_ids,
                fit.map(|f| &f.words),
                fit.map(|f| &f.terms),
            )?;
            Ok((k, t))
        })
        .collect::<Result<_, EvalError>>()?;

    let cells: Vec<(Target, usize)> = config
        .targets
        .iter()
        .flat_map(|&t| tables.iter().enumerate().map(move |(i, _)| (t, i)))
        .collect();
    let rows: Vec<ReportRow> = cells
        .par_iter()
        .map(|&(target, ti)| -> Result<ReportRow, EvalError> {
            let (k, table) = &tables[ti];
            let labels: Vec<bool> = survivors.iter().map(|r| make_response(r, target)).collect();
            let data = Dataset::new(table, &labels)?;
            let tag = format!("{target}-{k}");
            let base = ForestParams {
                seed: derive_seed(config.seed, &format!("forest-{tag}"), 0),
                ..config.forest.clone()
            };
            let cv_seed = derive_seed(config.seed, &format!("cv-{tag}"), 0);
            let (forest, _) = fit_cell(&data, &train, &base, config.split.cv_folds, cv_seed)?;
            let row = score_cell(&forest, &data, &test, target, *k, train.len())?;
            log::info!("{target} k = {k}: accuracy {:.3}", row.accuracy);
            Ok(row)
        })
        .collect::<Result<_, _>>()?;

    let rho = topic_ks
        .iter()
        .map(|&k| RhoRow {
            k,
            rho: fits.iter().find(|f| f.k == k).and_then(|f| f.rho),
        })
        .collect();
    Ok(ExperimentOutput {
        report: EvalReport { rows, rho },
        matrices,
    })
}

const REPORT_HEADER: &str = "target,k,covariates,mtry,train_n,test_n,tp,fp,tn,fn,accuracy,ci_low,ci_high";

impl EvalReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{REPORT_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6}",
                r.target,
                r.k,
                r.covariates,
                r.mtry,
                r.train_n,
                r.test_n,
                r.tp,
                r.fp,
                r.tn,
                r.fn_,
                r.accuracy,
                r.ci_low,
                r.ci_high
            )?;
        }
        Ok(())
    }

    pub fn write_rho_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,spearman_rho")?;
        for r in &self.rho {
            match r.rho {
                Some(v) => writeln!(out, "{},{:.6}", r.k, v)?,
                None => writeln!(out, "{},NA", r.k)?,
            }
        }
        Ok(())
    }

    /// Parses the accuracy CSV written by [`EvalReport::write_csv`].
    pub fn read_csv(text: &str) -> Result<Vec<ReportRow>, EvalError> {
        let bad = |m: String| EvalError::Report(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == REPORT_HEADER => {}
            Some(h) => return Err(bad(format!("unexpected header `{h}`"))),
            None => return Err(bad("missing header".into())),
        }
        lines
            .enumerate()
            .map(|(i, l)| {
                let f: Vec<&str> = l.split(',').collect();
                if f.len() != 13 {
                    return Err(bad(format!("row {}: expected 13 fields", i + 1)));
                }
                let int = |j: usize| {
                    f[j].trim()
                        .parse::<usize>()
                        .map_err(|_| bad(format!("row {}: bad integer `{}`", i + 1, f[j])))
                };
                let real = |j: usize| {
                    f[j].trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("row {}: bad number `{}`", i + 1, f[j])))
                };
                Ok(ReportRow {
                    target: f[0].parse().map_err(bad)?,
                    k: int(1)?,
                    covariates: int(2)?,
                    mtry: int(3)?,
                    train_n: int(4)?,
                    test_n: int(5)?,
                    tp: int(6)?,
                    fp: int(7)?,
                    tn: int(8)?,
                    fn_: int(9)?,
                    accuracy: real(10)?,
                    ci_low: real(11)?,
                    ci_high: real(12)?,
                })
            })
            .collect()
    }

    pub fn read_rho_csv(text: &str) -> Result<Vec<RhoRow>, EvalError> {
        let bad = |m: String| EvalError::Report(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("k,spearman_rho") {
            return Err(bad("expected header `k,spearman_rho`".into()));
        }
        lines
            .map(|l| {
                let (k, v) = l.split_once(',').ok_or_else(|| bad(format!("bad row `{l}`")))?;
                let k = k.trim().parse().map_err(|_| bad(format!("bad k `{k}`")))?;
                let rho = match v.trim() {
                    "NA" => None,
                    s => Some(s.parse().map_err(|_| bad(format!("bad rho `{s}`")))?),
                };
                Ok(RhoRow { k, rho })
            })
            .collect()
    }

    /// Accuracy table: one line per `k`, one column per target.
    pub fn render_accuracy(rows: &[ReportRow]) -> String {
        if rows.is_empty() {
            return "no rows\n".to_string();
        }
        let mut targets: Vec<Target> = rows.iter().map(|r| r.target).collect();
        targets.sort();
        targets.dedup();
        let mut ks: Vec<usize> = Vec::new();
        for r in rows {
            if !ks.contains(&r.k) {
                ks.push(r.k);
            }
        }
        let mut s = format!("{:>4}  {:>10}", "k", "Covariates");
        for t in &targets {
            let _ = write!(s, "  {:<24}", format!("{} [95% CI]", t.as_str().to_uppercase()));
        }
        s.push('\n');
        for k in ks {
            let covs = rows.iter().find(|r| r.k == k).map_or(0, |r| r.covariates);
            let _ = write!(s, "{k:>4}  {covs:>10}");
            for t in &targets {
                match rows.iter().find(|r| r.k == k && r.target == *t) {
                    Some(r) => {
                        let _ = write!(
                            s,
                            "  {:<24}",
                            format!("{:.3} [{:.3}, {:.3}]", r.accuracy, r.ci_low, r.ci_high)
                        );
                    }
                    None => {
                        let _ = write!(s, "  {:<24}", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    /// Rank-correlation table: one column per `k`.
    pub fn render_rho(rho: &[RhoRow]) -> String {
        if rho.is_empty() {
            return "no rows\n".to_string();
        }
        let mut head = format!("{:<14}", "k");
        let mut vals = format!("{:<14}", "Spearman rho");
        for r in rho {
            let _ = write!(head, "{:>8}", r.k);
            match r.rho {
                Some(v) => {
                    let _ = write!(vals, "{v:>8.2}");
                }
                None => {
                    let _ = write!(vals, "{:>8}", "NA");
                }
            }
        }
        format!("{head}\n{vals}\n")
    }
}
