//! Latent Dirichlet allocation by collapsed Gibbs sampling, dominant-topic
//! assignment, and Spearman's rank correlation between assignment vectors.

use std::fmt::Write as _;
use std::io::{self, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::seed::rng_from;
use crate::textprep::FrequencyMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("frequency matrix has no tokens")]
    EmptyMatrix,
    #[error("invalid LDA parameters: {0}")]
    InvalidParams(String),
    #[error("vectors have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooShort(usize),
    #[error("rank correlation undefined: zero variance")]
    ZeroVariance,
    #[error("malformed model dump: {0}")]
    Dump(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaParams {
    pub k: usize,
    /// Document-topic concentration.
    pub alpha: f64,
    /// Topic-unigram concentration.
    pub beta: f64,
    /// Total Gibbs sweeps.
    pub iterations: usize,
    /// Sweeps discarded before estimates are averaged.
    pub burn_in: usize,
    pub seed: u64,
}

impl LdaParams {
    /// Defaults: `alpha = 50 / k`, `beta = 0.1`, 2000 sweeps, 1500 burn-in.
    pub fn new(k: usize) -> Self {
        LdaParams {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.1,
            iterations: 2000,
            burn_in: 1500,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        let bad = |m: String| Err(TopicError::InvalidParams(m));
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.iterations <= self.burn_in {
            return bad(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    /// `k x V`; row `t` is topic `t`'s distribution over the vocabulary.
    pub phi: Vec<Vec<f64>>,
    /// `D x k`; row `d` is document `d`'s distribution over topics.
    pub theta: Vec<Vec<f64>>,
    pub dominant: Vec<usize>,
}

/// Token-level state of the collapsed sampler.
///
/// Each nonzero matrix cell `(d, w, c)` contributes `c` tokens with their
/// own topic assignment.
pub struct GibbsSampler {
    k: usize,
    vocab: usize,
    alpha: f64,
    beta: f64,
    words: Vec<u32>,
    doc_start: Vec<usize>,
    z: Vec<u32>,
    doc_topic: Vec<u32>,
    word_topic: Vec<u32>,
    topic_total: Vec<u64>,
    probs: Vec<f64>,
    rng: ChaCha8Rng,
}

impl GibbsSampler {
    pub fn new(matrix: &FrequencyMatrix, params: &LdaParams) -> Result<Self, TopicError> {
        params.validate()?;
        let total = matrix.total_mass();
        if matrix.n_docs() == 0 || matrix.n_unigrams() == 0 || total == 0 {
            return Err(TopicError::EmptyMatrix);
        }
        if params.k as u64 > total {
            log::warn!("k = {} exceeds the {} tokens in the matrix", params.k, total);
        }
        let k = params.k;
        let vocab = matrix.n_unigrams();
        let mut words = Vec::with_capacity(total as usize);
        let mut doc_start = Vec::with_capacity(matrix.n_docs() + 1);
        for d in 0..matrix.n_docs() {
            doc_start.push(words.len());
            for &(w, c) in matrix.row(d) {
                words.extend(std::iter::repeat_n(w, c as usize));
            }
        }
        doc_start.push(words.len());

        let mut rng = rng_from(params.seed);
        let mut s = GibbsSampler {
            k,
            vocab,
            alpha: params.alpha,
            beta: params.beta,
            z: Vec::with_capacity(words.len()),
            doc_topic: vec![0; matrix.n_docs() * k],
            word_topic: vec![0; vocab * k],
            topic_total: vec![0; k],
            probs: vec![0.0; k],
            words,
            doc_start,
            rng: rng_from(0),
        };
        for d in 0..matrix.n_docs() {
            for i in s.doc_start[d]..s.doc_start[d + 1] {
                let t = rng.gen_range(0..k);
                s.z.push(t as u32);
                s.doc_topic[d * k + t] += 1;
                s.word_topic[s.words[i] as usize * k + t] += 1;
                s.topic_total[t] += 1;
            }
        }
        s.rng = rng;
        Ok(s)
    }

    pub fn n_docs(&self) -> usize {
        self.doc_start.len() - 1
    }

    pub fn n_tokens(&self) -> usize {
        self.words.len()
    }

    /// Sum of all per-topic assignment counts.
    pub fn assignment_mass(&self) -> u64 {
        self.topic_total.iter().sum()
    }

    /// Sums of the document-topic and word-topic count tables.
    pub fn table_masses(&self) -> (u64, u64) {
        (
            self.doc_topic.iter().map(|&c| u64::from(c)).sum(),
            self.word_topic.iter().map(|&c| u64::from(c)).sum(),
        )
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let k = self.k;
        let v_beta = self.vocab as f64 * self.beta;
        for d in 0..self.n_docs() {
            let dt = &mut self.doc_topic[d * k..(d + 1) * k];
            for i in self.doc_start[d]..self.doc_start[d + 1] {
                let w = self.words[i] as usize;
                let old = self.z[i] as usize;
                let wt = &mut self.word_topic[w * k..(w + 1) * k];
                dt[old] -= 1;
                wt[old] -= 1;
                self.topic_total[old] -= 1;

                let mut cum = 0.0;
                for t in 0..k {
                    cum += (f64::from(dt[t]) + self.alpha) * (f64::from(wt[t]) + self.beta)
                        / (self.topic_total[t] as f64 + v_beta);
                    self.probs[t] = cum;
                }
                let u = self.rng.gen::<f64>() * cum;
                let new = self.probs.iter().position(|&p| u < p).unwrap_or(k - 1);

                self.z[i] = new as u32;
                dt[new] += 1;
                wt[new] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    fn accumulate(&self, phi: &mut [Vec<f64>], theta: &mut [Vec<f64>]) {
        let k = self.k;
        let k_alpha = k as f64 * self.alpha;
        let v_beta = self.vocab as f64 * self.beta;
        for (d, row) in theta.iter_mut().enumerate() {
            let len = (self.doc_start[d + 1] - self.doc_start[d]) as f64;
            for (t, x) in row.iter_mut().enumerate() {
                *x += (f64::from(self.doc_topic[d * k + t]) + self.alpha) / (len + k_alpha);
            }
        }
        for (t, row) in phi.iter_mut().enumerate() {
            let denom = self.topic_total[t] as f64 + v_beta;
            for (w, x) in row.iter_mut().enumerate() {
                *x += (f64::from(self.word_topic[w * k + t]) + self.beta) / denom;
            }
        }
    }
}

fn normalize(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    for x in row.iter_mut() {
        *x /= s;
    }
}

/// Fits LDA with collapsed Gibbs sampling; estimates are averaged over the
/// sweeps after burn-in. Deterministic for a given `params.seed`.
pub fn fit_lda(matrix: &FrequencyMatrix, params: &LdaParams) -> Result<TopicModel, TopicError> {
    let mut sampler = GibbsSampler::new(matrix, params)?;
    let k = params.k;
    let mut phi = vec![vec![0.0; matrix.n_unigrams()]; k];
    let mut theta = vec![vec![0.0; k]; matrix.n_docs()];
    for it in 0..params.iterations {
        sampler.sweep();
        if it >= params.burn_in {
            sampler.accumulate(&mut phi, &mut theta);
        }
    }
    phi.iter_mut().for_each(|r| normalize(r));
    theta.iter_mut().for_each(|r| normalize(r));
    let dominant = theta.iter().map(|r| argmax(r)).collect();
    Ok(TopicModel {
        k,
        phi,
        theta,
        dominant,
    })
}

/// Index of the largest entry; the lowest index wins ties.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

pub fn dominant_topics(model: &TopicModel) -> Vec<usize> {
    model.theta.iter().map(|r| argmax(r)).collect()
}

/// Like [`dominant_topics`], but a document whose largest membership is
/// below `min_membership` gets `None`.
pub fn dominant_topics_above(model: &TopicModel, min_membership: f64) -> Vec<Option<usize>> {
    model
        .theta
        .iter()
        .map(|r| {
            let t = argmax(r);
            (r[t] >= min_membership).then_some(t)
        })
        .collect()
}

/// Mid-ranks (1-based); tied values share the mean of their rank span.
pub fn average_ranks<T: PartialOrd + Copy>(values: &[T]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("comparable values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = mid;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, TopicError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(TopicError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of the mid-ranked inputs.
pub fn spearman_rho<T: PartialOrd + Copy>(a: &[T], b: &[T]) -> Result<f64, TopicError> {
    if a.len() != b.len() {
        return Err(TopicError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(TopicError::TooShort(a.len()));
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

impl TopicModel {
    /// Plain-text dump with `phi`, `theta` and `dominant` sections. Floats
    /// use the shortest round-trip representation, so dumps diff cleanly.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        let vocab = self.phi.first().map_or(0, Vec::len);
        writeln!(out, "# lda topic model")?;
        writeln!(out, "k\t{}", self.k)?;
        writeln!(out, "docs\t{}", self.theta.len())?;
        writeln!(out, "vocabulary\t{vocab}")?;
        let line = |row: &[f64]| {
            let mut s = String::new();
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    s.push('\t');
                }
                write!(s, "{x}").unwrap();
            }
            s
        };
        writeln!(out, "phi")?;
        for r in &self.phi {
            writeln!(out, "{}", line(r))?;
        }
        writeln!(out, "theta")?;
        for r in &self.theta {
            writeln!(out, "{}", line(r))?;
        }
        writeln!(out, "dominant")?;
        let dom: Vec<String> = self.dominant.iter().map(usize::to_string).collect();
        writeln!(out, "{}", dom.join("\t"))
    }

    pub fn read_dump(text: &str) -> Result<TopicModel, TopicError> {
        let bad = |m: &str| TopicError::Dump(m.to_string());
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let mut header = |key: &str| -> Result<usize, TopicError> {
            let l = lines.next().ok_or_else(|| bad("truncated header"))?;
            let (k, v) = l.split_once('\t').ok_or_else(|| bad("bad header line"))?;
            if k != key {
                return Err(bad(&format!("expected `{key}`, found `{k}`")));
            }
            v.parse().map_err(|_| bad("bad header value"))
        };
        let k = header("k")?;
        let docs = header("docs")?;
        let vocab = header("vocabulary")?;
        let mut section = |name: &str, rows: usize, cols: usize| -> Result<Vec<Vec<f64>>, TopicError> {
            if lines.next() != Some(name) {
                return Err(bad(&format!("missing `{name}` section")));
            }
            (0..rows)
                .map(|_| {
                    let l = lines.next().ok_or_else(|| bad("truncated matrix"))?;
                    let row: Vec<f64> = l
                        .split('\t')
                        .map(str::parse)
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("bad float"))?;
                    if row.len() != cols {
                        return Err(bad("wrong row width"));
                    }
                    Ok(row)
                })
                .collect()
        };
        let phi = section("phi", k, vocab)?;
        let theta = section("theta", docs, k)?;
        if lines.next() != Some("dominant") {
            return Err(bad("missing `dominant` section"));
        }
        let dominant: Vec<usize> = match lines.next() {
            Some("") | None => Vec::new(),
            Some(l) => l
                .split('\t')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| bad("bad topic index"))?,
        };
        if dominant.len() != docs || dominant.iter().any(|&t| t >= k) {
            return Err(bad("dominant vector does not match theta"));
        }
        Ok(TopicModel {
            k,
            phi,
            theta,
            dominant,
        })
    }
}
