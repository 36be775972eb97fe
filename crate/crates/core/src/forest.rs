//! Random-forest classifier for binary responses.
//!
//! CART trees grown on bootstrap samples with Gini splits over `mtry`
//! randomly drawn features per node. Categorical covariates are one-hot
//! expanded before split search, so every split is `x[feature] <= threshold`.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::{CovariateRow, CovariateTable, Schema};
use crate::seed::{derive_seed, rng_from};

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("training table is empty")]
    EmptyTable,
    #[error("labels contain a single class")]
    SingleClass,
    #[error("{labels} labels for {rows} rows")]
    LabelMismatch { labels: usize, rows: usize },
    #[error("invalid forest parameters: {0}")]
    InvalidParams(String),
    #[error("row does not match the training schema")]
    SchemaMismatch,
    #[error("both class counts are zero")]
    EmptyNode,
    #[error("malformed forest dump: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    /// Nodes with fewer samples are not split.
    pub min_node: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    /// Grow trees on the rayon pool. Results do not depend on this flag.
    pub parallel: bool,
    pub compute_oob: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            mtry: None,
            min_node: 2,
            max_depth: None,
            seed: 0,
            parallel: true,
            compute_oob: false,
        }
    }
}

pub fn default_mtry(p: usize) -> usize {
    ((p as f64).sqrt().floor() as usize).max(1)
}

impl ForestParams {
    pub fn resolved_mtry(&self, p: usize) -> Result<usize, ForestError> {
        let m = self.mtry.unwrap_or_else(|| default_mtry(p));
        if m < 1 || m > p {
            return Err(ForestError::InvalidParams(format!("mtry {m} outside 1..={p}")));
        }
        Ok(m)
    }
}

/// `1 - sum(p_i^2)` over the two classes.
pub fn gini_impurity(counts: (u64, u64)) -> Result<f64, ForestError> {
    let total = counts.0 + counts.1;
    if total == 0 {
        return Err(ForestError::EmptyNode);
    }
    Ok(gini(counts.0 as f64, counts.1 as f64))
}

#[inline]
fn gini(neg: f64, pos: f64) -> f64 {
    let n = neg + pos;
    let (a, b) = (neg / n, pos / n);
    1.0 - a * a - b * b
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        neg: u32,
        pos: u32,
    },
}

/// Nodes in an arena; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, x: &[f64]) -> (u32, u32) {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                Node::Leaf { neg, pos } => return (neg, pos),
            }
        }
    }

    /// Leaf majority; an even leaf votes positive.
    pub fn vote(&self, x: &[f64]) -> bool {
        let (neg, pos) = self.leaf_for(x);
        pos >= neg
    }
}

/// Expanded design matrix with labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: Schema,
    pub x: Vec<f64>,
    pub p: usize,
    pub labels: Vec<bool>,
}

impl Dataset {
    pub fn new(table: &CovariateTable, labels: &[bool]) -> Result<Self, ForestError> {
        if labels.len() != table.n_rows() {
            return Err(ForestError::LabelMismatch {
                labels: labels.len(),
                rows: table.n_rows(),
            });
        }
        let schema = table.schema();
        let p = schema.expanded_width();
        Ok(Dataset {
            x: table.design(),
            schema,
            p,
            labels: labels.to_vec(),
        })
    }

    /// Plain numeric rows, columns named `x1`, `x2`, ...
    pub fn from_rows(rows: &[Vec<f64>], labels: &[bool]) -> Result<Self, ForestError> {
        if rows.len() != labels.len() {
            return Err(ForestError::LabelMismatch {
                labels: labels.len(),
                rows: rows.len(),
            });
        }
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(ForestError::InvalidParams("rows differ in length".into()));
        }
        Ok(Dataset {
            schema: Schema {
                numeric: (1..=p).map(|j| format!("x{j}")).collect(),
                ..Schema::default()
            },
            x: rows.concat(),
            p,
            labels: labels.to_vec(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub schema: Schema,
    pub mtry: usize,
    pub trees: Vec<Tree>,
    pub oob_error: Option<f64>,
}

struct Grower<'a> {
    data: &'a Dataset,
    mtry: usize,
    min_node: usize,
    max_depth: Option<usize>,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    scratch: Vec<(f64, bool)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl<'a> Grower<'a> {
    fn leaf(&mut self, neg: u32, pos: u32) -> usize {
        self.nodes.push(Node::Leaf { neg, pos });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, samples: &[usize], neg: u32, pos: u32) -> Option<BestSplit> {
        let n = samples.len() as f64;
        let parent = gini(f64::from(neg), f64::from(pos));
        let mut best: Option<BestSplit> = None;
        let features = sample(&mut self.rng, self.data.p, self.mtry);
        for f in features.iter() {
            self.scratch.clear();
            self.scratch.extend(
                samples
                    .iter()
                    .map(|&i| (self.data.x[i * self.data.p + f], self.data.labels[i])),
            );
            self.scratch
                .sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite covariates"));
            let (mut ln, mut lp) = (0.0, 0.0);
            for w in 0..self.scratch.len() - 1 {
                if self.scratch[w].1 {
                    lp += 1.0;
                } else {
                    ln += 1.0;
                }
                let (lo, hi) = (self.scratch[w].0, self.scratch[w + 1].0);
                if lo >= hi {
                    continue;
                }
                let (rn, rp) = (f64::from(neg) - ln, f64::from(pos) - lp);
                let nl = ln + lp;
                let nr = rn + rp;
                let child = (nl * gini(ln, lp) + nr * gini(rn, rp)) / n;
                let decrease = parent - child;
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best.filter(|b| b.decrease > 1e-12)
    }

    fn grow(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let pos = samples.iter().filter(|&&i| self.data.labels[i]).count() as u32;
        let neg = samples.len() as u32 - pos;
        let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
        if pos == 0 || neg == 0 || samples.len() < self.min_node || depth_capped {
            return self.leaf(neg, pos);
        }
        let Some(split) = self.best_split(samples, neg, pos) else {
            return self.leaf(neg, pos);
        };
        let p = self.data.p;
        let mut cut = 0;
        for i in 0..samples.len() {
            if self.data.x[samples[i] * p + split.feature] <= split.threshold {
                samples.swap(i, cut);
                cut += 1;
            }
        }
        debug_assert!(cut > 0 && cut < samples.len());
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { neg, pos });
        let (l, r) = samples.split_at_mut(cut);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        me
    }
}

/// Grows one tree on `rows` resampled with replacement. Returns the tree
/// and the in-bag multiplicity of each entry of `rows`.
fn grow_tree(data: &Dataset, rows: &[usize], params: &ForestParams, mtry: usize, seed: u64) -> (Tree, Vec<u32>) {
    let mut rng = rng_from(seed);
    let mut in_bag = vec![0u32; rows.len()];
    let mut bootstrap: Vec<usize> = (0..rows.len())
        .map(|_| {
            let j = rng.gen_range(0..rows.len());
            in_bag[j] += 1;
            rows[j]
        })
        .collect();
    let mut g = Grower {
        data,
        mtry,
        min_node: params.min_node,
        max_depth: params.max_depth,
        rng,
        nodes: Vec::new(),
        scratch: Vec::with_capacity(rows.len()),
    };
    g.grow(&mut bootstrap, 0);
    (Tree { nodes: g.nodes }, in_bag)
}

/// Trains on the subset `rows` of `data`.
pub fn train_on(data: &Dataset, rows: &[usize], params: &ForestParams) -> Result<Forest, ForestError> {
    if params.n_trees < 1 {
        return Err(ForestError::InvalidParams("n_trees must be at least 1".into()));
    }
    if params.min_node < 1 {
        return Err(ForestError::InvalidParams("min_node must be at least 1".into()));
    }
    if rows.is_empty() || data.p == 0 {
        return Err(ForestError::EmptyTable);
    }
    let positives = rows.iter().filter(|&&i| data.labels[i]).count();
    if positives == 0 || positives == rows.len() {
        return Err(ForestError::SingleClass);
    }
    let mtry = params.resolved_mtry(data.p)?;
    let grow = |t: usize| grow_tree(data, rows, params, mtry, derive_seed(params.seed, "tree", t as u64));
    let grown: Vec<(Tree, Vec<u32>)> = if params.parallel {
        (0..params.n_trees).into_par_iter().map(grow).collect()
    } else {
        (0..params.n_trees).map(grow).collect()
    };

    let oob_error = if params.compute_oob {
        let (mut wrong, mut scored) = (0usize, 0usize);
        for (j, &row) in rows.iter().enumerate() {
            let x = data.row(row);
            let (mut votes, mut pos) = (0usize, 0usize);
            for (tree, bag) in &grown {
                if bag[j] == 0 {
                    votes += 1;
                    pos += usize::from(tree.vote(x));
                }
            }
            if votes > 0 {
                scored += 1;
                if (2 * pos >= votes) != data.labels[row] {
                    wrong += 1;
                }
            }
        }
        (scored > 0).then(|| wrong as f64 / scored as f64)
    } else {
        None
    };

    Ok(Forest {
        schema: data.schema.clone(),
        mtry,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        oob_error,
    })
}

pub fn train_forest(table: &CovariateTable, labels: &[bool], params: &ForestParams) -> Result<Forest, ForestError> {
    let data = Dataset::new(table, labels)?;
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    train_on(&data, &rows, params)
}

impl Forest {
    /// Positive votes out of `trees.len()`.
    pub fn positive_votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.vote(x)).count()
    }

    /// Majority vote on an expanded feature vector; ties go to the positive class.
    pub fn predict_expanded(&self, x: &[f64]) -> bool {
        2 * self.positive_votes(x) >= self.trees.len()
    }

    pub fn predict(&self, row: &CovariateRow) -> Result<bool, ForestError> {
        if !self.schema.matches(row) {
            return Err(ForestError::SchemaMismatch);
        }
        let mut x = Vec::with_capacity(self.schema.expanded_width());
        self.schema.expand_into(row, &mut x);
        Ok(self.predict_expanded(&x))
    }

    pub fn predict_table(&self, table: &CovariateTable) -> Result<Vec<bool>, ForestError> {
        if table.schema() != self.schema {
            return Err(ForestError::SchemaMismatch);
        }
        (0..table.n_rows()).map(|i| self.predict(&table.row(i))).collect()
    }

    /// Text serialization: header lines, then one line per node.
    pub fn dump(&self) -> String {
        let mut s = String::from("forest v1\n");
        writeln!(s, "trees\t{}", self.trees.len()).unwrap();
        writeln!(s, "mtry\t{}", self.mtry).unwrap();
        match self.oob_error {
            Some(e) => writeln!(s, "oob_error\t{e}").unwrap(),
            None => writeln!(s, "oob_error\tNA").unwrap(),
        }
        writeln!(s, "numeric\t{}", self.schema.numeric.join("\t")).unwrap();
        writeln!(s, "binary\t{}", self.schema.binary.join("\t")).unwrap();
        let cats: Vec<String> = self
            .schema
            .categorical
            .iter()
            .map(|(n, l)| format!("{n}:{l}"))
            .collect();
        writeln!(s, "categorical\t{}", cats.join("\t")).unwrap();
        for (i, t) in self.trees.iter().enumerate() {
            writeln!(s, "tree\t{i}\t{}", t.nodes.len()).unwrap();
            for n in &t.nodes {
                match n {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(s, "split\t{feature}\t{threshold}\t{left}\t{right}").unwrap(),
                    Node::Leaf { neg, pos } => writeln!(s, "leaf\t{neg}\t{pos}").unwrap(),
                }
            }
        }
        s
    }

    pub fn load(text: &str) -> Result<Forest, ForestError> {
        let bad = |m: String| ForestError::Parse(m);
        let mut lines = text.lines();
        if lines.next() != Some("forest v1") {
            return Err(bad("missing `forest v1` header".into()));
        }
        fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<String>, ForestError> {
            let bad = |m: String| ForestError::Parse(m);
            let l = lines.next().ok_or_else(|| bad(format!("missing `{key}`")))?;
            let mut parts = l.split('\t');
            if parts.next() != Some(key) {
                return Err(bad(format!("expected `{key}` line, got `{l}`")));
            }
            Ok(parts.filter(|p| !p.is_empty()).map(str::to_string).collect())
        }
        let one = |v: Vec<String>, key: &str| -> Result<String, ForestError> {
            v.into_iter()
                .next()
                .ok_or_else(|| bad(format!("`{key}` needs a value")))
        };
        let n_trees: usize = one(field(&mut lines, "trees")?, "trees")?
            .parse()
            .map_err(|_| bad("bad tree count".into()))?;
        let mtry: usize = one(field(&mut lines, "mtry")?, "mtry")?
            .parse()
            .map_err(|_| bad("bad mtry".into()))?;
        let oob = one(field(&mut lines, "oob_error")?, "oob_error")?;
        let oob_error = if oob == "NA" {
            None
        } else {
            Some(oob.parse().map_err(|_| bad("bad oob_error".into()))?)
        };
        let numeric = field(&mut lines, "numeric")?;
        let binary = field(&mut lines, "binary")?;
        let categorical = field(&mut lines, "categorical")?
            .into_iter()
            .map(|c| {
                let (n, l) = c
                    .rsplit_once(':')
                    .ok_or_else(|| bad(format!("bad categorical `{c}`")))?;
                Ok((n.to_string(), l.parse().map_err(|_| bad(format!("bad levels `{l}`")))?))
            })
            .collect::<Result<Vec<_>, ForestError>>()?;
        let schema = Schema {
            numeric,
            binary,
            categorical,
        };
        let p = schema.expanded_width();
        let mut trees = Vec::with_capacity(n_trees);
        for t in 0..n_trees {
            let head = field(&mut lines, "tree")?;
            if head.len() != 2 || head[0] != t.to_string() {
                return Err(bad(format!("bad header for tree {t}")));
            }
            let count: usize = head[1].parse().map_err(|_| bad("bad node count".into()))?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let l = lines.next().ok_or_else(|| bad("truncated tree".into()))?;
                let parts: Vec<&str> = l.split('\t').collect();
                let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad node `{l}`")));
                let node = match parts.as_slice() {
                    ["split", f, th, le, ri] => Node::Split {
                        feature: num(f)?,
                        threshold: th.parse().map_err(|_| bad(format!("bad threshold `{th}`")))?,
                        left: num(le)?,
                        right: num(ri)?,
                    },
                    ["leaf", n, p] => Node::Leaf {
                        neg: num(n)? as u32,
                        pos: num(p)? as u32,
                    },
                    _ => return Err(bad(format!("bad node `{l}`"))),
                };
                nodes.push(node);
            }
            let valid = nodes.iter().all(|n| match *n {
                Node::Split {
                    feature, left, right, ..
                } => feature < p && left < count && right < count,
                Node::Leaf { .. } => true,
            });
            if !valid || nodes.is_empty() {
                return Err(bad(format!("tree {t} references missing nodes or features")));
            }
            trees.push(Tree { nodes });
        }
        Ok(Forest {
            schema,
            mtry,
            trees,
            oob_error,
        })
    }
}
