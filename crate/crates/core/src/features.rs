//! Covariate table: meta-data columns, top-developer dummies and the two
//! dominant-topic factors.
//!
//! Column order is fixed: numeric (`osvdb_refs`, `cve_refs`, `mean_cvss`,
//! `year`, `month`), binary (`verified`, `application`, `screenshot`,
//! `dev_01` .. `dev_30`), then categorical (`word_topic`, `term_topic`).

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use thiserror::Error;

use crate::corpus::{CorpusSet, CvssMap, ExploitRecord};

pub const TOP_DEVELOPERS: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("{name} assignment has {got} entries for {expected} documents")]
    Misaligned {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("{name} assignment has level {level} outside 0..{levels}")]
    LevelOutOfRange {
        name: &'static str,
        level: usize,
        levels: usize,
    },
    #[error("unknown document id `{0}`")]
    UnknownDoc(String),
    #[error("both topic assignments are needed, got only one")]
    HalfTopics,
    #[error("malformed covariate table: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeveloperRanking {
    pub ranked_authors: Vec<(String, usize)>,
}

impl DeveloperRanking {
    /// 0-based rank of `author`, if ranked.
    pub fn rank_of(&self, author: &str) -> Option<usize> {
        let author = author.trim();
        self.ranked_authors.iter().position(|(a, _)| a == author)
    }
}

/// Authors by descending exploit count, ties in lexicographic order,
/// truncated to `n`. Empty author strings are not ranked.
pub fn top_developers(corpus: &CorpusSet, n: usize) -> DeveloperRanking {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &corpus.records {
        let a = r.author.trim();
        if !a.is_empty() {
            *counts.entry(a).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(a, c)| (a.to_string(), c)).collect();
    // stable sort keeps the lexicographic order among equal counts
    ranked.sort_by_key(|a| std::cmp::Reverse(a.1));
    ranked.truncate(n);
    DeveloperRanking { ranked_authors: ranked }
}

/// A dominant-topic vector together with its number of levels (`k`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicAssignment {
    pub levels: usize,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericColumn {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryColumn {
    pub name: String,
    pub values: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalColumn {
    pub name: String,
    pub levels: usize,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateTable {
    pub doc_ids: Vec<String>,
    pub numeric_columns: Vec<NumericColumn>,
    pub binary_columns: Vec<BinaryColumn>,
    pub categorical_columns: Vec<CategoricalColumn>,
}

/// Column layout shared by a table, its rows and a trained forest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    pub numeric: Vec<String>,
    pub binary: Vec<String>,
    /// `(name, levels)`.
    pub categorical: Vec<(String, usize)>,
}

impl Schema {
    pub fn column_count(&self) -> usize {
        self.numeric.len() + self.binary.len() + self.categorical.len()
    }

    /// Width after one-hot expansion of the categorical columns.
    pub fn expanded_width(&self) -> usize {
        self.numeric.len() + self.binary.len() + self.categorical.iter().map(|(_, l)| l).sum::<usize>()
    }

    pub fn expanded_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.numeric.iter().chain(&self.binary).cloned().collect();
        for (name, levels) in &self.categorical {
            names.extend((0..*levels).map(|l| format!("{name}={l}")));
        }
        names
    }

    /// Writes the expanded feature vector of `row` into `out`.
    pub fn expand_into(&self, row: &CovariateRow, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&row.numeric);
        out.extend(row.binary.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        for ((_, levels), &v) in self.categorical.iter().zip(&row.categorical) {
            let start = out.len();
            out.resize(start + levels, 0.0);
            out[start + v] = 1.0;
        }
    }

    pub fn matches(&self, row: &CovariateRow) -> bool {
        row.numeric.len() == self.numeric.len()
            && row.binary.len() == self.binary.len()
            && row.categorical.len() == self.categorical.len()
            && row
                .categorical
                .iter()
                .zip(&self.categorical)
                .all(|(&v, (_, levels))| v < *levels)
    }
}

/// One table row.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateRow {
    pub numeric: Vec<f64>,
    pub binary: Vec<bool>,
    pub categorical: Vec<usize>,
}

impl CovariateTable {
    pub fn n_rows(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn column_count(&self) -> usize {
        self.numeric_columns.len() + self.binary_columns.len() + self.categorical_columns.len()
    }

    pub fn schema(&self) -> Schema {
        Schema {
            numeric: self.numeric_columns.iter().map(|c| c.name.clone()).collect(),
            binary: self.binary_columns.iter().map(|c| c.name.clone()).collect(),
            categorical: self
                .categorical_columns
                .iter()
                .map(|c| (c.name.clone(), c.levels))
                .collect(),
        }
    }

    pub fn row(&self, i: usize) -> CovariateRow {
        CovariateRow {
            numeric: self.numeric_columns.iter().map(|c| c.values[i]).collect(),
            binary: self.binary_columns.iter().map(|c| c.values[i]).collect(),
            categorical: self.categorical_columns.iter().map(|c| c.values[i]).collect(),
        }
    }

    pub fn numeric(&self, name: &str) -> Option<&[f64]> {
        self.numeric_columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    /// Row-major expanded design matrix, `n_rows x schema().expanded_width()`.
    pub fn design(&self) -> Vec<f64> {
        let schema = self.schema();
        let mut x = Vec::with_capacity(self.n_rows() * schema.expanded_width());
        let mut buf = Vec::new();
        for i in 0..self.n_rows() {
            schema.expand_into(&self.row(i), &mut buf);
            x.extend_from_slice(&buf);
        }
        x
    }

    /// CSV export in column order, one row per document.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend(self.numeric_columns.iter().map(|c| c.name.clone()));
        header.extend(self.binary_columns.iter().map(|c| c.name.clone()));
        header.extend(self.categorical_columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![self.doc_ids[i].clone()];
            rec.extend(self.numeric_columns.iter().map(|c| c.values[i].to_string()));
            rec.extend(self.binary_columns.iter().map(|c| u8::from(c.values[i]).to_string()));
            rec.extend(self.categorical_columns.iter().map(|c| c.values[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()
    }

    /// Reads a table written by [`CovariateTable::write_csv`]. Categorical
    /// columns need their level counts, which the CSV does not carry.
    pub fn read_csv(text: &str, levels: Option<usize>) -> Result<CovariateTable, FeatureError> {
        let bad = |m: String| FeatureError::Parse(m);
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        let names: Vec<&str> = header.iter().collect();
        if names.first() != Some(&"id") {
            return Err(bad("first column must be `id`".into()));
        }
        let is_numeric = |n: &str| NUMERIC_NAMES.contains(&n);
        let is_categorical = |n: &str| n == "word_topic" || n == "term_topic";
        let mut table = CovariateTable {
            doc_ids: Vec::new(),
            numeric_columns: Vec::new(),
            binary_columns: Vec::new(),
            categorical_columns: Vec::new(),
        };
        let mut kinds = Vec::new();
        for &n in &names[1..] {
            if is_numeric(n) {
                kinds.push(0);
                table.numeric_columns.push(NumericColumn {
                    name: n.into(),
                    values: vec![],
                });
            } else if is_categorical(n) {
                let levels = levels.ok_or_else(|| bad(format!("level count needed for `{n}`")))?;
                kinds.push(2);
                table.categorical_columns.push(CategoricalColumn {
                    name: n.into(),
                    levels,
                    values: vec![],
                });
            } else {
                kinds.push(1);
                table.binary_columns.push(BinaryColumn {
                    name: n.into(),
                    values: vec![],
                });
            }
        }
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let at = |m: String| bad(format!("row {}: {m}", line + 1));
            table.doc_ids.push(rec.get(0).unwrap_or_default().to_string());
            let (mut ni, mut bi, mut ci) = (0, 0, 0);
            for (field, kind) in rec.iter().skip(1).zip(&kinds) {
                match kind {
                    0 => {
                        let v = field.parse().map_err(|_| at(format!("`{field}` is not a number")))?;
                        table.numeric_columns[ni].values.push(v);
                        ni += 1;
                    }
                    1 => {
                        let v = match field {
                            "0" => false,
                            "1" => true,
                            _ => return Err(at(format!("`{field}` is not 0/1"))),
                        };
                        table.binary_columns[bi].values.push(v);
                        bi += 1;
                    }
                    _ => {
                        let col = &mut table.categorical_columns[ci];
                        let v: usize = field.parse().map_err(|_| at(format!("`{field}` is not a level")))?;
                        if v >= col.levels {
                            return Err(at(format!("level {v} outside 0..{}", col.levels)));
                        }
                        col.values.push(v);
                        ci += 1;
                    }
                }
            }
        }
        Ok(table)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> CovariateTable {
        CovariateTable {
            doc_ids: indices.iter().map(|&i| self.doc_ids[i].clone()).collect(),
            numeric_columns: self
                .numeric_columns
                .iter()
                .map(|c| NumericColumn {
                    name: c.name.clone(),
                    values: indices.iter().map(|&i| c.values[i]).collect(),
                })
                .collect(),
            binary_columns: self
                .binary_columns
                .iter()
                .map(|c| BinaryColumn {
                    name: c.name.clone(),
                    values: indices.iter().map(|&i| c.values[i]).collect(),
                })
                .collect(),
            categorical_columns: self
                .categorical_columns
                .iter()
                .map(|c| CategoricalColumn {
                    name: c.name.clone(),
                    levels: c.levels,
                    values: indices.iter().map(|&i| c.values[i]).collect(),
                })
                .collect(),
        }
    }
}

const NUMERIC_NAMES: [&str; 5] = ["osvdb_refs", "cve_refs", "mean_cvss", "year", "month"];

/// Mean base score over the scored CVE references; 0 with no references.
/// References without a score are left out of the mean.
pub fn mean_cvss(record: &ExploitRecord, cvss: &CvssMap) -> f64 {
    let scores: Vec<f64> = record.cve_ids.iter().filter_map(|c| cvss.get(c)).collect();
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

fn check_assignment(name: &'static str, a: &TopicAssignment, n: usize) -> Result<(), FeatureError> {
    if a.values.len() != n {
        return Err(FeatureError::Misaligned {
            name,
            got: a.values.len(),
            expected: n,
        });
    }
    if let Some(&level) = a.values.iter().find(|&&v| v >= a.levels) {
        return Err(FeatureError::LevelOutOfRange {
            name,
            level,
            levels: a.levels,
        });
    }
    Ok(())
}

/// Builds one row per id in `doc_ids` (the post-exclusion documents, in
/// matrix order). Topic columns appear only when both assignments are given.
pub fn build_covariates(
    corpus: &CorpusSet,
    cvss: &CvssMap,
    ranking: &DeveloperRanking,
    doc_ids: &[String],
    word_assign: Option<&TopicAssignment>,
    term_assign: Option<&TopicAssignment>,
) -> Result<CovariateTable, FeatureError> {
    let n = doc_ids.len();
    let topics = match (word_assign, term_assign) {
        (Some(w), Some(t)) => {
            check_assignment("word_topic", w, n)?;
            check_assignment("term_topic", t, n)?;
            Some((w, t))
        }
        (None, None) => None,
        _ => return Err(FeatureError::HalfTopics),
    };
    let index: HashMap<&str, usize> = corpus.index_by_id();
    let records: Vec<&ExploitRecord> = doc_ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .map(|&i| &corpus.records[i])
                .ok_or_else(|| FeatureError::UnknownDoc(id.clone()))
        })
        .collect::<Result<_, _>>()?;

    let numeric = |name: &str, f: &dyn Fn(&ExploitRecord) -> f64| NumericColumn {
        name: name.to_string(),
        values: records.iter().map(|r| f(r)).collect(),
    };
    let numeric_columns = vec![
        numeric("osvdb_refs", &|r| f64::from(r.osvdb_ref_count)),
        numeric("cve_refs", &|r| r.cve_ids.len() as f64),
        numeric("mean_cvss", &|r| mean_cvss(r, cvss)),
        numeric("year", &|r| f64::from(r.published_year)),
        numeric("month", &|r| f64::from(r.published_month)),
    ];

    let binary = |name: String, f: &dyn Fn(&ExploitRecord) -> bool| BinaryColumn {
        name,
        values: records.iter().map(|r| f(r)).collect(),
    };
    let ranks: Vec<Option<usize>> = records.iter().map(|r| ranking.rank_of(&r.author)).collect();
    let mut binary_columns = vec![
        binary("verified".into(), &|r| r.verified),
        binary("application".into(), &|r| r.application_available),
        binary("screenshot".into(), &|r| r.screenshot_available),
    ];
    for slot in 0..TOP_DEVELOPERS {
        binary_columns.push(BinaryColumn {
            name: format!("dev_{:02}", slot + 1),
            values: ranks.iter().map(|&r| r == Some(slot)).collect(),
        });
    }

    let categorical_columns = match topics {
        Some((w, t)) => vec![
            CategoricalColumn {
                name: "word_topic".into(),
                levels: w.levels,
                values: w.values.clone(),
            },
            CategoricalColumn {
                name: "term_topic".into(),
                levels: t.levels,
                values: t.values.clone(),
            },
        ],
        None => Vec::new(),
    };

    Ok(CovariateTable {
        doc_ids: doc_ids.to_vec(),
        numeric_columns,
        binary_columns,
        categorical_columns,
    })
}
