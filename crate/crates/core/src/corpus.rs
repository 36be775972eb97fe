//! Exploit records, CVSS scores and binary responses.
//!
//! Two corpus encodings are accepted. JSON lines carry one object per line
//! with the keys `id`, `raw_text`, `category`, `platform`, `verified`,
//! `application`, `screenshot`, `osvdb_refs`, `cve_ids` (array), `author`,
//! `year` and `month`. CSV files use the same columns behind a mandatory
//! header row, with `cve_ids` joined by `;`.
//!
//! The CVSS feed is a two-column table, `cve_id<TAB>base_score`; blank lines
//! and lines starting with `#` are skipped.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    InvalidRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate id `{id}` (first seen on line {first_line})")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
        first_line: usize,
    },
    #[error("duplicate id `{0}` in corpus")]
    DuplicateIdInMemory(String),
    #[error("{path}:{line}: {message}")]
    InvalidCvss {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Dos,
    Local,
    Remote,
    Web,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Dos, Category::Local, Category::Remote, Category::Web];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Dos => "dos",
            Category::Local => "local",
            Category::Remote => "remote",
            Category::Web => "web",
        }
    }

    /// Parses a category label after mapping the public archive's aliases
    /// (`webapps` is the site's name for the web category).
    pub fn parse_label(label: &str) -> Option<Category> {
        match label.trim().to_ascii_lowercase().as_str() {
            "web" | "webapps" => Some(Category::Web),
            "dos" => Some(Category::Dos),
            "local" => Some(Category::Local),
            "remote" => Some(Category::Remote),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The two binary responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Web,
    Php,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Web, Target::Php];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Web => "web",
            Target::Php => "php",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "web" => Ok(Target::Web),
            "php" => Ok(Target::Php),
            other => Err(format!("unknown target `{other}` (expected web or php)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExploitRecord {
    pub id: String,
    pub raw_text: String,
    pub category: Category,
    pub platform: String,
    pub verified: bool,
    #[serde(rename = "application")]
    pub application_available: bool,
    #[serde(rename = "screenshot")]
    pub screenshot_available: bool,
    #[serde(rename = "osvdb_refs")]
    pub osvdb_ref_count: u32,
    pub cve_ids: Vec<String>,
    pub author: String,
    #[serde(rename = "year")]
    pub published_year: i32,
    #[serde(rename = "month")]
    pub published_month: u32,
}

/// `true` when the record belongs to the reference class of `target`.
pub fn make_response(record: &ExploitRecord, target: Target) -> bool {
    match target {
        Target::Web => record.category == Category::Web,
        Target::Php => record.platform.trim().eq_ignore_ascii_case("php"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    JsonLines,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension; anything but `.csv` is JSON lines.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::JsonLines,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jsonl" | "json-lines" | "jsonlines" => Ok(CorpusFormat::JsonLines),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!("unknown corpus format `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Skip invalid records (they are still reported) instead of failing.
    pub lenient: bool,
    /// Inclusive bounds for `year`.
    pub year_range: (i32, i32),
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            lenient: false,
            year_range: (1988, 2030),
        }
    }
}

/// A record that was skipped under [`LoadOptions::lenient`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusSet {
    pub records: Vec<ExploitRecord>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: CorpusSet,
    pub rejected: Vec<Rejection>,
}

impl CorpusSet {
    pub fn new(records: Vec<ExploitRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateIdInMemory(r.id.clone()));
            }
        }
        Ok(CorpusSet { records })
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn index_by_id(&self) -> HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary::of(self)
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: Option<String>,
    raw_text: Option<String>,
    category: Option<String>,
    #[serde(default)]
    platform: String,
    #[serde(default)]
    verified: bool,
    #[serde(default)]
    application: bool,
    #[serde(default)]
    screenshot: bool,
    #[serde(default)]
    osvdb_refs: u32,
    #[serde(default)]
    cve_ids: Vec<String>,
    #[serde(default)]
    author: String,
    year: Option<i32>,
    month: Option<u32>,
}

impl RawRecord {
    fn validate(self, opts: &LoadOptions) -> Result<ExploitRecord, String> {
        let id = self
            .id
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or("missing field `id`")?;
        let raw_text = self.raw_text.ok_or("missing field `raw_text`")?;
        let label = self.category.ok_or("missing field `category`")?;
        let category = Category::parse_label(&label)
            .ok_or_else(|| format!("category `{label}` is not one of dos, local, remote, web"))?;
        let year = self.year.ok_or("missing field `year`")?;
        let month = self.month.ok_or("missing field `month`")?;
        if !(1..=12).contains(&month) {
            return Err(format!("month {month} outside 1..=12"));
        }
        let (lo, hi) = opts.year_range;
        if year < lo || year > hi {
            return Err(format!("year {year} outside {lo}..={hi}"));
        }
        let mut cve_ids = Vec::with_capacity(self.cve_ids.len());
        let mut seen = HashSet::new();
        for c in self.cve_ids {
            let c = c.trim().to_ascii_uppercase();
            if c.is_empty() {
                continue;
            }
            if !seen.insert(c.clone()) {
                return Err(format!("duplicate CVE reference `{c}`"));
            }
            cve_ids.push(c);
        }
        Ok(ExploitRecord {
            id,
            raw_text,
            category,
            platform: self.platform.trim().to_string(),
            verified: self.verified,
            application_available: self.application,
            screenshot_available: self.screenshot,
            osvdb_ref_count: self.osvdb_refs,
            cve_ids,
            author: self.author.trim().to_string(),
            published_year: year,
            published_month: month,
        })
    }
}

fn parse_flag(value: &str) -> Result<bool, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" | "n" => Ok(false),
        "1" | "true" | "yes" | "y" => Ok(true),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn csv_raw_record(headers: &csv::StringRecord, row: &csv::StringRecord) -> Result<RawRecord, String> {
    let get = |name: &str| -> Option<&str> { headers.iter().position(|h| h.trim() == name).and_then(|i| row.get(i)) };
    let opt_string = |name: &str| get(name).map(str::to_string).filter(|s| !s.is_empty());
    let parse_num = |name: &str| -> Result<Option<i64>, String> {
        match get(name).map(str::trim).filter(|s| !s.is_empty()) {
            None => Ok(None),
            Some(v) => v
                .parse::<i64>()
                .map(Some)
                .map_err(|_| format!("field `{name}`: `{v}` is not an integer")),
        }
    };
    let osvdb = parse_num("osvdb_refs")?.unwrap_or(0);
    if osvdb < 0 {
        return Err(format!("field `osvdb_refs`: {osvdb} is negative"));
    }
    let month = parse_num("month")?;
    if let Some(m) = month {
        if m < 0 {
            return Err(format!("month {m} outside 1..=12"));
        }
    }
    Ok(RawRecord {
        id: opt_string("id"),
        raw_text: get("raw_text").map(str::to_string),
        category: opt_string("category"),
        platform: get("platform").unwrap_or_default().to_string(),
        verified: parse_flag(get("verified").unwrap_or_default()).map_err(|e| format!("field `verified`: {e}"))?,
        application: parse_flag(get("application").unwrap_or_default())
            .map_err(|e| format!("field `application`: {e}"))?,
        screenshot: parse_flag(get("screenshot").unwrap_or_default())
            .map_err(|e| format!("field `screenshot`: {e}"))?,
        osvdb_refs: osvdb as u32,
        cve_ids: get("cve_ids")
            .unwrap_or_default()
            .split(';')
            .map(str::to_string)
            .collect(),
        author: get("author").unwrap_or_default().to_string(),
        year: parse_num("year")?.map(|y| y as i32),
        month: month.map(|m| m as u32),
    })
}

struct Collector<'a> {
    path: &'a Path,
    opts: &'a LoadOptions,
    records: Vec<ExploitRecord>,
    first_line: HashMap<String, usize>,
    rejected: Vec<Rejection>,
}

impl<'a> Collector<'a> {
    fn push(&mut self, line: usize, parsed: Result<RawRecord, String>) -> Result<(), CorpusError> {
        let record = match parsed.and_then(|raw| raw.validate(self.opts)) {
            Ok(r) => r,
            Err(message) => {
                if self.opts.lenient {
                    log::warn!("{}:{}: skipping record: {}", self.path.display(), line, message);
                    self.rejected.push(Rejection { line, message });
                    return Ok(());
                }
                return Err(CorpusError::InvalidRecord {
                    path: self.path.to_path_buf(),
                    line,
                    message,
                });
            }
        };
        if let Some(&first_line) = self.first_line.get(&record.id) {
            if self.opts.lenient {
                let message = format!("duplicate id `{}` (first seen on line {first_line})", record.id);
                log::warn!("{}:{}: skipping record: {}", self.path.display(), line, message);
                self.rejected.push(Rejection { line, message });
                return Ok(());
            }
            return Err(CorpusError::DuplicateId {
                path: self.path.to_path_buf(),
                line,
                id: record.id,
                first_line,
            });
        }
        self.first_line.insert(record.id.clone(), line);
        self.records.push(record);
        Ok(())
    }
}

/// Loads a corpus file, keeping file order.
pub fn load_corpus(path: &Path, format: CorpusFormat, opts: &LoadOptions) -> Result<Loaded, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let text = fs::read_to_string(path).map_err(io_err)?;
    let mut c = Collector {
        path,
        opts,
        records: Vec::new(),
        first_line: HashMap::new(),
        rejected: Vec::new(),
    };
    match format {
        CorpusFormat::JsonLines => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<RawRecord>(line).map_err(|e| e.to_string());
                c.push(i + 1, parsed)?;
            }
        }
        CorpusFormat::Csv => {
            if !text.trim().is_empty() {
                let mut reader = csv::ReaderBuilder::new()
                    .has_headers(true)
                    .flexible(false)
                    .from_reader(text.as_bytes());
                let headers = reader
                    .headers()
                    .map_err(|e| CorpusError::InvalidRecord {
                        path: path.to_path_buf(),
                        line: 1,
                        message: e.to_string(),
                    })?
                    .clone();
                for required in ["id", "raw_text", "category"] {
                    if !headers.iter().any(|h| h.trim() == required) {
                        return Err(CorpusError::InvalidRecord {
                            path: path.to_path_buf(),
                            line: 1,
                            message: format!("header lacks column `{required}`"),
                        });
                    }
                }
                for row in reader.records() {
                    match row {
                        Ok(row) => {
                            let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
                            c.push(line, csv_raw_record(&headers, &row))?;
                        }
                        Err(e) => {
                            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                            c.push(line, Err(e.to_string()))?;
                        }
                    }
                }
            }
        }
    }
    Ok(Loaded {
        corpus: CorpusSet { records: c.records },
        rejected: c.rejected,
    })
}

/// CVE identifier to CVSS base score.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CvssMap {
    pub entries: BTreeMap<String, f64>,
}

impl CvssMap {
    pub fn insert(&mut self, cve: &str, score: f64) -> Result<Option<f64>, String> {
        if !(0.0..=10.0).contains(&score) {
            return Err(format!("score {score} outside [0, 10]"));
        }
        Ok(self.entries.insert(cve.trim().to_ascii_uppercase(), score))
    }

    pub fn get(&self, cve: &str) -> Option<f64> {
        self.entries.get(cve).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CVE ids referenced by the corpus without a score, each listed once, sorted.
    pub fn missing_references(&self, corpus: &CorpusSet) -> Vec<String> {
        let missing: BTreeSet<&str> = corpus
            .records
            .iter()
            .flat_map(|r| r.cve_ids.iter())
            .filter(|c| !self.entries.contains_key(c.as_str()))
            .map(String::as_str)
            .collect();
        missing.into_iter().map(str::to_string).collect()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (cve, score) in &self.entries {
            writeln!(out, "{cve}\t{score}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CvssLoaded {
    pub map: CvssMap,
    /// One message per overwritten duplicate row.
    pub warnings: Vec<String>,
}

pub fn load_cvss(path: &Path) -> Result<CvssLoaded, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_cvss(&text, path)
}

pub fn parse_cvss(text: &str, path: &Path) -> Result<CvssLoaded, CorpusError> {
    let mut map = CvssMap::default();
    let mut warnings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bad = |message: String| CorpusError::InvalidCvss {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut fields = trimmed.split_whitespace();
        let (cve, score) = match (fields.next(), fields.next(), fields.next()) {
            (Some(c), Some(s), None) => (c, s),
            _ => return Err(bad(format!("expected `cve_id<TAB>base_score`, got `{trimmed}`"))),
        };
        let score: f64 = score.parse().map_err(|_| bad(format!("`{score}` is not a number")))?;
        if let Some(prev) = map.insert(cve, score).map_err(bad)? {
            let msg = format!(
                "{}:{}: {} listed again; score {} replaces {}",
                path.display(),
                i + 1,
                cve,
                score,
                prev
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(CvssLoaded { map, warnings })
}

/// Category and platform frequencies of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSummary {
    pub n: usize,
    pub categories: Vec<(Category, usize)>,
    /// Ten most frequent platforms (ties lexicographic), then `others`.
    pub platforms: Vec<(String, usize)>,
}

impl CorpusSummary {
    fn of(corpus: &CorpusSet) -> Self {
        let mut cats: BTreeMap<Category, usize> = Category::ALL.iter().map(|c| (*c, 0)).collect();
        let mut plats: BTreeMap<String, usize> = BTreeMap::new();
        for r in &corpus.records {
            *cats.entry(r.category).or_default() += 1;
            *plats.entry(r.platform.trim().to_ascii_lowercase()).or_default() += 1;
        }
        let mut plats: Vec<(String, usize)> = plats.into_iter().collect();
        plats.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let others: usize = plats.iter().skip(10).map(|(_, c)| c).sum();
        plats.truncate(10);
        if others > 0 {
            plats.push(("others".to_string(), others));
        }
        CorpusSummary {
            n: corpus.n(),
            categories: cats.into_iter().collect(),
            platforms: plats,
        }
    }

    pub fn render(&self) -> String {
        let pct = |c: usize| {
            if self.n == 0 {
                0.0
            } else {
                100.0 * c as f64 / self.n as f64
            }
        };
        let mut s = format!("Exploit categories (n = {})\n", self.n);
        s.push_str(&format!("{:<12} {:>8} {:>8}\n", "category", "count", "share"));
        for (c, n) in &self.categories {
            s.push_str(&format!("{:<12} {:>8} {:>7.1}%\n", c.as_str(), n, pct(*n)));
        }
        s.push_str("\nExploit platforms\n");
        s.push_str(&format!("{:<12} {:>8} {:>8}\n", "platform", "count", "share"));
        for (p, n) in &self.platforms {
            s.push_str(&format!("{:<12} {:>8} {:>7.1}%\n", p, n, pct(*n)));
        }
        s
    }
}
