//! Planted synthetic corpora.
//!
//! [`generate_corpus`] writes exploit-like records whose text mixes
//! profile-specific vocabulary (one profile per category/platform pair)
//! with shared background vocabulary and noise tokens. Responses follow the
//! profile, while the meta-data is only weakly tied to it, so topic
//! covariates carry most of the signal.
//!
//! [`planted_topic_matrix`] builds a frequency matrix directly from known
//! disjoint-vocabulary topics for checking topic recovery.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Category, CorpusSet, CvssMap, ExploitRecord};
use crate::seed::{derive_seed, rng_from};
use crate::textprep::FrequencyMatrix;

pub struct Profile {
    pub category: Category,
    pub platform: &'static str,
    pub share: f64,
    pub words: &'static [&'static str],
    pub terms: &'static [&'static str],
}

pub const PROFILES: [Profile; 5] = [
    Profile {
        category: Category::Web,
        platform: "php",
        share: 0.40,
        words: &[
            "parameter",
            "query",
            "database",
            "login",
            "password",
            "cookie",
            "upload",
            "administrator",
            "panel",
            "website",
            "search",
            "comment",
            "forum",
            "gallery",
            "portal",
            "template",
            "plugin",
            "profile",
            "username",
            "article",
        ],
        terms: &[
            "index.php?id=1",
            "mysql_query",
            "union+select",
            "admin.php",
            "login.php",
            "config.inc.php",
            "phpsessid",
            "information_schema",
            "view.php?id",
            "require_once",
            "base64_decode",
            "mysql_fetch_array",
            "wp-content",
            "register_globals",
            "concat(0x3a",
            "group_concat",
            "phpinfo",
            "htmlspecialchars",
            "magic_quotes_gpc",
            "news.php?id",
        ],
    },
    Profile {
        category: Category::Web,
        platform: "asp",
        share: 0.18,
        words: &[
            "page",
            "directory",
            "traversal",
            "download",
            "redirect",
            "header",
            "frame",
            "document",
            "link",
            "catalog",
            "shop",
            "cart",
            "product",
            "category",
            "guestbook",
            "calendar",
            "news",
            "board",
            "contact",
            "survey",
        ],
        terms: &[
            "default.asp",
            "login.aspx",
            "viewstate",
            "iis6.0",
            "global.asa",
            "web.config",
            "response.write",
            "request.form",
            "server.mappath",
            "adodb.recordset",
            "showproduct.asp",
            "jsessionid",
            "struts2",
            "index.jsp",
            "servlet",
            "cfm?id",
            "catalog.asp?cat",
            "shopcart.asp",
            "aspnet_client",
            "xp_cmdshell",
        ],
    },
    Profile {
        category: Category::Remote,
        platform: "windows",
        share: 0.16,
        words: &[
            "service",
            "port",
            "socket",
            "packet",
            "network",
            "protocol",
            "connection",
            "client",
            "handler",
            "daemon",
            "listener",
            "payload",
            "shell",
            "command",
            "bind",
            "reverse",
            "target",
            "host",
            "stream",
            "channel",
        ],
        terms: &[
            "ws2_32.dll",
            "kernel32.dll",
            "winexec",
            "recv(sock",
            "sockaddr_in",
            "meterpreter",
            "msfvenom",
            "jmp_esp",
            "seh_handler",
            "0x7c86467b",
            "shellcode",
            "x86/shikata",
            "smbclient",
            "nops+ret",
            "msvcrt.dll",
            "bindshell",
            "lport=4444",
            "rhost",
            "getprocaddress",
            "createprocessa",
        ],
    },
    Profile {
        category: Category::Local,
        platform: "linux",
        share: 0.14,
        words: &[
            "kernel",
            "privilege",
            "root",
            "process",
            "system",
            "driver",
            "library",
            "permission",
            "escalation",
            "signal",
            "thread",
            "race",
            "condition",
            "pointer",
            "allocation",
            "device",
            "setting",
            "routine",
            "environment",
            "binary",
        ],
        terms: &[
            "/bin/sh",
            "setuid(0",
            "execve",
            "/etc/passwd",
            "ld_preload",
            "commit_creds",
            "prepare_kernel_cred",
            "mmap_min_addr",
            "/proc/self",
            "sys_call_table",
            "getuid",
            "chmod+s",
            "vmsplice",
            "sock_sendpage",
            "/dev/mem",
            "ptrace",
            "uname",
            "gcc-o",
            "suid_dumpable",
            "/tmp/.x",
        ],
    },
    Profile {
        category: Category::Dos,
        platform: "windows",
        share: 0.12,
        words: &[
            "crash",
            "denial",
            "loop",
            "exhaustion",
            "malformed",
            "length",
            "integer",
            "value",
            "exception",
            "fault",
            "corruption",
            "resource",
            "timeout",
            "infinite",
            "recursion",
            "null",
            "reference",
            "format",
            "string",
            "stack",
        ],
        terms: &[
            "0xc0000005",
            "eip=41414141",
            "windbg",
            "access_violation",
            "junk*5000",
            "open('crash",
            "playlist.m3u",
            "skin.pls",
            "fuzz.py",
            "struct.pack",
            "\\x41\\x41",
            "heap_corruption",
            "sigsegv",
            "boom.txt",
            "evil.wav",
            "a*10000",
            "mp3player",
            "0xdeadbeef",
            "crash.mp4",
            "overflow.avi",
        ],
    },
];

pub const BACKGROUND_WORDS: &[&str] = &[
    "vulnerability",
    "exploit",
    "version",
    "software",
    "author",
    "vendor",
    "tested",
    "found",
    "discovered",
    "advisory",
    "security",
    "issue",
    "code",
    "proof",
    "concept",
    "affected",
    "application",
    "description",
    "solution",
    "patch",
    "update",
    "release",
    "information",
    "detail",
    "note",
    "example",
    "credit",
    "team",
    "vulnerable",
    "remote",
];

pub const BACKGROUND_TERMS: &[&str] = &[
    "http://www",
    "cve-2009",
    "exploit-db.com",
    "usr/bin/perl",
    "#!/usr/bin/python",
    "import",
    "print",
    "sys.argv",
    "def_main",
    "www.vendor.com",
    "0day",
    "v1.0",
    "v2.1",
    "poc.py",
    "greetz",
    "milw0rm",
    "packetstorm",
    "securityfocus",
    "osvdb",
    "bugtraq",
];

const NOISE: &[&str] = &[
    "the", "and", "of", "to", "a", "is", "id", "in", "on", "by", "this", "with", "from", "that",
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub seed: u64,
    /// Share of a document's tokens drawn from its profile.
    pub topic_fraction: f64,
    /// Inclusive range of signal tokens per document.
    pub doc_len: (usize, usize),
    pub first_year: i32,
    pub test_year: i32,
    /// Share of documents published in `test_year`.
    pub test_year_share: f64,
    pub n_authors: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 2000,
            seed: 2016,
            topic_fraction: 0.7,
            doc_len: (40, 90),
            first_year: 2004,
            test_year: 2016,
            test_year_share: 0.1,
            n_authors: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: CorpusSet,
    pub cvss: CvssMap,
    /// Planted profile index of each record.
    pub profiles: Vec<usize>,
}

impl SynthCorpus {
    /// Writes `corpus.jsonl` and `cvss.tsv` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let corpus = dir.join("corpus.jsonl");
        let cvss = dir.join("cvss.tsv");
        self.corpus
            .write_jsonl(io::BufWriter::new(fs::File::create(&corpus)?))?;
        let mut f = io::BufWriter::new(fs::File::create(&cvss)?);
        io::Write::write_all(&mut f, b"# cve_id\tbase_score\n")?;
        self.cvss.write_tsv(f)?;
        Ok((corpus, cvss))
    }
}

fn exact_allocation(n: usize, shares: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = shares.iter().map(|s| (s * n as f64).round() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let last = counts.len() - 1;
    counts[last] = (counts[last] + n).saturating_sub(assigned);
    counts
}

fn decorate(token: &str, rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..12) {
        0 => format!("{token},"),
        1 => format!("({token})"),
        2 => format!("{token}."),
        3 => format!("\"{token}\""),
        4 => {
            let mut c = token.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        }
        _ => token.to_string(),
    }
}

fn document_text(profile: &Profile, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(cfg.doc_len.0..=cfg.doc_len.1);
    let mut out = String::new();
    for i in 0..len {
        let from_profile = rng.gen_bool(cfg.topic_fraction);
        let word = rng.gen_bool(0.5);
        let pool = match (from_profile, word) {
            (true, true) => profile.words,
            (true, false) => profile.terms,
            (false, true) => BACKGROUND_WORDS,
            (false, false) => BACKGROUND_TERMS,
        };
        let tok = *pool.choose(rng).expect("non-empty pool");
        out.push_str(&decorate(tok, rng));
        if rng.gen_bool(0.25) {
            out.push(' ');
            out.push_str(NOISE.choose(rng).expect("noise"));
        }
        if rng.gen_bool(0.03) {
            // long hex payload, removed by the length filter
            let hex: String = (0..rng.gen_range(24..64))
                .map(|_| char::from_digit(rng.gen_range(0..16), 16).unwrap())
                .collect();
            out.push_str(" \\x");
            out.push_str(&hex);
        }
        out.push(if i % 12 == 11 { '\n' } else { ' ' });
    }
    out
}

/// Generates a corpus with exact profile proportions (58% web, 40% php).
pub fn generate_corpus(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = rng_from(derive_seed(cfg.seed, "synth-layout", 0));
    let shares: Vec<f64> = PROFILES.iter().map(|p| p.share).collect();
    let mut profiles: Vec<usize> = exact_allocation(cfg.n_docs, &shares)
        .into_iter()
        .enumerate()
        .flat_map(|(i, c)| std::iter::repeat_n(i, c))
        .collect();
    profiles.shuffle(&mut rng);

    let n_test = (cfg.test_year_share * cfg.n_docs as f64).round() as usize;
    let mut is_test: Vec<bool> = (0..cfg.n_docs).map(|i| i < n_test).collect();
    is_test.shuffle(&mut rng);

    let author_weights: Vec<f64> = (0..cfg.n_authors).map(|r| 1.0 / (r as f64 + 1.0)).collect();
    let author_total: f64 = author_weights.iter().sum();

    let mut cvss = CvssMap::default();
    let mut records = Vec::with_capacity(cfg.n_docs);
    for (d, (&p, &test)) in profiles.iter().zip(&is_test).enumerate() {
        let mut rng = rng_from(derive_seed(cfg.seed, "synth-doc", d as u64));
        let profile = &PROFILES[p];
        let web = profile.category == Category::Web;
        let year = if test {
            cfg.test_year
        } else {
            rng.gen_range(cfg.first_year..cfg.test_year)
        };
        let mut u = rng.gen::<f64>() * author_total;
        let mut author = cfg.n_authors - 1;
        for (i, w) in author_weights.iter().enumerate() {
            if u < *w {
                author = i;
                break;
            }
            u -= w;
        }
        let mut cve_ids = Vec::new();
        if rng.gen_bool(0.45) {
            for _ in 0..rng.gen_range(1..=3) {
                let id = format!("CVE-{}-{:04}", year, rng.gen_range(1..10000));
                if !cve_ids.contains(&id) {
                    if !cvss.entries.contains_key(&id) && rng.gen_bool(0.9) {
                        let score = f64::from(rng.gen_range(10..=100)) / 10.0;
                        cvss.insert(&id, score).expect("score in range");
                    }
                    cve_ids.push(id);
                }
            }
        }
        records.push(ExploitRecord {
            id: format!("edb-{:05}", d + 1),
            raw_text: document_text(profile, cfg, &mut rng),
            category: profile.category,
            platform: profile.platform.to_string(),
            verified: rng.gen_bool(if web { 0.55 } else { 0.45 }),
            application_available: rng.gen_bool(0.3),
            screenshot_available: rng.gen_bool(0.05),
            osvdb_ref_count: rng.gen_range(0..4),
            cve_ids,
            author: format!("author_{:02}", author + 1),
            published_year: year,
            published_month: rng.gen_range(1..=12),
        });
    }
    SynthCorpus {
        corpus: CorpusSet::new(records).expect("generated ids are unique"),
        cvss,
        profiles,
    }
}

/// A frequency matrix generated from known topics.
#[derive(Debug, Clone)]
pub struct PlantedTopics {
    pub matrix: FrequencyMatrix,
    /// Planted dominant topic per document.
    pub labels: Vec<usize>,
}

/// `n_docs` documents over `n_topics` disjoint vocabularies of
/// `vocab_per_topic` unigrams each. A document draws each token from its own
/// topic with probability `purity`, otherwise from a uniformly chosen topic.
pub fn planted_topic_matrix(
    n_docs: usize,
    n_topics: usize,
    vocab_per_topic: usize,
    doc_len: usize,
    purity: f64,
    seed: u64,
) -> PlantedTopics {
    let mut rng = rng_from(seed);
    let vocabulary: Vec<String> = (0..n_topics)
        .flat_map(|t| (0..vocab_per_topic).map(move |j| format!("t{t:02}u{j:03}")))
        .collect();
    let mut labels = Vec::with_capacity(n_docs);
    let mut rows = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let label = d % n_topics;
        let mut counts = vec![0u32; vocabulary.len()];
        for _ in 0..doc_len {
            let topic = if rng.gen_bool(purity) {
                label
            } else {
                rng.gen_range(0..n_topics)
            };
            counts[topic * vocab_per_topic + rng.gen_range(0..vocab_per_topic)] += 1;
        }
        rows.push(
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(j, &c)| (j as u32, c))
                .collect(),
        );
        labels.push(label);
    }
    let doc_ids = (0..n_docs).map(|d| format!("doc{d:04}")).collect();
    PlantedTopics {
        matrix: FrequencyMatrix::from_rows(doc_ids, vocabulary, rows).expect("sorted vocabulary"),
        labels,
    }
}
