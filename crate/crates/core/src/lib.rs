//! Topic-model features and random-forest classification of archived
//! proof-of-concept exploits.
//!
//! The pipeline runs in five stages, one module each:
//!
//! 1. [`corpus`]: load exploit records and CVSS scores, build binary responses.
//! 2. [`textprep`]: tokenize, length-filter, split words from terms, lemmatize,
//!    drop stopwords, prune rare unigrams, and emit two frequency matrices.
//! 3. [`topics`]: collapsed Gibbs LDA on each matrix, dominant-topic vectors,
//!    Spearman correlation between the word and term assignments.
//! 4. [`features`]: the 38 meta-data covariates plus the two topic factors.
//! 5. [`forest`] and [`eval`]: random forest, cross-validated `mtry`, temporal
//!    test split, accuracy with exact binomial confidence intervals.
//!
//! [`synth`] generates planted corpora for the runnable examples and tests,
//! and [`cli`] backs the `exploit-topics` binary.
//!
//! Run the examples with `cargo run --release --example <name>`; see the
//! crate's `examples/` directory.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod forest;
pub mod seed;
pub mod synth;
pub mod textprep;
pub mod topics;

pub use corpus::{Category, CorpusFormat, CorpusSet, CvssMap, ExploitRecord, Target};
pub use eval::{accuracy_ci, run_experiment, EvalReport, ExperimentConfig, SplitSpec};
pub use features::{build_covariates, top_developers, CovariateTable, DeveloperRanking};
pub use forest::{train_forest, Forest, ForestParams};
pub use textprep::{build_matrices, FrequencyMatrix, LexiconResources, PrepConfig};
pub use topics::{fit_lda, spearman_rho, LdaParams, TopicModel};
