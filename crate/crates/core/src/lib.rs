//! Curation toolkit for math-reasoning training data.
//!
//! The pipeline operates on JSONL corpora of (question, completion, source)
//! records whose completions carry fenced solution code:
//!
//! - [`corpus`]: data model, I/O, foreign-format ingestion, synthetic
//!   corpus fabrication for desk-scale testing.
//! - [`lang`]: lexer/parser/unparser for the solution dialect.
//! - [`canon`]: alpha-renaming canonicalization, per-question dedup, and
//!   k-N statistics.
//! - [`exec`]: sandboxed deterministic interpreter, grading policies, and
//!   the correctness filter.
//! - [`select`]: random-k and cluster-as-a-filter subset selection, census,
//!   and corpus mixing.
//! - [`genprob`]: numerically perturbed problem generation with
//!   cross-path answer validation.

pub mod canon;
pub mod corpus;
pub mod exec;
pub mod genprob;
pub mod lang;
pub mod select;
pub(crate) mod seeding;

pub use corpus::{Corpus, Record, Stage};
