//! neufuzz — a coverage-guided greybox fuzzer whose mutation engine is
//! augmented by a trainable bit-granularity *byte sieve*: a recurrent model
//! that predicts, per input-file position, how likely a mutation there is to
//! yield coverage gain. Proposed mutants that touch no useful positions are
//! vetoed before execution.
//!
//! The crate is a library first. The major capabilities each have a runnable
//! example under `examples/`:
//!
//! - `coverage_scoring` — coverage maps, input gain and the strictly-less score
//! - `toy_targets` — the built-in instrumented toy parsers and their corpora
//! - `mutation_catalog` — the deterministic and havoc mutation stages
//! - `train_sieve` — collect samples, train a sieve model, inspect its heat map
//! - `campaign_compare` — paired baseline vs. augmented campaigns
//!
//! A single thin binary (`neufuzz`) exposes the same functionality as the
//! `fuzz`, `collect`, `train`, `predict` and `report` subcommands.

pub mod cli;
pub mod coverage;
pub mod fuzzer;
pub mod mutation;
pub mod neural;
pub mod sieve;
pub mod targets;
pub(crate) mod util;

pub use coverage::{CoverageMap, ExecOutcome, VirginMap, MAP_SIZE};



pub use targets::Target;
