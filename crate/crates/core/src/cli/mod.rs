//! Operator surface: ingest, fit, eval, predict, synth.
//!
//! Every run that writes artifacts also writes a manifest (command, config,
//! seed, input digests) sufficient to reproduce its outputs byte-exactly.
//! Exit codes are a stable contract: 0 success, 1 model or computation
//! failure, 2 input or usage error.

mod args;
mod commands;
mod manifest;

pub use args::{Cli, Command, ModelChoice, RuleChoice, SynthKind};
pub use commands::{run, run_evaluation, CliError, EvalSettings};
pub use manifest::sha256_file;
