//! Inference of stochastic context-free L-systems (S0L-systems).
//!
//! The crate is organised around the pipeline used to recover a hidden
//! system from the strings it produced:
//!
//! * [`grammar`] defines systems, words and derivations, samples derivations
//!   and scores them.
//! * [`scanner`] turns an integer search vector into a candidate system by
//!   greedily partitioning each observed word into successors.
//! * [`search`] looks for the search vector whose candidate has the highest
//!   probability of producing the input, exhaustively or with a genetic
//!   algorithm.
//! * [`procgen`] generates benchmark systems and their observed sequences.
//! * [`metrics`] compares a candidate against the hidden original.
//!
//! All probability-carrying types are generic over a [`Real`] scalar. The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! command-line front end uses.

pub mod grammar;
pub mod metrics;
pub mod procgen;
mod real;
pub mod scanner;
pub mod search;

pub use grammar::{Derivation, GrammarError, SequenceSet, Symbol, Word};
pub use real::Real;

/// An S0L-system with `f64` probabilities.
pub type System = grammar::S0LSystem<f64>;
/// An S0L-system with `f32` probabilities.
pub type SystemF32 = grammar::S0LSystem<f32>;
/// A production with an `f64` probability.
pub type Production = grammar::Production<f64>;
/// Scan outcome over `f64`.
pub type ScanOutcome = scanner::ScanOutcome<f64>;
/// Search result over `f64`.
pub type SearchResult = search::SearchResult<f64>;
/// Generated benchmark case over `f64`.
pub type GeneratedCase = procgen::GeneratedCase<f64>;
/// Per-experiment comparison over `f64`.
pub type ComparisonResult = metrics::ComparisonResult<f64>;
/// Batch aggregate over `f64`.
pub type BatchReport = metrics::BatchReport<f64>;
