//! S0L-systems, words, derivations and the observed sequence sets.

mod derive;
mod sequence;
mod symbol;
mod system;
pub mod text;

pub use derive::{
    derivation_log_probability, derive_sequence, derive_step, joint_log_probability, Derivation,
};
pub use sequence::{infer_alphabet, infer_axioms, SequenceSet};
pub use symbol::{Symbol, Word};
pub use system::{Axiom, Production, S0LSystem, ValidationReport, Violation};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("invalid symbol {0:?}: symbols are single visible characters other than '#'")]
    InvalidSymbol(char),
    #[error("empty word")]
    EmptyWord,
    #[error("symbol {0} is not in the alphabet")]
    UnknownSymbol(Symbol),
    #[error("symbol {0} has no production")]
    NoProduction(Symbol),
    #[error("system has no axiom")]
    NoAxiom,
    #[error("word {0} is not an axiom of the system")]
    UnknownAxiom(Word),
    #[error("derivation references production #{0}, which the system does not have")]
    UnknownProduction(usize),
    #[error("derivation is inconsistent at step {step}: {reason}")]
    InvalidDerivation { step: usize, reason: String },
    #[error("derivation needs at least one step")]
    NoSteps,
    #[error("sequence set is empty")]
    NoSequences,
    #[error("sequence {0} has fewer than two words")]
    SequenceTooShort(usize),
    #[error("sequence {index} has {found} words, expected {expected}")]
    RaggedSequences {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
