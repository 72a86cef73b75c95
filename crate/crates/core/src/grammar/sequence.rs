use std::collections::BTreeSet;

use super::{Axiom, GrammarError, Symbol, Word};
use crate::Real;

/// The observed input: `M >= 1` sequences of `m >= 2` words each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceSet {
    sequences: Vec<Vec<Word>>,
}

impl SequenceSet {
    /// Requires every sequence to have the same number (at least two) of words.
    pub fn new(sequences: Vec<Vec<Word>>) -> Result<Self, GrammarError> {
        let first = sequences.first().ok_or(GrammarError::NoSequences)?;
        let m = first.len();
        for (i, s) in sequences.iter().enumerate() {
            if s.len() < 2 {
                return Err(GrammarError::SequenceTooShort(i));
            }
            if s.len() != m {
                return Err(GrammarError::RaggedSequences {
                    index: i,
                    found: s.len(),
                    expected: m,
                });
            }
        }
        Ok(SequenceSet { sequences })
    }

    /// Truncates every sequence to the length of the shortest one.
    pub fn truncated(mut sequences: Vec<Vec<Word>>) -> Result<Self, GrammarError> {
        let m = sequences.iter().map(Vec::len).min().ok_or(GrammarError::NoSequences)?;
        for s in &mut sequences {
            s.truncate(m);
        }
        Self::new(sequences)
    }

    /// Parses sequences given as string slices. Mostly a test convenience.
    pub fn from_strs<S: AsRef<str>>(sequences: &[&[S]]) -> Result<Self, GrammarError> {
        let parsed = sequences
            .iter()
            .map(|s| s.iter().map(|w| w.as_ref().parse()).collect::<Result<Vec<Word>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(parsed)
    }

    pub fn sequences(&self) -> &[Vec<Word>] {
        &self.sequences
    }

    /// `M`
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// `m`, the number of words per sequence.
    pub fn words_per_sequence(&self) -> usize {
        self.sequences[0].len()
    }

    pub fn total_symbols(&self) -> usize {
        self.sequences.iter().flatten().map(|w| w.len()).sum()
    }

    /// A set holding only the first `count` sequences.
    pub fn prefix(&self, count: usize) -> Result<Self, GrammarError> {
        Self::new(self.sequences.iter().take(count).cloned().collect())
    }
}

/// Every symbol occurring anywhere in `rho`.
pub fn infer_alphabet(rho: &SequenceSet) -> BTreeSet<Symbol> {
    rho.sequences
        .iter()
        .flatten()
        .flat_map(|w| w.iter().copied())
        .collect()
}

/// The distinct first words, in order of first appearance, each weighted by
/// how many sequences start with it divided by `M`.
pub fn infer_axioms<T: Real>(rho: &SequenceSet) -> Vec<Axiom<T>> {
    let mut counts: Vec<(Word, usize)> = Vec::new();
    for s in &rho.sequences {
        match counts.iter_mut().find(|(w, _)| *w == s[0]) {
            Some((_, c)) => *c += 1,
            None => counts.push((s[0].clone(), 1)),
        }
    }
    let total = T::count(rho.len());
    counts
        .into_iter()
        .map(|(word, c)| Axiom {
            word,
            probability: T::count(c) / total,
        })
        .collect()
}
