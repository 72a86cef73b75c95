//! Greedy successor-selection scan.
//!
//! Given the observed sequences and an integer search vector, the scan
//! partitions every word into successors of the symbols of the previous
//! word, left to right. At each symbol the first applicable rule wins:
//!
//! 1. the last symbol of a word takes everything left of the next word;
//! 2. otherwise the most frequently selected known successor of the symbol
//!    that matches the upcoming symbols is reused (greedy choice);
//! 3. otherwise the next vector entry gives the successor length;
//! 4. otherwise the scan fails.
//!
//! In prefix-limited mode the vector interleaves greedy budgets with
//! lengths, `(t_1, y_1, ..., t_N, y_N)`: after `y_z` is used at most
//! `t_{z+1}` greedy choices are allowed before rule 3 is forced, and `t_1`
//! bounds the greedy choices before the first rule-3 use.

mod engine;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub(crate) use engine::{Corpus, Layout, Request, ScanState, Step};

use crate::grammar::{
    infer_axioms, Derivation, Production, S0LSystem, SequenceSet, Symbol, Word,
};
use crate::Real;

/// Longest successor a search vector may ask for.
pub const MAX_SUCCESSOR_LENGTH: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScanMode {
    /// `(y_1, ..., y_N)`
    Plain,
    /// `(t_1, y_1, ..., t_N, y_N)`
    PrefixLimited,
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanMode::Plain => "plain",
            ScanMode::PrefixLimited => "pl",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VectorError {
    #[error("a search vector needs at least one dimension")]
    Empty,
    #[error("successor length {0} outside [1, {MAX_SUCCESSOR_LENGTH}]")]
    LengthOutOfRange(u32),
    #[error("prefix-limited vectors interleave budgets and lengths; got {0} entries")]
    OddLength(usize),
}

/// The integer vector a scan is driven by.
///
/// `extensions` holds lengths appended beyond the `N` base dimensions when
/// the scan ran out of entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SearchVector {
    mode: ScanMode,
    base: Vec<u32>,
    extensions: Vec<u32>,
}

fn check_length(y: u32) -> Result<(), VectorError> {
    if (1..=MAX_SUCCESSOR_LENGTH).contains(&y) {
        Ok(())
    } else {
        Err(VectorError::LengthOutOfRange(y))
    }
}

impl SearchVector {
    pub fn plain(lengths: Vec<u32>) -> Result<Self, VectorError> {
        if lengths.is_empty() {
            return Err(VectorError::Empty);
        }
        lengths.iter().try_for_each(|&y| check_length(y))?;
        Ok(SearchVector {
            mode: ScanMode::Plain,
            base: lengths,
            extensions: Vec::new(),
        })
    }

    /// Builds `(t_1, y_1, ..., t_N, y_N)` from `(t_z, y_z)` pairs.
    pub fn prefix_limited(pairs: &[(u32, u32)]) -> Result<Self, VectorError> {
        if pairs.is_empty() {
            return Err(VectorError::Empty);
        }
        pairs.iter().try_for_each(|&(_, y)| check_length(y))?;
        Ok(SearchVector {
            mode: ScanMode::PrefixLimited,
            base: pairs.iter().flat_map(|&(t, y)| [t, y]).collect(),
            extensions: Vec::new(),
        })
    }

    /// Builds a vector from its flat layout: the base entries followed by any
    /// extension lengths.
    pub fn from_flat(mode: ScanMode, dimensions: usize, flat: &[u32]) -> Result<Self, VectorError> {
        let base_len = match mode {
            ScanMode::Plain => dimensions,
            ScanMode::PrefixLimited => 2 * dimensions,
        };
        if dimensions == 0 {
            return Err(VectorError::Empty);
        }
        if flat.len() < base_len {
            return Err(match mode {
                ScanMode::PrefixLimited if flat.len() % 2 == 1 => VectorError::OddLength(flat.len()),
                _ => VectorError::Empty,
            });
        }
        let (base, extensions) = flat.split_at(base_len);
        let mut v = match mode {
            ScanMode::Plain => Self::plain(base.to_vec())?,
            ScanMode::PrefixLimited => {
                let pairs: Vec<(u32, u32)> = base.chunks(2).map(|c| (c[0], c[1])).collect();
                Self::prefix_limited(&pairs)?
            }
        };
        extensions.iter().try_for_each(|&y| check_length(y))?;
        v.extensions = extensions.to_vec();
        Ok(v)
    }

    pub fn with_extension(mut self, length: u32) -> Result<Self, VectorError> {
        check_length(length)?;
        self.extensions.push(length);
        Ok(self)
    }

    pub fn mode(&self) -> ScanMode {
        self.mode
    }

    /// `N`, the number of base successor lengths.
    pub fn dimensions(&self) -> usize {
        match self.mode {
            ScanMode::Plain => self.base.len(),
            ScanMode::PrefixLimited => self.base.len() / 2,
        }
    }

    pub fn base(&self) -> &[u32] {
        &self.base
    }

    pub fn extensions(&self) -> &[u32] {
        &self.extensions
    }

    /// Base entries followed by extensions, in consumption order.
    pub fn flat(&self) -> Vec<u32> {
        self.base.iter().chain(&self.extensions).copied().collect()
    }
}

impl fmt::Display for SearchVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.flat().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            if i == self.base.len() {
                write!(f, "+")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Index of the candidate with the highest count among those that are a
/// prefix of `suffix` and no longer than `max`. Ties go to the earliest
/// candidate, so callers pass candidates in creation order.
pub(crate) fn most_frequent_match<'a, S: PartialEq + 'a, C: Copy>(
    candidates: impl Iterator<Item = (C, &'a [S], u32)>,
    suffix: &[S],
    max: usize,
) -> Option<C> {
    let mut best: Option<(C, u32)> = None;
    for (id, successor, count) in candidates {
        if successor.len() <= max && suffix.starts_with(successor) {
            if best.map_or(true, |(_, c)| count > c) {
                best = Some((id, count));
            }
        }
    }
    best.map(|(id, _)| id)
}

/// One known successor of a symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableEntry {
    pub successor: Word,
    pub count: u32,
    /// Global creation order; increases along each symbol's list.
    pub creation: usize,
}

/// Successors selected so far, per symbol, with selection counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuccessorTable {
    entries: BTreeMap<Symbol, Vec<TableEntry>>,
    created: usize,
}

impl SuccessorTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one more selection of `symbol -> successor`, creating the
    /// entry on first use.
    pub fn record(&mut self, symbol: Symbol, successor: &Word) {
        let list = self.entries.entry(symbol).or_default();
        match list.iter_mut().find(|e| &e.successor == successor) {
            Some(e) => e.count += 1,
            None => {
                list.push(TableEntry {
                    successor: successor.clone(),
                    count: 1,
                    creation: self.created,
                });
                self.created += 1;
            }
        }
    }

    pub fn entries(&self, symbol: Symbol) -> &[TableEntry] {
        self.entries.get(&symbol).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &TableEntry)> {
        self.entries.iter().flat_map(|(s, v)| v.iter().map(move |e| (*s, e)))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rule 2: the most frequently selected known successor of `symbol` that
/// is a prefix of `remaining` and at most `max` symbols long.
pub fn greedy_select<'t>(
    table: &'t SuccessorTable,
    symbol: Symbol,
    remaining: &[Symbol],
    max: usize,
) -> Option<&'t TableEntry> {
    let list = table.entries(symbol);
    most_frequent_match(
        list.iter().map(|e| (e, &*e.successor, e.count)),
        remaining,
        max,
    )
}

/// Feasible successor lengths for the symbol at `index` (0-based) of
/// `current`, when `matched` symbols of `next` are already accounted for.
///
/// Every later symbol of `current` needs at least one symbol of `next`, so
/// the successor can be at most `|next| - matched - (|current| - index - 1)`
/// long. Returns `None` when that bound is below one.
pub fn feasible_length_bounds(
    current: &[Symbol],
    next: &[Symbol],
    index: usize,
    matched: usize,
) -> Option<(usize, usize)> {
    assert!(index < current.len(), "index outside the current word");
    let reserved = current.len() - index - 1;
    let max = next.len().checked_sub(matched)?.checked_sub(reserved)?;
    (max >= 1).then_some((1, max))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailureReason {
    /// The next word is shorter than the current one.
    WordShrinks,
    /// A vector entry asked for a successor that does not fit.
    LengthOutOfBounds { length: usize, max: usize },
    /// Rule 3 was needed after the vector and the extension allowance for
    /// the word were used up.
    VectorExhausted,
}

/// Where and why a scan found the vector incompatible with the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incompatibility {
    pub sequence: usize,
    /// Index of the word being rewritten.
    pub word: usize,
    /// Position of the symbol in that word.
    pub symbol: usize,
    pub reason: FailureReason,
    /// Flat index of the vector entry being consumed, if any.
    pub entry: Option<usize>,
}

/// A candidate system compatible with the input, and the derivations the
/// scan recovered for it.
#[derive(Clone, Debug)]
pub struct ScanSuccess<T> {
    pub system: S0LSystem<T>,
    /// One per input sequence; `sigma` indexes `system`'s productions.
    pub derivations: Vec<Derivation>,
    /// Joint log-probability of `derivations` under `system`, without axiom
    /// terms.
    pub log_probability: T,
    pub table: SuccessorTable,
    /// Selection count of each production of `system`.
    pub counts: Vec<u32>,
}

#[derive(Clone, Debug)]
pub enum ScanResult<T> {
    Success(Box<ScanSuccess<T>>),
    Incompatible(Incompatibility),
    /// The vector ran out but the per-word allowance permits appending
    /// `count` more lengths.
    NeedsExtension { count: usize },
}

#[derive(Clone, Debug)]
pub struct ScanOutcome<T> {
    pub result: ScanResult<T>,
    /// How many flat vector entries influenced the scan. Entries past this
    /// point can take any value without changing the outcome.
    pub entries_used: usize,
    /// For each greedy budget consumed (prefix-limited mode), whether it
    /// stopped a greedy choice that was available. A budget that never did
    /// behaves identically to any larger budget.
    pub budget_binding: Vec<bool>,
}

impl<T> ScanOutcome<T> {
    pub fn success(&self) -> Option<&ScanSuccess<T>> {
        match &self.result {
            ScanResult::Success(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_success(self) -> Option<ScanSuccess<T>> {
        match self.result {
            ScanResult::Success(s) => Some(*s),
            _ => None,
        }
    }
}

/// Scans `rho` with `vector`, allowing `extension_limit` extra lengths per
/// rewritten word once the vector is used up.
pub fn scan<T: Real>(rho: &SequenceSet, vector: &SearchVector, extension_limit: usize) -> ScanOutcome<T> {
    Scanner::new(rho).scan(vector, extension_limit)
}

/// A sequence set prepared for repeated scanning.
#[derive(Clone, Debug)]
pub struct Scanner<'a> {
    rho: &'a SequenceSet,
    corpus: Corpus,
}

/// How a vector-driven run ended, before any materialisation.
pub(crate) enum Driven {
    Done(ScanState),
    Failed(ScanState, Incompatibility),
    NeedsExtension(ScanState),
}

impl<'a> Scanner<'a> {
    pub fn new(rho: &'a SequenceSet) -> Self {
        Scanner {
            rho,
            corpus: Corpus::new(rho),
        }
    }

    pub fn input(&self) -> &'a SequenceSet {
        self.rho
    }

    /// Largest greedy budget that can behave differently from a smaller
    /// one: the number of non-final symbol occurrences in the rewritten
    /// words.
    pub fn greedy_cap(&self) -> u32 {
        self.corpus.greedy_cap
    }

    pub(crate) fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub(crate) fn drive(&self, layout: &Layout, flat: &[u32], record: bool) -> Driven {
        let mut state = ScanState::new(layout, record);
        let mut input = None;
        loop {
            match state.advance(&self.corpus, layout, input.take()) {
                Step::Done => return Driven::Done(state),
                Step::Failed(f) => return Driven::Failed(state, f),
                Step::Need(_) => match flat.get(state.consumed) {
                    Some(&v) => input = Some(v),
                    None => return Driven::NeedsExtension(state),
                },
            }
        }
    }

    pub fn scan<T: Real>(&self, vector: &SearchVector, extension_limit: usize) -> ScanOutcome<T> {
        let layout = Layout {
            mode: vector.mode(),
            dimensions: vector.dimensions(),
            extension_limit,
        };
        let flat = vector.flat();
        match self.drive(&layout, &flat, true) {
            Driven::Done(state) => {
                let success = self.materialize(&state);
                ScanOutcome {
                    result: ScanResult::Success(Box::new(success)),
                    entries_used: state.consumed,
                    budget_binding: state.binding,
                }
            }
            Driven::Failed(state, f) => ScanOutcome {
                result: ScanResult::Incompatible(f),
                entries_used: state.consumed,
                budget_binding: state.binding,
            },
            Driven::NeedsExtension(state) => ScanOutcome {
                result: ScanResult::NeedsExtension { count: 1 },
                entries_used: state.consumed,
                budget_binding: state.binding,
            },
        }
    }

    pub(crate) fn materialize<T: Real>(&self, state: &ScanState) -> ScanSuccess<T> {
        let corpus = &self.corpus;
        let word_of = |ids: &[u32]| {
            Word::new(ids.iter().map(|&i| corpus.alphabet[i as usize]).collect()).expect("non-empty successor")
        };

        // productions ordered by symbol, then creation
        let mut order: Vec<usize> = (0..state.table.len()).collect();
        order.sort_by_key(|&i| (state.table[i].sym, i));
        let mut production_of = vec![0usize; state.table.len()];
        let mut totals = vec![0u32; corpus.alphabet.len()];
        for e in &state.table {
            totals[e.sym as usize] += e.count;
        }
        let mut productions = Vec::with_capacity(order.len());
        let mut counts = Vec::with_capacity(order.len());
        let mut table = SuccessorTable::new();
        for (rank, &i) in order.iter().enumerate() {
            let e = &state.table[i];
            production_of[i] = rank;
            let probability = T::lit(e.count as f64) / T::lit(totals[e.sym as usize] as f64);
            productions.push(Production::new(
                corpus.alphabet[e.sym as usize],
                word_of(corpus.slice(e)),
                probability,
            ));
            counts.push(e.count);
        }
        for e in &state.table {
            let symbol = corpus.alphabet[e.sym as usize];
            let successor = word_of(corpus.slice(e));
            table.entries.entry(symbol).or_default().push(TableEntry {
                successor,
                count: e.count,
                creation: table.created,
            });
            table.created += 1;
        }

        let system = S0LSystem::new(
            corpus.alphabet.iter().copied(),
            infer_axioms(self.rho),
            productions,
        );

        let trail = state.trail.as_ref().expect("recorded scan");
        let mut cursor = trail.iter();
        let derivations = self
            .rho
            .sequences()
            .iter()
            .map(|seq| {
                let sigma = seq[..seq.len() - 1]
                    .iter()
                    .map(|w| {
                        (0..w.len())
                            .map(|_| production_of[*cursor.next().expect("trail covers input") as usize])
                            .collect()
                    })
                    .collect();
                Derivation::new(seq.clone(), sigma)
            })
            .collect();

        ScanSuccess {
            system,
            derivations,
            log_probability: state.log_likelihood(corpus.alphabet.len()),
            table,
            counts,
        }
    }
}
