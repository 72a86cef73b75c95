//! Procedural generation of benchmark systems and their observed sequences.
//!
//! A system is built from a total successor count `S`:
//!
//! * symbols are taken from [`SYMBOL_POOL`] in order, each drawing 1, 2 or 3
//!   successors with chances 50%, 40% and 10% until the counts reach `S`;
//! * successor probabilities are drawn in whole percents;
//! * successor lengths follow a fixed distribution over 1..=10 and each
//!   successor uses between one and five distinct symbols.
//!
//! Every system is stochastic: at least one symbol has two or more
//! successors.

mod dataset;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use dataset::{
    systems_per_group, ManifestError,
    generate_dataset, parse_manifest, render_manifest, DatasetKind, ManifestRecord, MANIFEST_HEADER,
};

use crate::grammar::{
    derivation_log_probability, derive_sequence, Axiom, Derivation, GrammarError, Production, S0LSystem,
    SequenceSet, Symbol, Word,
};
use crate::Real;

/// Symbols available to generated systems, used as a prefix.
pub const SYMBOL_POOL: [char; 11] = ['A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K'];

/// Percent weights of successor lengths 1 through 10. Lengths 2 and 6 give up
/// two points each so the table sums to 100.
pub const LENGTH_WEIGHTS: [u32; 10] = [4, 14, 20, 20, 20, 14, 4, 2, 1, 1];

/// Percent weights of 1, 2 and 3 successors per symbol.
pub const SUCCESSOR_COUNT_WEIGHTS: [u32; 3] = [50, 40, 10];

/// Most distinct symbols in one successor.
pub const MAX_DISTINCT: usize = 5;

/// Resampling attempts before generation gives up.
pub const RESAMPLE_BUDGET: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    /// `S`, the total number of productions.
    pub successors: usize,
    /// Reject successors of a symbol that are prefixes of one another.
    pub forbid_prefixes: bool,
    pub seed: u64,
    /// `m`, words per observed sequence (derivation steps plus one).
    pub words: usize,
    /// `M`, observed sequences.
    pub sequences: usize,
    /// Probability units per whole; 100 draws whole percents.
    pub granularity: u32,
}

impl GeneratorConfig {
    pub fn new(successors: usize, seed: u64) -> Self {
        GeneratorConfig {
            successors,
            forbid_prefixes: false,
            seed,
            words: 5,
            sequences: 1,
            granularity: 100,
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: &str| Err(GenerationError::Config(m.to_string()));
        if self.successors < 3 {
            return bad("S must be at least 3");
        }
        if self.words < 2 {
            return bad("sequences need at least 2 words");
        }
        if self.sequences == 0 {
            return bad("M must be at least 1");
        }
        if (self.granularity as usize) < self.successors.min(3) {
            return bad("granularity too coarse for three successors");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error("{symbols} symbols needed but the pool has {}", SYMBOL_POOL.len())]
    PoolExhausted { symbols: usize },
    #[error("no admissible successor for {symbol} after {RESAMPLE_BUDGET} attempts")]
    ResampleBudget { symbol: Symbol },
    #[error("{RESAMPLE_BUDGET} consecutive duplicate sequences")]
    DuplicateSequences,
    #[error("case {id} (seed {seed}): {source}")]
    Case {
        id: String,
        seed: u64,
        #[source]
        source: Box<GenerationError>,
    },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// One draw of a symbol's successor count: 1, 2 or 3.
pub fn draw_successor_count<R: Rng + ?Sized>(rng: &mut R) -> usize {
    let d = WeightedIndex::new(SUCCESSOR_COUNT_WEIGHTS).expect("static weights");
    d.sample(rng) + 1
}

/// Per-symbol successor counts summing to `total`. A draw that would
/// overshoot is cut to land on `total`. If every symbol drew one successor,
/// a random symbol gains one and another random symbol is dropped.
pub fn assign_successor_counts<R: Rng + ?Sized>(total: usize, rng: &mut R) -> Vec<usize> {
    assert!(total >= 3, "S must be at least 3");
    let mut counts = Vec::new();
    let mut sum = 0;
    while sum < total {
        let c = draw_successor_count(rng).min(total - sum);
        counts.push(c);
        sum += c;
    }
    if counts.iter().all(|&c| c == 1) {
        let gain = rng.gen_range(0..counts.len());
        let mut drop = rng.gen_range(0..counts.len() - 1);
        if drop >= gain {
            drop += 1;
        }
        counts[gain] += 1;
        counts.remove(drop);
    }
    counts
}

/// `n` probabilities in multiples of `1 / granularity`, each at least one
/// unit, summing to exactly one. Each draw is uniform over what is left
/// after reserving one unit for every successor still to come; the last
/// successor takes the remainder.
pub fn assign_probabilities<T: Real, R: Rng + ?Sized>(n: usize, granularity: u32, rng: &mut R) -> Vec<T> {
    assert!(n >= 1 && n as u32 <= granularity, "cannot split {granularity} units {n} ways");
    let mut left = granularity;
    let mut units = Vec::with_capacity(n);
    for k in 0..n - 1 {
        let reserved = (n - 1 - k) as u32;
        let p = rng.gen_range(1..=left - reserved);
        units.push(p);
        left -= p;
    }
    units.push(left);
    let g = T::lit(granularity as f64);
    units.into_iter().map(|u| T::lit(u as f64) / g).collect()
}

pub fn sample_successor_length<R: Rng + ?Sized>(rng: &mut R) -> usize {
    let d = WeightedIndex::new(LENGTH_WEIGHTS).expect("static weights");
    d.sample(rng) + 1
}

/// A word of `length` symbols using exactly `k` distinct symbols of
/// `alphabet`, with `k` uniform over `1..=min(5, length, |alphabet|)`.
pub fn sample_successor_word<R: Rng + ?Sized>(length: usize, alphabet: &[Symbol], rng: &mut R) -> Word {
    assert!(length >= 1 && !alphabet.is_empty());
    let k = rng.gen_range(1..=MAX_DISTINCT.min(length).min(alphabet.len()));
    let chosen: Vec<Symbol> = alphabet.choose_multiple(rng, k).copied().collect();
    let mut symbols = chosen.clone();
    while symbols.len() < length {
        symbols.push(*chosen.choose(rng).expect("non-empty"));
    }
    symbols.shuffle(rng);
    Word::new(symbols).expect("non-empty word")
}

fn prefix_related(a: &Word, b: &Word) -> bool {
    a.starts_with(b) || b.starts_with(a)
}

/// Builds a random system with `config.successors` productions and a single
/// sampled axiom.
pub fn generate_system<T: Real, R: Rng + ?Sized>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<S0LSystem<T>, GenerationError> {
    config.validate()?;
    let counts = assign_successor_counts(config.successors, rng);
    if counts.len() > SYMBOL_POOL.len() {
        return Err(GenerationError::PoolExhausted { symbols: counts.len() });
    }
    let alphabet: Vec<Symbol> = SYMBOL_POOL[..counts.len()]
        .iter()
        .map(|&c| Symbol::new(c).expect("pool symbol"))
        .collect();

    let mut productions = Vec::with_capacity(config.successors);
    for (&symbol, &n) in alphabet.iter().zip(&counts) {
        let probabilities = assign_probabilities::<T, _>(n, config.granularity, rng);
        let mut successors: Vec<Word> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut attempts = 0;
            let word = loop {
                if attempts == RESAMPLE_BUDGET {
                    return Err(GenerationError::ResampleBudget { symbol });
                }
                attempts += 1;
                let w = sample_successor_word(sample_successor_length(rng), &alphabet, rng);
                let clash = successors
                    .iter()
                    .any(|s| *s == w || (config.forbid_prefixes && prefix_related(s, &w)));
                if !clash {
                    break w;
                }
            };
            successors.push(word);
        }
        for (w, p) in successors.into_iter().zip(probabilities) {
            productions.push(Production::new(symbol, w, p));
        }
    }

    let axiom = sample_successor_word(sample_successor_length(rng), &alphabet, rng);
    Ok(S0LSystem::new(
        alphabet,
        vec![Axiom {
            word: axiom,
            probability: T::one(),
        }],
        productions,
    ))
}

/// A hidden system with the sequences it produced.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedCase<T> {
    pub id: String,
    /// `S`
    pub successors: usize,
    pub seed: u64,
    pub system: S0LSystem<T>,
    pub inputs: SequenceSet,
    /// One per sequence, in order.
    pub derivations: Vec<Derivation>,
    /// Joint log-probability of the derivations, axiom term excluded.
    pub log_probability: T,
}

impl<T: Real> GeneratedCase<T> {
    /// The same system observed through its first `count` sequences only.
    pub fn with_sequences(&self, count: usize, id: impl Into<String>) -> Result<Self, GenerationError> {
        let derivations: Vec<Derivation> = self.derivations.iter().take(count).cloned().collect();
        let log_probability = joint(&self.system, &derivations)?;
        Ok(GeneratedCase {
            id: id.into(),
            successors: self.successors,
            seed: self.seed,
            system: self.system.clone(),
            inputs: self.inputs.prefix(count)?,
            derivations,
            log_probability,
        })
    }
}

fn joint<T: Real>(system: &S0LSystem<T>, derivations: &[Derivation]) -> Result<T, GrammarError> {
    let mut total = T::zero();
    for d in derivations {
        total = total + derivation_log_probability(system, d, false)?;
    }
    Ok(total)
}

/// Generates a system and `config.sequences` pairwise distinct sequences
/// from `ChaCha8Rng::seed_from_u64(config.seed)`. Sequences are drawn one
/// after another, so a case with fewer sequences is a prefix of one with
/// more under the same seed.
pub fn generate_case<T: Real>(config: &GeneratorConfig, id: impl Into<String>) -> Result<GeneratedCase<T>, GenerationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let system = generate_system::<T, _>(config, &mut rng)?;
    let mut derivations: Vec<Derivation> = Vec::with_capacity(config.sequences);
    let mut rejected = 0;
    while derivations.len() < config.sequences {
        let d = derive_sequence(&system, config.words - 1, &mut rng)?;
        if derivations.iter().any(|e| e.trace() == d.trace()) {
            rejected += 1;
            if rejected == RESAMPLE_BUDGET {
                return Err(GenerationError::DuplicateSequences);
            }
            continue;
        }
        rejected = 0;
        derivations.push(d);
    }
    let inputs = SequenceSet::new(derivations.iter().map(|d| d.trace().to_vec()).collect())?;
    let log_probability = joint(&system, &derivations)?;
    Ok(GeneratedCase {
        id: id.into(),
        successors: config.successors,
        seed: config.seed,
        system,
        inputs,
        derivations,
        log_probability,
    })
}

#[cfg(test)]
mod tests;
