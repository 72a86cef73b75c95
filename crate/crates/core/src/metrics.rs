//! Accuracy of a candidate system against the hidden original.
//!
//! Productions match on (predecessor, successor) alone. Every per-symbol
//! quantity is divided by the size of the original alphabet.

use std::time::Duration;

use thiserror::Error;

use crate::grammar::{S0LSystem, Symbol};
use crate::procgen::GeneratedCase;
use crate::search::SearchResult;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Probabilities taken from the original.
    S2C,
    /// Probabilities taken from the candidate.
    C2S,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("candidate uses symbol {0} which the original lacks")]
    ForeignSymbol(Symbol),
    #[error("the original has an empty alphabet")]
    EmptyAlphabet,
    #[error("cannot aggregate an empty batch")]
    EmptyBatch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonResult<T> {
    pub wtp_s2c: T,
    pub wtp_c2s: T,
    pub prob_error: T,
    /// Original productions missing from the candidate.
    pub successor_diff: usize,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchReport<T> {
    pub experiments: usize,
    pub success_rate: T,
    /// Mean time to solution.
    pub mtts: Duration,
    pub mean_wtp_s2c: T,
    pub mean_wtp_c2s: T,
    pub mean_prob_error: T,
    pub diff_max: usize,
    pub diff_rate: T,
}

fn divisor<T: Real>(original: &S0LSystem<T>) -> T {
    T::count(original.alphabet().len().max(1))
}

fn lookup<T: Real>(system: Option<&S0LSystem<T>>, p: &crate::grammar::Production<T>) -> Option<T> {
    let s = system?;
    s.find(p.predecessor, &p.successor).map(|i| s.productions()[i].probability)
}

/// Weighted true positives of `candidate` (`None` for no solution).
pub fn wtp<T: Real>(original: &S0LSystem<T>, candidate: Option<&S0LSystem<T>>, direction: Direction) -> T {
    let total = original
        .productions()
        .iter()
        .filter_map(|p| {
            lookup(candidate, p).map(|q| match direction {
                Direction::S2C => p.probability,
                Direction::C2S => q,
            })
        })
        .fold(T::zero(), |a, b| a + b);
    total / divisor(original)
}

/// Probability error: absolute differences on shared productions plus the
/// full mass of missing ones.
pub fn prob_error<T: Real>(original: &S0LSystem<T>, candidate: Option<&S0LSystem<T>>) -> T {
    let total = original
        .productions()
        .iter()
        .map(|p| match lookup(candidate, p) {
            Some(q) => (p.probability - q).abs(),
            None => p.probability,
        })
        .fold(T::zero(), |a, b| a + b);
    total / divisor(original)
}

pub fn successor_diff<T: Real>(original: &S0LSystem<T>, candidate: Option<&S0LSystem<T>>) -> usize {
    original
        .productions()
        .iter()
        .filter(|p| lookup(candidate, p).is_none())
        .count()
}

/// Rejects candidates over symbols the original does not have.
pub fn check_alphabets<T: Real>(original: &S0LSystem<T>, candidate: &S0LSystem<T>) -> Result<(), MetricsError> {
    if original.alphabet().is_empty() {
        return Err(MetricsError::EmptyAlphabet);
    }
    match candidate.alphabet().difference(original.alphabet()).next() {
        Some(&s) => Err(MetricsError::ForeignSymbol(s)),
        None => Ok(()),
    }
}

/// All metrics for one experiment. `candidate` pairs the recovered system
/// with its joint log-probability on the inputs; success allows a relative
/// slack of the scalar's sum tolerance for rounding.
pub fn compare_against<T: Real>(
    original: &S0LSystem<T>,
    original_log_probability: T,
    candidate: Option<(&S0LSystem<T>, T)>,
) -> Result<ComparisonResult<T>, MetricsError> {
    if let Some((c, _)) = candidate {
        check_alphabets(original, c)?;
    } else if original.alphabet().is_empty() {
        return Err(MetricsError::EmptyAlphabet);
    }
    let system = candidate.map(|(c, _)| c);
    let success = candidate.is_some_and(|(_, lp)| {
        lp >= original_log_probability - T::sum_tolerance() * original_log_probability.abs()
    });
    Ok(ComparisonResult {
        wtp_s2c: wtp(original, system, Direction::S2C),
        wtp_c2s: wtp(original, system, Direction::C2S),
        prob_error: prob_error(original, system),
        successor_diff: successor_diff(original, system),
        success,
    })
}

pub fn compare<T: Real>(case: &GeneratedCase<T>, result: &SearchResult<T>) -> Result<ComparisonResult<T>, MetricsError> {
    let candidate = result
        .best
        .as_ref()
        .map(|b| (&b.success.system, b.log_probability()));
    compare_against(&case.system, case.log_probability, candidate)
}

pub fn aggregate<T: Real>(results: &[(ComparisonResult<T>, Duration)]) -> Result<BatchReport<T>, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let n = T::count(results.len());
    let mean = |f: &dyn Fn(&ComparisonResult<T>) -> T| results.iter().map(|(r, _)| f(r)).fold(T::zero(), |a, b| a + b) / n;
    let frac = |f: &dyn Fn(&ComparisonResult<T>) -> bool| T::count(results.iter().filter(|(r, _)| f(r)).count()) / n;
    let total: Duration = results.iter().map(|(_, d)| *d).sum();
    Ok(BatchReport {
        experiments: results.len(),
        success_rate: frac(&|r| r.success),
        mtts: total / results.len() as u32,
        mean_wtp_s2c: mean(&|r| r.wtp_s2c),
        mean_wtp_c2s: mean(&|r| r.wtp_c2s),
        mean_prob_error: mean(&|r| r.prob_error),
        diff_max: results.iter().map(|(r, _)| r.successor_diff).max().unwrap_or(0),
        diff_rate: frac(&|r| r.successor_diff != 0),
    })
}
