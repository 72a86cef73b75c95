//! Search over scan vectors for the most probable compatible system.
//!
//! Every candidate vector is turned into a system by the scanner and scored
//! by the joint log-probability of the recovered derivations. Two strategies
//! propose vectors: an exhaustive depth-first enumeration with pruning
//! ([`Strategy::Exhaustive`]) and a standard genetic algorithm
//! ([`Strategy::Genetic`]). The best system is replaced only on strict
//! improvement, so ties keep the first one found.

mod es;
mod sga;

use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use es::{EsEnumerator, Feedback};
pub use sga::{sga_init, sga_iterate, sga_terminated, GeneSpace, Member, SgaParams};

use crate::grammar::SequenceSet;
use crate::scanner::{Layout, ScanMode, ScanSuccess, Scanner, SearchVector};
use crate::Real;

/// Default wall-clock budget for one search.
pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(12 * 60 * 60);

#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Exhaustive,
    Genetic(SgaParams),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Exhaustive => "es",
            Strategy::Genetic(_) => "sga",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Number of successor lengths in the base vector.
    pub n: usize,
    pub mode: ScanMode,
    pub strategy: Strategy,
    pub time_budget: Duration,
    /// Vector entries that may be appended per rewritten word.
    pub extension_limit: usize,
    /// Exhaustive search only: skip vectors whose outcome is already known.
    pub pruning: bool,
}

impl SearchConfig {
    pub fn new(n: usize, mode: ScanMode, strategy: Strategy) -> Self {
        SearchConfig {
            n,
            mode,
            strategy,
            time_budget: DEFAULT_TIME_BUDGET,
            extension_limit: 1,
            pruning: true,
        }
    }

    pub fn with_time_budget(mut self, budget: Duration) -> Self {
        self.time_budget = budget;
        self
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.n == 0 {
            return Err(SearchError::ZeroDimensions);
        }
        if self.time_budget.is_zero() {
            return Err(SearchError::ZeroBudget);
        }
        if let Strategy::Genetic(p) = &self.strategy {
            p.validate()?;
        }
        Ok(())
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout {
            mode: self.mode,
            dimensions: self.n,
            extension_limit: self.extension_limit,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("N must be at least 1")]
    ZeroDimensions,
    #[error("time budget must be positive")]
    ZeroBudget,
    #[error("population size must be even and at least 2, got {0}")]
    Population(usize),
    #[error("{name} weight {value} outside [0, 1]")]
    Weight { name: &'static str, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    /// The exhaustive search visited every vector it did not prune.
    Exhausted,
    /// The genetic algorithm met its convergence rule.
    Converged,
    TimedOut,
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStatus::Exhausted => "exhausted",
            SearchStatus::Converged => "converged",
            SearchStatus::TimedOut => "timed-out",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Best<T> {
    pub vector: SearchVector,
    pub success: ScanSuccess<T>,
}

impl<T: Real> Best<T> {
    pub fn log_probability(&self) -> T {
        self.success.log_probability
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult<T> {
    /// `None` when no evaluated vector scanned successfully.
    pub best: Option<Best<T>>,
    /// Vectors scanned to completion or failure.
    pub evaluated: u64,
    pub elapsed: Duration,
    pub status: SearchStatus,
    /// Genetic search only: generations run and the one that found the best.
    pub generations: Option<(usize, usize)>,
}

/// Reported whenever the best system improves.
#[derive(Clone, Copy, Debug)]
pub struct Progress {
    pub elapsed: Duration,
    pub evaluated: u64,
    pub log_probability: f64,
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.3}s evaluated={} best={}",
            self.elapsed.as_secs_f64(),
            self.evaluated,
            self.log_probability
        )
    }
}

pub fn run_search<T: Real>(rho: &SequenceSet, config: &SearchConfig) -> Result<SearchResult<T>, SearchError> {
    run_search_with_progress(rho, config, &mut |_| {})
}

pub fn run_search_with_progress<T: Real>(
    rho: &SequenceSet,
    config: &SearchConfig,
    progress: &mut dyn FnMut(&Progress),
) -> Result<SearchResult<T>, SearchError> {
    config.validate()?;
    let scanner = Scanner::new(rho);
    let start = Instant::now();
    let deadline = start.checked_add(config.time_budget);
    let found = match &config.strategy {
        Strategy::Exhaustive if config.pruning => es::depth_first::<T>(&scanner, config, start, deadline, progress),
        Strategy::Exhaustive => es::enumerate::<T>(&scanner, config, start, deadline, progress),
        Strategy::Genetic(params) => sga::run::<T>(&scanner, config, params, start, deadline, progress),
    };
    let best = found.best.map(|flat| {
        let vector = SearchVector::from_flat(config.mode, config.n, &pad(config, &flat))
            .expect("search only proposes legal vectors");
        let success = scanner
            .scan::<T>(&vector, config.extension_limit)
            .into_success()
            .expect("best vector rescans successfully");
        Best { vector, success }
    });
    Ok(SearchResult {
        best,
        evaluated: found.evaluated,
        elapsed: start.elapsed(),
        status: found.status,
        generations: found.generations,
    })
}

/// Runs the search with `config.n`, then with `n + 1`, ... up to `max_n`
/// while no compatible system is found. The time budget is shared. Returns
/// the last result and the `n` it used.
pub fn run_search_with_retry<T: Real>(
    rho: &SequenceSet,
    config: &SearchConfig,
    max_n: usize,
    progress: &mut dyn FnMut(&Progress),
) -> Result<(SearchResult<T>, usize), SearchError> {
    let start = Instant::now();
    let mut cfg = config.clone();
    loop {
        let remaining = config.time_budget.saturating_sub(start.elapsed());
        if remaining.is_zero() {
            cfg.time_budget = Duration::from_nanos(1);
        } else {
            cfg.time_budget = remaining;
        }
        let mut result = run_search_with_progress::<T>(rho, &cfg, progress)?;
        if result.best.is_some() || result.status == SearchStatus::TimedOut || cfg.n >= max_n {
            result.elapsed = start.elapsed();
            return Ok((result, cfg.n));
        }
        cfg.n += 1;
    }
}

/// Unread trailing entries never influence a scan; fill them with the
/// smallest legal values so the vector has its full shape.
fn pad(config: &SearchConfig, flat: &[u32]) -> Vec<u32> {
    let base = base_len(config.mode, config.n);
    let mut out = flat.to_vec();
    while out.len() < base {
        let t_slot = config.mode == ScanMode::PrefixLimited && out.len() % 2 == 0;
        out.push(if t_slot { 0 } else { 1 });
    }
    out
}

pub(crate) fn base_len(mode: ScanMode, n: usize) -> usize {
    match mode {
        ScanMode::Plain => n,
        ScanMode::PrefixLimited => 2 * n,
    }
}

/// What a strategy hands back before the best vector is rescanned.
pub(crate) struct Found {
    pub best: Option<Vec<u32>>,
    pub evaluated: u64,
    pub status: SearchStatus,
    pub generations: Option<(usize, usize)>,
}

pub(crate) fn timed_out(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}
