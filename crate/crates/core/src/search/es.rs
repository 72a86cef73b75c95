//! Exhaustive depth-first search.
//!
//! [`depth_first`] walks the tree of partial scans directly: the scan runs
//! until it needs a vector entry, and the state is cloned once per candidate
//! value. A vector is only ever extended by entries the scan actually reads,
//! so vectors sharing a prefix whose outcome is already settled are never
//! visited. On top of that:
//!
//! * a length that overshoots the feasible bound ends the loop over larger
//!   lengths at that entry, since the bound does not depend on the value;
//! * a greedy budget that never stopped an available greedy choice anywhere
//!   in its subtree ends the loop over larger budgets, since those replay the
//!   same subtree;
//! * a partial scan that cannot beat the best complete one is abandoned
//!   (see [`ScanState::completion_bound`]); the best is only replaced on
//!   strict improvement, so this never changes the result.
//!
//! [`EsEnumerator`] is the plain vector-at-a-time form with caller feedback.
//! It is used when pruning is disabled and as a reference for the fast path.

use std::time::Instant;

use super::{base_len, timed_out, Found, Progress, SearchConfig, SearchStatus};
use crate::scanner::{
    Driven, FailureReason, Layout, Request, ScanMode, ScanState, Scanner, Step, MAX_SUCCESSOR_LENGTH,
};
use crate::Real;

const CLOCK_EVERY: u64 = 64;

struct Dfs<'s, 'a, 'p, T> {
    scanner: &'s Scanner<'a>,
    layout: Layout,
    cap: u32,
    symbols: usize,
    start: Instant,
    deadline: Option<Instant>,
    progress: &'p mut dyn FnMut(&Progress),
    evaluated: u64,
    best: Option<(T, Vec<u32>)>,
    path: Vec<u32>,
    /// Per budget entry on the current path: set when a leaf below it found
    /// the budget binding.
    bound: Vec<bool>,
    /// Subtrees abandoned by the likelihood bound.
    cut: u64,
    stopped: bool,
}

#[derive(PartialEq, Eq)]
enum Visit {
    OutOfBounds,
    Other,
}

impl<T: Real> Dfs<'_, '_, '_, T> {
    fn visit(&mut self, mut state: ScanState, input: Option<u32>) -> Visit {
        let entry = state.consumed;
        match state.advance(self.scanner.corpus(), &self.layout, input) {
            Step::Done => {
                self.leaf(&state);
                let ll: T = state.log_likelihood(self.symbols);
                if self.best.as_ref().is_none_or(|(b, _)| ll > *b) {
                    self.best = Some((ll, self.path.clone()));
                    (self.progress)(&Progress {
                        elapsed: self.start.elapsed(),
                        evaluated: self.evaluated,
                        log_probability: ll.to_f64().unwrap_or(f64::NAN),
                    });
                }
                Visit::Other
            }
            Step::Failed(f) => {
                self.leaf(&state);
                match f.reason {
                    FailureReason::LengthOutOfBounds { .. } if input.is_some() && f.entry == Some(entry) => {
                        Visit::OutOfBounds
                    }
                    _ => Visit::Other,
                }
            }
            Step::Need(request) => {
                if let Some((best, _)) = &self.best {
                    // slack absorbs rounding differences between the bound and
                    // a leaf's own evaluation
                    let slack = T::sum_tolerance() * best.abs().max(T::one());
                    if state.completion_bound::<T>(self.scanner.corpus()) + slack <= *best {
                        self.cut += 1;
                        // the open budget might have bound further on
                        for (i, &b) in state.binding.iter().enumerate() {
                            if b || Some(i) == state.open_budget() {
                                self.bound[i] = true;
                            }
                        }
                        return Visit::Other;
                    }
                }
                self.expand(state, request);
                Visit::Other
            }
        }
    }

    fn leaf(&mut self, state: &ScanState) {
        self.evaluated += 1;
        for (i, &b) in state.binding.iter().enumerate() {
            if b {
                self.bound[i] = true;
            }
        }
        if self.evaluated % CLOCK_EVERY == 0 && timed_out(self.deadline) {
            self.stopped = true;
        }
    }

    fn expand(&mut self, state: ScanState, request: Request) {
        match request {
            Request::Budget => {
                let b = state.binding.len();
                if self.bound.len() <= b {
                    self.bound.resize(b + 1, false);
                }
                for t in 0..=self.cap {
                    if self.stopped {
                        return;
                    }
                    self.bound[b] = false;
                    self.path.push(t);
                    self.visit(state.clone(), Some(t));
                    self.path.pop();
                    if !self.bound[b] {
                        break;
                    }
                }
            }
            Request::Length | Request::Extension => {
                for y in 1..=MAX_SUCCESSOR_LENGTH {
                    if self.stopped {
                        return;
                    }
                    self.path.push(y);
                    let v = self.visit(state.clone(), Some(y));
                    self.path.pop();
                    if v == Visit::OutOfBounds {
                        break;
                    }
                }
            }
        }
    }
}

pub(crate) fn depth_first<T: Real>(
    scanner: &Scanner<'_>,
    config: &SearchConfig,
    start: Instant,
    deadline: Option<Instant>,
    progress: &mut dyn FnMut(&Progress),
) -> Found {
    let layout = config.layout();
    let mut dfs = Dfs::<T> {
        scanner,
        layout,
        cap: scanner.greedy_cap(),
        symbols: scanner.corpus().alphabet.len(),
        start,
        deadline,
        progress,
        evaluated: 0,
        best: None,
        path: Vec::new(),
        bound: vec![false; config.n],
        cut: 0,
        stopped: false,
    };
    dfs.visit(ScanState::new(&layout, false), None);
    Found {
        best: dfs.best.map(|(_, path)| path),
        evaluated: dfs.evaluated,
        status: if dfs.stopped {
            SearchStatus::TimedOut
        } else {
            SearchStatus::Exhausted
        },
        generations: None,
    }
}

/// What the caller observed when scanning the last proposed vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feedback {
    /// The scan succeeded after reading `entries_used` entries.
    Completed { entries_used: usize },
    /// The scan failed after reading `entries_used` entries; `out_of_bounds`
    /// when the last entry read was a length beyond the feasible bound.
    Failed { entries_used: usize, out_of_bounds: bool },
    /// The scan needs one more entry appended.
    NeedsExtension,
}

/// Depth-first odometer over flat vectors.
///
/// Budget entries range over `[0, cap]`, lengths and extensions over
/// `[1, 10]`. With pruning, feedback moves the odometer past every vector
/// that shares the prefix the scan read, and past larger lengths after an
/// out-of-bounds failure. Without pruning every base vector is proposed.
#[derive(Clone, Debug)]
pub struct EsEnumerator {
    mode: ScanMode,
    base: usize,
    cap: u32,
    pruning: bool,
    current: Vec<u32>,
    done: bool,
}

impl EsEnumerator {
    pub fn new(mode: ScanMode, n: usize, cap: u32, pruning: bool) -> Self {
        let base = base_len(mode, n);
        let mut e = EsEnumerator {
            mode,
            base,
            cap,
            pruning,
            current: Vec::with_capacity(base + 4),
            done: base == 0,
        };
        e.current = (0..base).map(|i| e.lo(i)).collect();
        e
    }

    fn is_budget(&self, i: usize) -> bool {
        self.mode == ScanMode::PrefixLimited && i < self.base && i % 2 == 0
    }

    fn lo(&self, i: usize) -> u32 {
        if self.is_budget(i) {
            0
        } else {
            1
        }
    }

    fn hi(&self, i: usize) -> u32 {
        if self.is_budget(i) {
            self.cap
        } else {
            MAX_SUCCESSOR_LENGTH
        }
    }

    /// The vector to scan next, or `None` when the enumeration is over.
    /// The same vector is returned until [`Self::feedback`] is called.
    pub fn es_next(&self) -> Option<&[u32]> {
        (!self.done).then_some(self.current.as_slice())
    }

    pub fn feedback(&mut self, feedback: Feedback) {
        let fixed = match feedback {
            Feedback::NeedsExtension => {
                self.current.push(1);
                return;
            }
            _ if !self.pruning => self.current.len(),
            Feedback::Completed { entries_used } => entries_used,
            Feedback::Failed { entries_used, out_of_bounds } => {
                if out_of_bounds {
                    entries_used.saturating_sub(1)
                } else {
                    entries_used
                }
            }
        };
        self.advance(fixed.min(self.current.len()));
    }

    /// Keeps positions `[0, k - 1)`, increments position `k - 1` with carry
    /// and resets everything after it.
    fn advance(&mut self, mut k: usize) {
        loop {
            if k == 0 {
                self.done = true;
                return;
            }
            let i = k - 1;
            if self.current[i] < self.hi(i) {
                self.current[i] += 1;
                self.current.truncate((i + 1).max(self.base));
                for j in i + 1..self.base {
                    self.current[j] = self.lo(j);
                }
                return;
            }
            k -= 1;
        }
    }
}

pub(crate) fn enumerate<T: Real>(
    scanner: &Scanner<'_>,
    config: &SearchConfig,
    start: Instant,
    deadline: Option<Instant>,
    progress: &mut dyn FnMut(&Progress),
) -> Found {
    let layout = config.layout();
    let symbols = scanner.corpus().alphabet.len();
    let mut en = EsEnumerator::new(config.mode, config.n, scanner.greedy_cap(), config.pruning);
    let mut evaluated = 0u64;
    let mut best: Option<(T, Vec<u32>)> = None;
    let mut status = SearchStatus::Exhausted;
    while let Some(flat) = en.es_next().map(<[u32]>::to_vec) {
        let feedback = match scanner.drive(&layout, &flat, false) {
            Driven::Done(s) => {
                evaluated += 1;
                let ll: T = s.log_likelihood(symbols);
                if best.as_ref().is_none_or(|(b, _)| ll > *b) {
                    best = Some((ll, flat.clone()));
                    progress(&Progress {
                        elapsed: start.elapsed(),
                        evaluated,
                        log_probability: ll.to_f64().unwrap_or(f64::NAN),
                    });
                }
                Feedback::Completed { entries_used: s.consumed }
            }
            Driven::Failed(s, f) => {
                evaluated += 1;
                Feedback::Failed {
                    entries_used: s.consumed,
                    out_of_bounds: matches!(f.reason, FailureReason::LengthOutOfBounds { .. }),
                }
            }
            Driven::NeedsExtension(_) => Feedback::NeedsExtension,
        };
        en.feedback(feedback);
        if evaluated % CLOCK_EVERY == 0 && timed_out(deadline) {
            status = SearchStatus::TimedOut;
            break;
        }
    }
    Found {
        best: best.map(|(_, v)| v),
        evaluated,
        status,
        generations: None,
    }
}
