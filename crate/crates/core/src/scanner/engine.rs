//! Resumable scanning state machine.
//!
//! A [`ScanState`] walks the observed words symbol by symbol and stops
//! whenever it needs the next integer of the search vector. Callers either
//! feed it from a fixed vector ([`super::Scanner::scan`]) or clone it at the
//! stop and explore every value (the exhaustive search).

use std::collections::BTreeSet;

use super::{most_frequent_match, FailureReason, Incompatibility, ScanMode};
use crate::grammar::{SequenceSet, Symbol};
use crate::Real;

/// The observed sequences with symbols replaced by dense ids.
#[derive(Clone, Debug)]
pub(crate) struct Corpus {
    pub alphabet: Vec<Symbol>,
    pub seqs: Vec<Vec<Vec<u32>>>,
    /// Number of non-final symbol occurrences over all rewritten words; no
    /// scan can make more greedy choices than this.
    pub greedy_cap: u32,
    /// `rest[seq][word][i * |V| + a]`: occurrences of symbol `a` from
    /// position `i` of that rewritten word to the end of the input.
    rest: Vec<Vec<Vec<u32>>>,
}

impl Corpus {
    pub fn new(rho: &SequenceSet) -> Self {
        let alphabet: Vec<Symbol> = crate::grammar::infer_alphabet(rho).into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let id = |s: &Symbol| alphabet.binary_search(s).expect("symbol in alphabet") as u32;
        let seqs: Vec<Vec<Vec<u32>>> = rho
            .sequences()
            .iter()
            .map(|seq| seq.iter().map(|w| w.iter().map(id).collect()).collect())
            .collect();
        let greedy_cap = seqs
            .iter()
            .flat_map(|s| s[..s.len() - 1].iter())
            .map(|w| w.len().saturating_sub(1) as u32)
            .sum();
        let v = alphabet.len();
        let mut rest: Vec<Vec<Vec<u32>>> = seqs.iter().map(|s| vec![Vec::new(); s.len() - 1]).collect();
        let mut tail = vec![0u32; v];
        for (si, seq) in seqs.iter().enumerate().rev() {
            for wi in (0..seq.len() - 1).rev() {
                let w = &seq[wi];
                let mut table = vec![0u32; (w.len() + 1) * v];
                table[w.len() * v..].copy_from_slice(&tail);
                for i in (0..w.len()).rev() {
                    let (head, below) = table.split_at_mut((i + 1) * v);
                    head[i * v..].copy_from_slice(&below[..v]);
                    head[i * v + w[i] as usize] += 1;
                }
                tail.copy_from_slice(&table[..v]);
                rest[si][wi] = table;
            }
        }
        Corpus {
            alphabet,
            seqs,
            greedy_cap,
            rest,
        }
    }

    /// Occurrences of each symbol still to be rewritten from the given
    /// position on.
    #[inline]
    fn remaining(&self, seq: usize, word: usize, sym: usize) -> &[u32] {
        let v = self.alphabet.len();
        match self.rest.get(seq) {
            Some(words) => &words[word][sym * v..(sym + 1) * v],
            None => &[],
        }
    }

    #[inline]
    pub fn slice(&self, e: &Entry) -> &[u32] {
        let w = &self.seqs[e.seq as usize][e.word as usize];
        &w[e.start as usize..(e.start + e.len) as usize]
    }
}

/// What the scan is paused on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Request {
    /// A greedy budget `t` for the period that starts now.
    Budget,
    /// A successor length `y` from the base vector.
    Length,
    /// A successor length beyond the base vector.
    Extension,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Step {
    Need(Request),
    Done,
    Failed(Incompatibility),
}

/// Vector shape shared by every state of one scan or search.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub mode: ScanMode,
    /// `N`, the number of successor lengths in the base vector.
    pub dimensions: usize,
    pub extension_limit: usize,
}

/// One successor known for a symbol, stored as a location in the corpus.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Entry {
    pub sym: u32,
    pub seq: u32,
    pub word: u32,
    pub start: u32,
    pub len: u32,
    pub count: u32,
}

#[derive(Clone, Debug)]
pub(crate) struct ScanState {
    /// Successor table in creation order.
    pub table: Vec<Entry>,
    seq: usize,
    word: usize,
    sym: usize,
    pos: usize,
    /// Flat vector entries consumed so far.
    pub consumed: usize,
    lengths_used: usize,
    pub extensions_used: usize,
    extensions_in_word: usize,
    budget: Option<u32>,
    budget_pending: bool,
    /// Per greedy-budget entry: whether it ever stopped an available greedy
    /// choice. Larger budgets only change the scan when this is set.
    pub binding: Vec<bool>,
    /// Table entry applied at every position, in scan order.
    pub trail: Option<Vec<u32>>,
}

impl ScanState {
    pub fn new(layout: &Layout, record: bool) -> Self {
        ScanState {
            table: Vec::new(),
            seq: 0,
            word: 0,
            sym: 0,
            pos: 0,
            consumed: 0,
            lengths_used: 0,
            extensions_used: 0,
            extensions_in_word: 0,
            budget: None,
            budget_pending: layout.mode == ScanMode::PrefixLimited && layout.dimensions > 0,
            binding: Vec::new(),
            trail: record.then(Vec::new),
        }
    }

    fn fail(&self, reason: FailureReason, entry: Option<usize>) -> Step {
        Step::Failed(Incompatibility {
            sequence: self.seq,
            word: self.word,
            symbol: self.sym,
            reason,
            entry,
        })
    }

    fn apply(&mut self, corpus: &Corpus, sym: u32, len: usize, reuse: Option<usize>) {
        let idx = match reuse {
            Some(i) => {
                self.table[i].count += 1;
                i
            }
            None => {
                let next = &corpus.seqs[self.seq][self.word + 1];
                let piece = &next[self.pos..self.pos + len];
                match self
                    .table
                    .iter()
                    .position(|e| e.sym == sym && corpus.slice(e) == piece)
                {
                    Some(i) => {
                        self.table[i].count += 1;
                        i
                    }
                    None => {
                        self.table.push(Entry {
                            sym,
                            seq: self.seq as u32,
                            word: (self.word + 1) as u32,
                            start: self.pos as u32,
                            len: len as u32,
                            count: 1,
                        });
                        self.table.len() - 1
                    }
                }
            }
        };
        if let Some(trail) = self.trail.as_mut() {
            trail.push(idx as u32);
        }
        self.pos += len;
        self.sym += 1;
    }

    /// Runs until the scan completes, fails, or needs a vector entry. When
    /// resuming from [`Step::Need`], `input` carries the requested value.
    pub fn advance(&mut self, corpus: &Corpus, layout: &Layout, mut input: Option<u32>) -> Step {
        loop {
            let Some(seq) = corpus.seqs.get(self.seq) else {
                return Step::Done;
            };
            let cur = &seq[self.word];
            let next = &seq[self.word + 1];
            if self.sym == cur.len() {
                self.word += 1;
                self.sym = 0;
                self.pos = 0;
                self.extensions_in_word = 0;
                if self.word + 1 == seq.len() {
                    self.seq += 1;
                    self.word = 0;
                }
                continue;
            }
            if self.sym == 0 && self.pos == 0 && next.len() < cur.len() {
                return self.fail(FailureReason::WordShrinks, None);
            }

            let sym = cur[self.sym];
            let remaining_after = cur.len() - self.sym - 1;
            // always >= 1: every earlier choice left room for the rest
            let max = next.len() - self.pos - remaining_after;

            if remaining_after == 0 {
                self.apply(corpus, sym, max, None);
                continue;
            }

            if self.budget_pending {
                match input.take() {
                    Some(t) => {
                        self.budget = Some(t);
                        self.budget_pending = false;
                        self.binding.push(false);
                        self.consumed += 1;
                    }
                    None => return Step::Need(Request::Budget),
                }
            }

            let suffix = &next[self.pos..];
            let greedy = most_frequent_match(
                self.table
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.sym == sym)
                    .map(|(i, e)| (i, corpus.slice(e), e.count)),
                suffix,
                max,
            );
            let take_greedy = match (greedy, self.budget) {
                (None, _) => false,
                (Some(_), None) => true,
                (Some(_), Some(0)) => {
                    *self.binding.last_mut().expect("budget without entry") = true;
                    false
                }
                (Some(_), Some(_)) => true,
            };
            if take_greedy {
                let i = greedy.expect("greedy match");
                if let Some(b) = self.budget.as_mut() {
                    *b -= 1;
                }
                let len = self.table[i].len as usize;
                self.apply(corpus, sym, len, Some(i));
                continue;
            }

            let request = if self.lengths_used < layout.dimensions {
                Request::Length
            } else if self.extensions_in_word < layout.extension_limit {
                Request::Extension
            } else {
                return self.fail(FailureReason::VectorExhausted, None);
            };
            let Some(length) = input.take() else {
                return Step::Need(request);
            };
            self.consumed += 1;
            let entry = self.consumed - 1;
            if request == Request::Extension {
                self.extensions_in_word += 1;
                self.extensions_used += 1;
            } else {
                self.lengths_used += 1;
                if layout.mode == ScanMode::PrefixLimited {
                    if self.lengths_used < layout.dimensions {
                        self.budget_pending = true;
                    } else {
                        self.budget = None;
                    }
                }
            }
            let length = length as usize;
            if length == 0 || length > max {
                return self.fail(FailureReason::LengthOutOfBounds { length, max }, Some(entry));
            }
            self.apply(corpus, sym, length, None);
        }
    }

    /// Index of the greedy budget whose period is still open, if any. Its
    /// binding flag may still change; the others are final.
    pub fn open_budget(&self) -> Option<usize> {
        (self.lengths_used < self.binding.len()).then(|| self.binding.len() - 1)
    }

    /// Upper bound on the log-likelihood of any completion of this scan.
    ///
    /// Every remaining occurrence of a symbol adds one observation to its
    /// counts. With `g(x) = x ln x` the log-likelihood is
    /// `sum_k g(c_k) - g(n)` per symbol, and since `g` is convex the best case
    /// puts all `r` new observations on the most frequent successor.
    pub fn completion_bound<T: Real>(&self, corpus: &Corpus) -> T {
        let symbols = corpus.alphabet.len();
        let mut totals = vec![0u64; symbols];
        let mut top = vec![0u64; symbols];
        for e in &self.table {
            let a = e.sym as usize;
            totals[a] += e.count as u64;
            top[a] = top[a].max(e.count as u64);
        }
        let g = |x: u64| {
            let x = T::lit(x as f64);
            if x > T::zero() {
                x * x.ln()
            } else {
                T::zero()
            }
        };
        let remaining = corpus.remaining(self.seq, self.word, self.sym);
        let mut acc: T = self.log_likelihood(symbols);
        for (a, &r) in remaining.iter().enumerate() {
            let (n, c, r) = (totals[a], top[a], r as u64);
            if r == 0 || c == n {
                continue;
            }
            acc = acc + g(c + r) - g(c) - g(n + r) + g(n);
        }
        acc
    }

    /// `sum_A sum_k c_k ln(c_k / n_A)`: the joint log-probability of the
    /// recovered derivations when production probabilities are the
    /// normalised selection counts.
    pub fn log_likelihood<T: Real>(&self, symbols: usize) -> T {
        let mut totals = vec![0u64; symbols];
        for e in &self.table {
            totals[e.sym as usize] += e.count as u64;
        }
        let mut acc = T::zero();
        for e in &self.table {
            let n = totals[e.sym as usize];
            if e.count as u64 != n {
                let c = T::lit(e.count as f64);
                acc = acc + c * (c / T::lit(n as f64)).ln();
            }
        }
        acc
    }
}
