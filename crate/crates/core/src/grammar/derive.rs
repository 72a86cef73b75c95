use rand::Rng;

use super::{GrammarError, S0LSystem, Word};
use crate::Real;

/// A trace `w_0 => ... => w_m` together with the production applied at every
/// position of every rewritten word.
///
/// `sigma[j][l]` is the index (into the owning system's productions) of the
/// production that rewrote symbol `l` of `trace[j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    trace: Vec<Word>,
    sigma: Vec<Vec<usize>>,
}

impl Derivation {
    /// Assembles a derivation without checking it; see [`Derivation::check`].
    pub fn new(trace: Vec<Word>, sigma: Vec<Vec<usize>>) -> Self {
        Derivation { trace, sigma }
    }

    pub fn trace(&self) -> &[Word] {
        &self.trace
    }

    pub fn sigma(&self) -> &[Vec<usize>] {
        &self.sigma
    }

    /// Number of rewriting steps `m`.
    pub fn steps(&self) -> usize {
        self.sigma.len()
    }

    /// Checks that every step is a valid parallel rewrite under `system`.
    pub fn check<T: Real>(&self, system: &S0LSystem<T>) -> Result<(), GrammarError> {
        if self.trace.len() != self.sigma.len() + 1 {
            return Err(GrammarError::InvalidDerivation {
                step: 0,
                reason: format!(
                    "{} words for {} steps",
                    self.trace.len(),
                    self.sigma.len()
                ),
            });
        }
        for (j, row) in self.sigma.iter().enumerate() {
            let word = &self.trace[j];
            if row.len() != word.len() {
                return Err(GrammarError::InvalidDerivation {
                    step: j,
                    reason: format!("{} productions for a word of length {}", row.len(), word.len()),
                });
            }
            let mut produced = Vec::with_capacity(self.trace[j + 1].len());
            for (l, &idx) in row.iter().enumerate() {
                let p = system
                    .production(idx)
                    .ok_or(GrammarError::UnknownProduction(idx))?;
                if p.predecessor != word[l] {
                    return Err(GrammarError::InvalidDerivation {
                        step: j,
                        reason: format!(
                            "position {} holds {} but production rewrites {}",
                            l + 1,
                            word[l],
                            p.predecessor
                        ),
                    });
                }
                produced.extend_from_slice(&p.successor);
            }
            if produced.as_slice() != &*self.trace[j + 1] {
                return Err(GrammarError::InvalidDerivation {
                    step: j,
                    reason: "successors do not concatenate to the next word".into(),
                });
            }
        }
        Ok(())
    }
}

fn sample_index<T: Real, R: Rng + ?Sized>(weights: impl Iterator<Item = T> + Clone, rng: &mut R) -> usize {
    let u = T::lit(rng.gen::<f64>());
    let mut acc = T::zero();
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc = acc + w;
        last = i;
        if u < acc {
            return i;
        }
    }
    // rounding left the cumulative sum just under one
    last
}

/// Rewrites every symbol of `word` in parallel, sampling each successor
/// independently. Returns the next word and the production index chosen at
/// each position.
pub fn derive_step<T: Real, R: Rng + ?Sized>(
    system: &S0LSystem<T>,
    word: &Word,
    rng: &mut R,
) -> Result<(Word, Vec<usize>), GrammarError> {
    let mut applied = Vec::with_capacity(word.len());
    let mut next = Vec::new();
    for &s in word.iter() {
        if !system.alphabet().contains(&s) {
            return Err(GrammarError::UnknownSymbol(s));
        }
        let candidates = system.productions_for(s);
        if candidates.is_empty() {
            return Err(GrammarError::NoProduction(s));
        }
        let pick = if candidates.len() == 1 {
            0
        } else {
            sample_index(
                candidates.iter().map(|&i| system.productions()[i].probability),
                rng,
            )
        };
        let idx = candidates[pick];
        next.extend_from_slice(&system.productions()[idx].successor);
        applied.push(idx);
    }
    Ok((Word::new(next)?, applied))
}

/// Samples an axiom according to the start probabilities and rewrites it
/// `steps` times.
pub fn derive_sequence<T: Real, R: Rng + ?Sized>(
    system: &S0LSystem<T>,
    steps: usize,
    rng: &mut R,
) -> Result<Derivation, GrammarError> {
    if steps == 0 {
        return Err(GrammarError::NoSteps);
    }
    let axioms = system.axioms();
    if axioms.is_empty() {
        return Err(GrammarError::NoAxiom);
    }
    let start = if axioms.len() == 1 {
        0
    } else {
        sample_index(axioms.iter().map(|a| a.probability), rng)
    };
    let mut trace = vec![axioms[start].word.clone()];
    let mut sigma = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, applied) = derive_step(system, trace.last().unwrap(), rng)?;
        trace.push(next);
        sigma.push(applied);
    }
    Ok(Derivation { trace, sigma })
}

/// `log I(w_0) + sum_j sum_l log p(sigma(j, l))`, with the axiom term only
/// when `include_axiom` is set.
pub fn derivation_log_probability<T: Real>(
    system: &S0LSystem<T>,
    derivation: &Derivation,
    include_axiom: bool,
) -> Result<T, GrammarError> {
    let mut total = T::zero();
    if include_axiom {
        let first = derivation.trace.first().ok_or(GrammarError::NoSteps)?;
        let p = system
            .axiom_probability(first)
            .ok_or_else(|| GrammarError::UnknownAxiom(first.clone()))?;
        total = total + p.ln();
    }
    for row in &derivation.sigma {
        for &idx in row {
            let p = system
                .production(idx)
                .ok_or(GrammarError::UnknownProduction(idx))?;
            total = total + p.probability.ln();
        }
    }
    Ok(total)
}

/// Log of the product of independent derivation probabilities. An empty
/// slice is the empty product, i.e. `0`.
pub fn joint_log_probability<T: Real>(log_probabilities: &[T]) -> T {
    log_probabilities.iter().fold(T::zero(), |acc, &lp| acc + lp)
}
