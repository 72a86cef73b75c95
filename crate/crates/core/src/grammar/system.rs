use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use super::{Symbol, Word};
use crate::Real;

/// A rewriting rule `predecessor -> successor` chosen with `probability`.
#[derive(Clone, Debug, PartialEq)]
pub struct Production<T> {
    pub predecessor: Symbol,
    pub successor: Word,
    pub probability: T,
}

impl<T> Production<T> {
    pub fn new(predecessor: Symbol, successor: Word, probability: T) -> Self {
        Production {
            predecessor,
            successor,
            probability,
        }
    }

    /// Whether `self` and `other` rewrite the same symbol into the same word.
    /// Probabilities are ignored.
    pub fn same_rule<U>(&self, other: &Production<U>) -> bool {
        self.predecessor == other.predecessor && self.successor == other.successor
    }
}

/// A start word together with the probability of starting from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Axiom<T> {
    pub word: Word,
    pub probability: T,
}

/// A stochastic context-free L-system.
///
/// Construction does not enforce the structural invariants (probabilities
/// summing to one, totality, ...); call [`S0LSystem::validate`] for that.
/// Systems recovered from partial evidence may legitimately leave some
/// symbols without productions.
#[derive(Clone, Debug, PartialEq)]
pub struct S0LSystem<T> {
    alphabet: BTreeSet<Symbol>,
    axioms: Vec<Axiom<T>>,
    productions: Vec<Production<T>>,
    by_symbol: BTreeMap<Symbol, Vec<usize>>,
}

impl<T: Real> S0LSystem<T> {
    pub fn new(
        alphabet: impl IntoIterator<Item = Symbol>,
        axioms: Vec<Axiom<T>>,
        productions: Vec<Production<T>>,
    ) -> Self {
        let mut by_symbol: BTreeMap<Symbol, Vec<usize>> = BTreeMap::new();
        for (i, p) in productions.iter().enumerate() {
            by_symbol.entry(p.predecessor).or_default().push(i);
        }
        S0LSystem {
            alphabet: alphabet.into_iter().collect(),
            axioms,
            productions,
            by_symbol,
        }
    }

    /// Builds a system whose alphabet is every symbol mentioned by the axioms
    /// and productions.
    pub fn with_inferred_alphabet(axioms: Vec<Axiom<T>>, productions: Vec<Production<T>>) -> Self {
        let mut alphabet = BTreeSet::new();
        for a in &axioms {
            alphabet.extend(a.word.iter().copied());
        }
        for p in &productions {
            alphabet.insert(p.predecessor);
            alphabet.extend(p.successor.iter().copied());
        }
        Self::new(alphabet, axioms, productions)
    }

    pub fn alphabet(&self) -> &BTreeSet<Symbol> {
        &self.alphabet
    }

    pub fn axioms(&self) -> &[Axiom<T>] {
        &self.axioms
    }

    pub fn productions(&self) -> &[Production<T>] {
        &self.productions
    }

    pub fn production(&self, index: usize) -> Option<&Production<T>> {
        self.productions.get(index)
    }

    /// Indices of the productions rewriting `symbol`, in declaration order.
    pub fn productions_for(&self, symbol: Symbol) -> &[usize] {
        self.by_symbol.get(&symbol).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Index of the production `predecessor -> successor`, if present.
    pub fn find(&self, predecessor: Symbol, successor: &[Symbol]) -> Option<usize> {
        self.productions_for(predecessor)
            .iter()
            .copied()
            .find(|&i| &*self.productions[i].successor == successor)
    }

    pub fn axiom_probability(&self, word: &Word) -> Option<T> {
        self.axioms.iter().find(|a| &a.word == word).map(|a| a.probability)
    }

    /// True when there is a single axiom and every symbol has exactly one
    /// production.
    pub fn is_deterministic(&self) -> bool {
        self.axioms.len() == 1 && self.by_symbol.values().all(|v| v.len() == 1)
    }

    pub fn validate(&self) -> ValidationReport {
        let tol = T::sum_tolerance();
        let mut violations = Vec::new();

        if self.axioms.is_empty() {
            violations.push(Violation::NoAxiom);
        }
        let mut axiom_sum = T::zero();
        let mut seen_axioms = HashSet::new();
        for a in &self.axioms {
            self.check_symbols(&a.word, || format!("axiom {}", a.word), &mut violations);
            if !(a.probability > T::zero() && a.probability <= T::one() + tol) {
                violations.push(Violation::AxiomProbabilityOutOfRange {
                    word: a.word.clone(),
                    probability: a.probability.to_f64().unwrap_or(f64::NAN),
                });
            }
            if !seen_axioms.insert(&a.word) {
                violations.push(Violation::DuplicateAxiom(a.word.clone()));
            }
            axiom_sum = axiom_sum + a.probability;
        }
        if !self.axioms.is_empty() && (axiom_sum - T::one()).abs() > tol {
            violations.push(Violation::AxiomProbabilitySum {
                sum: axiom_sum.to_f64().unwrap_or(f64::NAN),
            });
        }

        let mut seen = HashSet::new();
        for p in &self.productions {
            if !self.alphabet.contains(&p.predecessor) {
                violations.push(Violation::UnknownSymbol {
                    symbol: p.predecessor,
                    context: format!("production {} -> {}", p.predecessor, p.successor),
                });
            }
            self.check_symbols(
                &p.successor,
                || format!("production {} -> {}", p.predecessor, p.successor),
                &mut violations,
            );
            if !(p.probability > T::zero() && p.probability <= T::one() + tol) {
                violations.push(Violation::ProbabilityOutOfRange {
                    predecessor: p.predecessor,
                    successor: p.successor.clone(),
                    probability: p.probability.to_f64().unwrap_or(f64::NAN),
                });
            }
            if !seen.insert((p.predecessor, &p.successor)) {
                violations.push(Violation::DuplicateProduction {
                    predecessor: p.predecessor,
                    successor: p.successor.clone(),
                });
            }
        }

        for &symbol in &self.alphabet {
            let indices = self.productions_for(symbol);
            if indices.is_empty() {
                violations.push(Violation::MissingProductions(symbol));
                continue;
            }
            let sum = indices
                .iter()
                .fold(T::zero(), |acc, &i| acc + self.productions[i].probability);
            if (sum - T::one()).abs() > tol {
                violations.push(Violation::ProbabilitySum {
                    symbol,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                });
            }
        }

        ValidationReport { violations }
    }

    fn check_symbols(
        &self,
        word: &Word,
        context: impl Fn() -> String,
        out: &mut Vec<Violation>,
    ) {
        let mut reported = BTreeSet::new();
        for s in word.iter() {
            if !self.alphabet.contains(s) && reported.insert(*s) {
                out.push(Violation::UnknownSymbol {
                    symbol: *s,
                    context: context(),
                });
            }
        }
    }
}

impl<T: Real> fmt::Display for S0LSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::text::write_grammar(self))
    }
}

/// One broken structural invariant of a system.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoAxiom,
    DuplicateAxiom(Word),
    AxiomProbabilitySum { sum: f64 },
    AxiomProbabilityOutOfRange { word: Word, probability: f64 },
    UnknownSymbol { symbol: Symbol, context: String },
    MissingProductions(Symbol),
    ProbabilitySum { symbol: Symbol, sum: f64 },
    ProbabilityOutOfRange {
        predecessor: Symbol,
        successor: Word,
        probability: f64,
    },
    DuplicateProduction { predecessor: Symbol, successor: Word },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoAxiom => write!(f, "system has no axiom"),
            Violation::DuplicateAxiom(w) => write!(f, "axiom {w} is listed twice"),
            Violation::AxiomProbabilitySum { sum } => {
                write!(f, "axiom probabilities sum to {sum}")
            }
            Violation::AxiomProbabilityOutOfRange { word, probability } => {
                write!(f, "axiom {word} has probability {probability} outside (0, 1]")
            }
            Violation::UnknownSymbol { symbol, context } => {
                write!(f, "{symbol} in {context} is not in the alphabet")
            }
            Violation::MissingProductions(s) => write!(f, "{s} has no production"),
            Violation::ProbabilitySum { symbol, sum } => {
                write!(f, "{symbol} probabilities sum to {sum}")
            }
            Violation::ProbabilityOutOfRange {
                predecessor,
                successor,
                probability,
            } => write!(
                f,
                "{predecessor} -> {successor} has probability {probability} outside (0, 1]"
            ),
            Violation::DuplicateProduction {
                predecessor,
                successor,
            } => write!(f, "{predecessor} -> {successor} is listed twice"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
