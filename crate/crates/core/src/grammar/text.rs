//! Line-oriented text formats for grammars and sequence sets.
//!
//! Grammar files hold one item per line, `#` starts a comment:
//!
//! ```text
//! alphabet: A B
//! axiom: A @ 1
//! A -> AB : 0.5
//! A -> A : 0.5
//! B -> A : 1
//! ```
//!
//! Tokens are whitespace separated. The `alphabet:` line is optional when
//! reading; without it the alphabet is every symbol the file mentions.
//! Probabilities are written in shortest round-trip form, so a written file
//! parses back to bit-identical values.
//!
//! Sequence files hold one word per line, with a line consisting of `---`
//! between consecutive sequences.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{Axiom, GrammarError, Production, S0LSystem, SequenceSet, Symbol, Word};
use crate::Real;

pub const SEQUENCE_SEPARATOR: &str = "---";

fn parse_err(line: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Parse {
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_probability<T: Real>(token: &str, line: usize) -> Result<T, GrammarError> {
    let value: T = token
        .parse()
        .map_err(|_| parse_err(line, format!("invalid probability {token:?}")))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("invalid probability {token:?}")));
    }
    Ok(value)
}

fn parse_word(token: &str, line: usize) -> Result<Word, GrammarError> {
    token
        .parse()
        .map_err(|e: GrammarError| parse_err(line, e.to_string()))
}

fn parse_symbol(token: &str, line: usize) -> Result<Symbol, GrammarError> {
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Symbol::new(c).map_err(|e| parse_err(line, e.to_string())),
        _ => Err(parse_err(line, format!("expected a single-character symbol, got {token:?}"))),
    }
}

/// Parses the grammar text format. Structural invariants are not checked;
/// run [`S0LSystem::validate`] on the result.
pub fn parse_grammar<T: Real>(text: &str) -> Result<S0LSystem<T>, GrammarError> {
    let mut alphabet: Option<BTreeSet<Symbol>> = None;
    let mut axioms = Vec::new();
    let mut productions = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["alphabet:", symbols @ ..] => {
                if alphabet.is_some() {
                    return Err(parse_err(line, "alphabet declared twice"));
                }
                let set = symbols
                    .iter()
                    .map(|t| parse_symbol(t, line))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                alphabet = Some(set);
            }
            ["axiom:", word, "@", prob] => axioms.push(Axiom {
                word: parse_word(word, line)?,
                probability: parse_probability(prob, line)?,
            }),
            ["axiom:", ..] => return Err(parse_err(line, "expected `axiom: <word> @ <probability>`")),
            [pred, "->", succ, ":", prob] => productions.push(Production::new(
                parse_symbol(pred, line)?,
                parse_word(succ, line)?,
                parse_probability(prob, line)?,
            )),
            _ => {
                return Err(parse_err(
                    line,
                    "expected `alphabet: ...`, `axiom: <word> @ <p>` or `<symbol> -> <word> : <p>`",
                ))
            }
        }
    }

    Ok(match alphabet {
        Some(a) => S0LSystem::new(a, axioms, productions),
        None => S0LSystem::with_inferred_alphabet(axioms, productions),
    })
}

/// Renders a system in the grammar text format.
pub fn write_grammar<T: Real>(system: &S0LSystem<T>) -> String {
    let mut out = String::new();
    out.push_str("alphabet:");
    for s in system.alphabet() {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
    for a in system.axioms() {
        let _ = writeln!(out, "axiom: {} @ {}", a.word, a.probability);
    }
    for p in system.productions() {
        let _ = writeln!(out, "{} -> {} : {}", p.predecessor, p.successor, p.probability);
    }
    out
}

/// Parses a sequence file into raw word lists, without enforcing equal
/// lengths.
pub fn parse_sequence_lists(text: &str) -> Result<Vec<Vec<Word>>, GrammarError> {
    let mut sequences = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == SEQUENCE_SEPARATOR {
            if !current.is_empty() {
                sequences.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(parse_word(line, i + 1)?);
    }
    if !current.is_empty() {
        sequences.push(current);
    }
    Ok(sequences)
}

/// Parses a sequence file; all sequences must have the same length.
pub fn parse_sequences(text: &str) -> Result<SequenceSet, GrammarError> {
    SequenceSet::new(parse_sequence_lists(text)?)
}

/// Renders sequences in the sequence file format.
pub fn write_sequences<'a>(sequences: impl IntoIterator<Item = &'a [Word]>) -> String {
    let mut out = String::new();
    for (i, seq) in sequences.into_iter().enumerate() {
        if i > 0 {
            out.push_str(SEQUENCE_SEPARATOR);
            out.push('\n');
        }
        for w in seq {
            let _ = writeln!(out, "{w}");
        }
    }
    out
}

/// Renders a sequence set in the sequence file format.
pub fn write_sequence_set(rho: &SequenceSet) -> String {
    write_sequences(rho.sequences().iter().map(Vec::as_slice))
}
