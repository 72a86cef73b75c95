use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use super::GrammarError;

/// A single-character alphabet symbol.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(char);

impl Symbol {
    pub fn new(c: char) -> Result<Self, GrammarError> {
        if c.is_whitespace() || c.is_control() || c == '#' {
            return Err(GrammarError::InvalidSymbol(c));
        }
        Ok(Symbol(c))
    }

    pub fn as_char(self) -> char {
        self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<char> for Symbol {
    type Error = GrammarError;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        Symbol::new(c)
    }
}

/// A non-empty sequence of symbols.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self, GrammarError> {
        if symbols.is_empty() {
            return Err(GrammarError::EmptyWord);
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.0
    }

    /// Concatenates non-empty pieces. Panics if `parts` is empty.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Word>) -> Word {
        let symbols: Vec<Symbol> = parts.into_iter().flat_map(|w| w.0.iter().copied()).collect();
        Word::new(symbols).expect("concatenation of at least one non-empty word")
    }
}

impl Deref for Word {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.0)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for Word {
    type Err = GrammarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let symbols = s.chars().map(Symbol::new).collect::<Result<Vec<_>, _>>()?;
        Word::new(symbols)
    }
}

impl TryFrom<&str> for Word {
    type Error = GrammarError;

    fn try_from(s: &str) -> Result<Self, Self::Error> {
        s.parse()
    }
}
