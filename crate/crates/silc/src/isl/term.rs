//! Terms and fresh-variable generation.

use std::fmt;

use serde::Serialize;

/// A logical variable (`X`, `L`, `V`, ...). Distinct from program
/// variables, which only ever appear on the left of stack points-to atoms
/// or inside pure terms produced from program conditions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LogicalVar(pub String);

impl LogicalVar {
    pub fn new(name: impl Into<String>) -> Self {
        LogicalVar(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LogicalVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Term {
    /// A program variable used as a value (only inside pure terms).
    PVar(String),
    LVar(LogicalVar),
    Const(i64),
    Nil,
}

impl Term {
    pub fn lvar(name: impl Into<String>) -> Self {
        Term::LVar(LogicalVar::new(name))
    }

    pub fn as_lvar(&self) -> Option<&LogicalVar> {
        match self {
            Term::LVar(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Nil)
    }

    /// Logical variables mentioned by this term (zero or one).
    pub fn vars(&self) -> Option<&LogicalVar> {
        self.as_lvar()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::PVar(name) => write!(f, "{}", name),
            Term::LVar(v) => write!(f, "{}", v),
            Term::Const(c) => write!(f, "{}", c),
            Term::Nil => write!(f, "nil"),
        }
    }
}

impl From<LogicalVar> for Term {
    fn from(v: LogicalVar) -> Self {
        Term::LVar(v)
    }
}

/// Issues logical variables that are fresh within one analysis run.
///
/// Names are `<hint><counter>` with a single run-wide counter, so two
/// distinct calls can never collide as long as hints are alphabetic
/// (non-alphabetic characters are stripped). The starting counter comes
/// from the configured seed, which makes the whole sequence reproducible.
#[derive(Debug, Clone)]
pub struct FreshVarGen {
    counter: u64,
}

impl FreshVarGen {
    pub fn new() -> Self {
        Self::with_seed(0)
    }

    pub fn with_seed(seed: u64) -> Self {
        FreshVarGen { counter: seed }
    }

    pub fn fresh(&mut self, hint: &str) -> LogicalVar {
        self.counter += 1;
        let mut stem: String = hint.chars().filter(|c| c.is_ascii_alphabetic()).collect();
        if stem.is_empty() {
            stem.push('X');
        }
        LogicalVar(format!("{}{}", stem, self.counter))
    }
}

impl Default for FreshVarGen {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_uses_hint() {
        let mut g = FreshVarGen::new();
        assert_eq!(g.fresh("L").as_str(), "L1");
    }

    #[test]
    fn fresh_never_repeats() {
        let mut g = FreshVarGen::new();
        let a = g.fresh("L");
        let b = g.fresh("L");
        let c = g.fresh("V");
        assert_ne!(a, b);
        assert_ne!(b, c);
        assert_ne!(a, c);
    }

    #[test]
    fn same_seed_replays_same_sequence() {
        let mut g1 = FreshVarGen::with_seed(7);
        let mut g2 = FreshVarGen::with_seed(7);
        for hint in ["L", "V", "W", "X", "L"] {
            assert_eq!(g1.fresh(hint), g2.fresh(hint));
        }
    }

    #[test]
    fn numeric_hints_cannot_collide_with_counters() {
        let mut g = FreshVarGen::new();
        let a = g.fresh("L1");
        let b = g.fresh("L");
        // "L1" is stripped to "L" before the counter is appended.
        assert_eq!(a.as_str(), "L1");
        assert_eq!(b.as_str(), "L2");
    }
}
