//! Pure formulas: equalities and disequalities over terms, closed under
//! conjunction. Normal form is a flat conjunction of literals in negation
//! normal form.

use std::collections::BTreeSet;
use std::fmt;

use super::term::{LogicalVar, Term};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PureTerm {
    True,
    Bool(bool),
    Eq(Term, Term),
    And(Vec<PureTerm>),
    Not(Box<PureTerm>),
}

/// A single literal after normalization: an (in)equality or a boolean.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Bool(bool),
    Eq(Term, Term),
    Ne(Term, Term),
}

impl Literal {
    pub fn negate(&self) -> Literal {
        match self {
            Literal::Bool(b) => Literal::Bool(!b),
            Literal::Eq(a, b) => Literal::Ne(a.clone(), b.clone()),
            Literal::Ne(a, b) => Literal::Eq(a.clone(), b.clone()),
        }
    }

    pub fn to_pure(&self) -> PureTerm {
        match self {
            Literal::Bool(b) => PureTerm::Bool(*b),
            Literal::Eq(a, b) => PureTerm::Eq(a.clone(), b.clone()),
            Literal::Ne(a, b) => PureTerm::Not(Box::new(PureTerm::Eq(a.clone(), b.clone()))),
        }
    }

    pub fn vars(&self) -> Vec<&LogicalVar> {
        match self {
            Literal::Bool(_) => vec![],
            Literal::Eq(a, b) | Literal::Ne(a, b) => {
                a.vars().into_iter().chain(b.vars()).collect()
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{}", b),
            Literal::Eq(a, b) => write!(f, "{} = {}", a, b),
            Literal::Ne(a, b) => write!(f, "{} != {}", a, b),
        }
    }
}

impl PureTerm {
    pub fn eq(a: impl Into<Term>, b: impl Into<Term>) -> Self {
        PureTerm::Eq(a.into(), b.into())
    }

    pub fn ne(a: impl Into<Term>, b: impl Into<Term>) -> Self {
        PureTerm::Not(Box::new(PureTerm::Eq(a.into(), b.into())))
    }

    pub fn and(parts: Vec<PureTerm>) -> Self {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                PureTerm::True => {}
                PureTerm::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => PureTerm::True,
            1 => flat.pop().unwrap(),
            _ => PureTerm::And(flat),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, PureTerm::True) || matches!(self, PureTerm::Bool(true))
    }

    /// Flatten into literals. Fails on negation applied to a non-atomic
    /// formula; there is no disjunction to push it through.
    pub fn literals(&self) -> Result<Vec<Literal>, PureError> {
        let mut out = Vec::new();
        self.collect_literals(false, &mut out)?;
        Ok(out)
    }

    fn collect_literals(&self, negated: bool, out: &mut Vec<Literal>) -> Result<(), PureError> {
        match self {
            PureTerm::True => {
                if negated {
                    out.push(Literal::Bool(false));
                }
            }
            PureTerm::Bool(b) => {
                let v = if negated { !*b } else { *b };
                if !v {
                    out.push(Literal::Bool(false));
                }
            }
            PureTerm::Eq(a, b) => {
                if negated {
                    out.push(Literal::Ne(a.clone(), b.clone()));
                } else {
                    out.push(Literal::Eq(a.clone(), b.clone()));
                }
            }
            PureTerm::And(parts) => {
                if negated {
                    return Err(PureError::UnsupportedAtom(
                        "negation of a conjunction has no literal normal form".into(),
                    ));
                }
                for p in parts {
                    p.collect_literals(false, out)?;
                }
            }
            PureTerm::Not(inner) => inner.collect_literals(!negated, out)?,
        }
        Ok(())
    }

    /// Normal form: And flattened, True dropped, double negation gone,
    /// literals sorted and deduplicated. Idempotent.
    pub fn normalize(&self) -> Result<PureTerm, PureError> {
        let mut lits: BTreeSet<Literal> = BTreeSet::new();
        for lit in self.literals()? {
            match &lit {
                Literal::Eq(a, b) if a == b => continue,
                _ => {}
            }
            // Orient symmetric literals so equal formulas normalize equally.
            let oriented = match lit {
                Literal::Eq(a, b) => {
                    if a <= b {
                        Literal::Eq(a, b)
                    } else {
                        Literal::Eq(b, a)
                    }
                }
                Literal::Ne(a, b) => {
                    if a <= b {
                        Literal::Ne(a, b)
                    } else {
                        Literal::Ne(b, a)
                    }
                }
                other => other,
            };
            lits.insert(oriented);
        }
        Ok(PureTerm::and(lits.into_iter().map(|l| l.to_pure()).collect()))
    }

    pub fn vars(&self) -> BTreeSet<LogicalVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<LogicalVar>) {
        match self {
            PureTerm::True | PureTerm::Bool(_) => {}
            PureTerm::Eq(a, b) => {
                if let Some(v) = a.vars() {
                    out.insert(v.clone());
                }
                if let Some(v) = b.vars() {
                    out.insert(v.clone());
                }
            }
            PureTerm::And(parts) => {
                for p in parts {
                    p.collect_vars(out);
                }
            }
            PureTerm::Not(inner) => inner.collect_vars(out),
        }
    }

    /// Substitute logical variables by terms, simultaneously.
    pub fn substitute(&self, mapping: &super::state::Substitution) -> PureTerm {
        match self {
            PureTerm::True => PureTerm::True,
            PureTerm::Bool(b) => PureTerm::Bool(*b),
            PureTerm::Eq(a, b) => PureTerm::Eq(mapping.apply_term(a), mapping.apply_term(b)),
            PureTerm::And(parts) => {
                PureTerm::And(parts.iter().map(|p| p.substitute(mapping)).collect())
            }
            PureTerm::Not(inner) => PureTerm::Not(Box::new(inner.substitute(mapping))),
        }
    }
}

impl fmt::Display for PureTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PureTerm::True => write!(f, "true"),
            PureTerm::Bool(b) => write!(f, "{}", b),
            PureTerm::Eq(a, b) => write!(f, "{} = {}", a, b),
            PureTerm::And(parts) => {
                let rendered: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", rendered.join(" /\\ "))
            }
            PureTerm::Not(inner) => match inner.as_ref() {
                PureTerm::Eq(a, b) => write!(f, "{} != {}", a, b),
                other => write!(f, "!({})", other),
            },
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum PureError {
    #[error("unsupported atom: {0}")]
    UnsupportedAtom(String),
}
