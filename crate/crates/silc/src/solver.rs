//! Decision procedure for the pure fragment: conjunctions of equalities
//! and disequalities over logical variables, integer constants and nil.
//!
//! The fragment has no function symbols, so union-find closure over the
//! equalities plus a scan of the disequality edges is complete. Distinct
//! integer constants are pairwise distinct, and nil is distinct from
//! every integer.

use std::collections::BTreeMap;

use crate::isl::{Literal, PureError, PureTerm, Term};

/// Union-find over interned terms with disequality edges between classes.
#[derive(Debug, Clone)]
pub struct CongruenceState {
    terms: Vec<Term>,
    index: BTreeMap<Term, usize>,
    parent: Vec<usize>,
    diseqs: Vec<(usize, usize)>,
    contradiction: bool,
}

impl CongruenceState {
    pub fn new() -> Self {
        CongruenceState {
            terms: Vec::new(),
            index: BTreeMap::new(),
            parent: Vec::new(),
            diseqs: Vec::new(),
            contradiction: false,
        }
    }

    /// Build from a formula already in literal normal form.
    pub fn from_pure(pure: &PureTerm) -> Result<Self, PureError> {
        let mut state = Self::new();
        for lit in pure.literals()? {
            state.assert_literal(&lit);
        }
        Ok(state)
    }

    fn intern(&mut self, term: &Term) -> usize {
        if let Some(&i) = self.index.get(term) {
            return i;
        }
        let i = self.terms.len();
        self.terms.push(term.clone());
        self.index.insert(term.clone(), i);
        self.parent.push(i);
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    pub fn assert_literal(&mut self, lit: &Literal) {
        match lit {
            Literal::Bool(false) => self.contradiction = true,
            Literal::Bool(true) => {}
            Literal::Eq(a, b) => {
                let ia = self.intern(a);
                let ib = self.intern(b);
                self.union(ia, ib);
            }
            Literal::Ne(a, b) => {
                let ia = self.intern(a);
                let ib = self.intern(b);
                self.diseqs.push((ia, ib));
            }
        }
    }

    /// Satisfiable iff no disequality edge loops on one class and no class
    /// merges two distinct interpreted constants.
    pub fn is_satisfiable(&mut self) -> bool {
        if self.contradiction {
            return false;
        }
        for k in 0..self.diseqs.len() {
            let (a, b) = self.diseqs[k];
            if self.find(a) == self.find(b) {
                return false;
            }
        }
        // Distinct constants in one class are a contradiction.
        let mut class_const: BTreeMap<usize, Term> = BTreeMap::new();
        for i in 0..self.terms.len() {
            let is_const = matches!(self.terms[i], Term::Const(_) | Term::Nil);
            if !is_const {
                continue;
            }
            let term = self.terms[i].clone();
            let root = self.find(i);
            match class_const.get(&root) {
                Some(existing) if *existing != term => return false,
                Some(_) => {}
                None => {
                    class_const.insert(root, term);
                }
            }
        }
        true
    }
}

impl Default for CongruenceState {
    fn default() -> Self {
        Self::new()
    }
}

/// True iff some assignment of values to terms satisfies every literal.
pub fn is_satisfiable(pure: &PureTerm) -> Result<bool, PureError> {
    Ok(CongruenceState::from_pure(pure)?.is_satisfiable())
}

/// `lhs` entails `rhs` iff conjoining the negation of any literal of
/// `rhs` onto `lhs` is unsatisfiable.
pub fn entails_pure(lhs: &PureTerm, rhs: &PureTerm) -> Result<bool, PureError> {
    let base = CongruenceState::from_pure(lhs)?;
    if !base.clone().is_satisfiable() {
        return Ok(true);
    }
    for lit in rhs.literals()? {
        let mut probe = base.clone();
        probe.assert_literal(&lit.negate());
        if probe.is_satisfiable() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Convenience wrapper: entailment of a single literal.
pub fn entails_literal(lhs: &PureTerm, lit: &Literal) -> Result<bool, PureError> {
    entails_pure(lhs, &lit.to_pure())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isl::Term;

    fn tv(name: &str) -> Term {
        Term::lvar(name)
    }

    #[test]
    fn direct_contradiction_unsat() {
        let pure = PureTerm::and(vec![
            PureTerm::eq(tv("X"), Term::Nil),
            PureTerm::ne(tv("X"), Term::Nil),
        ]);
        assert!(!is_satisfiable(&pure).unwrap());
    }

    #[test]
    fn true_is_satisfiable() {
        assert!(is_satisfiable(&PureTerm::True).unwrap());
    }

    #[test]
    fn transitive_contradiction_unsat() {
        // X=Y, Y=nil, X!=nil is unsatisfiable through the closure.
        let pure = PureTerm::and(vec![
            PureTerm::eq(tv("X"), tv("Y")),
            PureTerm::eq(tv("Y"), Term::Nil),
            PureTerm::ne(tv("X"), Term::Nil),
        ]);
        assert!(!is_satisfiable(&pure).unwrap());
    }

    #[test]
    fn distinct_constants_never_equal() {
        let pure = PureTerm::eq(Term::Const(0), Term::Const(1));
        assert!(!is_satisfiable(&pure).unwrap());
        let pure = PureTerm::eq(Term::Const(0), Term::Nil);
        assert!(!is_satisfiable(&pure).unwrap());
    }

    #[test]
    fn reflexive_entailment() {
        let p = PureTerm::eq(tv("X"), Term::Nil);
        assert!(entails_pure(&p, &p).unwrap());
    }

    #[test]
    fn congruence_entailment() {
        let lhs = PureTerm::and(vec![
            PureTerm::eq(tv("X"), tv("Y")),
            PureTerm::eq(tv("Y"), Term::Nil),
        ]);
        let rhs = PureTerm::eq(tv("X"), Term::Nil);
        assert!(entails_pure(&lhs, &rhs).unwrap());
    }

    #[test]
    fn true_entails_nothing_contingent() {
        let rhs = PureTerm::eq(tv("X"), Term::Nil);
        assert!(!entails_pure(&PureTerm::True, &rhs).unwrap());
    }

    #[test]
    fn unsupported_structure_is_rejected() {
        let pure = PureTerm::Not(Box::new(PureTerm::And(vec![
            PureTerm::eq(tv("X"), Term::Nil),
            PureTerm::eq(tv("Y"), Term::Nil),
        ])));
        assert!(matches!(
            is_satisfiable(&pure),
            Err(PureError::UnsupportedAtom(_))
        ));
    }

    #[test]
    fn monotonicity_spot_checks() {
        let p1 = PureTerm::eq(tv("X"), tv("Y"));
        let p2 = PureTerm::ne(tv("Y"), Term::Nil);
        let both = PureTerm::and(vec![p1.clone(), p2]);
        if is_satisfiable(&both).unwrap() {
            assert!(is_satisfiable(&p1).unwrap());
        }
    }
}
