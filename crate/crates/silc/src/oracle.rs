//! Reference enumerators used by the test suites.
//!
//! Everything here decides questions by brute force over a small bounded
//! universe and stays deliberately independent of the solver and
//! biabduction implementations it is used to check.

use std::collections::{BTreeMap, BTreeSet};

use crate::isl::{Literal, PureTerm, SpatialTerm, SymbolicState, Term};

/// Concrete values of the bounded semantics: nil or one of `k` locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Val {
    Nil,
    Loc(u8),
    Int(i64),
}

/// A heap cell is either live with contents or freed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cell {
    Live(Val),
    Freed,
}

/// Addressable slots: a plain location or a field of a location.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Loc(u8),
    Field(u8, String),
}

/// A concrete model: stack values for program variables plus an exact
/// heap. States denote sets of models (their logical variables are
/// projected out).
pub type Model = (BTreeMap<String, Val>, BTreeMap<Slot, Cell>);

fn eval_term(term: &Term, assign: &BTreeMap<String, Val>) -> Option<Val> {
    match term {
        Term::Nil => Some(Val::Nil),
        Term::Const(c) => Some(Val::Int(*c)),
        Term::LVar(v) => assign.get(v.as_str()).copied(),
        Term::PVar(_) => None,
    }
}

fn eval_literal(lit: &Literal, assign: &BTreeMap<String, Val>) -> Option<bool> {
    match lit {
        Literal::Bool(b) => Some(*b),
        Literal::Eq(a, b) => Some(eval_term(a, assign)? == eval_term(b, assign)?),
        Literal::Ne(a, b) => Some(eval_term(a, assign)? != eval_term(b, assign)?),
    }
}

/// Enumerate the models of a state over `num_locs` locations. Blame and
/// World atoms are bookkeeping, not heap resources; they are ignored.
pub fn models(state: &SymbolicState, num_locs: u8) -> BTreeSet<Model> {
    let vars: Vec<String> = state.vars().iter().map(|v| v.as_str().to_string()).collect();
    let mut domain: Vec<Val> = vec![Val::Nil];
    for k in 0..num_locs {
        domain.push(Val::Loc(k));
    }

    let pure = PureTerm::and(vec![state.pure.clone(), state.path.clone()]);
    let lits = match pure.literals() {
        Ok(l) => l,
        Err(_) => return BTreeSet::new(),
    };

    let mut out = BTreeSet::new();
    let mut assign: BTreeMap<String, Val> = BTreeMap::new();
    enumerate(&vars, 0, &domain, &mut assign, &mut |assign| {
        if !lits
            .iter()
            .all(|l| eval_literal(l, assign).unwrap_or(false))
        {
            return;
        }
        if let Some(model) = build_model(state, assign) {
            out.insert(model);
        }
    });
    out
}

fn enumerate(
    vars: &[String],
    idx: usize,
    domain: &[Val],
    assign: &mut BTreeMap<String, Val>,
    visit: &mut impl FnMut(&BTreeMap<String, Val>),
) {
    if idx == vars.len() {
        visit(assign);
        return;
    }
    for val in domain {
        assign.insert(vars[idx].clone(), *val);
        enumerate(vars, idx + 1, domain, assign, visit);
    }
    assign.remove(&vars[idx]);
}

fn build_model(state: &SymbolicState, assign: &BTreeMap<String, Val>) -> Option<Model> {
    let mut stack: BTreeMap<String, Val> = BTreeMap::new();
    let mut heap: BTreeMap<Slot, Cell> = BTreeMap::new();
    for atom in state.atoms() {
        match atom {
            SpatialTerm::PointsToVar(x, v) => {
                let val = eval_term(v, assign)?;
                if stack.insert(x.clone(), val).is_some() {
                    return None;
                }
            }
            SpatialTerm::PointsToLoc(l, v) => {
                let loc = match eval_term(l, assign)? {
                    Val::Loc(k) => k,
                    _ => return None,
                };
                let val = eval_term(v, assign)?;
                if heap.insert(Slot::Loc(loc), Cell::Live(val)).is_some() {
                    return None;
                }
            }
            SpatialTerm::PointsToField(b, f, v) => {
                let loc = match eval_term(b, assign)? {
                    Val::Loc(k) => k,
                    _ => return None,
                };
                let val = eval_term(v, assign)?;
                if heap
                    .insert(Slot::Field(loc, f.clone()), Cell::Live(val))
                    .is_some()
                {
                    return None;
                }
            }
            SpatialTerm::Invalid(l) => {
                let loc = match eval_term(l, assign)? {
                    Val::Loc(k) => k,
                    _ => return None,
                };
                if heap.insert(Slot::Loc(loc), Cell::Freed).is_some() {
                    return None;
                }
            }
            SpatialTerm::Blame(_) | SpatialTerm::World(_) => {}
            SpatialTerm::Emp | SpatialTerm::SepConj(_) => return None,
        }
    }
    Some((stack, heap))
}

/// Oracle entailment: every model of `q` is a model of `p`.
pub fn entails_oracle(p: &SymbolicState, q: &SymbolicState, num_locs: u8) -> bool {
    let mq = models(q, num_locs);
    let mp = models(p, num_locs);
    mq.is_subset(&mp)
}

/// Whether any non-degenerate (missing, frame) pair exists for `p`, `q`:
/// some satisfiable extension `p * m` covering `q * f`. Searched over
/// heaps assembled from the states' own atoms, which is exhaustive for
/// the bounded grid the acceptance suite runs.
pub fn solution_exists_oracle(p: &SymbolicState, q: &SymbolicState, num_locs: u8) -> bool {
    // Candidate missing parts: subsets of q's atoms (the only resources a
    // requirement can demand) plus q's pure part; candidate frames:
    // subsets of p's atoms.
    let q_atoms = q.atoms().to_vec();
    let p_atoms = p.atoms().to_vec();
    for m_mask in 0..(1u32 << q_atoms.len()) {
        let m_atoms: Vec<SpatialTerm> = q_atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| m_mask & (1 << i) != 0)
            .map(|(_, a)| a.clone())
            .collect();
        for f_mask in 0..(1u32 << p_atoms.len()) {
            let f_atoms: Vec<SpatialTerm> = p_atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| f_mask & (1 << i) != 0)
                .map(|(_, a)| a.clone())
                .collect();
            let pm = SymbolicState {
                pure: PureTerm::and(vec![p.pure.clone(), q.pure.clone()]),
                heap: p
                    .atoms()
                    .iter()
                    .cloned()
                    .chain(m_atoms.iter().cloned())
                    .collect(),
                ..SymbolicState::default()
            };
            let qf = SymbolicState {
                pure: PureTerm::and(vec![p.pure.clone(), q.pure.clone()]),
                heap: q
                    .atoms()
                    .iter()
                    .cloned()
                    .chain(f_atoms.iter().cloned())
                    .collect(),
                ..SymbolicState::default()
            };
            let (pm, qf) = match (pm.normalize(), qf.normalize()) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            if models(&qf, num_locs).is_empty() {
                continue; // degenerate: vacuous coverage proves nothing
            }
            if entails_oracle(&pm, &qf, num_locs) {
                return true;
            }
        }
    }
    false
}

/// Brute-force satisfiability of a literal conjunction over a five-value
/// universe: nil, the integers 0 and 1, and two anonymous atoms.
pub fn satisfiable_bruteforce(pure: &PureTerm) -> Option<bool> {
    let lits = pure.literals().ok()?;
    let vars: Vec<String> = pure.vars().iter().map(|v| v.as_str().to_string()).collect();
    // Universe: nil, 0, 1, and two atoms disjoint from all constants.
    let domain = [Val::Nil, Val::Int(0), Val::Int(1), Val::Loc(0), Val::Loc(1)];
    let mut assign: BTreeMap<String, Val> = BTreeMap::new();
    let mut found = false;
    enumerate(&vars, 0, &domain, &mut assign, &mut |assign| {
        if found {
            return;
        }
        if lits
            .iter()
            .all(|l| eval_literal(l, assign).unwrap_or(false))
        {
            found = true;
        }
    });
    Some(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tv(name: &str) -> Term {
        Term::lvar(name)
    }

    #[test]
    fn model_counts_are_sane() {
        // x|->X with X free over {nil, l0, l1} has three models.
        let state = SymbolicState {
            heap: vec![SpatialTerm::points_to_var("x", tv("X"))],
            ..SymbolicState::default()
        };
        assert_eq!(models(&state, 2).len(), 3);
    }

    #[test]
    fn freed_and_live_cells_differ() {
        let live = SymbolicState {
            heap: vec![SpatialTerm::points_to_loc(tv("A"), Term::Nil)],
            ..SymbolicState::default()
        };
        let freed = SymbolicState {
            heap: vec![SpatialTerm::invalid(tv("A"))],
            ..SymbolicState::default()
        };
        assert!(models(&live, 2)
            .intersection(&models(&freed, 2))
            .next()
            .is_none());
    }

    #[test]
    fn bruteforce_agrees_on_basics() {
        let contradiction = PureTerm::and(vec![
            PureTerm::eq(tv("X"), Term::Nil),
            PureTerm::ne(tv("X"), Term::Nil),
        ]);
        assert_eq!(satisfiable_bruteforce(&contradiction), Some(false));
        assert_eq!(satisfiable_bruteforce(&PureTerm::True), Some(true));
    }
}
