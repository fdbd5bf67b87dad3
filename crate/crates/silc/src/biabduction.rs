//! Heap entailment and biabduction.
//!
//! Entailment here follows the convention that `p |- q` holds when every
//! heap satisfying `q` also satisfies `p` (the under-approximate
//! direction). Biabduction, given a current state `p` and a requirement
//! `q`, infers a missing resource `m` and a frame `f` such that
//! `p * m |- q * f`: `m` is what `p` lacks and is back-propagated into
//! preconditions, `f` is what the requirement does not touch and is
//! carried into postconditions.
//!
//! Matching is greedy, left to right over the requirement's atoms, with
//! exact program-variable matches taken before logical unification and
//! ties broken by the fixed atom order. Minimality of `m` is therefore
//! best effort, which is all the analysis needs. `Blame` and `World`
//! atoms take part like ordinary atoms keyed by their resource, so an
//! unmatched required `Blame` flows into the missing resource.

use std::collections::BTreeSet;

use crate::isl::{
    BlamePred, Entity, LogicalVar, PureTerm, SpatialTerm, Substitution, SymbolicState, Term,
    WorldPred,
};
use crate::solver;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiabductionResult {
    pub missing: SymbolicState,
    pub frame: SymbolicState,
    /// Pairs of (requirement atom, state atom) that were unified.
    pub matched: Vec<(SpatialTerm, SpatialTerm)>,
    pub unifier: Substitution,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum BiabductionError {
    /// The requirement cannot be satisfied from this state under any
    /// matching; the caller simply skips the rule.
    #[error("inconsistent requirement: {0}")]
    Inconsistent(String),
}

/// Variables that may be bound during unification (the fresh schematic
/// variables of the requirement side).
fn bindable_vars(state: &SymbolicState) -> BTreeSet<LogicalVar> {
    state.vars()
}

fn unify_terms(
    req: &Term,
    have: &Term,
    bindable: &BTreeSet<LogicalVar>,
    theta: &mut Substitution,
    pending_eqs: &mut Vec<(Term, Term)>,
) -> bool {
    let req = theta.apply_term(req);
    let have = theta.apply_term(have);
    if req == have {
        return true;
    }
    if let Term::LVar(v) = &req {
        if bindable.contains(v) && !theta.terms.contains_key(v) {
            theta.bind_term(v.clone(), have.clone());
            return true;
        }
    }
    // Both sides are fixed; reconcile through the pure part instead.
    pending_eqs.push((req, have));
    true
}

fn unify_entities(
    req: &Entity,
    have: &Entity,
    theta: &mut Substitution,
) -> bool {
    let req = theta.apply_entity(req);
    if let Entity::Unknown(v) = &req {
        if !theta.entities.contains_key(v) {
            theta.bind_entity(v.clone(), have.clone());
            return true;
        }
    }
    req.same_side(have) || matches!(have, Entity::Unknown(_))
}

/// Infer `(missing, frame)` for state `p` and requirement `q`, which must
/// be normalized and pure-satisfiable; `q`'s logical variables are
/// treated as fresh unification variables.
pub fn biabduce(
    p: &SymbolicState,
    q: &SymbolicState,
) -> Result<BiabductionResult, BiabductionError> {
    let bindable = bindable_vars(q);
    let mut theta = Substitution::new();
    let mut pending_eqs: Vec<(Term, Term)> = Vec::new();
    let mut consumed: Vec<bool> = vec![false; p.heap.len()];
    let mut matched: Vec<(SpatialTerm, SpatialTerm)> = Vec::new();
    let mut missing_atoms: Vec<SpatialTerm> = Vec::new();

    // Requirement atoms in rank order so stack cells bind locations
    // before heap cells are looked up.
    let mut req_atoms: Vec<&SpatialTerm> = q.heap.iter().collect();
    req_atoms.sort_by_key(|a| a.rank());

    for req in req_atoms {
        let candidate = find_match(req, p, &consumed, &bindable, &mut theta, &mut pending_eqs);
        match candidate {
            Some((idx, theta_after, eqs_after)) => {
                theta = theta_after;
                pending_eqs = eqs_after;
                consumed[idx] = true;
                matched.push((theta.apply_atom(req), p.heap[idx].clone()));
            }
            None => {
                let inst = theta.apply_atom(req);
                // A missing cell whose head already belongs to the state
                // would break separation in p * m: the rule cannot apply.
                if let Some(key) = inst.head_key() {
                    let collides = p
                        .heap
                        .iter()
                        .any(|a| a.head_key().as_ref() == Some(&key));
                    if collides {
                        return Err(BiabductionError::Inconsistent(format!(
                            "missing {} collides with the state",
                            inst
                        )));
                    }
                }
                missing_atoms.push(inst);
            }
        }
    }

    // Requirement pure part under the unifier; literals the state does not
    // already know become missing pure facts.
    let mut missing_lits: Vec<PureTerm> = Vec::new();
    let knowledge = state_knowledge(p);
    let q_pure = PureTerm::and(vec![q.pure.clone(), q.path.clone()]).substitute(&theta);
    let q_lits = q_pure
        .literals()
        .map_err(|e| BiabductionError::Inconsistent(e.to_string()))?;
    for lit in q_lits {
        match solver::entails_literal(&knowledge, &lit) {
            Ok(true) => {}
            _ => missing_lits.push(lit.to_pure()),
        }
    }
    for (a, b) in &pending_eqs {
        let lit = PureTerm::eq(a.clone(), b.clone());
        match solver::entails_pure(&knowledge, &lit) {
            Ok(true) => {}
            _ => missing_lits.push(lit),
        }
    }

    let missing = SymbolicState {
        path: PureTerm::True,
        pure: PureTerm::and(missing_lits),
        heap: missing_atoms,
        existentials: BTreeSet::new(),
    };
    let missing = missing
        .normalize()
        .map_err(|e| BiabductionError::Inconsistent(e.to_string()))?;

    // Consistency: the state plus everything the requirement imposes must
    // still be satisfiable.
    let combined = PureTerm::and(vec![knowledge, missing.pure.clone()]);
    match solver::is_satisfiable(&combined) {
        Ok(true) => {}
        _ => {
            return Err(BiabductionError::Inconsistent(
                "requirement contradicts the state's pure part".into(),
            ))
        }
    }

    let frame_atoms: Vec<SpatialTerm> = p
        .heap
        .iter()
        .zip(&consumed)
        .filter(|(_, used)| !**used)
        .map(|(a, _)| a.clone())
        .collect();
    let frame = SymbolicState {
        path: PureTerm::True,
        pure: PureTerm::True,
        heap: frame_atoms,
        existentials: BTreeSet::new(),
    };

    Ok(BiabductionResult {
        missing,
        frame,
        matched,
        unifier: theta,
    })
}

/// Try to match one requirement atom against an unconsumed state atom.
/// Returns the state index and the extended unifier on success.
fn find_match(
    req: &SpatialTerm,
    p: &SymbolicState,
    consumed: &[bool],
    bindable: &BTreeSet<LogicalVar>,
    theta: &mut Substitution,
    pending_eqs: &mut Vec<(Term, Term)>,
) -> Option<(usize, Substitution, Vec<(Term, Term)>)> {
    for (idx, have) in p.heap.iter().enumerate() {
        if consumed[idx] {
            continue;
        }
        let mut trial = theta.clone();
        let mut trial_eqs = pending_eqs.clone();
        let ok = match (req, have) {
            (SpatialTerm::PointsToVar(x1, v1), SpatialTerm::PointsToVar(x2, v2)) => {
                x1 == x2 && unify_terms(v1, v2, bindable, &mut trial, &mut trial_eqs)
            }
            (SpatialTerm::PointsToLoc(l1, v1), SpatialTerm::PointsToLoc(l2, v2)) => {
                loc_compatible(l1, l2, bindable, &mut trial)
                    && unify_terms(v1, v2, bindable, &mut trial, &mut trial_eqs)
            }
            (SpatialTerm::PointsToField(b1, f1, v1), SpatialTerm::PointsToField(b2, f2, v2)) => {
                f1 == f2
                    && loc_compatible(b1, b2, bindable, &mut trial)
                    && unify_terms(v1, v2, bindable, &mut trial, &mut trial_eqs)
            }
            (SpatialTerm::Invalid(l1), SpatialTerm::Invalid(l2)) => {
                loc_compatible(l1, l2, bindable, &mut trial)
            }
            (SpatialTerm::Blame(b1), SpatialTerm::Blame(b2)) => {
                blame_compatible(b1, b2, bindable, &mut trial)
            }
            (SpatialTerm::World(w1), SpatialTerm::World(w2)) => {
                world_compatible(w1, w2, &mut trial)
            }
            _ => false,
        };
        if ok {
            return Some((idx, trial, trial_eqs));
        }
    }
    None
}

/// Locations match when they are syntactically equal under the unifier or
/// when the requirement side is a still-unbound fresh variable.
fn loc_compatible(
    req: &Term,
    have: &Term,
    bindable: &BTreeSet<LogicalVar>,
    theta: &mut Substitution,
) -> bool {
    let req = theta.apply_term(req);
    let have = theta.apply_term(have);
    if req == have {
        return true;
    }
    if let Term::LVar(v) = &req {
        if bindable.contains(v) && !theta.terms.contains_key(v) {
            theta.bind_term(v.clone(), have);
            return true;
        }
    }
    false
}

fn blame_compatible(
    req: &BlamePred,
    have: &BlamePred,
    bindable: &BTreeSet<LogicalVar>,
    theta: &mut Substitution,
) -> bool {
    if req.bug_ref() != have.bug_ref() {
        return false;
    }
    if !loc_compatible(&req.resource, &have.resource, bindable, theta) {
        return false;
    }
    unify_entities(&req.entity, &have.entity, theta)
}

fn world_compatible(req: &WorldPred, have: &WorldPred, theta: &mut Substitution) -> bool {
    req.bug == have.bug && unify_entities(&req.entity, &have.entity, theta)
}

fn state_knowledge(state: &SymbolicState) -> PureTerm {
    let mut parts = vec![state.pure.clone(), state.path.clone()];
    // Heap-cell heads denote allocated (or once-allocated) locations and
    // can never be nil.
    for head in state.loc_heads() {
        parts.push(PureTerm::ne(head, Term::Nil));
    }
    PureTerm::and(parts)
}

/// `p |- q`: every model of `q` is a model of `p`, modulo renaming of
/// `q`'s variables. Decided by matching `p`'s atoms onto `q`'s with
/// backtracking, then pure entailment on the residue. Incompleteness
/// surfaces as `false`.
pub fn entails(p: &SymbolicState, q: &SymbolicState) -> bool {
    // An unsatisfiable q has no models and is covered by anything.
    let q_know = state_knowledge(q);
    match solver::is_satisfiable(&q_know) {
        Ok(true) => {}
        _ => return true,
    }
    if p.heap.len() != q.heap.len() {
        return false;
    }
    let bindable = bindable_vars(p);
    let mut used = vec![false; q.heap.len()];
    let mut theta = Substitution::new();
    if !match_all(p, q, 0, &mut used, &mut theta, &bindable, &q_know) {
        return false;
    }
    true
}

fn match_all(
    p: &SymbolicState,
    q: &SymbolicState,
    pi: usize,
    used: &mut Vec<bool>,
    theta: &mut Substitution,
    bindable: &BTreeSet<LogicalVar>,
    q_know: &PureTerm,
) -> bool {
    if pi == p.heap.len() {
        // All atoms matched bijectively; check the pure residue.
        let p_pure = PureTerm::and(vec![p.pure.clone(), p.path.clone()]).substitute(theta);
        return solver::entails_pure(q_know, &p_pure).unwrap_or(false);
    }
    let req = &p.heap[pi];
    for qi in 0..q.heap.len() {
        if used[qi] {
            continue;
        }
        let mut trial = theta.clone();
        let mut eqs: Vec<(Term, Term)> = Vec::new();
        let ok = match (req, &q.heap[qi]) {
            (SpatialTerm::PointsToVar(x1, v1), SpatialTerm::PointsToVar(x2, v2)) => {
                x1 == x2 && unify_terms(v1, v2, bindable, &mut trial, &mut eqs)
            }
            (SpatialTerm::PointsToLoc(l1, v1), SpatialTerm::PointsToLoc(l2, v2)) => {
                unify_terms(l1, l2, bindable, &mut trial, &mut eqs)
                    && unify_terms(v1, v2, bindable, &mut trial, &mut eqs)
            }
            (SpatialTerm::PointsToField(b1, f1, v1), SpatialTerm::PointsToField(b2, f2, v2)) => {
                f1 == f2
                    && unify_terms(b1, b2, bindable, &mut trial, &mut eqs)
                    && unify_terms(v1, v2, bindable, &mut trial, &mut eqs)
            }
            (SpatialTerm::Invalid(l1), SpatialTerm::Invalid(l2)) => {
                unify_terms(l1, l2, bindable, &mut trial, &mut eqs)
            }
            (SpatialTerm::Blame(b1), SpatialTerm::Blame(b2)) => {
                b1.bug_ref() == b2.bug_ref()
                    && unify_terms(&b1.resource, &b2.resource, bindable, &mut trial, &mut eqs)
                    && unify_entities(&b1.entity, &b2.entity, &mut trial)
            }
            (SpatialTerm::World(w1), SpatialTerm::World(w2)) => {
                w1.bug == w2.bug && unify_entities(&w1.entity, &w2.entity, &mut trial)
            }
            _ => false,
        };
        if !ok {
            continue;
        }
        // Any residual equalities must follow from q's knowledge.
        let residue_ok = eqs.iter().all(|(a, b)| {
            solver::entails_pure(q_know, &PureTerm::eq(a.clone(), b.clone())).unwrap_or(false)
        });
        if !residue_ok {
            continue;
        }
        used[qi] = true;
        let saved = theta.clone();
        *theta = trial;
        if match_all(p, q, pi + 1, used, theta, bindable, q_know) {
            return true;
        }
        *theta = saved;
        used[qi] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isl::Term;

    fn tv(name: &str) -> Term {
        Term::lvar(name)
    }

    fn state(atoms: Vec<SpatialTerm>, pure: PureTerm) -> SymbolicState {
        SymbolicState {
            pure,
            heap: atoms,
            ..SymbolicState::default()
        }
        .normalize()
        .unwrap()
    }

    #[test]
    fn pure_strengthening_on_the_right_entails() {
        let p = state(vec![SpatialTerm::points_to_var("x", tv("X"))], PureTerm::True);
        let q = state(
            vec![SpatialTerm::points_to_var("x", tv("X"))],
            PureTerm::eq(tv("X"), Term::Nil),
        );
        assert!(entails(&p, &q));
        assert!(!entails(&q, &p));
    }

    #[test]
    fn missing_cell_does_not_entail() {
        let p = state(vec![SpatialTerm::points_to_var("x", tv("X"))], PureTerm::True);
        let q = state(vec![], PureTerm::True);
        assert!(!entails(&p, &q));
    }

    #[test]
    fn entailment_unifies_renamed_variables() {
        let p = state(
            vec![
                SpatialTerm::points_to_var("x", tv("X")),
                SpatialTerm::invalid(tv("X")),
            ],
            PureTerm::True,
        );
        let q = state(
            vec![
                SpatialTerm::points_to_var("x", tv("Y")),
                SpatialTerm::invalid(tv("Y")),
            ],
            PureTerm::True,
        );
        assert!(entails(&p, &q));
    }

    #[test]
    fn biabduce_infers_missing_cell_and_frames_the_rest() {
        // State x|->X * v|->V against requirement x|->X * X|->W: the heap
        // cell at X is missing, the v cell is frame.
        let p = state(
            vec![
                SpatialTerm::points_to_var("x", tv("X")),
                SpatialTerm::points_to_var("v", tv("V")),
            ],
            PureTerm::True,
        );
        let q = state(
            vec![
                SpatialTerm::points_to_var("x", tv("X0")),
                SpatialTerm::points_to_loc(tv("X0"), tv("W0")),
            ],
            PureTerm::True,
        );
        let result = biabduce(&p, &q).unwrap();
        assert_eq!(
            result.missing.heap,
            vec![SpatialTerm::points_to_loc(tv("X"), tv("W0"))]
        );
        assert_eq!(
            result.frame.heap,
            vec![SpatialTerm::points_to_var("v", tv("V"))]
        );
        // Soundness: p * m |- q * f.
        let pm = p.star(&result.missing).normalize().unwrap();
        let qf = q
            .substitute(&result.unifier)
            .unwrap()
            .star(&result.frame)
            .normalize()
            .unwrap();
        assert!(entails(&pm, &qf));
    }

    #[test]
    fn biabduce_with_empty_requirement_frames_everything() {
        let p = state(
            vec![SpatialTerm::points_to_var("x", tv("X"))],
            PureTerm::True,
        );
        let q = SymbolicState::emp();
        let result = biabduce(&p, &q).unwrap();
        assert!(result.missing.is_emp());
        assert_eq!(result.frame.heap, p.heap);
    }

    #[test]
    fn biabduce_from_empty_state_misses_everything() {
        let p = SymbolicState::emp();
        let q = state(
            vec![SpatialTerm::points_to_var("x", tv("X"))],
            PureTerm::True,
        );
        let result = biabduce(&p, &q).unwrap();
        assert_eq!(
            result.missing.heap,
            vec![SpatialTerm::points_to_var("x", tv("X"))]
        );
        assert!(result.frame.is_emp());
    }

    #[test]
    fn missing_head_collision_is_inconsistent() {
        // State already owns X as deallocated; requiring a live cell at X
        // cannot be fixed by adding resources.
        let p = state(
            vec![
                SpatialTerm::points_to_var("x", tv("X")),
                SpatialTerm::invalid(tv("X")),
            ],
            PureTerm::True,
        );
        let q = state(
            vec![
                SpatialTerm::points_to_var("x", tv("X1")),
                SpatialTerm::points_to_loc(tv("X1"), tv("V1")),
            ],
            PureTerm::True,
        );
        assert!(matches!(
            biabduce(&p, &q),
            Err(BiabductionError::Inconsistent(_))
        ));
    }

    #[test]
    fn contradictory_pure_requirement_is_inconsistent() {
        let p = state(
            vec![SpatialTerm::points_to_var("x", tv("X"))],
            PureTerm::ne(tv("X"), Term::Nil),
        );
        let q = state(
            vec![SpatialTerm::points_to_var("x", tv("X1"))],
            PureTerm::eq(tv("X1"), Term::Nil),
        );
        assert!(matches!(
            biabduce(&p, &q),
            Err(BiabductionError::Inconsistent(_))
        ));
    }
}
