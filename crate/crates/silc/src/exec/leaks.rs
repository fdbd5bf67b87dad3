//! Exit-time leak detection and post-state collection.
//!
//! A cell leaks when it was allocated within the function's footprint and
//! is unreachable from the escaping roots (parameter values and the
//! return value) at exit. Reachability follows points-to and field edges
//! and is severed at invalidated bases: freeing a struct cuts the paths
//! through its fields. The blame for a leak is the blame of the base
//! whose deallocation severed the only path, falling back to the leaked
//! cell's own blame for plain orphans.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::isl::{BugRef, SpatialTerm, SymbolicState, Term};

use super::summary::LeakInfo;

/// Roots considered at a function's exit.
#[derive(Debug, Clone, Default)]
pub struct LeakRoots {
    /// Values still live after the return: parameter values and the
    /// returned value.
    pub live: Vec<Term>,
    /// Values of local variables that just went out of scope; they no
    /// longer keep cells alive but still witness severed paths.
    pub out_of_scope: Vec<Term>,
    /// Locations allocated within this function's footprint; only these
    /// can be reported as leaked here.
    pub allocated: BTreeSet<Term>,
}

fn invalid_locs(state: &SymbolicState) -> BTreeSet<Term> {
    state
        .atoms()
        .iter()
        .filter_map(|a| match a {
            SpatialTerm::Invalid(l) => Some(l.clone()),
            _ => None,
        })
        .collect()
}

fn edges_from(state: &SymbolicState, from: &Term) -> Vec<(Option<String>, Term)> {
    let mut out = Vec::new();
    for atom in state.atoms() {
        match atom {
            SpatialTerm::PointsToLoc(l, v) if l == from => out.push((None, v.clone())),
            SpatialTerm::PointsToField(b, f, v) if b == from => {
                out.push((Some(f.clone()), v.clone()))
            }
            _ => {}
        }
    }
    out
}

/// Reachable terms, severing traversal at invalidated locations.
pub fn reachable_strict(state: &SymbolicState, roots: &[Term]) -> BTreeSet<Term> {
    let invalid = invalid_locs(state);
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    let mut queue: VecDeque<Term> = roots.iter().cloned().collect();
    while let Some(t) = queue.pop_front() {
        if !seen.insert(t.clone()) {
            continue;
        }
        if invalid.contains(&t) {
            continue;
        }
        for (_, next) in edges_from(state, &t) {
            queue.push_back(next);
        }
    }
    seen
}

/// Reachable terms ignoring invalidation, used for collection: freed
/// structures still tether their field records.
pub fn reachable_lenient(state: &SymbolicState, roots: &[Term]) -> BTreeSet<Term> {
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    let mut queue: VecDeque<Term> = roots.iter().cloned().collect();
    while let Some(t) = queue.pop_front() {
        if !seen.insert(t.clone()) {
            continue;
        }
        for (_, next) in edges_from(state, &t) {
            queue.push_back(next);
        }
    }
    seen
}

/// For each term reachable when invalidation is ignored: the first
/// invalidated base crossed on the way, and the field edge used to enter
/// the term.
fn severed_paths(
    state: &SymbolicState,
    roots: &[Term],
) -> BTreeMap<Term, (Option<Term>, Option<(Term, String)>)> {
    let invalid = invalid_locs(state);
    let mut info: BTreeMap<Term, (Option<Term>, Option<(Term, String)>)> = BTreeMap::new();
    let mut queue: VecDeque<Term> = VecDeque::new();
    for r in roots {
        if !info.contains_key(r) {
            info.insert(r.clone(), (None, None));
            queue.push_back(r.clone());
        }
    }
    while let Some(t) = queue.pop_front() {
        let (sever, _) = info.get(&t).cloned().unwrap_or((None, None));
        let sever_here = sever.clone().or_else(|| {
            if invalid.contains(&t) {
                Some(t.clone())
            } else {
                None
            }
        });
        for (field, next) in edges_from(state, &t) {
            if info.contains_key(&next) {
                continue;
            }
            let via = field.map(|f| (t.clone(), f));
            info.insert(next.clone(), (sever_here.clone(), via));
            queue.push_back(next.clone());
        }
    }
    info
}

/// Report every allocated location unreachable from the live roots.
pub fn detect_leaks_at_exit(state: &SymbolicState, roots: &LeakRoots) -> Vec<LeakInfo> {
    let live_heads: BTreeSet<Term> = state
        .atoms()
        .iter()
        .filter_map(|a| match a {
            SpatialTerm::PointsToLoc(l, _) => Some(l.clone()),
            _ => None,
        })
        .collect();
    let reach = reachable_strict(state, &roots.live);
    let mut all_roots = roots.live.clone();
    all_roots.extend(roots.out_of_scope.iter().cloned());
    let paths = severed_paths(state, &all_roots);

    let mut leaks = Vec::new();
    for loc in &roots.allocated {
        if !live_heads.contains(loc) || reach.contains(loc) {
            continue;
        }
        let (severed_base, rescue_field) = match paths.get(loc) {
            Some((sever, via)) => (sever.clone(), via.clone()),
            None => (None, None),
        };
        let blame_key = severed_base.as_ref().unwrap_or(loc);
        let blame = state
            .blames()
            .find(|b| b.resource == *blame_key && b.bug_ref() == Some(BugRef::MemLeak))
            .cloned();
        leaks.push(LeakInfo {
            loc: loc.clone(),
            severed_base,
            rescue_field,
            blame,
        });
    }
    leaks
}

/// Drop atoms that nothing can reach any more: unreachable cells,
/// invalidations and field records, plus blame atoms whose resource
/// vanished. Keeps summaries small and stops reported leaks from being
/// re-detected by callers.
pub fn collect_garbage(state: &SymbolicState, roots: &[Term]) -> SymbolicState {
    let mut anchor: Vec<Term> = roots.to_vec();
    for atom in state.atoms() {
        if let SpatialTerm::PointsToVar(_, v) = atom {
            anchor.push(v.clone());
        }
    }
    let reach = reachable_lenient(state, &anchor);
    let kept: Vec<SpatialTerm> = state
        .atoms()
        .iter()
        .filter(|a| match a {
            SpatialTerm::PointsToVar(..) | SpatialTerm::World(_) => true,
            SpatialTerm::PointsToLoc(l, _) | SpatialTerm::Invalid(l) => reach.contains(l),
            SpatialTerm::PointsToField(b, _, _) => reach.contains(b),
            SpatialTerm::Blame(b) => reach.contains(&b.resource),
            SpatialTerm::Emp | SpatialTerm::SepConj(_) => false,
        })
        .cloned()
        .collect();
    SymbolicState {
        path: state.path.clone(),
        pure: state.pure.clone(),
        heap: kept,
        existentials: state.existentials.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isl::{PureTerm, Term};

    fn tv(name: &str) -> Term {
        Term::lvar(name)
    }

    fn st(atoms: Vec<SpatialTerm>) -> SymbolicState {
        SymbolicState {
            heap: atoms,
            ..SymbolicState::default()
        }
        .normalize()
        .unwrap()
    }

    #[test]
    fn reachable_cell_is_not_a_leak() {
        // x|->L * L|->V with x's value rooted: nothing leaks.
        let state = st(vec![
            SpatialTerm::points_to_var("x", tv("L")),
            SpatialTerm::points_to_loc(tv("L"), tv("V")),
        ]);
        let roots = LeakRoots {
            live: vec![tv("L")],
            out_of_scope: vec![],
            allocated: BTreeSet::from([tv("L")]),
        };
        assert!(detect_leaks_at_exit(&state, &roots).is_empty());
    }

    #[test]
    fn orphan_cell_leaks_with_its_own_blame() {
        // A cell whose binding went out of scope leaks.
        let state = st(vec![SpatialTerm::points_to_loc(tv("L"), tv("V"))]);
        let roots = LeakRoots {
            live: vec![],
            out_of_scope: vec![],
            allocated: BTreeSet::from([tv("L")]),
        };
        let leaks = detect_leaks_at_exit(&state, &roots);
        assert_eq!(leaks.len(), 1);
        assert_eq!(leaks[0].loc, tv("L"));
        assert!(leaks[0].severed_base.is_none());
    }

    #[test]
    fn severed_field_target_blames_the_freed_base() {
        // B freed while B.q still points at live Q: Q leaks through B.
        let state = st(vec![
            SpatialTerm::invalid(tv("B")),
            SpatialTerm::points_to_field(tv("B"), "q", tv("Q")),
            SpatialTerm::points_to_loc(tv("Q"), tv("V")),
        ]);
        let roots = LeakRoots {
            live: vec![],
            out_of_scope: vec![tv("B")],
            allocated: BTreeSet::from([tv("Q")]),
        };
        let leaks = detect_leaks_at_exit(&state, &roots);
        assert_eq!(leaks.len(), 1);
        assert_eq!(leaks[0].loc, tv("Q"));
        assert_eq!(leaks[0].severed_base, Some(tv("B")));
        assert_eq!(leaks[0].rescue_field, Some((tv("B"), "q".to_string())));
    }

    #[test]
    fn collection_drops_unreachable_atoms() {
        let state = SymbolicState {
            pure: PureTerm::True,
            heap: vec![
                SpatialTerm::points_to_var("x", tv("L")),
                SpatialTerm::points_to_loc(tv("L"), tv("V")),
                SpatialTerm::points_to_loc(tv("Q"), tv("W")),
            ],
            ..SymbolicState::default()
        }
        .normalize()
        .unwrap();
        let collected = collect_garbage(&state, &[tv("L")]);
        assert!(collected
            .atoms()
            .iter()
            .all(|a| !matches!(a, SpatialTerm::PointsToLoc(l, _) if *l == tv("Q"))));
        assert_eq!(collected.atoms().len(), 2);
    }
}
