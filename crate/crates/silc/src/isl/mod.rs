//! The blame-carrying assertion language and its structural algebra.
//!
//! States pair a symbolic heap (points-to atoms under separating
//! conjunction) with pure constraints and a program-path component. The
//! heap additionally carries two bookkeeping predicates: `Blame`, which
//! records the entity responsible for a resource per tracked bug kind,
//! and `World`, a persistent marker naming the side whose code is being
//! analyzed. Triples over these states are under-approximate: they prove
//! that erroneous states are reachable, not that they are absent.

mod pure;
mod render;
mod spatial;
mod state;
mod term;

pub use pure::{Literal, PureError, PureTerm};
pub use render::{render_pure, render_state};
pub use spatial::{
    BlamePred, BugCond, BugRef, CallRef, Entity, EntityMeta, FlowSign, HeadKey, Sanitization,
    SpatialTerm, Template, WorldPred,
};
pub use state::{ExitCond, Substitution, SymbolicState, Triple};
pub use term::{FreshVarGen, LogicalVar, Term};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("separation violation: {0}")]
    SeparationViolation(String),
    #[error("capture error: {0}")]
    Capture(String),
    #[error(transparent)]
    Pure(#[from] PureError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn lv(name: &str) -> LogicalVar {
        LogicalVar::new(name)
    }

    fn tv(name: &str) -> Term {
        Term::lvar(name)
    }

    #[test]
    fn rename_substitution_applies_everywhere() {
        // x|->X /\ X=nil, {X -> L} becomes x|->L /\ L=nil.
        let state = SymbolicState {
            pure: PureTerm::eq(tv("X"), Term::Nil),
            heap: vec![SpatialTerm::points_to_var("x", tv("X"))],
            ..SymbolicState::default()
        };
        let mapping = Substitution::of_terms([(lv("X"), tv("L"))]);
        let out = state.substitute(&mapping).unwrap();
        assert_eq!(out.heap, vec![SpatialTerm::points_to_var("x", tv("L"))]);
        assert_eq!(out.pure, PureTerm::eq(tv("L"), Term::Nil));
    }

    #[test]
    fn substituting_bound_existential_is_capture() {
        let state = SymbolicState {
            heap: vec![SpatialTerm::points_to_var("x", tv("L"))],
            existentials: BTreeSet::from([lv("L")]),
            ..SymbolicState::default()
        };
        let mapping = Substitution::of_terms([(lv("L"), tv("Y"))]);
        assert!(matches!(
            state.substitute(&mapping),
            Err(DomainError::Capture(_))
        ));
    }

    #[test]
    fn target_captured_by_binder_is_capture() {
        let state = SymbolicState {
            heap: vec![
                SpatialTerm::points_to_var("x", tv("X")),
                SpatialTerm::points_to_loc(tv("L"), tv("V")),
            ],
            existentials: BTreeSet::from([lv("L")]),
            ..SymbolicState::default()
        };
        let mapping = Substitution::of_terms([(lv("X"), tv("L"))]);
        assert!(matches!(
            state.substitute(&mapping),
            Err(DomainError::Capture(_))
        ));
    }

    #[test]
    fn substitution_recurses_into_blame_arguments() {
        let blame = BlamePred {
            resource: tv("X"),
            entity: Entity::Vendor(EntityMeta::new("f.mc", "f", 3)),
            cond: BugCond::Pred(BugRef::Npd, tv("X")),
            sanitization: Sanitization::new(Template::Stop, FlowSign::Plus),
            ctx: "f".into(),
            via: None,
        };
        let state = SymbolicState {
            heap: vec![SpatialTerm::Blame(blame)],
            ..SymbolicState::default()
        };
        let mapping = Substitution::of_terms([(lv("X"), tv("L"))]);
        let out = state.substitute(&mapping).unwrap();
        match &out.heap[0] {
            SpatialTerm::Blame(b) => {
                assert_eq!(b.resource, tv("L"));
                assert_eq!(b.cond, BugCond::Pred(BugRef::Npd, tv("L")));
                assert!(b.entity.is_vendor());
            }
            other => panic!("expected blame atom, got {other}"),
        }
    }

    #[test]
    fn normalize_absorbs_emp() {
        let state = SymbolicState::with_heap(vec![SpatialTerm::SepConj(vec![
            SpatialTerm::Emp,
            SpatialTerm::points_to_var("x", tv("X")),
        ])]);
        let out = state.normalize().unwrap();
        assert_eq!(out.heap, vec![SpatialTerm::points_to_var("x", tv("X"))]);
    }

    #[test]
    fn normalize_rejects_double_ownership() {
        let state = SymbolicState::with_heap(vec![
            SpatialTerm::points_to_var("x", tv("X")),
            SpatialTerm::points_to_var("x", tv("Y")),
        ]);
        assert!(matches!(
            state.normalize(),
            Err(DomainError::SeparationViolation(_))
        ));
    }

    #[test]
    fn invalid_and_cell_at_same_location_conflict() {
        let state = SymbolicState::with_heap(vec![
            SpatialTerm::points_to_loc(tv("L"), tv("V")),
            SpatialTerm::invalid(tv("L")),
        ]);
        assert!(state.normalize().is_err());
    }

    #[test]
    fn field_family_shares_a_base_without_conflict() {
        let state = SymbolicState::with_heap(vec![
            SpatialTerm::invalid(tv("L")),
            SpatialTerm::points_to_field(tv("L"), "f", tv("V")),
            SpatialTerm::points_to_field(tv("L"), "g", tv("W")),
        ]);
        assert!(state.normalize().is_ok());
    }

    #[test]
    fn rendering_matches_documented_syntax() {
        let state = SymbolicState {
            pure: PureTerm::ne(tv("X"), Term::Nil),
            heap: vec![
                SpatialTerm::points_to_var("x", tv("X")),
                SpatialTerm::points_to_field(tv("X"), "f", tv("V")),
                SpatialTerm::invalid(tv("Y")),
            ],
            ..SymbolicState::default()
        };
        let text = render_state(&state.normalize().unwrap());
        assert_eq!(text, "x|->X * X.f|->V * Y! /\\ X != nil");
    }
}
