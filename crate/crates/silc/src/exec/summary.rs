//! Function summaries and the bookkeeping that travels with them.

use std::collections::BTreeMap;

use crate::isl::{
    BlamePred, BugRef, CallRef, Entity, ExitCond, SymbolicState, Term, Triple,
};

/// Per-triple metadata: latent/manifest classification, the bug an
/// erroneous triple proves, the culprit resource, the trigger that turned
/// it manifest, and provenance for sanitizer generation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TripleMeta {
    /// Erroneous triples whose trigger depends on the calling context are
    /// latent: kept for callers, never reported directly.
    pub latent: bool,
    pub bug: Option<BugRef>,
    /// Resource the error rule fired on, in the summary's frame.
    pub culprit: Option<Term>,
    /// The missing resource that enabled the error at this level.
    pub trigger: Option<SymbolicState>,
    /// The client-to-vendor boundary call this error came through.
    pub vendor_call: Option<CallRef>,
    /// Set once a manifestation has been reported; callers still apply
    /// the triple but do not report it again.
    pub already_reported: bool,
    /// Return value of ok triples.
    pub ret: Option<Term>,
    /// Leak details for exit-time leak proofs.
    pub leak: Option<LeakInfo>,
    /// Leak proofs document the pre-collection exit state; they are not
    /// applied at call sites.
    pub report_only: bool,
}

/// What leaked and how reachability to it was severed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakInfo {
    /// The allocated location that became unreachable.
    pub loc: Term,
    /// Invalidated base whose deallocation severed the only path.
    pub severed_base: Option<Term>,
    /// Field edge leading into the leaked cell, for rescue expressions.
    pub rescue_field: Option<(Term, String)>,
    /// Blame atom of the severing base (or of the cell itself).
    pub blame: Option<BlamePred>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryTriple {
    pub triple: Triple,
    pub meta: TripleMeta,
}

/// The interprocedural currency: every triple inferred for one function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub name: String,
    pub world: Entity,
    pub params: Vec<String>,
    pub return_type: crate::frontend::MiniType,
    pub triples: Vec<SummaryTriple>,
}

impl Summary {
    pub fn ok_triples(&self) -> impl Iterator<Item = &SummaryTriple> {
        self.triples
            .iter()
            .filter(|t| matches!(t.triple.exit, ExitCond::Ok))
    }

    pub fn err_triples(&self) -> impl Iterator<Item = &SummaryTriple> {
        self.triples.iter().filter(|t| t.triple.exit.is_err())
    }
}

/// One argument of a logged boundary call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallArg {
    /// Source text of the argument expression.
    pub text: String,
    /// Its value in the caller's frame at the call.
    pub term: Term,
}

/// A client-to-vendor call recorded during analysis. Everything sanitizer
/// generation needs to reason about the boundary lives here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub caller: String,
    pub caller_file: String,
    pub callee: String,
    pub loc: crate::frontend::Loc,
    pub args: Vec<CallArg>,
    pub ret_var: Option<String>,
    /// Caller state immediately before the call.
    pub state: SymbolicState,
}

/// Diagnostics that never abort the analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    RecursiveCallSkipped {
        function: String,
        callee: String,
        loc: crate::frontend::Loc,
    },
    DisjunctBudgetExceeded {
        function: String,
        dropped: usize,
    },
    LoopBudgetExhausted {
        function: String,
        loc: crate::frontend::Loc,
        dropped: usize,
    },
    NoRuleApplies {
        function: String,
        loc: crate::frontend::Loc,
        statement: String,
    },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::RecursiveCallSkipped { function, callee, loc } => write!(
                f,
                "{}:{}: recursive call to `{}` skipped (treated as no-op)",
                function, loc, callee
            ),
            Diagnostic::DisjunctBudgetExceeded { function, dropped } => write!(
                f,
                "{}: disjunct budget exceeded, {} states dropped",
                function, dropped
            ),
            Diagnostic::LoopBudgetExhausted { function, loc, dropped } => write!(
                f,
                "{}:{}: loop unrolling bound reached, {} continuing states dropped",
                function, loc, dropped
            ),
            Diagnostic::NoRuleApplies { function, loc, statement } => write!(
                f,
                "{}:{}: no rule applies to `{}`",
                function, loc, statement
            ),
        }
    }
}

/// A biabduction receipt: enough to re-check `p * m |- rule-pre * f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub function: String,
    pub op: String,
    pub state: SymbolicState,
    pub requirement: SymbolicState,
    pub missing: SymbolicState,
    pub frame: SymbolicState,
    pub exit: ExitCond,
    pub post: SymbolicState,
}

/// A blame transition observed during evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlameShiftEvent {
    pub function: String,
    pub op: String,
    pub bug: BugRef,
    pub resource: Term,
    pub prior: Option<Entity>,
    pub new: Entity,
    pub world: Entity,
}

#[derive(Debug, Clone, Default)]
pub struct AnalysisTrace {
    pub receipts: Vec<Receipt>,
    pub shifts: Vec<BlameShiftEvent>,
}

/// Result of analyzing a whole program.
#[derive(Debug, Clone)]
pub struct ProgramAnalysis {
    pub summaries: BTreeMap<String, Summary>,
    pub call_log: Vec<CallRecord>,
    pub diagnostics: Vec<Diagnostic>,
    pub trace: AnalysisTrace,
}

impl ProgramAnalysis {
    pub fn call_record(&self, r: CallRef) -> Option<&CallRecord> {
        self.call_log.get(r.0)
    }
}
