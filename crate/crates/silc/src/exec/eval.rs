//! Per-statement evaluation against the predefined rules, and summary
//! application at call sites. Both go through the same path: instantiate
//! a requirement, biabduce it against the current state, back-propagate
//! the missing resource, and assemble the post-state with the blame
//! bookkeeping applied.

use std::collections::{BTreeMap, BTreeSet};

use crate::biabduction::{biabduce, BiabductionError};
use crate::blame::BugCatalog;
use crate::config::AnalysisConfig;
use crate::frontend::{CmpOp, Cond, Expr, FuncDef, Loc, Program, Stmt, StmtKind};
use crate::isl::{
    BlamePred, BugCond, BugRef, CallRef, Entity, EntityMeta, ExitCond, FreshVarGen, Literal,
    LogicalVar, PureTerm, SpatialTerm, Substitution, SymbolicState, Term,
};
use crate::solver;

use super::rules::{RuleSpec, RuleTable};
use super::summary::{
    AnalysisTrace, BlameShiftEvent, CallArg, CallRecord, Diagnostic, Receipt, Summary,
};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("no rule applies to `{0}`")]
    NoRuleApplies(String),
}

/// One evaluation result: exit condition, inferred missing resource, and
/// the resulting state.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub exit: ExitCond,
    pub missing: SymbolicState,
    pub post: SymbolicState,
    pub bug: Option<BugRef>,
    pub culprit: Option<Term>,
}

/// A path being explored: the accumulated precondition and the current
/// symbolic state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExecState {
    pub pre: SymbolicState,
    pub cur: SymbolicState,
}

/// A finished path: normal return or a manifed error.
#[derive(Debug, Clone)]
pub struct Terminal {
    pub state: ExecState,
    pub exit: ExitCond,
    pub ret: Option<Term>,
    pub loc: Loc,
    pub bug: Option<BugRef>,
    pub culprit: Option<Term>,
    pub trigger: Option<SymbolicState>,
    pub vendor_call: Option<CallRef>,
    pub already_reported: bool,
}

/// Everything one function analysis threads through evaluation.
pub struct FnCtx<'a> {
    pub func: &'a FuncDef,
    pub world: Entity,
    pub catalog: &'a BugCatalog,
    pub cfg: &'a AnalysisConfig,
    pub env: &'a BTreeMap<String, Summary>,
    pub program: &'a Program,
    /// Functions in the same strongly connected component: calls into
    /// them are recursive and skipped.
    pub scc: Vec<String>,
    pub var_kinds: BTreeMap<String, bool>,
    pub gen: &'a mut FreshVarGen,
    pub call_log: &'a mut Vec<CallRecord>,
    pub diagnostics: &'a mut Vec<Diagnostic>,
    pub trace: Option<&'a mut AnalysisTrace>,
    /// Variables born during this function's execution (fresh cells and
    /// their contents); requirements on them are satisfied in place
    /// rather than back-propagated into the precondition.
    pub local_born: BTreeSet<LogicalVar>,
    /// Locations allocated within this function's footprint.
    pub allocated_here: BTreeSet<Term>,
}

impl<'a> FnCtx<'a> {
    fn world_at(&self, loc: Loc) -> Entity {
        let meta = EntityMeta::new(self.func.file.clone(), self.func.name.clone(), loc.line);
        match self.world {
            Entity::Vendor(_) => Entity::Vendor(meta),
            _ => Entity::Client(meta),
        }
    }

    fn record_shift(&mut self, event: BlameShiftEvent) {
        if let Some(trace) = self.trace.as_deref_mut() {
            trace.shifts.push(event);
        }
    }

    fn record_receipt(&mut self, receipt: Receipt) {
        if let Some(trace) = self.trace.as_deref_mut() {
            trace.receipts.push(receipt);
        }
    }
}

/// An instantiated requirement ready for biabduction: either a predefined
/// rule or one bound summary triple.
struct AppliedSpec {
    op: String,
    loc: Loc,
    pre: SymbolicState,
    post: SymbolicState,
    exit: ExitCond,
    bug: Option<BugRef>,
    culprit: Option<Term>,
    ret: Option<Term>,
    /// Rule-level blame operations (empty for summary triples, whose
    /// posts already carry blame atoms).
    blame_shift: Vec<Term>,
    blame_new: Vec<Term>,
    /// Provenance for summary applications.
    vendor_call: Option<CallRef>,
    already_reported: bool,
    from_summary: bool,
    callee_is_vendor: bool,
    /// Variable receiving the return value, for calls.
    ret_target: Option<String>,
}

fn spec_from_rule(rule: RuleSpec, loc: Loc, world: Entity) -> AppliedSpec {
    AppliedSpec {
        op: rule.name.clone(),
        loc,
        exit: if rule.exit_err {
            ExitCond::Err(world)
        } else {
            ExitCond::Ok
        },
        pre: rule.pre,
        post: rule.post,
        bug: rule.bug,
        culprit: rule.culprit,
        ret: rule.ret,
        blame_shift: rule.blame_shift,
        blame_new: rule.blame_new,
        vendor_call: None,
        already_reported: false,
        from_summary: false,
        callee_is_vendor: false,
        ret_target: None,
    }
}

struct StepOutcome {
    state: ExecState,
    terminal: Option<Terminal>,
    missing: SymbolicState,
}

/// Apply one instantiated requirement to a path. `None` means the spec
/// does not apply here (inconsistent) or the result is infeasible.
fn apply_spec(state: &ExecState, spec: &AppliedSpec, ctx: &mut FnCtx<'_>) -> Option<StepOutcome> {
    let result = match biabduce(&state.cur, &spec.pre) {
        Ok(r) => r,
        Err(BiabductionError::Inconsistent(_)) => return None,
    };
    let theta = &result.unifier;

    // Split the missing resource: requirements on locally-born values are
    // satisfied in place (carving cells out of memory this frame owns),
    // everything else extends the accumulated precondition.
    let mut pre_atoms = Vec::new();
    let mut local_atoms = Vec::new();
    for atom in result.missing.atoms() {
        let mut vars = BTreeSet::new();
        collect_atom_vars_pub(atom, &mut vars);
        if vars.iter().any(|v| ctx.local_born.contains(v)) {
            local_atoms.push(atom.clone());
        } else {
            pre_atoms.push(atom.clone());
        }
    }
    let mut pre_lits = Vec::new();
    let mut local_lits = Vec::new();
    if let Ok(lits) = result.missing.pure.literals() {
        for lit in lits {
            if lit.vars().iter().any(|v| ctx.local_born.contains(*v)) {
                local_lits.push(lit.to_pure());
            } else {
                pre_lits.push(lit.to_pure());
            }
        }
    }
    // Vendor-sticky: blame demands inferred while executing vendor code
    // take the vendor as their entity.
    let call_meta = EntityMeta::new(
        ctx.func.file.clone(),
        ctx.func.name.clone(),
        spec.loc.line,
    );
    let stamp_vendor = |atoms: &mut Vec<SpatialTerm>| {
        for atom in atoms.iter_mut() {
            if let SpatialTerm::Blame(b) = atom {
                if matches!(b.entity, Entity::Unknown(_)) {
                    b.entity = Entity::Vendor(call_meta.clone());
                }
            }
        }
    };
    if spec.from_summary && ctx.world.is_vendor() {
        stamp_vendor(&mut pre_atoms);
        stamp_vendor(&mut local_atoms);
    }
    // Variables first seen in locally-satisfied atoms stay local.
    for atom in &local_atoms {
        let mut vars = BTreeSet::new();
        collect_atom_vars_pub(atom, &mut vars);
        ctx.local_born.extend(vars);
    }

    let missing_pre = SymbolicState {
        pure: PureTerm::and(pre_lits.clone()),
        heap: pre_atoms,
        ..SymbolicState::default()
    };

    // Instantiate the post and assemble the new state.
    let post_inst = apply_subst_plain(&spec.post, theta);
    let mut new_atoms: Vec<SpatialTerm> = result.frame.heap.clone();
    let mut shift_events = Vec::new();
    let incoming = ctx.world_at(spec.loc);
    for atom in post_inst.atoms() {
        match atom {
            SpatialTerm::Blame(b) if spec.from_summary => {
                new_atoms.push(SpatialTerm::Blame(adjust_summary_blame(
                    b,
                    &state.cur,
                    &ctx.world,
                    spec.callee_is_vendor,
                    spec.vendor_call,
                    &call_meta,
                )));
            }
            other => new_atoms.push(other.clone()),
        }
    }
    // Rule-level blame bookkeeping: shifts follow the last-toucher
    // principle with vendor responsibility kept sticky; new resources are
    // owned by the current world.
    for res in &spec.blame_shift {
        let resolved = theta.apply_term(res);
        for bug in ctx.catalog.enabled().collect::<Vec<_>>() {
            let prior = state
                .cur
                .blames()
                .find(|b| b.resource == resolved && b.bug_ref() == Some(bug))
                .cloned();
            let (entity, via) = match &prior {
                Some(pb) if pb.entity.is_vendor() => (pb.entity.clone(), pb.via),
                _ => (incoming.clone(), None),
            };
            shift_events.push(BlameShiftEvent {
                function: ctx.func.name.clone(),
                op: spec.op.clone(),
                bug,
                resource: resolved.clone(),
                prior: prior.map(|p| p.entity),
                new: entity.clone(),
                world: ctx.world.clone(),
            });
            new_atoms.push(SpatialTerm::Blame(BlamePred {
                resource: resolved.clone(),
                entity,
                cond: BugCond::Pred(bug, resolved.clone()),
                sanitization: ctx.catalog.policy(bug),
                ctx: ctx.func.name.clone(),
                via,
            }));
        }
    }
    for res in &spec.blame_new {
        let resolved = theta.apply_term(res);
        for bug in ctx.catalog.enabled().collect::<Vec<_>>() {
            new_atoms.push(SpatialTerm::Blame(BlamePred {
                resource: resolved.clone(),
                entity: incoming.clone(),
                cond: BugCond::Pred(bug, resolved.clone()),
                sanitization: ctx.catalog.policy(bug),
                ctx: ctx.func.name.clone(),
                via: None,
            }));
        }
    }

    let new_cur = SymbolicState {
        path: state.cur.path.clone(),
        pure: PureTerm::and(vec![
            state.cur.pure.clone(),
            PureTerm::and(pre_lits),
            PureTerm::and(local_lits),
            post_inst.pure.clone(),
            post_inst.path.clone(),
        ]),
        heap: new_atoms,
        existentials: BTreeSet::new(),
    };
    let new_cur = new_cur.normalize().ok()?;
    if !state_feasible(&new_cur) {
        return None;
    }

    let new_pre = state.pre.star(&missing_pre).normalize().ok()?;

    // Fresh locations: post heads that bound to nothing pre-existing.
    let preexisting = {
        let mut v = state.cur.vars();
        v.extend(state.pre.vars());
        v
    };
    for atom in post_inst.atoms() {
        if let SpatialTerm::PointsToLoc(l, _) = atom {
            if let Term::LVar(v) = l {
                if !preexisting.contains(v) {
                    ctx.allocated_here.insert(l.clone());
                    ctx.local_born.insert(v.clone());
                }
            }
        }
    }
    // Values introduced by the post (fresh contents, bindings) are local.
    for v in post_inst.vars() {
        if !preexisting.contains(&v) && !missing_pre.vars().contains(&v) {
            ctx.local_born.insert(v);
        }
    }

    for ev in shift_events {
        ctx.record_shift(ev);
    }
    ctx.record_receipt(Receipt {
        function: ctx.func.name.clone(),
        op: spec.op.clone(),
        state: state.cur.clone(),
        requirement: spec.pre.clone(),
        missing: result.missing.clone(),
        frame: result.frame.clone(),
        exit: spec.exit.clone(),
        post: new_cur.clone(),
    });

    let new_state = ExecState {
        pre: new_pre,
        cur: new_cur,
    };
    let terminal = match &spec.exit {
        ExitCond::Ok => None,
        ExitCond::Err(world) => Some(Terminal {
            state: new_state.clone(),
            exit: ExitCond::Err(world.clone()),
            ret: None,
            loc: spec.loc,
            bug: spec.bug,
            culprit: spec.culprit.as_ref().map(|c| theta.apply_term(c)),
            trigger: Some(result.missing.clone()),
            vendor_call: spec.vendor_call,
            already_reported: spec.already_reported,
        }),
    };
    let ret = spec.ret.as_ref().map(|r| theta.apply_term(r));
    Some(StepOutcome {
        state: ExecState {
            pre: new_state.pre.clone(),
            cur: bind_ret(new_state.cur.clone(), spec, ret, ctx),
        },
        terminal,
        missing: result.missing.clone(),
    })
}

/// Bind the return value into the assigning variable's stack cell.
fn bind_ret(
    cur: SymbolicState,
    spec: &AppliedSpec,
    ret: Option<Term>,
    ctx: &mut FnCtx<'_>,
) -> SymbolicState {
    let target = match &spec.ret_target {
        Some(x) => x.clone(),
        None => return cur,
    };
    let value = ret.unwrap_or_else(|| {
        let v = ctx.gen.fresh("V");
        ctx.local_born.insert(v.clone());
        Term::LVar(v)
    });
    set_stack(cur, &target, value)
}

fn set_stack(mut cur: SymbolicState, var: &str, value: Term) -> SymbolicState {
    cur.heap
        .retain(|a| !matches!(a, SpatialTerm::PointsToVar(x, _) if x == var));
    cur.heap.push(SpatialTerm::points_to_var(var, value));
    cur.normalize().unwrap_or(cur)
}

/// Vendor responsibility never flows back to the client; blame that
/// arrives from a callee inherits the caller's vendor identity when the
/// caller is vendor code, and picks up the boundary call it crossed.
fn adjust_summary_blame(
    atom: &BlamePred,
    cur: &SymbolicState,
    caller_world: &Entity,
    callee_is_vendor: bool,
    callref: Option<CallRef>,
    call_meta: &EntityMeta,
) -> BlamePred {
    let mut out = atom.clone();
    let prior = cur
        .blames()
        .find(|b| b.resource == atom.resource && b.bug_ref() == atom.bug_ref());
    if let Some(pb) = prior {
        if pb.entity.is_vendor() && !out.entity.is_vendor() {
            out.entity = pb.entity.clone();
            out.via = pb.via;
            return out;
        }
    }
    if caller_world.is_vendor() && out.entity.is_client() {
        out.entity = Entity::Vendor(call_meta.clone());
        out.via = out.via.or(callref);
        return out;
    }
    if out.entity.is_vendor() && out.via.is_none() && callee_is_vendor {
        out.via = callref;
    }
    out
}

/// Substitute without capture checks; requirement instances carry no
/// binders.
fn apply_subst_plain(state: &SymbolicState, theta: &Substitution) -> SymbolicState {
    SymbolicState {
        path: state.path.substitute(theta),
        pure: state.pure.substitute(theta),
        heap: state.heap.iter().map(|a| theta.apply_atom(a)).collect(),
        existentials: BTreeSet::new(),
    }
}

/// Satisfiability including the facts that cell heads cannot be nil.
pub fn state_feasible(state: &SymbolicState) -> bool {
    let mut parts = vec![state.pure.clone(), state.path.clone()];
    for head in state.loc_heads() {
        parts.push(PureTerm::ne(head, Term::Nil));
    }
    solver::is_satisfiable(&PureTerm::and(parts)).unwrap_or(false)
}

pub(crate) fn collect_atom_vars_pub(atom: &SpatialTerm, out: &mut BTreeSet<LogicalVar>) {
    let probe = SymbolicState {
        heap: vec![atom.clone()],
        ..SymbolicState::default()
    };
    out.extend(probe.vars());
}

/// Resolve an expression to its value in the current state, seeding a
/// stack cell for variables that have none yet.
fn resolve_expr(state: &mut ExecState, expr: &Expr, ctx: &mut FnCtx<'_>) -> Term {
    match expr {
        Expr::Int(c) => Term::Const(*c),
        Expr::Null => Term::Nil,
        Expr::Var(x) => {
            if let Some(t) = state.cur.stack_value(x) {
                return t.clone();
            }
            let v = Term::LVar(ctx.gen.fresh(&hint_for(x)));
            state.cur.heap.push(SpatialTerm::points_to_var(x, v.clone()));
            state.pre.heap.push(SpatialTerm::points_to_var(x, v.clone()));
            v
        }
    }
}

pub(crate) fn hint_for(var: &str) -> String {
    let mut h: String = var
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .take(1)
        .collect::<String>()
        .to_ascii_uppercase();
    if h.is_empty() {
        h.push('X');
    }
    h
}

fn cond_literal(state: &mut ExecState, cond: &Cond, negate: bool, ctx: &mut FnCtx<'_>) -> Literal {
    match cond {
        Cond::Cmp(a, op, b) => {
            let ta = resolve_expr(state, a, ctx);
            let tb = resolve_expr(state, b, ctx);
            let op = if negate { op.negate() } else { *op };
            match op {
                CmpOp::Eq => Literal::Eq(ta, tb),
                CmpOp::Ne => Literal::Ne(ta, tb),
            }
        }
        Cond::Var(x) => {
            let t = resolve_expr(state, &Expr::Var(x.clone()), ctx);
            let zero = if *ctx.var_kinds.get(x).unwrap_or(&true) {
                Term::Nil
            } else {
                Term::Const(0)
            };
            if negate {
                Literal::Eq(t, zero)
            } else {
                Literal::Ne(t, zero)
            }
        }
    }
}

fn assume(state: &ExecState, lit: &Literal) -> Option<ExecState> {
    let pure_lit = lit.to_pure();
    let cur = SymbolicState {
        path: PureTerm::and(vec![state.cur.path.clone(), pure_lit.clone()]),
        pure: PureTerm::and(vec![state.cur.pure.clone(), pure_lit]),
        heap: state.cur.heap.clone(),
        existentials: state.cur.existentials.clone(),
    }
    .normalize()
    .ok()?;
    if !state_feasible(&cur) {
        return None;
    }
    Some(ExecState {
        pre: state.pre.clone(),
        cur,
    })
}

/// Evaluate a block over a disjunction of paths; finished paths go into
/// `terminals`, fall-through paths are returned.
pub fn eval_block(
    stmts: &[Stmt],
    states: Vec<ExecState>,
    ctx: &mut FnCtx<'_>,
    terminals: &mut Vec<Terminal>,
) -> Vec<ExecState> {
    let mut current = states;
    for stmt in stmts {
        let mut next = Vec::new();
        for state in current {
            next.extend(step_stmt(state, stmt, ctx, terminals));
        }
        current = cap_states(next, ctx);
        if current.is_empty() {
            break;
        }
    }
    current
}

fn cap_states(mut states: Vec<ExecState>, ctx: &mut FnCtx<'_>) -> Vec<ExecState> {
    states.sort();
    states.dedup();
    if states.len() > ctx.cfg.max_disjuncts {
        let dropped = states.len() - ctx.cfg.max_disjuncts;
        states.truncate(ctx.cfg.max_disjuncts);
        ctx.diagnostics.push(Diagnostic::DisjunctBudgetExceeded {
            function: ctx.func.name.clone(),
            dropped,
        });
    }
    states
}

fn step_stmt(
    state: ExecState,
    stmt: &Stmt,
    ctx: &mut FnCtx<'_>,
    terminals: &mut Vec<Terminal>,
) -> Vec<ExecState> {
    match &stmt.kind {
        StmtKind::If(cond, then_block, else_block) => {
            let mut out = Vec::new();
            let mut branch_state = state.clone();
            let lit = cond_literal(&mut branch_state, cond, false, ctx);
            if let Some(s) = assume(&branch_state, &lit) {
                out.extend(eval_block(then_block, vec![s], ctx, terminals));
            }
            let neg = lit.negate();
            if let Some(s) = assume(&branch_state, &neg) {
                match else_block {
                    Some(block) => out.extend(eval_block(block, vec![s], ctx, terminals)),
                    None => out.push(s),
                }
            }
            out
        }
        StmtKind::While(cond, body) => {
            let mut exits = Vec::new();
            let mut continuing = vec![state];
            for _ in 0..ctx.cfg.unroll_bound {
                let mut next_round = Vec::new();
                for s in continuing {
                    let mut probe = s.clone();
                    let lit = cond_literal(&mut probe, cond, false, ctx);
                    if let Some(exit) = assume(&probe, &lit.negate()) {
                        exits.push(exit);
                    }
                    if let Some(enter) = assume(&probe, &lit) {
                        next_round.push(enter);
                    }
                }
                continuing = eval_block(body, cap_states(next_round, ctx), ctx, terminals);
                if continuing.is_empty() {
                    break;
                }
            }
            // Paths still able to iterate are dropped: an under-
            // approximate analysis may explore fewer behaviors, not more.
            let mut dropped = 0usize;
            for s in continuing {
                let mut probe = s.clone();
                let lit = cond_literal(&mut probe, cond, false, ctx);
                if let Some(exit) = assume(&probe, &lit.negate()) {
                    exits.push(exit);
                }
                if assume(&probe, &lit).is_some() {
                    dropped += 1;
                }
            }
            if dropped > 0 {
                ctx.diagnostics.push(Diagnostic::LoopBudgetExhausted {
                    function: ctx.func.name.clone(),
                    loc: stmt.loc,
                    dropped,
                });
            }
            cap_states(exits, ctx)
        }
        StmtKind::Return(expr) => {
            let mut state = state;
            let ret = expr.as_ref().map(|e| resolve_expr(&mut state, e, ctx));
            terminals.push(Terminal {
                state,
                exit: ExitCond::Ok,
                ret,
                loc: stmt.loc,
                bug: None,
                culprit: None,
                trigger: None,
                vendor_call: None,
                already_reported: false,
            });
            vec![]
        }
        StmtKind::Call(ret_var, callee, args) if !crate::frontend::is_builtin(callee) => {
            step_call(state, stmt, ret_var.as_deref(), callee, args, ctx, terminals)
        }
        _ => {
            // Primitive statements (and builtin calls) via the rule table.
            let table = RuleTable::new(ctx.catalog, ctx.func.name.clone());
            let rules = match table.rules_for(stmt, ctx.gen) {
                Some(r) => r,
                None => {
                    ctx.diagnostics.push(Diagnostic::NoRuleApplies {
                        function: ctx.func.name.clone(),
                        loc: stmt.loc,
                        statement: stmt.describe(),
                    });
                    return vec![state];
                }
            };
            let ret_target = match &stmt.kind {
                StmtKind::Call(rv, _, _) => rv.clone(),
                _ => None,
            };
            let mut out = Vec::new();
            let mut applied_any = false;
            for rule in rules {
                let mut spec = spec_from_rule(rule, stmt.loc, ctx.world_at(stmt.loc));
                spec.ret_target = ret_target.clone();
                if let Some(step) = apply_spec(&state, &spec, ctx) {
                    applied_any = true;
                    match step.terminal {
                        Some(t) => terminals.push(t),
                        None => out.push(step.state),
                    }
                }
            }
            if !applied_any {
                ctx.diagnostics.push(Diagnostic::NoRuleApplies {
                    function: ctx.func.name.clone(),
                    loc: stmt.loc,
                    statement: stmt.describe(),
                });
            }
            out
        }
    }
}

fn step_call(
    mut state: ExecState,
    stmt: &Stmt,
    ret_var: Option<&str>,
    callee: &str,
    args: &[Expr],
    ctx: &mut FnCtx<'_>,
    terminals: &mut Vec<Terminal>,
) -> Vec<ExecState> {
    // Recursive calls (self or same component) are skipped as a no-op.
    if callee == ctx.func.name || ctx.scc.iter().any(|n| n == callee) || !ctx.env.contains_key(callee)
    {
        ctx.diagnostics.push(Diagnostic::RecursiveCallSkipped {
            function: ctx.func.name.clone(),
            callee: callee.to_string(),
            loc: stmt.loc,
        });
        let cur = match ret_var {
            Some(x) => {
                let v = Term::LVar(ctx.gen.fresh("V"));
                set_stack(state.cur.clone(), x, v)
            }
            None => state.cur.clone(),
        };
        return vec![ExecState {
            pre: state.pre.clone(),
            cur,
        }];
    }

    let summary = ctx.env.get(callee).cloned().unwrap();
    let callee_is_vendor = summary.world.is_vendor();

    // Resolve actual argument values up front; this also seeds stack
    // cells for argument variables.
    let actuals: Vec<Term> = args
        .iter()
        .map(|a| resolve_expr(&mut state, a, ctx))
        .collect();
    let state = ExecState {
        pre: state.pre.normalize().unwrap_or(state.pre),
        cur: state.cur.normalize().unwrap_or(state.cur),
    };

    // Boundary calls from client into vendor code are logged; blame that
    // crosses here carries the record along.
    let callref = if callee_is_vendor && !ctx.world.is_vendor() {
        let record = CallRecord {
            caller: ctx.func.name.clone(),
            caller_file: ctx.func.file.clone(),
            callee: callee.to_string(),
            loc: stmt.loc,
            args: args
                .iter()
                .zip(&actuals)
                .map(|(e, t)| CallArg {
                    text: e.to_string(),
                    term: t.clone(),
                })
                .collect(),
            ret_var: ret_var.map(|s| s.to_string()),
            state: state.cur.clone(),
        };
        ctx.call_log.push(record);
        Some(CallRef(ctx.call_log.len() - 1))
    } else {
        None
    };

    let mut out = Vec::new();
    for st in &summary.triples {
        if st.meta.report_only {
            continue;
        }
        // Fresh instance of the callee triple.
        let all_vars: BTreeSet<LogicalVar> = {
            let mut v = st.triple.pre.vars();
            v.extend(st.triple.post.vars());
            if let Some(c) = &st.meta.culprit {
                if let Some(cv) = c.as_lvar() {
                    v.insert(cv.clone());
                }
            }
            if let Some(r) = &st.meta.ret {
                if let Some(rv) = r.as_lvar() {
                    v.insert(rv.clone());
                }
            }
            v
        };
        let mut renaming = Substitution::new();
        for v in &all_vars {
            let hint: String = v
                .as_str()
                .chars()
                .take_while(|c| c.is_ascii_alphabetic())
                .collect();
            renaming.bind_term(v.clone(), Term::LVar(ctx.gen.fresh(&hint)));
        }
        let mut pre = apply_subst_plain(&st.triple.pre, &renaming);
        let mut post = apply_subst_plain(&st.triple.post, &renaming);
        // Ambient worlds stay with their function; the caller has its own.
        pre.heap.retain(|a| !matches!(a, SpatialTerm::World(_)));
        post.heap.retain(|a| !matches!(a, SpatialTerm::World(_)));

        // Bind formals to actuals and drop the callee's parameter stack
        // cells: they are frame-private.
        let mut binding = Substitution::new();
        let mut bind_failed = false;
        for (idx, formal) in summary.params.iter().enumerate() {
            let formal_val = pre.stack_value(formal).cloned();
            match (formal_val, actuals.get(idx)) {
                (Some(Term::LVar(fv)), Some(actual)) => {
                    binding.bind_term(fv, actual.clone());
                }
                (Some(_), Some(_)) | (None, Some(_)) => {}
                _ => bind_failed = true,
            }
        }
        if bind_failed {
            continue;
        }
        let drop_params = |s: &mut SymbolicState| {
            s.heap.retain(
                |a| !matches!(a, SpatialTerm::PointsToVar(x, _) if summary.params.iter().any(|p| p == x)),
            );
        };
        drop_params(&mut pre);
        drop_params(&mut post);
        let pre = apply_subst_plain(&pre, &binding);
        let post = apply_subst_plain(&post, &binding);
        let culprit = st
            .meta
            .culprit
            .as_ref()
            .map(|c| binding.apply_term(&renaming.apply_term(c)));
        let ret = st
            .meta
            .ret
            .as_ref()
            .map(|r| binding.apply_term(&renaming.apply_term(r)));

        let spec = AppliedSpec {
            op: format!("call {}", callee),
            loc: stmt.loc,
            pre: match pre.normalize() {
                Ok(p) => p,
                Err(_) => continue,
            },
            post: match post.normalize() {
                Ok(p) => p,
                Err(_) => continue,
            },
            exit: st.triple.exit.clone(),
            bug: st.meta.bug,
            culprit,
            ret,
            blame_shift: vec![],
            blame_new: vec![],
            vendor_call: st.meta.vendor_call.or(if callee_is_vendor {
                callref
            } else {
                None
            }),
            already_reported: st.meta.already_reported || (st.triple.exit.is_err() && !st.meta.latent),
            from_summary: true,
            callee_is_vendor,
            ret_target: ret_var.map(|s| s.to_string()),
        };
        if let Some((next, terminal)) = apply_spec(&state, &spec, ctx) {
            match terminal {
                Some(t) => terminals.push(t),
                None => out.push(next),
            }
        }
    }
    out
}
