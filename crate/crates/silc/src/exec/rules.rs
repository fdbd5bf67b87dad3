//! Predefined summaries for the primitive statements, instantiated with
//! fresh schematic variables at every use, plus builtin summaries for
//! `memcpy` and `strlen`.
//!
//! Successful rules that touch an existing heap resource demand a blame
//! atom for it per enabled bug kind; biabduction infers the demand as a
//! missing resource when the state has none, which is how unknown
//! responsible entities enter preconditions. Erroneous rules demand no
//! blame and change none: blame atoms ride through them as frame.

use std::collections::BTreeSet;

use crate::blame::BugCatalog;
use crate::frontend::{Expr, Stmt, StmtKind};
use crate::isl::{
    BlamePred, BugCond, BugRef, Entity, FreshVarGen, LogicalVar, PureTerm, SpatialTerm,
    SymbolicState, Term,
};

/// One instantiated predefined triple, ready for biabduction against the
/// current state.
#[derive(Debug, Clone)]
pub struct RuleSpec {
    pub name: String,
    pub pre: SymbolicState,
    pub post: SymbolicState,
    pub exit_err: bool,
    /// Bug a failing rule manifests.
    pub bug: Option<BugRef>,
    /// The resource the failure is about.
    pub culprit: Option<Term>,
    /// Resources whose blame shifts to the current world on success.
    pub blame_shift: Vec<Term>,
    /// Resources gaining a fresh blame atom owned by the current world.
    pub blame_new: Vec<Term>,
    /// Locations that become freshly allocated.
    pub new_allocs: Vec<Term>,
    /// Value returned to an assigning call, for builtins.
    pub ret: Option<Term>,
}

impl RuleSpec {
    fn ok(name: &str) -> Self {
        RuleSpec {
            name: name.to_string(),
            pre: SymbolicState::emp(),
            post: SymbolicState::emp(),
            exit_err: false,
            bug: None,
            culprit: None,
            blame_shift: Vec::new(),
            blame_new: Vec::new(),
            new_allocs: Vec::new(),
            ret: None,
        }
    }

    fn err(name: &str, bug: BugRef, culprit: Term) -> Self {
        RuleSpec {
            name: name.to_string(),
            pre: SymbolicState::emp(),
            post: SymbolicState::emp(),
            exit_err: true,
            bug: Some(bug),
            culprit: Some(culprit),
            blame_shift: Vec::new(),
            blame_new: Vec::new(),
            new_allocs: Vec::new(),
            ret: None,
        }
    }
}

/// The predefined rule set. Kinds and policies come from the catalog so
/// blame demands can be generated per enabled bug kind.
pub struct RuleTable<'a> {
    pub catalog: &'a BugCatalog,
    /// Context tag stamped on demanded blame atoms (the analyzed
    /// function's name; carried, never interpreted).
    pub ctx: String,
}

impl<'a> RuleTable<'a> {
    pub fn new(catalog: &'a BugCatalog, ctx: impl Into<String>) -> Self {
        RuleTable {
            catalog,
            ctx: ctx.into(),
        }
    }

    /// Blame demands for a resource, one per enabled kind. The demanded
    /// entity is a fresh unknown; sanitization and context are
    /// placeholders that matching ignores.
    fn blame_demands(&self, resource: &Term, gen: &mut FreshVarGen) -> Vec<SpatialTerm> {
        self.catalog
            .enabled()
            .map(|bug| {
                SpatialTerm::Blame(BlamePred {
                    resource: resource.clone(),
                    entity: Entity::Unknown(gen.fresh("W")),
                    cond: BugCond::Pred(bug, resource.clone()),
                    sanitization: self.catalog.policy(bug),
                    ctx: self.ctx.clone(),
                    via: None,
                })
            })
            .collect()
    }

    /// Resolve a value operand: variables contribute their stack cell to
    /// the rule's footprint, constants become fresh variables constrained
    /// by an equality (so stored values stay traceable resources).
    fn value_operand(
        &self,
        expr: &Expr,
        gen: &mut FreshVarGen,
    ) -> (Vec<SpatialTerm>, PureTerm, Term) {
        match expr {
            Expr::Var(y) => {
                let yval = Term::LVar(gen.fresh("Y"));
                (
                    vec![SpatialTerm::points_to_var(y.clone(), yval.clone())],
                    PureTerm::True,
                    yval,
                )
            }
            Expr::Int(c) => {
                let v = Term::LVar(gen.fresh("V"));
                (vec![], PureTerm::eq(v.clone(), Term::Const(*c)), v)
            }
            Expr::Null => {
                let v = Term::LVar(gen.fresh("V"));
                (vec![], PureTerm::eq(v.clone(), Term::Nil), v)
            }
        }
    }

    /// Predefined triples applicable to one statement. `None` for
    /// statements evaluated structurally (branches, loops, returns,
    /// non-builtin calls).
    pub fn rules_for(&self, stmt: &Stmt, gen: &mut FreshVarGen) -> Option<Vec<RuleSpec>> {
        match &stmt.kind {
            StmtKind::Malloc(x) => Some(self.malloc_rules(x, gen)),
            StmtKind::Free(x) => Some(self.free_rules(x, gen)),
            StmtKind::Store(x, e) => Some(self.store_rules(x, e, gen)),
            StmtKind::Load(x, y) => Some(self.load_rules(x, y, gen)),
            StmtKind::FieldStore(x, f, e) => Some(self.field_store_rules(x, f, e, gen)),
            StmtKind::FieldLoad(x, y, f) => Some(self.field_load_rules(x, y, f, gen)),
            StmtKind::Assign(x, e) => Some(self.assign_rules(x, e, gen)),
            StmtKind::Call(_, callee, args) if crate::frontend::is_builtin(callee) => {
                Some(self.builtin_rules(callee, args, gen))
            }
            _ => None,
        }
    }

    fn malloc_rules(&self, x: &str, gen: &mut FreshVarGen) -> Vec<RuleSpec> {
        let old = Term::LVar(gen.fresh("X"));
        let loc = Term::LVar(gen.fresh("L"));
        let val = Term::LVar(gen.fresh("V"));

        let mut fresh_cell = RuleSpec::ok("malloc-ok");
        fresh_cell.pre = SymbolicState::with_heap(vec![SpatialTerm::points_to_var(x, old.clone())]);
        fresh_cell.post = SymbolicState::with_heap(vec![
            SpatialTerm::points_to_var(x, loc.clone()),
            SpatialTerm::points_to_loc(loc.clone(), val.clone()),
        ]);
        fresh_cell.blame_new = vec![loc.clone(), val.clone()];
        fresh_cell.new_allocs = vec![loc.clone()];

        let old2 = Term::LVar(gen.fresh("X"));
        let loc2 = Term::LVar(gen.fresh("L"));
        let mut failed = RuleSpec::ok("malloc-fail");
        failed.pre = SymbolicState::with_heap(vec![SpatialTerm::points_to_var(x, old2)]);
        failed.post = SymbolicState {
            pure: PureTerm::eq(loc2.clone(), Term::Nil),
            heap: vec![SpatialTerm::points_to_var(x, loc2.clone())],
            ..SymbolicState::default()
        };
        failed.blame_new = vec![loc2];

        vec![fresh_cell, failed]
    }

    fn free_rules(&self, x: &str, gen: &mut FreshVarGen) -> Vec<RuleSpec> {
        let loc = Term::LVar(gen.fresh("X"));
        let val = Term::LVar(gen.fresh("V"));
        let mut ok = RuleSpec::ok("free-ok");
        let mut pre_atoms = vec![
            SpatialTerm::points_to_var(x, loc.clone()),
            SpatialTerm::points_to_loc(loc.clone(), val),
        ];
        pre_atoms.extend(self.blame_demands(&loc, gen));
        ok.pre = SymbolicState::with_heap(pre_atoms);
        ok.post = SymbolicState::with_heap(vec![
            SpatialTerm::points_to_var(x, loc.clone()),
            SpatialTerm::invalid(loc.clone()),
        ]);
        ok.blame_shift = vec![loc];

        let nil_loc = Term::LVar(gen.fresh("X"));
        let mut err_nil = RuleSpec::err("free-nil", BugRef::Npd, nil_loc.clone());
        err_nil.pre = SymbolicState {
            pure: PureTerm::eq(nil_loc.clone(), Term::Nil),
            heap: vec![SpatialTerm::points_to_var(x, nil_loc.clone())],
            ..SymbolicState::default()
        };
        err_nil.post = err_nil.pre.clone();

        let dead_loc = Term::LVar(gen.fresh("X"));
        let mut err_uaf = RuleSpec::err("free-dealloc", BugRef::Uaf, dead_loc.clone());
        err_uaf.pre = SymbolicState::with_heap(vec![
            SpatialTerm::points_to_var(x, dead_loc.clone()),
            SpatialTerm::invalid(dead_loc.clone()),
        ]);
        err_uaf.post = err_uaf.pre.clone();

        vec![ok, err_nil, err_uaf]
    }

    fn store_rules(&self, x: &str, e: &Expr, gen: &mut FreshVarGen) -> Vec<RuleSpec> {
        let loc = Term::LVar(gen.fresh("X"));
        let old = Term::LVar(gen.fresh("W"));
        let (operand_atoms, operand_pure, value) = self.value_operand(e, gen);

        let mut ok = RuleSpec::ok("store-ok");
        let mut pre_atoms = vec![
            SpatialTerm::points_to_var(x, loc.clone()),
            SpatialTerm::points_to_loc(loc.clone(), old),
        ];
        pre_atoms.extend(operand_atoms.clone());
        pre_atoms.extend(self.blame_demands(&loc, gen));
        ok.pre = SymbolicState::with_heap(pre_atoms);
        let mut post_atoms = vec![
            SpatialTerm::points_to_var(x, loc.clone()),
            SpatialTerm::points_to_loc(loc.clone(), value),
        ];
        post_atoms.extend(operand_atoms);
        ok.post = SymbolicState {
            pure: operand_pure,
            heap: post_atoms,
            ..SymbolicState::default()
        };
        ok.blame_shift = vec![loc];

        vec![ok, self.deref_nil_err(x, gen), self.deref_dead_err(x, gen)]
    }

    fn load_rules(&self, x: &str, y: &str, gen: &mut FreshVarGen) -> Vec<RuleSpec> {
        let old = Term::LVar(gen.fresh("X"));
        let src = Term::LVar(gen.fresh("Y"));
        let val = Term::LVar(gen.fresh("V"));

        let mut ok = RuleSpec::ok("load-ok");
        let mut pre_atoms = vec![
            SpatialTerm::points_to_var(x, old),
            SpatialTerm::points_to_var(y, src.clone()),
            SpatialTerm::points_to_loc(src.clone(), val.clone()),
        ];
        pre_atoms.extend(self.blame_demands(&src, gen));
        ok.pre = SymbolicState::with_heap(pre_atoms);
        ok.post = SymbolicState::with_heap(vec![
            SpatialTerm::points_to_var(x, val.clone()),
            SpatialTerm::points_to_var(y, src.clone()),
            SpatialTerm::points_to_loc(src.clone(), val),
        ]);
        ok.blame_shift = vec![src];

        vec![ok, self.deref_nil_err(y, gen), self.deref_dead_err(y, gen)]
    }

    fn field_store_rules(
        &self,
        x: &str,
        field: &str,
        e: &Expr,
        gen: &mut FreshVarGen,
    ) -> Vec<RuleSpec> {
        let base = Term::LVar(gen.fresh("X"));
        let old = Term::LVar(gen.fresh("W"));
        let (operand_atoms, operand_pure, value) = self.value_operand(e, gen);

        let mut ok = RuleSpec::ok("field-store-ok");
        let mut pre_atoms = vec![
            SpatialTerm::points_to_var(x, base.clone()),
            SpatialTerm::points_to_field(base.clone(), field, old),
        ];
        pre_atoms.extend(operand_atoms.clone());
        pre_atoms.extend(self.blame_demands(&base, gen));
        ok.pre = SymbolicState::with_heap(pre_atoms);
        let mut post_atoms = vec![
            SpatialTerm::points_to_var(x, base.clone()),
            SpatialTerm::points_to_field(base.clone(), field, value),
        ];
        post_atoms.extend(operand_atoms);
        ok.post = SymbolicState {
            pure: operand_pure,
            heap: post_atoms,
            ..SymbolicState::default()
        };
        ok.blame_shift = vec![base];

        vec![ok, self.deref_nil_err(x, gen), self.deref_dead_err(x, gen)]
    }

    fn field_load_rules(
        &self,
        x: &str,
        y: &str,
        field: &str,
        gen: &mut FreshVarGen,
    ) -> Vec<RuleSpec> {
        let old = Term::LVar(gen.fresh("X"));
        let base = Term::LVar(gen.fresh("Y"));
        let val = Term::LVar(gen.fresh("V"));

        let mut ok = RuleSpec::ok("field-load-ok");
        let mut pre_atoms = vec![
            SpatialTerm::points_to_var(x, old),
            SpatialTerm::points_to_var(y, base.clone()),
            SpatialTerm::points_to_field(base.clone(), field, val.clone()),
        ];
        pre_atoms.extend(self.blame_demands(&base, gen));
        ok.pre = SymbolicState::with_heap(pre_atoms);
        ok.post = SymbolicState::with_heap(vec![
            SpatialTerm::points_to_var(x, val.clone()),
            SpatialTerm::points_to_var(y, base.clone()),
            SpatialTerm::points_to_field(base.clone(), field, val),
        ]);
        ok.blame_shift = vec![base];

        vec![ok, self.deref_nil_err(y, gen), self.deref_dead_err(y, gen)]
    }

    fn assign_rules(&self, x: &str, e: &Expr, gen: &mut FreshVarGen) -> Vec<RuleSpec> {
        let old = Term::LVar(gen.fresh("X"));
        let fresh = Term::LVar(gen.fresh("V"));
        let mut ok = RuleSpec::ok("assign-ok");
        let (operand_atoms, bound) = match e {
            Expr::Var(y) => {
                let yval = Term::LVar(gen.fresh("Y"));
                (
                    vec![SpatialTerm::points_to_var(y.clone(), yval.clone())],
                    yval,
                )
            }
            Expr::Int(c) => (vec![], Term::Const(*c)),
            Expr::Null => (vec![], Term::Nil),
        };
        let mut pre_atoms = vec![SpatialTerm::points_to_var(x, old)];
        pre_atoms.extend(operand_atoms.clone());
        ok.pre = SymbolicState::with_heap(pre_atoms);
        let mut post_atoms = vec![SpatialTerm::points_to_var(x, fresh.clone())];
        post_atoms.extend(operand_atoms);
        ok.post = SymbolicState {
            pure: PureTerm::eq(fresh.clone(), bound),
            heap: post_atoms,
            ..SymbolicState::default()
        };
        ok.blame_new = vec![fresh];
        vec![ok]
    }

    /// Builtins with predefined summaries: `memcpy(dst, src, n)`
    /// dereferences both pointer arguments, `strlen(s)` dereferences its
    /// argument. Their faults manifest in the calling function's world.
    fn builtin_rules(&self, name: &str, args: &[Expr], gen: &mut FreshVarGen) -> Vec<RuleSpec> {
        match name {
            "memcpy" => {
                let dst = args.first();
                let src = args.get(1);
                let mut rules = Vec::new();
                if let (Some(Expr::Var(d)), Some(Expr::Var(s))) = (dst, src) {
                    let dloc = Term::LVar(gen.fresh("D"));
                    let dval = Term::LVar(gen.fresh("V"));
                    let sloc = Term::LVar(gen.fresh("S"));
                    let sval = Term::LVar(gen.fresh("V"));
                    let copied = Term::LVar(gen.fresh("V"));

                    let mut ok = RuleSpec::ok("memcpy-ok");
                    let mut pre_atoms = vec![
                        SpatialTerm::points_to_var(d.clone(), dloc.clone()),
                        SpatialTerm::points_to_loc(dloc.clone(), dval),
                        SpatialTerm::points_to_var(s.clone(), sloc.clone()),
                        SpatialTerm::points_to_loc(sloc.clone(), sval.clone()),
                    ];
                    pre_atoms.extend(self.blame_demands(&dloc, gen));
                    pre_atoms.extend(self.blame_demands(&sloc, gen));
                    ok.pre = SymbolicState::with_heap(pre_atoms);
                    ok.post = SymbolicState {
                        pure: PureTerm::eq(copied.clone(), sval.clone()),
                        heap: vec![
                            SpatialTerm::points_to_var(d.clone(), dloc.clone()),
                            SpatialTerm::points_to_loc(dloc.clone(), copied),
                            SpatialTerm::points_to_var(s.clone(), sloc.clone()),
                            SpatialTerm::points_to_loc(sloc.clone(), sval),
                        ],
                        ..SymbolicState::default()
                    };
                    ok.blame_shift = vec![dloc, sloc];
                    ok.ret = None;
                    rules.push(ok);
                    rules.push(self.deref_nil_err(d, gen));
                    rules.push(self.deref_dead_err(d, gen));
                    rules.push(self.deref_nil_err(s, gen));
                    rules.push(self.deref_dead_err(s, gen));
                }
                rules
            }
            "strlen" => {
                let mut rules = Vec::new();
                if let Some(Expr::Var(s)) = args.first() {
                    let sloc = Term::LVar(gen.fresh("S"));
                    let sval = Term::LVar(gen.fresh("V"));
                    let len = Term::LVar(gen.fresh("N"));
                    let mut ok = RuleSpec::ok("strlen-ok");
                    let mut pre_atoms = vec![
                        SpatialTerm::points_to_var(s.clone(), sloc.clone()),
                        SpatialTerm::points_to_loc(sloc.clone(), sval.clone()),
                    ];
                    pre_atoms.extend(self.blame_demands(&sloc, gen));
                    ok.pre = SymbolicState::with_heap(pre_atoms);
                    ok.post = SymbolicState::with_heap(vec![
                        SpatialTerm::points_to_var(s.clone(), sloc.clone()),
                        SpatialTerm::points_to_loc(sloc.clone(), sval),
                    ]);
                    ok.blame_shift = vec![sloc];
                    ok.ret = Some(len);
                    rules.push(ok);
                    rules.push(self.deref_nil_err(s, gen));
                    rules.push(self.deref_dead_err(s, gen));
                }
                rules
            }
            _ => vec![],
        }
    }

    fn deref_nil_err(&self, var: &str, gen: &mut FreshVarGen) -> RuleSpec {
        let loc = Term::LVar(gen.fresh("X"));
        let mut err = RuleSpec::err("deref-nil", BugRef::Npd, loc.clone());
        err.pre = SymbolicState {
            pure: PureTerm::eq(loc.clone(), Term::Nil),
            heap: vec![SpatialTerm::points_to_var(var, loc.clone())],
            ..SymbolicState::default()
        };
        err.post = err.pre.clone();
        err
    }

    fn deref_dead_err(&self, var: &str, gen: &mut FreshVarGen) -> RuleSpec {
        let loc = Term::LVar(gen.fresh("X"));
        let mut err = RuleSpec::err("deref-dealloc", BugRef::Uaf, loc.clone());
        err.pre = SymbolicState::with_heap(vec![
            SpatialTerm::points_to_var(var, loc.clone()),
            SpatialTerm::invalid(loc.clone()),
        ]);
        err.post = err.pre.clone();
        err
    }
}

/// Variables a rule's post introduces without binding them against the
/// state: candidates for fresh allocations.
pub fn fresh_post_vars(spec: &RuleSpec) -> BTreeSet<LogicalVar> {
    let pre_vars = spec.pre.vars();
    spec.post
        .vars()
        .into_iter()
        .filter(|v| !pre_vars.contains(v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AnalysisConfig;
    use crate::frontend::Loc;

    fn catalog() -> BugCatalog {
        BugCatalog::from_config(&AnalysisConfig::default())
    }

    #[test]
    fn rule_counts_match_the_table() {
        let catalog = catalog();
        let table = RuleTable::new(&catalog, "t");
        let mut gen = FreshVarGen::new();
        let loc = Loc::new(1, 1);
        let count = |kind: StmtKind| {
            table
                .rules_for(&Stmt::new(kind, loc), &mut gen)
                .unwrap()
                .len()
        };
        assert_eq!(count(StmtKind::Malloc("x".into())), 2);
        assert_eq!(count(StmtKind::Free("x".into())), 3);
        assert_eq!(count(StmtKind::Store("x".into(), Expr::Var("y".into()))), 3);
        assert_eq!(count(StmtKind::Load("x".into(), "y".into())), 3);
        assert_eq!(count(StmtKind::Assign("x".into(), Expr::Null)), 1);
        assert_eq!(
            count(StmtKind::Call(
                None,
                "memcpy".into(),
                vec![Expr::Var("d".into()), Expr::Var("s".into()), Expr::Var("n".into())]
            )),
            5
        );
    }

    #[test]
    fn err_rules_touch_no_blame() {
        let catalog = catalog();
        let table = RuleTable::new(&catalog, "t");
        let mut gen = FreshVarGen::new();
        let stmt = Stmt::new(StmtKind::Free("x".into()), Loc::new(1, 1));
        for rule in table.rules_for(&stmt, &mut gen).unwrap() {
            if rule.exit_err {
                assert!(rule.blame_shift.is_empty());
                assert!(rule.blame_new.is_empty());
                assert!(!rule
                    .pre
                    .atoms()
                    .iter()
                    .any(|a| matches!(a, SpatialTerm::Blame(_))));
                // err rules leave the state unchanged: pre equals post
                assert_eq!(rule.pre, rule.post);
            }
        }
    }

    #[test]
    fn ok_rules_demand_blame_per_enabled_kind() {
        let catalog = catalog();
        let table = RuleTable::new(&catalog, "t");
        let mut gen = FreshVarGen::new();
        let stmt = Stmt::new(StmtKind::Free("x".into()), Loc::new(1, 1));
        let rules = table.rules_for(&stmt, &mut gen).unwrap();
        let ok = rules.iter().find(|r| !r.exit_err).unwrap();
        let demanded: Vec<_> = ok
            .pre
            .atoms()
            .iter()
            .filter(|a| matches!(a, SpatialTerm::Blame(_)))
            .collect();
        assert_eq!(demanded.len(), 3);
    }
}
