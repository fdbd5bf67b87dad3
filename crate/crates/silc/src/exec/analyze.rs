//! Compositional analysis driver: summarize every function in reverse
//! topological order over the call graph, evaluating bodies against
//! callee summaries and classifying erroneous triples as latent or
//! manifest.

use std::collections::{BTreeMap, BTreeSet};

use crate::blame::{function_entity, init_worlds, BugCatalog};
use crate::config::AnalysisConfig;
use crate::frontend::{build_call_graph, FuncDef, Program, Stmt, StmtKind};
use crate::isl::{
    BugRef, ExitCond, FreshVarGen, LogicalVar, PureTerm, SpatialTerm, SymbolicState, Term, Triple,
};

use super::eval::{eval_block, state_feasible, ExecState, FnCtx, Terminal};
use super::leaks::{collect_garbage, detect_leaks_at_exit, LeakRoots};
use super::summary::{
    AnalysisTrace, CallRecord, Diagnostic, ProgramAnalysis, Summary, SummaryTriple, TripleMeta,
};

/// Variables assigned anywhere in a body (the function's locals, since
/// MiniC introduces locals by assignment).
fn assigned_vars(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    for stmt in stmts {
        match &stmt.kind {
            StmtKind::Assign(x, _)
            | StmtKind::Malloc(x)
            | StmtKind::Load(x, _)
            | StmtKind::FieldLoad(x, _, _) => {
                out.insert(x.clone());
            }
            StmtKind::Call(Some(x), _, _) => {
                out.insert(x.clone());
            }
            StmtKind::If(_, t, e) => {
                assigned_vars(t, out);
                if let Some(e) = e {
                    assigned_vars(e, out);
                }
            }
            StmtKind::While(_, b) => assigned_vars(b, out),
            _ => {}
        }
    }
}

/// Rough pointer-ness of variables, used only to give bare variable
/// tests (`if (x)`) a nil or zero comparison.
fn var_kinds(func: &FuncDef) -> BTreeMap<String, bool> {
    let mut kinds: BTreeMap<String, bool> = BTreeMap::new();
    for (name, ty) in &func.params {
        kinds.insert(name.clone(), ty.is_pointer());
    }
    fn scan(stmts: &[Stmt], kinds: &mut BTreeMap<String, bool>) {
        for stmt in stmts {
            match &stmt.kind {
                StmtKind::Malloc(x) => {
                    kinds.insert(x.clone(), true);
                }
                StmtKind::Assign(x, crate::frontend::Expr::Null) => {
                    kinds.insert(x.clone(), true);
                }
                StmtKind::Assign(x, crate::frontend::Expr::Int(_)) => {
                    kinds.entry(x.clone()).or_insert(false);
                }
                StmtKind::If(_, t, e) => {
                    scan(t, kinds);
                    if let Some(e) = e {
                        scan(e, kinds);
                    }
                }
                StmtKind::While(_, b) => scan(b, kinds),
                _ => {}
            }
        }
    }
    scan(&func.body, &mut kinds);
    kinds
}

/// Analyze one function against the summaries of its callees.
#[allow(clippy::too_many_arguments)]
pub fn analyze_function(
    func: &FuncDef,
    env: &BTreeMap<String, Summary>,
    cfg: &AnalysisConfig,
    catalog: &BugCatalog,
    program: &Program,
    scc: Vec<String>,
    gen: &mut FreshVarGen,
    call_log: &mut Vec<CallRecord>,
    diagnostics: &mut Vec<Diagnostic>,
    trace: Option<&mut AnalysisTrace>,
) -> Summary {
    let world = function_entity(func);

    // Entry state: one World atom per enabled bug kind, a stack skeleton
    // for every parameter, and seeded cells for the locals.
    let mut entry = init_worlds(func, catalog);
    let mut param_values: Vec<(String, Term)> = Vec::new();
    for (name, _) in &func.params {
        let v = Term::LVar(gen.fresh(&super::eval::hint_for(name)));
        entry
            .heap
            .push(SpatialTerm::points_to_var(name.clone(), v.clone()));
        param_values.push((name.clone(), v));
    }
    let mut locals = BTreeSet::new();
    assigned_vars(&func.body, &mut locals);
    for (name, _) in &func.params {
        locals.remove(name);
    }
    let mut local_born: BTreeSet<LogicalVar> = BTreeSet::new();
    for name in &locals {
        let v = gen.fresh(&super::eval::hint_for(name));
        local_born.insert(v.clone());
        entry
            .heap
            .push(SpatialTerm::points_to_var(name.clone(), Term::LVar(v)));
    }
    let entry = entry.normalize().expect("entry state is separated");

    let mut ctx = FnCtx {
        func,
        world: world.clone(),
        catalog,
        cfg,
        env,
        program,
        scc,
        var_kinds: var_kinds(func),
        gen,
        call_log,
        diagnostics,
        trace,
        local_born,
        allocated_here: BTreeSet::new(),
    };

    let start = ExecState {
        pre: entry.clone(),
        cur: entry,
    };
    let mut terminals: Vec<Terminal> = Vec::new();
    let fallthrough = eval_block(&func.body, vec![start], &mut ctx, &mut terminals);
    let last_line = func
        .body
        .last()
        .map(|s| s.loc)
        .unwrap_or(func.loc);
    for state in fallthrough {
        terminals.push(Terminal {
            state,
            exit: ExitCond::Ok,
            ret: None,
            loc: last_line,
            bug: None,
            culprit: None,
            trigger: None,
            vendor_call: None,
            already_reported: false,
        });
    }

    let allocated_here = ctx.allocated_here.clone();
    let mut triples: Vec<SummaryTriple> = Vec::new();
    for terminal in terminals {
        finalize_terminal(
            func,
            &world,
            terminal,
            &param_values,
            &locals,
            &allocated_here,
            &mut triples,
        );
    }
    if triples.is_empty() {
        // Vacuous summary: nothing was reachable, keep an empty ok.
        let pre = SymbolicState::emp();
        triples.push(SummaryTriple {
            triple: Triple {
                pre: pre.clone(),
                code: func.name.clone(),
                exit: ExitCond::Ok,
                post: pre,
            },
            meta: TripleMeta::default(),
        });
    }
    dedup_triples(&mut triples);

    Summary {
        name: func.name.clone(),
        world,
        params: func.params.iter().map(|(n, _)| n.clone()).collect(),
        return_type: func.return_type.clone(),
        triples,
    }
}

fn drop_local_stack_atoms(state: &SymbolicState, locals: &BTreeSet<String>) -> (SymbolicState, Vec<Term>) {
    let mut dropped = Vec::new();
    let mut kept = Vec::new();
    for atom in state.atoms() {
        match atom {
            SpatialTerm::PointsToVar(x, v) if locals.contains(x) => dropped.push(v.clone()),
            other => kept.push(other.clone()),
        }
    }
    (
        SymbolicState {
            path: state.path.clone(),
            pure: state.pure.clone(),
            heap: kept,
            existentials: state.existentials.clone(),
        },
        dropped,
    )
}

fn finalize_terminal(
    func: &FuncDef,
    world: &crate::isl::Entity,
    terminal: Terminal,
    param_values: &[(String, Term)],
    locals: &BTreeSet<String>,
    allocated_here: &BTreeSet<Term>,
    triples: &mut Vec<SummaryTriple>,
) {
    let (pre, _) = drop_local_stack_atoms(&terminal.state.pre, locals);
    let pre = match pre.normalize() {
        Ok(p) => p,
        Err(_) => return,
    };
    let (cur, dropped_values) = drop_local_stack_atoms(&terminal.state.cur, locals);
    let cur = match cur.normalize() {
        Ok(c) => c,
        Err(_) => return,
    };
    if !state_feasible(&cur) {
        return;
    }

    match &terminal.exit {
        ExitCond::Ok => {
            let mut live: Vec<Term> = param_values.iter().map(|(_, v)| v.clone()).collect();
            if let Some(ret) = &terminal.ret {
                live.push(ret.clone());
            }
            let roots = LeakRoots {
                live: live.clone(),
                out_of_scope: dropped_values,
                allocated: allocated_here
                    .iter()
                    .filter(|t| cur.loc_heads().contains(*t))
                    .cloned()
                    .collect(),
            };
            let leaks = detect_leaks_at_exit(&cur, &roots);
            for leak in &leaks {
                // A leak proof: erroneous triple over the pre-collection
                // exit state, manifesting in this function's world.
                let entity = match world {
                    crate::isl::Entity::Vendor(m) => {
                        crate::isl::Entity::Vendor(crate::isl::EntityMeta {
                            line: terminal.loc.line,
                            ..m.clone()
                        })
                    }
                    crate::isl::Entity::Client(m) => {
                        crate::isl::Entity::Client(crate::isl::EntityMeta {
                            line: terminal.loc.line,
                            ..m.clone()
                        })
                    }
                    other => other.clone(),
                };
                triples.push(SummaryTriple {
                    triple: Triple {
                        pre: pre.clone(),
                        code: func.name.clone(),
                        exit: ExitCond::Err(entity),
                        post: cur.clone(),
                    },
                    meta: TripleMeta {
                        latent: false,
                        bug: Some(BugRef::MemLeak),
                        culprit: Some(leak.loc.clone()),
                        trigger: None,
                        vendor_call: leak.blame.as_ref().and_then(|b| b.via),
                        already_reported: false,
                        ret: terminal.ret.clone(),
                        leak: Some(leak.clone()),
                        report_only: true,
                    },
                });
            }
            let post = collect_garbage(&cur, &live);
            let post = match post.normalize() {
                Ok(p) => p,
                Err(_) => return,
            };
            triples.push(SummaryTriple {
                triple: Triple {
                    pre,
                    code: func.name.clone(),
                    exit: ExitCond::Ok,
                    post,
                },
                meta: TripleMeta {
                    ret: terminal.ret.clone(),
                    ..TripleMeta::default()
                },
            });
        }
        ExitCond::Err(world_err) => {
            let latent = is_latent(&pre, terminal.trigger.as_ref(), param_values);
            triples.push(SummaryTriple {
                triple: Triple {
                    pre,
                    code: func.name.clone(),
                    exit: ExitCond::Err(world_err.clone()),
                    post: cur,
                },
                meta: TripleMeta {
                    latent,
                    bug: terminal.bug,
                    culprit: terminal.culprit.clone(),
                    trigger: terminal.trigger.clone(),
                    vendor_call: terminal.vendor_call,
                    already_reported: terminal.already_reported,
                    ret: None,
                    leak: None,
                    report_only: false,
                },
            });
        }
    }
}

/// An erroneous triple is latent when its trigger mentions a logical
/// variable bound to a formal parameter or reachable from one; such bugs
/// wait for a caller to supply the trigger. Everything else manifests in
/// its own function.
fn is_latent(
    pre: &SymbolicState,
    trigger: Option<&SymbolicState>,
    param_values: &[(String, Term)],
) -> bool {
    let trigger = match trigger {
        Some(t) if !t.is_emp() => t,
        _ => return false,
    };
    let reachable = param_reachable(pre, param_values);
    let mentions: BTreeSet<LogicalVar> = trigger.vars();
    mentions.iter().any(|v| reachable.contains(v))
}

fn param_reachable(pre: &SymbolicState, param_values: &[(String, Term)]) -> BTreeSet<LogicalVar> {
    // Seed with parameter values, close over heap edges and equalities.
    let mut terms: BTreeSet<Term> = param_values.iter().map(|(_, v)| v.clone()).collect();
    let eqs: Vec<(Term, Term)> = pre
        .pure
        .literals()
        .unwrap_or_default()
        .into_iter()
        .filter_map(|l| match l {
            crate::isl::Literal::Eq(a, b) => Some((a, b)),
            _ => None,
        })
        .collect();
    loop {
        let mut grew = false;
        for atom in pre.atoms() {
            match atom {
                SpatialTerm::PointsToLoc(l, v) if terms.contains(l) => {
                    grew |= terms.insert(v.clone());
                }
                SpatialTerm::PointsToField(b, _, v) if terms.contains(b) => {
                    grew |= terms.insert(v.clone());
                }
                _ => {}
            }
        }
        for (a, b) in &eqs {
            if terms.contains(a) {
                grew |= terms.insert(b.clone());
            }
            if terms.contains(b) {
                grew |= terms.insert(a.clone());
            }
        }
        if !grew {
            break;
        }
    }
    terms
        .into_iter()
        .filter_map(|t| t.as_lvar().cloned())
        .collect()
}

/// Canonical alpha-renaming for comparing and deduplicating triples.
pub fn canonical_triple(triple: &Triple) -> Triple {
    let mut order: Vec<LogicalVar> = Vec::new();
    let mut seen: BTreeSet<LogicalVar> = BTreeSet::new();
    let mut visit_state = |s: &SymbolicState, order: &mut Vec<LogicalVar>, seen: &mut BTreeSet<LogicalVar>| {
        for v in s.vars() {
            if seen.insert(v.clone()) {
                order.push(v);
            }
        }
    };
    visit_state(&triple.pre, &mut order, &mut seen);
    visit_state(&triple.post, &mut order, &mut seen);
    let mut mapping = crate::isl::Substitution::new();
    for (i, v) in order.iter().enumerate() {
        mapping.bind_term(v.clone(), Term::lvar(format!("C{}", i + 1)));
    }
    let rename = |s: &SymbolicState| -> SymbolicState {
        let out = SymbolicState {
            path: s.path.substitute(&mapping),
            pure: s.pure.substitute(&mapping),
            heap: s.heap.iter().map(|a| mapping.apply_atom(a)).collect(),
            existentials: BTreeSet::new(),
        };
        out.normalize().unwrap_or(out)
    };
    Triple {
        pre: rename(&triple.pre),
        code: triple.code.clone(),
        exit: triple.exit.clone(),
        post: rename(&triple.post),
    }
}

fn dedup_triples(triples: &mut Vec<SummaryTriple>) {
    let mut seen: BTreeSet<(bool, Triple)> = BTreeSet::new();
    triples.retain(|st| seen.insert((st.meta.report_only, canonical_triple(&st.triple))));
}

/// Summarize every function of a program in reverse topological order
/// over the call graph. Per-function problems become diagnostics; the
/// rest of the program is still analyzed.
pub fn analyze_program(program: &Program, cfg: &AnalysisConfig) -> ProgramAnalysis {
    let catalog = BugCatalog::from_config(cfg);
    let graph = build_call_graph(program);
    let mut gen = FreshVarGen::with_seed(cfg.seed);
    let mut env: BTreeMap<String, Summary> = BTreeMap::new();
    let mut call_log: Vec<CallRecord> = Vec::new();
    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    let mut trace = AnalysisTrace::default();

    for scc in &graph.sccs {
        for name in scc {
            let func = match program.function(name) {
                Some(f) => f,
                None => continue,
            };
            let summary = analyze_function(
                func,
                &env,
                cfg,
                &catalog,
                program,
                scc.iter().filter(|n| *n != name).cloned().collect(),
                &mut gen,
                &mut call_log,
                &mut diagnostics,
                if cfg.trace { Some(&mut trace) } else { None },
            );
            env.insert(name.clone(), summary);
        }
    }

    ProgramAnalysis {
        summaries: env,
        call_log,
        diagnostics,
        trace,
    }
}

/// Convenience for tests and examples: parse-and-analyze one source text.
pub fn analyze_source(
    source: &str,
    filename: &str,
    cfg: &AnalysisConfig,
) -> Result<(Program, ProgramAnalysis), crate::frontend::FrontendError> {
    let program = crate::frontend::parse(source, filename)?;
    let analysis = analyze_program(&program, cfg);
    Ok((program, analysis))
}
