//! Symbolic states and their structural algebra: normalization into a
//! canonical atom order, capture-checked substitution, and the triple
//! type used for function summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::pure::PureTerm;
use super::spatial::{BlamePred, BugCond, Entity, SpatialTerm, WorldPred};
use super::term::{LogicalVar, Term};
use super::DomainError;

/// Simultaneous substitution of logical variables. Entity bindings are a
/// separate namespace used when unification resolves an unknown
/// responsible side to a concrete one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    pub terms: BTreeMap<LogicalVar, Term>,
    pub entities: BTreeMap<LogicalVar, Entity>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn of_terms(pairs: impl IntoIterator<Item = (LogicalVar, Term)>) -> Self {
        Substitution {
            terms: pairs.into_iter().collect(),
            entities: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.entities.is_empty()
    }

    pub fn bind_term(&mut self, var: LogicalVar, term: Term) {
        self.terms.insert(var, term);
    }

    pub fn bind_entity(&mut self, var: LogicalVar, entity: Entity) {
        self.entities.insert(var, entity);
    }

    pub fn apply_term(&self, term: &Term) -> Term {
        match term {
            Term::LVar(v) => self.terms.get(v).cloned().unwrap_or_else(|| term.clone()),
            other => other.clone(),
        }
    }

    pub fn apply_entity(&self, entity: &Entity) -> Entity {
        match entity {
            Entity::Unknown(v) => {
                if let Some(bound) = self.entities.get(v) {
                    return bound.clone();
                }
                // A term binding to another variable renames the entity var.
                if let Some(Term::LVar(renamed)) = self.terms.get(v) {
                    return Entity::Unknown(renamed.clone());
                }
                entity.clone()
            }
            other => other.clone(),
        }
    }

    pub fn apply_atom(&self, atom: &SpatialTerm) -> SpatialTerm {
        match atom {
            SpatialTerm::Emp => SpatialTerm::Emp,
            SpatialTerm::PointsToVar(x, v) => {
                SpatialTerm::PointsToVar(x.clone(), self.apply_term(v))
            }
            SpatialTerm::PointsToLoc(l, v) => {
                SpatialTerm::PointsToLoc(self.apply_term(l), self.apply_term(v))
            }
            SpatialTerm::PointsToField(b, f, v) => {
                SpatialTerm::PointsToField(self.apply_term(b), f.clone(), self.apply_term(v))
            }
            SpatialTerm::Invalid(l) => SpatialTerm::Invalid(self.apply_term(l)),
            SpatialTerm::SepConj(parts) => {
                SpatialTerm::SepConj(parts.iter().map(|p| self.apply_atom(p)).collect())
            }
            SpatialTerm::Blame(b) => SpatialTerm::Blame(BlamePred {
                resource: self.apply_term(&b.resource),
                entity: self.apply_entity(&b.entity),
                cond: self.apply_cond(&b.cond),
                sanitization: super::spatial::Sanitization {
                    template: b.sanitization.template,
                    path: b.sanitization.path.substitute(self),
                    sign: b.sanitization.sign,
                },
                ctx: b.ctx.clone(),
                via: b.via,
            }),
            SpatialTerm::World(w) => SpatialTerm::World(WorldPred {
                entity: self.apply_entity(&w.entity),
                bug: w.bug,
                sanitization: super::spatial::Sanitization {
                    template: w.sanitization.template,
                    path: w.sanitization.path.substitute(self),
                    sign: w.sanitization.sign,
                },
                ctx: w.ctx.clone(),
            }),
        }
    }

    fn apply_cond(&self, cond: &BugCond) -> BugCond {
        match cond {
            BugCond::Pred(b, t) => BugCond::Pred(*b, self.apply_term(t)),
            BugCond::Raw(p) => BugCond::Raw(p.substitute(self)),
        }
    }

    /// Variables appearing in substitution targets.
    pub fn target_vars(&self) -> BTreeSet<LogicalVar> {
        self.terms
            .values()
            .filter_map(|t| t.as_lvar().cloned())
            .collect()
    }
}

/// A symbolic state: the program-path component, a pure constraint, a
/// normalized spatial heap, and the set of existentially bound variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolicState {
    pub path: PureTerm,
    pub pure: PureTerm,
    pub heap: Vec<SpatialTerm>,
    pub existentials: BTreeSet<LogicalVar>,
}

impl Default for SymbolicState {
    fn default() -> Self {
        SymbolicState {
            path: PureTerm::True,
            pure: PureTerm::True,
            heap: Vec::new(),
            existentials: BTreeSet::new(),
        }
    }
}

impl SymbolicState {
    pub fn emp() -> Self {
        Self::default()
    }

    pub fn with_heap(atoms: Vec<SpatialTerm>) -> Self {
        SymbolicState {
            heap: atoms.into_iter().flat_map(SpatialTerm::flatten).collect(),
            ..Self::default()
        }
    }

    pub fn is_emp(&self) -> bool {
        self.heap.is_empty() && self.pure.is_true() && self.path.is_true()
    }

    /// Everything the state knows as one pure formula: accumulated pure
    /// facts plus the program path.
    pub fn knowledge(&self) -> PureTerm {
        PureTerm::and(vec![self.pure.clone(), self.path.clone()])
    }

    pub fn atoms(&self) -> &[SpatialTerm] {
        &self.heap
    }

    pub fn worlds(&self) -> impl Iterator<Item = &WorldPred> {
        self.heap.iter().filter_map(|a| match a {
            SpatialTerm::World(w) => Some(w),
            _ => None,
        })
    }

    pub fn blames(&self) -> impl Iterator<Item = &BlamePred> {
        self.heap.iter().filter_map(|a| match a {
            SpatialTerm::Blame(b) => Some(b),
            _ => None,
        })
    }

    /// Heap-cell heads (locations of cells, fields and invalidations);
    /// these cannot be nil in any model.
    pub fn loc_heads(&self) -> BTreeSet<Term> {
        self.heap
            .iter()
            .filter_map(|a| match a {
                SpatialTerm::PointsToLoc(l, _) | SpatialTerm::Invalid(l) => Some(l.clone()),
                SpatialTerm::PointsToField(b, _, _) => Some(b.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn stack_value(&self, var: &str) -> Option<&Term> {
        self.heap.iter().find_map(|a| match a {
            SpatialTerm::PointsToVar(x, v) if x == var => Some(v),
            _ => None,
        })
    }

    /// All logical variables mentioned anywhere in the state.
    pub fn vars(&self) -> BTreeSet<LogicalVar> {
        let mut out = self.pure.vars();
        out.extend(self.path.vars());
        for atom in &self.heap {
            collect_atom_vars(atom, &mut out);
        }
        out.extend(self.existentials.iter().cloned());
        out
    }

    /// Conjoin another state into this one (separating conjunction of
    /// heaps, conjunction of pure parts). Normalize afterwards.
    pub fn star(&self, other: &SymbolicState) -> SymbolicState {
        let mut heap = self.heap.clone();
        heap.extend(other.heap.iter().cloned());
        let mut existentials = self.existentials.clone();
        existentials.extend(other.existentials.iter().cloned());
        SymbolicState {
            path: PureTerm::and(vec![self.path.clone(), other.path.clone()]),
            pure: PureTerm::and(vec![self.pure.clone(), other.pure.clone()]),
            heap,
            existentials,
        }
    }

    /// Canonical form: flat sorted atoms, normalized pure parts, and a
    /// separation check that no location heads two atoms.
    pub fn normalize(&self) -> Result<SymbolicState, DomainError> {
        let mut atoms: Vec<SpatialTerm> = self
            .heap
            .iter()
            .cloned()
            .flat_map(SpatialTerm::flatten)
            .collect();
        atoms.sort_by(|a, b| (a.rank(), &*a).cmp(&(b.rank(), &*b)));
        atoms.dedup();

        let mut seen = BTreeSet::new();
        for atom in &atoms {
            if let Some(key) = atom.head_key() {
                if !seen.insert(key.clone()) {
                    return Err(DomainError::SeparationViolation(format!(
                        "{} claims a resource another atom already owns",
                        atom
                    )));
                }
            }
        }

        let pure = self.pure.normalize()?;
        let path = self.path.normalize()?;
        let mut existentials = self.existentials.clone();
        // Existentials that no longer occur anywhere are dropped.
        let mut mentioned = pure.vars();
        mentioned.extend(path.vars());
        for atom in &atoms {
            collect_atom_vars(atom, &mut mentioned);
        }
        existentials.retain(|v| mentioned.contains(v));

        Ok(SymbolicState {
            path,
            pure,
            heap: atoms,
            existentials,
        })
    }

    /// Simultaneous substitution. Errors if the mapping touches a bound
    /// existential or would move a target variable under a binder.
    pub fn substitute(&self, mapping: &Substitution) -> Result<SymbolicState, DomainError> {
        for key in mapping.terms.keys().chain(mapping.entities.keys()) {
            if self.existentials.contains(key) {
                return Err(DomainError::Capture(format!(
                    "mapping rebinds existential {}",
                    key
                )));
            }
        }
        for target in mapping.target_vars() {
            if self.existentials.contains(&target) {
                return Err(DomainError::Capture(format!(
                    "mapping target {} is captured by a binder",
                    target
                )));
            }
        }
        SymbolicState {
            path: self.path.substitute(mapping),
            pure: self.pure.substitute(mapping),
            heap: self.heap.iter().map(|a| mapping.apply_atom(a)).collect(),
            existentials: self.existentials.clone(),
        }
        .normalize()
    }

    /// Rename every logical variable to a fresh one; used to instantiate
    /// rule and summary schemata. Returns the renamed state (binders
    /// dropped: skolemized) and the renaming.
    pub fn rename_all_fresh(
        &self,
        gen: &mut super::term::FreshVarGen,
    ) -> (SymbolicState, Substitution) {
        let mut mapping = Substitution::new();
        for var in self.vars() {
            let hint: String = var
                .as_str()
                .chars()
                .take_while(|c| c.is_ascii_alphabetic())
                .collect();
            mapping.bind_term(var.clone(), Term::LVar(gen.fresh(&hint)));
        }
        let renamed = SymbolicState {
            path: self.path.substitute(&mapping),
            pure: self.pure.substitute(&mapping),
            heap: self.heap.iter().map(|a| mapping.apply_atom(a)).collect(),
            existentials: BTreeSet::new(),
        };
        (renamed, mapping)
    }
}

fn collect_atom_vars(atom: &SpatialTerm, out: &mut BTreeSet<LogicalVar>) {
    fn push(t: &Term, out: &mut BTreeSet<LogicalVar>) {
        if let Some(v) = t.as_lvar() {
            out.insert(v.clone());
        }
    }
    match atom {
        SpatialTerm::Emp => {}
        SpatialTerm::PointsToVar(_, v) => push(v, out),
        SpatialTerm::PointsToLoc(l, v) => {
            push(l, out);
            push(v, out);
        }
        SpatialTerm::PointsToField(b, _, v) => {
            push(b, out);
            push(v, out);
        }
        SpatialTerm::Invalid(l) => push(l, out),
        SpatialTerm::SepConj(parts) => {
            for p in parts {
                collect_atom_vars(p, out);
            }
        }
        SpatialTerm::Blame(b) => {
            push(&b.resource, out);
            if let Entity::Unknown(v) = &b.entity {
                out.insert(v.clone());
            }
            match &b.cond {
                BugCond::Pred(_, t) => push(t, out),
                BugCond::Raw(p) => out.extend(p.vars()),
            }
            out.extend(b.sanitization.path.vars());
        }
        SpatialTerm::World(w) => {
            if let Entity::Unknown(v) = &w.entity {
                out.insert(v.clone());
            }
            out.extend(w.sanitization.path.vars());
        }
    }
}

/// Exit condition of a triple: normal return, or an error manifesting in
/// the world of the given entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExitCond {
    Ok,
    Err(Entity),
}

impl ExitCond {
    pub fn is_err(&self) -> bool {
        matches!(self, ExitCond::Err(_))
    }

    pub fn err_world(&self) -> Option<&Entity> {
        match self {
            ExitCond::Ok => None,
            ExitCond::Err(e) => Some(e),
        }
    }
}

impl fmt::Display for ExitCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExitCond::Ok => write!(f, "ok"),
            ExitCond::Err(e) => write!(f, "{}:err", e),
        }
    }
}

/// An under-approximate specification `[pre] code [exit: post]`: every
/// state satisfying `post` is reachable from some state satisfying `pre`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub pre: SymbolicState,
    pub code: String,
    pub exit: ExitCond,
    pub post: SymbolicState,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} [{}: {}]",
            super::render::render_state(&self.pre),
            self.code,
            self.exit,
            super::render::render_state(&self.post)
        )
    }
}
