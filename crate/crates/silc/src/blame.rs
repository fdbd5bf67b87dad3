//! Blame orchestration: the user-configurable bug catalog, world
//! installation at function entry, and classification of manifest
//! findings into integration bugs (blamed side differs from the side
//! where the bug manifests) versus same-world bugs.

use std::collections::BTreeMap;

use crate::config::AnalysisConfig;
use crate::exec::{LeakInfo, ProgramAnalysis, SummaryTriple};
use crate::frontend::{FuncDef, WorldTag};
use crate::isl::{
    BlamePred, BugCond, BugRef, CallRef, Entity, EntityMeta, PureTerm, Sanitization, SpatialTerm,
    SymbolicState, Template, Term, WorldPred,
};
use crate::solver;

/// How a bug kind is defined: the shape of the state that triggers it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerShape {
    /// Some variable points to the resource and it is nil.
    IsNil,
    /// Some variable points to the resource and it has been deallocated.
    IsDeallocated,
    /// The resource is allocated but unreachable when the function exits.
    UnreachableAtExit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BugDef {
    pub bug: BugRef,
    pub shape: TriggerShape,
}

impl BugDef {
    pub fn default_for(bug: BugRef) -> Self {
        let shape = match bug {
            BugRef::Npd => TriggerShape::IsNil,
            BugRef::Uaf => TriggerShape::IsDeallocated,
            BugRef::MemLeak => TriggerShape::UnreachableAtExit,
        };
        BugDef { bug, shape }
    }

    /// Render `P(X) := body` for reports.
    pub fn render(&self) -> String {
        let body = match self.shape {
            TriggerShape::IsNil => "exists x. x|->X /\\ X = nil",
            TriggerShape::IsDeallocated => "exists x. x|->X * X!",
            TriggerShape::UnreachableAtExit => "alloc(X) /\\ unreachable(X)",
        };
        format!("{}(X) := {}", self.bug, body)
    }
}

/// Enabled bug kinds with their definitions and sanitization policies.
#[derive(Debug, Clone)]
pub struct BugCatalog {
    pub defs: BTreeMap<BugRef, BugDef>,
    pub policies: BTreeMap<BugRef, Sanitization>,
}

impl BugCatalog {
    pub fn from_config(cfg: &AnalysisConfig) -> Self {
        let mut defs = BTreeMap::new();
        let mut policies = BTreeMap::new();
        for bug in cfg.enabled_bugs() {
            defs.insert(bug, BugDef::default_for(bug));
            policies.insert(
                bug,
                Sanitization::new(cfg.template_for(bug), bug.flow_sign()),
            );
        }
        BugCatalog { defs, policies }
    }

    pub fn enabled(&self) -> impl Iterator<Item = BugRef> + '_ {
        self.defs.keys().copied()
    }

    pub fn policy(&self, bug: BugRef) -> Sanitization {
        self.policies
            .get(&bug)
            .cloned()
            .unwrap_or_else(|| Sanitization::new(Template::Stop, bug.flow_sign()))
    }

    /// Does a blame atom's bug condition track the given bug kind? A
    /// predicate application matches by reference; a raw condition must
    /// entail the instantiated definition.
    pub fn cond_matches(&self, cond: &BugCond, bug: BugRef, resource: &Term) -> bool {
        match cond {
            BugCond::Pred(b, _) => *b == bug,
            BugCond::Raw(pure) => match self.defs.get(&bug).map(|d| d.shape) {
                Some(TriggerShape::IsNil) => {
                    let want = PureTerm::eq(resource.clone(), Term::Nil);
                    solver::entails_pure(pure, &want).unwrap_or(false)
                }
                _ => false,
            },
        }
    }
}

/// The entity a function's code belongs to.
pub fn function_entity(func: &FuncDef) -> Entity {
    let meta = EntityMeta::new(func.file.clone(), func.name.clone(), func.loc.line);
    match func.world_tag {
        WorldTag::Client => Entity::Client(meta),
        WorldTag::Vendor => Entity::Vendor(meta),
    }
}

/// Initial state for analyzing a function: one persistent `World` atom
/// per enabled bug kind, all owned by the function's entity.
pub fn init_worlds(func: &FuncDef, catalog: &BugCatalog) -> SymbolicState {
    let entity = function_entity(func);
    let atoms: Vec<SpatialTerm> = catalog
        .enabled()
        .map(|bug| {
            SpatialTerm::World(WorldPred {
                entity: entity.clone(),
                bug,
                sanitization: catalog.policy(bug),
                ctx: func.name.clone(),
            })
        })
        .collect();
    SymbolicState::with_heap(atoms)
}

/// Whether a manifest finding crosses the integration boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FindingStatus {
    SameWorld,
    Integration,
}

/// A classified manifest finding.
#[derive(Debug, Clone)]
pub struct IntegrationFinding {
    pub bug: BugRef,
    /// Function in which the bug manifests (where it is reported).
    pub in_function: String,
    /// World in which the faulting primitive executed.
    pub manifest_world: Entity,
    /// Entity blamed for the culprit resource, if one could be read.
    pub blamed: Option<Entity>,
    /// Boundary call through which responsibility crossed, if any.
    pub culprit_call: Option<CallRef>,
    pub status: FindingStatus,
    pub culprit: Option<Term>,
    /// Index into the owning summary's triples: the proof.
    pub triple_index: usize,
    /// Leak details when `bug` is `MemLeak`.
    pub leak: Option<LeakInfo>,
    pub diagnostics: Vec<String>,
}

/// Read the blame atom relevant to a culprit resource: first a blame
/// keyed directly by the resource, then the blame of the cell holding it.
pub fn lookup_blame<'a>(
    state: &'a SymbolicState,
    culprit: &Term,
    bug: BugRef,
    catalog: &BugCatalog,
) -> Option<&'a BlamePred> {
    let tracked = |b: &&BlamePred| catalog.cond_matches(&b.cond, bug, &b.resource);
    if let Some(found) = state
        .blames()
        .filter(tracked)
        .find(|b| b.resource == *culprit)
    {
        return Some(found);
    }
    // The cell containing the culprit value: a scalar cell blames its
    // location, a field cell blames its base.
    let holder = state.atoms().iter().find_map(|a| match a {
        SpatialTerm::PointsToLoc(l, v) if v == culprit => Some(l.clone()),
        SpatialTerm::PointsToField(b, _, v) if v == culprit => Some(b.clone()),
        _ => None,
    })?;
    state
        .blames()
        .filter(tracked)
        .find(|b| b.resource == holder)
}

/// Classify every reportable manifest finding of an analyzed program.
/// Pure over its inputs: identical analyses yield identical findings in
/// identical order.
pub fn classify(analysis: &ProgramAnalysis, catalog: &BugCatalog) -> Vec<IntegrationFinding> {
    let mut findings = Vec::new();
    for (name, summary) in &analysis.summaries {
        for (idx, st) in summary.triples.iter().enumerate() {
            if !is_reportable(st) {
                continue;
            }
            findings.push(classify_one(name, idx, st, catalog));
        }
    }
    findings.sort_by(|a, b| {
        (&a.in_function, a.bug, a.triple_index).cmp(&(&b.in_function, b.bug, b.triple_index))
    });
    findings
}

fn is_reportable(st: &SummaryTriple) -> bool {
    st.triple.exit.is_err() && !st.meta.latent && !st.meta.already_reported
}

fn classify_one(
    function: &str,
    idx: usize,
    st: &SummaryTriple,
    catalog: &BugCatalog,
) -> IntegrationFinding {
    let bug = st.meta.bug.unwrap_or(BugRef::Npd);
    let manifest_world = st
        .triple
        .exit
        .err_world()
        .cloned()
        .unwrap_or(Entity::Unknown(crate::isl::LogicalVar::new("W")));
    let mut diagnostics = Vec::new();

    // Leaks carry their blame in the finding itself (read from the post
    // state when the exit check fired); for the other kinds the blame is
    // read from the triple's pre extended with the missing resource, with
    // entities resolved through the post when still unknown.
    let (blamed, culprit_call) = if let Some(leak) = &st.meta.leak {
        match &leak.blame {
            Some(b) => (Some(b.entity.clone()), b.via),
            None => {
                diagnostics
                    .push("missing blame: leaked resource has no blame atom".to_string());
                (None, None)
            }
        }
    } else {
        let culprit = st.meta.culprit.clone();
        let from_post = culprit.as_ref().and_then(|c| {
            lookup_blame(&st.triple.post, c, bug, catalog)
        });
        match from_post {
            Some(b) => {
                // The err metadata names the boundary call that introduced
                // the manifestation; the blame's own record is a fallback.
                let via = st.meta.vendor_call.or(b.via);
                (Some(b.entity.clone()), via)
            }
            None => {
                diagnostics.push(format!(
                    "missing blame: no blame atom for culprit {} of this {}",
                    culprit
                        .as_ref()
                        .map(|c| c.to_string())
                        .unwrap_or_else(|| "<unknown>".into()),
                    bug
                ));
                (None, st.meta.vendor_call)
            }
        }
    };

    let status = match &blamed {
        Some(entity) if entity.is_known() && !entity.same_side(&manifest_world) => {
            FindingStatus::Integration
        }
        _ => FindingStatus::SameWorld,
    };

    IntegrationFinding {
        bug,
        in_function: function.to_string(),
        manifest_world,
        blamed,
        culprit_call,
        status,
        culprit: st.meta.culprit.clone(),
        triple_index: idx,
        leak: st.meta.leak.clone(),
        diagnostics,
    }
}
