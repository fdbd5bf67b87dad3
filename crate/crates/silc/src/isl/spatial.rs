//! Spatial assertions: points-to atoms, invalidated locations, separating
//! conjunction, and the blame-carrying extension (`Blame` and `World`
//! predicates that track which side last took responsibility for a heap
//! resource and how a bug on it should be sanitized).

use std::fmt;

use serde::Serialize;

use super::pure::PureTerm;
use super::term::{LogicalVar, Term};

/// Bug kinds the analysis can be asked to track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BugRef {
    Npd,
    MemLeak,
    Uaf,
}

impl BugRef {
    pub const ALL: [BugRef; 3] = [BugRef::Npd, BugRef::MemLeak, BugRef::Uaf];

    pub fn name(&self) -> &'static str {
        match self {
            BugRef::Npd => "NPD",
            BugRef::MemLeak => "MemLeak",
            BugRef::Uaf => "UAF",
        }
    }

    pub fn parse(name: &str) -> Option<BugRef> {
        match name {
            "NPD" => Some(BugRef::Npd),
            "MemLeak" => Some(BugRef::MemLeak),
            "UAF" => Some(BugRef::Uaf),
            _ => None,
        }
    }
}

impl fmt::Display for BugRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Location metadata carried by known entities: where blame would point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Default)]
pub struct EntityMeta {
    pub file: String,
    pub function: String,
    pub line: u32,
}

impl EntityMeta {
    pub fn new(file: impl Into<String>, function: impl Into<String>, line: u32) -> Self {
        EntityMeta {
            file: file.into(),
            function: function.into(),
            line,
        }
    }
}

/// The side responsible for a resource: the pre-existing codebase
/// (client), the auto-generated component (vendor), or a placeholder
/// variable for a side not yet determined.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Entity {
    Client(EntityMeta),
    Vendor(EntityMeta),
    Unknown(LogicalVar),
}

impl Entity {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Entity::Client(_) => "Client",
            Entity::Vendor(_) => "Vendor",
            Entity::Unknown(_) => "Unknown",
        }
    }

    pub fn is_vendor(&self) -> bool {
        matches!(self, Entity::Vendor(_))
    }

    pub fn is_client(&self) -> bool {
        matches!(self, Entity::Client(_))
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, Entity::Unknown(_))
    }

    /// World comparison ignores metadata: only the side matters.
    pub fn same_side(&self, other: &Entity) -> bool {
        match (self, other) {
            (Entity::Client(_), Entity::Client(_)) => true,
            (Entity::Vendor(_), Entity::Vendor(_)) => true,
            (Entity::Unknown(a), Entity::Unknown(b)) => a == b,
            _ => false,
        }
    }

    pub fn meta(&self) -> Option<&EntityMeta> {
        match self {
            Entity::Client(m) | Entity::Vendor(m) => Some(m),
            Entity::Unknown(_) => None,
        }
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Client(_) => write!(f, "Client"),
            Entity::Vendor(_) => write!(f, "Vendor"),
            Entity::Unknown(v) => write!(f, "{}", v),
        }
    }
}

/// A bug condition attached to a blame atom: either a bug reference
/// applied to the blamed resource, or a raw pure condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BugCond {
    Pred(BugRef, Term),
    Raw(PureTerm),
}

impl BugCond {
    pub fn bug_ref(&self) -> Option<BugRef> {
        match self {
            BugCond::Pred(b, _) => Some(*b),
            BugCond::Raw(_) => None,
        }
    }
}

impl fmt::Display for BugCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BugCond::Pred(b, t) => write!(f, "{}({})", b, t),
            BugCond::Raw(p) => write!(f, "{}", p),
        }
    }
}

/// Sanitizer templates: `stop` disables the buggy path before the call,
/// `noLeak` rescues memory after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Template {
    Stop,
    NoLeak,
}

impl Template {
    pub fn name(&self) -> &'static str {
        match self {
            Template::Stop => "stop",
            Template::NoLeak => "noLeak",
        }
    }

    pub fn parse(name: &str) -> Option<Template> {
        match name {
            "stop" => Some(Template::Stop),
            "noLeak" => Some(Template::NoLeak),
            _ => None,
        }
    }
}

/// Whether the bug flows into the vendor call (guard before it) or out of
/// it (act after it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FlowSign {
    Plus,
    Minus,
}

impl BugRef {
    /// The flow sign is fixed per bug kind: invalid resources flow into
    /// the vendor for NPD and UAF, leaked memory flows out of it.
    pub fn flow_sign(&self) -> FlowSign {
        match self {
            BugRef::Npd | BugRef::Uaf => FlowSign::Plus,
            BugRef::MemLeak => FlowSign::Minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sanitization {
    pub template: Template,
    pub path: PureTerm,
    pub sign: FlowSign,
}

impl Sanitization {
    pub fn new(template: Template, sign: FlowSign) -> Self {
        Sanitization {
            template,
            path: PureTerm::True,
            sign,
        }
    }
}

impl fmt::Display for Sanitization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.sign {
            FlowSign::Plus => "+",
            FlowSign::Minus => "-",
        };
        write!(f, "{} ? {}{}", self.path, self.template.name(), sign)
    }
}

/// Reference to an entry in the analysis-wide vendor-call log; carried by
/// blame atoms so the culprit boundary call can be recovered later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CallRef(pub usize);

/// `Blame(X, E, beta, S, C)`: entity `E` is responsible for resource `X`
/// with respect to the bug condition `beta`, to be handled by
/// sanitization `S`; `C` is an opaque context tag (the analyzed
/// function's name) that is carried but never interpreted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlamePred {
    pub resource: Term,
    pub entity: Entity,
    pub cond: BugCond,
    pub sanitization: Sanitization,
    pub ctx: String,
    /// Boundary call through which responsibility moved to this entity.
    pub via: Option<CallRef>,
}

impl BlamePred {
    /// Which bug kind this blame atom tracks, at most one per resource.
    pub fn bug_ref(&self) -> Option<BugRef> {
        self.cond.bug_ref()
    }
}

/// `World(E, P, S, C)`: the code under analysis belongs to entity `E` for
/// bug reference `P` with sanitization policy `S`. Installed once per
/// enabled bug kind and persistent across the whole function body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldPred {
    pub entity: Entity,
    pub bug: BugRef,
    pub sanitization: Sanitization,
    pub ctx: String,
}

/// Spatial assertion constructors. A normalized heap is a flat, sorted
/// sequence of the atom constructors (everything except `Emp`/`SepConj`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpatialTerm {
    Emp,
    /// Stack cell: program variable `x` holds value `X`.
    PointsToVar(String, Term),
    /// Heap cell at location `Y` containing `X`.
    PointsToLoc(Term, Term),
    /// Field cell: `Y.f` contains `X`. A struct is the family of field
    /// cells sharing the base location `Y`.
    PointsToField(Term, String, Term),
    /// Deallocated location.
    Invalid(Term),
    SepConj(Vec<SpatialTerm>),
    Blame(BlamePred),
    World(WorldPred),
}

/// What a spatial atom owns; no two atoms of a normalized heap may share a key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum HeadKey {
    Stack(String),
    Loc(Term),
    Field(Term, String),
    Blame(Term, Option<BugRef>),
    World(BugRef),
}

impl SpatialTerm {
    pub fn points_to_var(var: impl Into<String>, value: impl Into<Term>) -> Self {
        SpatialTerm::PointsToVar(var.into(), value.into())
    }

    pub fn points_to_loc(loc: impl Into<Term>, value: impl Into<Term>) -> Self {
        SpatialTerm::PointsToLoc(loc.into(), value.into())
    }

    pub fn points_to_field(
        base: impl Into<Term>,
        field: impl Into<String>,
        value: impl Into<Term>,
    ) -> Self {
        SpatialTerm::PointsToField(base.into(), field.into(), value.into())
    }

    pub fn invalid(loc: impl Into<Term>) -> Self {
        SpatialTerm::Invalid(loc.into())
    }

    pub fn is_atom(&self) -> bool {
        !matches!(self, SpatialTerm::Emp | SpatialTerm::SepConj(_))
    }

    /// Ownership key, `None` for `Emp`/`SepConj`.
    pub fn head_key(&self) -> Option<HeadKey> {
        match self {
            SpatialTerm::Emp | SpatialTerm::SepConj(_) => None,
            SpatialTerm::PointsToVar(x, _) => Some(HeadKey::Stack(x.clone())),
            SpatialTerm::PointsToLoc(l, _) | SpatialTerm::Invalid(l) => {
                Some(HeadKey::Loc(l.clone()))
            }
            SpatialTerm::PointsToField(b, f, _) => Some(HeadKey::Field(b.clone(), f.clone())),
            SpatialTerm::Blame(b) => Some(HeadKey::Blame(b.resource.clone(), b.bug_ref())),
            SpatialTerm::World(w) => Some(HeadKey::World(w.bug)),
        }
    }

    /// Rank used by the fixed atom ordering: cell atoms first, then
    /// invalidations, then bookkeeping predicates.
    pub fn rank(&self) -> u8 {
        match self {
            SpatialTerm::PointsToVar(..) => 0,
            SpatialTerm::PointsToLoc(..) => 1,
            SpatialTerm::PointsToField(..) => 2,
            SpatialTerm::Invalid(..) => 3,
            SpatialTerm::Blame(..) => 4,
            SpatialTerm::World(..) => 5,
            SpatialTerm::Emp => 6,
            SpatialTerm::SepConj(..) => 7,
        }
    }

    /// Flatten nested separating conjunctions, dropping `Emp`.
    pub fn flatten(self) -> Vec<SpatialTerm> {
        match self {
            SpatialTerm::Emp => vec![],
            SpatialTerm::SepConj(parts) => parts.into_iter().flat_map(|p| p.flatten()).collect(),
            atom => vec![atom],
        }
    }
}

impl fmt::Display for SpatialTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialTerm::Emp => write!(f, "emp"),
            SpatialTerm::PointsToVar(x, v) => write!(f, "{}|->{}", x, v),
            SpatialTerm::PointsToLoc(l, v) => write!(f, "{}|->{}", l, v),
            SpatialTerm::PointsToField(b, fld, v) => write!(f, "{}.{}|->{}", b, fld, v),
            SpatialTerm::Invalid(l) => write!(f, "{}!", l),
            SpatialTerm::SepConj(parts) => {
                let rendered: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", rendered.join(" * "))
            }
            SpatialTerm::Blame(b) => {
                write!(
                    f,
                    "Blame({}, {}, {}, {}, {})",
                    b.resource, b.entity, b.cond, b.sanitization, b.ctx
                )
            }
            SpatialTerm::World(w) => {
                write!(
                    f,
                    "World({}, {}, {}, {})",
                    w.entity, w.bug, w.sanitization, w.ctx
                )
            }
        }
    }
}
