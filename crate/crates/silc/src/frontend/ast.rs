//! Abstract syntax for MiniC, a reduced C-like pointer language.
//!
//! The language covers exactly the shapes the analysis reasons about:
//! allocation, deallocation, scalar and field loads/stores, calls,
//! branches, bounded loops and returns. There is no pointer arithmetic,
//! no casts, no arrays and no function pointers.

use std::collections::BTreeMap;
use std::fmt;

/// A position in the original source text (1-based line and column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Types in MiniC. `Ptr` is an untyped pointer; `StructPtr` carries the
/// struct name so field accesses can be checked against declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MiniType {
    Int,
    Void,
    Ptr,
    StructPtr(String),
}

impl fmt::Display for MiniType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MiniType::Int => write!(f, "int"),
            MiniType::Void => write!(f, "void"),
            MiniType::Ptr => write!(f, "ptr"),
            MiniType::StructPtr(name) => write!(f, "struct {} *", name),
        }
    }
}

impl MiniType {
    pub fn is_pointer(&self) -> bool {
        matches!(self, MiniType::Ptr | MiniType::StructPtr(_))
    }
}

/// Which side of the integration boundary a function belongs to.
/// Functions annotated with `// @vendor` on the preceding line are vendor
/// (auto-generated) code; everything else is client code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WorldTag {
    Client,
    Vendor,
}

impl fmt::Display for WorldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorldTag::Client => write!(f, "Client"),
            WorldTag::Vendor => write!(f, "Vendor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructDef {
    pub name: String,
    pub fields: Vec<(String, MiniType)>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<(String, MiniType)>,
    pub return_type: MiniType,
    pub body: Vec<Stmt>,
    pub world_tag: WorldTag,
    pub loc: Loc,
    /// File the definition came from; kept per function so merged
    /// translation units still report correct locations.
    pub file: String,
}

/// Expressions are deliberately flat: a variable, an integer literal or NULL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Int(i64),
    Null,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(name) => write!(f, "{}", name),
            Expr::Int(value) => write!(f, "{}", value),
            Expr::Null => write!(f, "NULL"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
}

impl CmpOp {
    pub fn negate(self) -> Self {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmpOp::Eq => write!(f, "=="),
            CmpOp::Ne => write!(f, "!="),
        }
    }
}

/// Branch and loop conditions: a comparison or a bare variable test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Cmp(Expr, CmpOp, Expr),
    Var(String),
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Cmp(lhs, op, rhs) => write!(f, "{} {} {}", lhs, op, rhs),
            Cond::Var(name) => write!(f, "{}", name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    /// `x = e;`
    Assign(String, Expr),
    /// `x = malloc();`
    Malloc(String),
    /// `free(x);`
    Free(String),
    /// `[x] = e;`
    Store(String, Expr),
    /// `x = [y];`
    Load(String, String),
    /// `x->f = e;`
    FieldStore(String, String, Expr),
    /// `x = y->f;`
    FieldLoad(String, String, String),
    /// `[x =] f(e, ...);`
    Call(Option<String>, String, Vec<Expr>),
    If(Cond, Vec<Stmt>, Option<Vec<Stmt>>),
    While(Cond, Vec<Stmt>),
    Return(Option<Expr>),
}

impl Stmt {
    pub fn new(kind: StmtKind, loc: Loc) -> Self {
        Stmt { kind, loc }
    }

    /// One-line rendering used in triples and diagnostics.
    pub fn describe(&self) -> String {
        match &self.kind {
            StmtKind::Assign(x, e) => format!("{} = {}", x, e),
            StmtKind::Malloc(x) => format!("{} = malloc()", x),
            StmtKind::Free(x) => format!("free({})", x),
            StmtKind::Store(x, e) => format!("[{}] = {}", x, e),
            StmtKind::Load(x, y) => format!("{} = [{}]", x, y),
            StmtKind::FieldStore(x, f, e) => format!("{}->{} = {}", x, f, e),
            StmtKind::FieldLoad(x, y, f) => format!("{} = {}->{}", x, y, f),
            StmtKind::Call(ret, name, args) => {
                let rendered: Vec<String> = args.iter().map(Expr::to_string).collect();
                match ret {
                    Some(x) => format!("{} = {}({})", x, name, rendered.join(", ")),
                    None => format!("{}({})", name, rendered.join(", ")),
                }
            }
            StmtKind::If(c, _, _) => format!("if ({})", c),
            StmtKind::While(c, _) => format!("while ({})", c),
            StmtKind::Return(Some(e)) => format!("return {}", e),
            StmtKind::Return(None) => "return".to_string(),
        }
    }
}

/// A parsed translation unit (possibly merged from several files).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub structs: Vec<StructDef>,
    pub functions: Vec<FuncDef>,
    /// Original source text per file, used for call-site rewriting.
    pub sources: BTreeMap<String, String>,
}

/// Builtins with predefined summaries. `memcpy` dereferences both its
/// destination and source arguments; `strlen` dereferences its argument.
pub const BUILTINS: [&str; 2] = ["memcpy", "strlen"];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FuncDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Merge another translation unit into this one. Function names must
    /// stay unique across the merged program.
    pub fn merge(&mut self, other: Program) -> Result<(), String> {
        for func in &other.functions {
            if self.function(&func.name).is_some() {
                return Err(format!("duplicate function `{}`", func.name));
            }
        }
        for st in other.structs {
            if !self.structs.iter().any(|s| s.name == st.name) {
                self.structs.push(st);
            }
        }
        self.functions.extend(other.functions);
        self.sources.extend(other.sources);
        Ok(())
    }

    /// Iterate all statements of all functions, depth first.
    pub fn all_stmts(&self) -> Vec<(&FuncDef, &Stmt)> {
        fn walk<'a>(f: &'a FuncDef, stmts: &'a [Stmt], out: &mut Vec<(&'a FuncDef, &'a Stmt)>) {
            for s in stmts {
                out.push((f, s));
                match &s.kind {
                    StmtKind::If(_, t, e) => {
                        walk(f, t, out);
                        if let Some(e) = e {
                            walk(f, e, out);
                        }
                    }
                    StmtKind::While(_, b) => walk(f, b, out),
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        for f in &self.functions {
            walk(f, &f.body, &mut out);
        }
        out
    }
}
