//! Frontend: parse MiniC source into an annotated program representation
//! and compute the call graph that orders the compositional analysis.

pub mod ast;
mod callgraph;
mod lexer;
mod parser;
mod pretty;

pub use ast::{
    is_builtin, CmpOp, Cond, Expr, FuncDef, Loc, MiniType, Program, Stmt, StmtKind, StructDef,
    WorldTag, BUILTINS,
};
pub use callgraph::{build_call_graph, CallGraph};
pub use parser::parse;
pub use pretty::pretty_program;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FrontendError {
    #[error("syntax error at {loc}: {message}")]
    Syntax { loc: Loc, message: String },
    #[error("resolve error at {loc}: {message}")]
    Resolve { loc: Loc, message: String },
}

impl FrontendError {
    pub fn loc(&self) -> Loc {
        match self {
            FrontendError::Syntax { loc, .. } | FrontendError::Resolve { loc, .. } => *loc,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let program = parse("void set(ptr x, int v){ [x] = v; }", "t.mc").unwrap();
        assert_eq!(program.functions.len(), 1);
        let f = &program.functions[0];
        assert_eq!(f.name, "set");
        assert_eq!(f.world_tag, WorldTag::Client);
        assert_eq!(f.body.len(), 1);
        assert!(matches!(&f.body[0].kind, StmtKind::Store(x, Expr::Var(v)) if x == "x" && v == "v"));
    }

    #[test]
    fn vendor_annotation_sets_world_tag() {
        let program = parse("// @vendor\nvoid f(ptr p){ free(p); }", "t.mc").unwrap();
        assert_eq!(program.functions[0].world_tag, WorldTag::Vendor);
    }

    #[test]
    fn malformed_input_reports_line() {
        let err = parse("void g({", "t.mc").unwrap_err();
        match err {
            FrontendError::Syntax { loc, .. } => assert_eq!(loc.line, 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_callee_is_resolve_error() {
        let err = parse("void f(ptr p){ g(p); }", "t.mc").unwrap_err();
        assert!(matches!(err, FrontendError::Resolve { .. }));
    }

    #[test]
    fn unknown_field_is_resolve_error() {
        let src = "struct s { ptr a; };\nvoid f(struct s *p){ p->b = NULL; }";
        let err = parse(src, "t.mc").unwrap_err();
        assert!(matches!(err, FrontendError::Resolve { .. }));
    }

    #[test]
    fn int_param_cannot_be_dereferenced() {
        let err = parse("void f(int n){ [n] = 1; }", "t.mc").unwrap_err();
        assert!(matches!(err, FrontendError::Resolve { .. }));
    }

    #[test]
    fn builtins_resolve_without_definitions() {
        let src = "void f(ptr d, ptr s, int n){ memcpy(d, s, n); }";
        assert!(parse(src, "t.mc").is_ok());
    }

    #[test]
    fn statements_carry_locations() {
        let src = "void f(ptr p) {\n  free(p);\n}";
        let program = parse(src, "t.mc").unwrap();
        assert_eq!(program.functions[0].body[0].loc.line, 2);
    }

    #[test]
    fn pretty_print_reparses_identically() {
        let src = "struct client { ptr ip; ptr cid; };\n\n// @vendor\nvoid f(struct client *c, int n) {\n  t = c->ip;\n  if (n != 0) {\n    free(t);\n  } else {\n    while (n == 0) {\n      n = 1;\n    }\n  }\n  return;\n}";
        let program = parse(src, "t.mc").unwrap();
        let printed = pretty_program(&program);
        let reparsed = parse(&printed, "t.mc").unwrap();
        assert_eq!(program.structs, reparsed.structs);
        let strip = |p: &Program| -> Vec<(String, WorldTag, Vec<String>)> {
            p.functions
                .iter()
                .map(|f| {
                    (
                        f.name.clone(),
                        f.world_tag,
                        f.body.iter().map(|s| s.describe()).collect(),
                    )
                })
                .collect()
        };
        assert_eq!(strip(&program), strip(&reparsed));
    }
}
