//! Recursive-descent parser for MiniC, followed by a resolve pass that
//! checks callees, struct fields and pointer usage.

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{lex, Spanned, Tok};
use super::FrontendError;

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    file: String,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        let idx = (self.pos + 1).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Spanned {
        let s = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        s
    }

    fn expect(&mut self, want: Tok) -> Result<Spanned, FrontendError> {
        if *self.peek() == want {
            Ok(self.bump())
        } else {
            Err(FrontendError::Syntax {
                loc: self.loc(),
                message: format!("expected {}, found {}", want.describe(), self.peek().describe()),
            })
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Loc), FrontendError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok((name, loc))
            }
            other => Err(FrontendError::Syntax {
                loc,
                message: format!("expected identifier, found {}", other.describe()),
            }),
        }
    }

    fn parse_type(&mut self) -> Result<MiniType, FrontendError> {
        match self.peek().clone() {
            Tok::KwInt => {
                self.bump();
                Ok(MiniType::Int)
            }
            Tok::KwVoid => {
                self.bump();
                Ok(MiniType::Void)
            }
            Tok::KwPtr => {
                self.bump();
                Ok(MiniType::Ptr)
            }
            Tok::KwStruct => {
                self.bump();
                let (name, _) = self.expect_ident()?;
                self.expect(Tok::Star)?;
                Ok(MiniType::StructPtr(name))
            }
            other => Err(FrontendError::Syntax {
                loc: self.loc(),
                message: format!("expected type, found {}", other.describe()),
            }),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr::Var(name))
            }
            Tok::Int(value) => {
                self.bump();
                Ok(Expr::Int(value))
            }
            Tok::KwNull => {
                self.bump();
                Ok(Expr::Null)
            }
            other => Err(FrontendError::Syntax {
                loc: self.loc(),
                message: format!("expected expression, found {}", other.describe()),
            }),
        }
    }

    fn parse_cond(&mut self) -> Result<Cond, FrontendError> {
        // Lone variable test: `ID` directly followed by `)`.
        if let Tok::Ident(name) = self.peek().clone() {
            if *self.peek2() == Tok::RParen {
                self.bump();
                return Ok(Cond::Var(name));
            }
        }
        let lhs = self.parse_expr()?;
        let op = match self.peek() {
            Tok::EqEq => {
                self.bump();
                CmpOp::Eq
            }
            Tok::NotEq => {
                self.bump();
                CmpOp::Ne
            }
            other => {
                return Err(FrontendError::Syntax {
                    loc: self.loc(),
                    message: format!("expected `==` or `!=`, found {}", other.describe()),
                })
            }
        };
        let rhs = self.parse_expr()?;
        Ok(Cond::Cmp(lhs, op, rhs))
    }

    fn parse_block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(FrontendError::Syntax {
                    loc: self.loc(),
                    message: "unexpected end of input inside block".into(),
                });
            }
            stmts.push(self.parse_stmt()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(stmts)
    }

    fn parse_call_args(&mut self) -> Result<Vec<Expr>, FrontendError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.parse_expr()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.parse_expr()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn parse_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::KwFree => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (name, _) = self.expect_ident()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::new(StmtKind::Free(name), loc))
            }
            Tok::KwIf => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.parse_cond()?;
                self.expect(Tok::RParen)?;
                let then_block = self.parse_block()?;
                let else_block = if *self.peek() == Tok::KwElse {
                    self.bump();
                    Some(self.parse_block()?)
                } else {
                    None
                };
                Ok(Stmt::new(StmtKind::If(cond, then_block, else_block), loc))
            }
            Tok::KwWhile => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.parse_cond()?;
                self.expect(Tok::RParen)?;
                let body = self.parse_block()?;
                Ok(Stmt::new(StmtKind::While(cond, body), loc))
            }
            Tok::KwReturn => {
                self.bump();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.parse_expr()?)
                };
                self.expect(Tok::Semi)?;
                Ok(Stmt::new(StmtKind::Return(value), loc))
            }
            Tok::LBracket => {
                // `[x] = e;`
                self.bump();
                let (target, _) = self.expect_ident()?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Assign)?;
                let value = self.parse_expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::new(StmtKind::Store(target, value), loc))
            }
            Tok::Ident(first) => {
                self.bump();
                match self.peek().clone() {
                    Tok::Arrow => {
                        // `x->f = e;`
                        self.bump();
                        let (field, _) = self.expect_ident()?;
                        self.expect(Tok::Assign)?;
                        let value = self.parse_expr()?;
                        self.expect(Tok::Semi)?;
                        Ok(Stmt::new(StmtKind::FieldStore(first, field, value), loc))
                    }
                    Tok::LParen => {
                        // bare call `f(args);`
                        let args = self.parse_call_args()?;
                        self.expect(Tok::Semi)?;
                        Ok(Stmt::new(StmtKind::Call(None, first, args), loc))
                    }
                    Tok::Assign => {
                        self.bump();
                        match self.peek().clone() {
                            Tok::KwMalloc => {
                                self.bump();
                                self.expect(Tok::LParen)?;
                                self.expect(Tok::RParen)?;
                                self.expect(Tok::Semi)?;
                                Ok(Stmt::new(StmtKind::Malloc(first), loc))
                            }
                            Tok::LBracket => {
                                self.bump();
                                let (source, _) = self.expect_ident()?;
                                self.expect(Tok::RBracket)?;
                                self.expect(Tok::Semi)?;
                                Ok(Stmt::new(StmtKind::Load(first, source), loc))
                            }
                            Tok::Ident(second) if *self.peek2() == Tok::Arrow => {
                                // `x = y->f;`
                                self.bump();
                                self.bump();
                                let (field, _) = self.expect_ident()?;
                                self.expect(Tok::Semi)?;
                                Ok(Stmt::new(StmtKind::FieldLoad(first, second, field), loc))
                            }
                            Tok::Ident(second) if *self.peek2() == Tok::LParen => {
                                // `x = f(args);`
                                self.bump();
                                let args = self.parse_call_args()?;
                                self.expect(Tok::Semi)?;
                                Ok(Stmt::new(StmtKind::Call(Some(first), second, args), loc))
                            }
                            _ => {
                                let value = self.parse_expr()?;
                                self.expect(Tok::Semi)?;
                                Ok(Stmt::new(StmtKind::Assign(first, value), loc))
                            }
                        }
                    }
                    other => Err(FrontendError::Syntax {
                        loc: self.loc(),
                        message: format!(
                            "expected `=`, `->` or `(` after identifier, found {}",
                            other.describe()
                        ),
                    }),
                }
            }
            other => Err(FrontendError::Syntax {
                loc,
                message: format!("expected statement, found {}", other.describe()),
            }),
        }
    }

    fn parse_struct(&mut self) -> Result<StructDef, FrontendError> {
        let loc = self.loc();
        self.expect(Tok::KwStruct)?;
        let (name, _) = self.expect_ident()?;
        self.expect(Tok::LBrace)?;
        let mut fields = Vec::new();
        while *self.peek() != Tok::RBrace {
            let ty = self.parse_type()?;
            let (field, floc) = self.expect_ident()?;
            if fields.iter().any(|(f, _)| *f == field) {
                return Err(FrontendError::Resolve {
                    loc: floc,
                    message: format!("duplicate field `{}` in struct `{}`", field, name),
                });
            }
            self.expect(Tok::Semi)?;
            fields.push((field, ty));
        }
        self.expect(Tok::RBrace)?;
        self.expect(Tok::Semi)?;
        if fields.is_empty() {
            return Err(FrontendError::Syntax {
                loc,
                message: format!("struct `{}` has no fields", name),
            });
        }
        Ok(StructDef { name, fields, loc })
    }

    fn parse_func(&mut self, world_tag: WorldTag) -> Result<FuncDef, FrontendError> {
        let return_type = self.parse_type()?;
        let (name, loc) = self.expect_ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let ty = self.parse_type()?;
                let (pname, ploc) = self.expect_ident()?;
                if params.iter().any(|(p, _)| *p == pname) {
                    return Err(FrontendError::Resolve {
                        loc: ploc,
                        message: format!("duplicate parameter `{}` in `{}`", pname, name),
                    });
                }
                params.push((pname, ty));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = self.parse_block()?;
        Ok(FuncDef {
            name,
            params,
            return_type,
            body,
            world_tag,
            loc,
            file: self.file.clone(),
        })
    }

    fn parse_program(&mut self) -> Result<Program, FrontendError> {
        let mut program = Program::default();
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::VendorAnnot => {
                    let annot = self.bump();
                    // The annotation must sit on the line immediately above
                    // the definition it tags.
                    let next_line = self.loc().line;
                    if next_line != annot.loc.line + 1 {
                        return Err(FrontendError::Syntax {
                            loc: annot.loc,
                            message: "`// @vendor` must immediately precede a function definition"
                                .into(),
                        });
                    }
                    let func = self.parse_func(WorldTag::Vendor)?;
                    program.functions.push(func);
                }
                Tok::KwStruct if *self.peek2() != Tok::Star => {
                    // Distinguish `struct S { ... };` from `struct S *` return types.
                    let save = self.pos;
                    self.bump();
                    let is_def = matches!(self.peek2(), Tok::LBrace)
                        || (matches!(self.peek(), Tok::Ident(_)) && *self.peek2() == Tok::LBrace);
                    self.pos = save;
                    if is_def {
                        program.structs.push(self.parse_struct()?);
                    } else {
                        let func = self.parse_func(WorldTag::Client)?;
                        program.functions.push(func);
                    }
                }
                _ => {
                    let func = self.parse_func(WorldTag::Client)?;
                    program.functions.push(func);
                }
            }
        }
        Ok(program)
    }
}

/// Parse one MiniC translation unit and run the resolve checks.
pub fn parse(source_text: &str, filename: &str) -> Result<Program, FrontendError> {
    let toks = lex(source_text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        file: filename.to_string(),
    };
    let mut program = parser.parse_program()?;
    program
        .sources
        .insert(filename.to_string(), source_text.to_string());
    resolve(&program)?;
    Ok(program)
}

/// Post-parse checks: unique function names, resolvable callees, known
/// struct fields, and no dereference of declared non-pointer variables.
pub fn resolve(program: &Program) -> Result<(), FrontendError> {
    let mut seen = BTreeMap::new();
    for func in &program.functions {
        if let Some(prev) = seen.insert(func.name.clone(), func.loc) {
            return Err(FrontendError::Resolve {
                loc: func.loc,
                message: format!(
                    "function `{}` defined twice (first at {})",
                    func.name, prev
                ),
            });
        }
    }

    let field_known = |field: &str| {
        program
            .structs
            .iter()
            .any(|s| s.fields.iter().any(|(f, _)| f == field))
    };

    for func in &program.functions {
        let param_types: BTreeMap<&str, &MiniType> = func
            .params
            .iter()
            .map(|(n, t)| (n.as_str(), t))
            .collect();
        let check_deref = |name: &str, loc: Loc| -> Result<(), FrontendError> {
            if let Some(ty) = param_types.get(name) {
                if !ty.is_pointer() {
                    return Err(FrontendError::Resolve {
                        loc,
                        message: format!(
                            "`{}` has type `{}` and cannot be dereferenced",
                            name, ty
                        ),
                    });
                }
            }
            Ok(())
        };
        let check_field = |name: &str, field: &str, loc: Loc| -> Result<(), FrontendError> {
            if let Some(MiniType::StructPtr(sname)) = param_types.get(name) {
                let st = program.structs.iter().find(|s| &s.name == sname);
                match st {
                    Some(st) if st.fields.iter().any(|(f, _)| f == field) => return Ok(()),
                    Some(_) => {
                        return Err(FrontendError::Resolve {
                            loc,
                            message: format!("struct `{}` has no field `{}`", sname, field),
                        })
                    }
                    None => {
                        return Err(FrontendError::Resolve {
                            loc,
                            message: format!("unknown struct `{}`", sname),
                        })
                    }
                }
            }
            if !program.structs.is_empty() && !field_known(field) {
                return Err(FrontendError::Resolve {
                    loc,
                    message: format!("field `{}` is not declared by any struct", field),
                });
            }
            Ok(())
        };

        let mut stack: Vec<&Stmt> = func.body.iter().collect();
        while let Some(stmt) = stack.pop() {
            match &stmt.kind {
                StmtKind::Store(x, _) | StmtKind::Load(_, x) => check_deref(x, stmt.loc)?,
                StmtKind::FieldStore(x, f, _) => {
                    check_deref(x, stmt.loc)?;
                    check_field(x, f, stmt.loc)?;
                }
                StmtKind::FieldLoad(_, y, f) => {
                    check_deref(y, stmt.loc)?;
                    check_field(y, f, stmt.loc)?;
                }
                StmtKind::Call(_, callee, _) => {
                    if program.function(callee).is_none() && !is_builtin(callee) {
                        return Err(FrontendError::Resolve {
                            loc: stmt.loc,
                            message: format!("call to unknown function `{}`", callee),
                        });
                    }
                }
                StmtKind::If(_, t, e) => {
                    stack.extend(t.iter());
                    if let Some(e) = e {
                        stack.extend(e.iter());
                    }
                }
                StmtKind::While(_, b) => stack.extend(b.iter()),
                _ => {}
            }
        }
    }
    Ok(())
}
