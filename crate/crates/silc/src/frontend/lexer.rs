//! Hand-rolled lexer for MiniC. Comments are skipped except `// @vendor`,
//! which is surfaced to the parser as an annotation token so it can be
//! attached to the next function definition.

use super::ast::Loc;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    KwStruct,
    KwInt,
    KwVoid,
    KwPtr,
    KwMalloc,
    KwFree,
    KwIf,
    KwElse,
    KwWhile,
    KwReturn,
    KwNull,
    VendorAnnot,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Star,
    Assign,
    EqEq,
    NotEq,
    Arrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{}`", s),
            Tok::Int(v) => format!("integer `{}`", v),
            Tok::KwStruct => "`struct`".into(),
            Tok::KwInt => "`int`".into(),
            Tok::KwVoid => "`void`".into(),
            Tok::KwPtr => "`ptr`".into(),
            Tok::KwMalloc => "`malloc`".into(),
            Tok::KwFree => "`free`".into(),
            Tok::KwIf => "`if`".into(),
            Tok::KwElse => "`else`".into(),
            Tok::KwWhile => "`while`".into(),
            Tok::KwReturn => "`return`".into(),
            Tok::KwNull => "`NULL`".into(),
            Tok::VendorAnnot => "`// @vendor`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Star => "`*`".into(),
            Tok::Assign => "`=`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub loc: Loc,
}

pub fn lex(src: &str) -> Result<Vec<Spanned>, FrontendError> {
    let mut toks = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $loc:expr) => {
            toks.push(Spanned { tok: $tok, loc: $loc })
        };
    }

    while i < bytes.len() {
        let c = bytes[i];
        let loc = Loc::new(line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '/' if i + 1 < bytes.len() && bytes[i + 1] == '/' => {
                let mut j = i + 2;
                let mut comment = String::new();
                while j < bytes.len() && bytes[j] != '\n' {
                    comment.push(bytes[j]);
                    j += 1;
                }
                if comment.trim() == "@vendor" {
                    push!(Tok::VendorAnnot, loc);
                }
                col += (j - i) as u32;
                i = j;
            }
            '(' => {
                push!(Tok::LParen, loc);
                i += 1;
                col += 1;
            }
            ')' => {
                push!(Tok::RParen, loc);
                i += 1;
                col += 1;
            }
            '{' => {
                push!(Tok::LBrace, loc);
                i += 1;
                col += 1;
            }
            '}' => {
                push!(Tok::RBrace, loc);
                i += 1;
                col += 1;
            }
            '[' => {
                push!(Tok::LBracket, loc);
                i += 1;
                col += 1;
            }
            ']' => {
                push!(Tok::RBracket, loc);
                i += 1;
                col += 1;
            }
            ';' => {
                push!(Tok::Semi, loc);
                i += 1;
                col += 1;
            }
            ',' => {
                push!(Tok::Comma, loc);
                i += 1;
                col += 1;
            }
            '*' => {
                push!(Tok::Star, loc);
                i += 1;
                col += 1;
            }
            '=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '=' {
                    push!(Tok::EqEq, loc);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Assign, loc);
                    i += 1;
                    col += 1;
                }
            }
            '!' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '=' {
                    push!(Tok::NotEq, loc);
                    i += 2;
                    col += 2;
                } else {
                    return Err(FrontendError::Syntax {
                        loc,
                        message: "stray `!`".into(),
                    });
                }
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '>' {
                    push!(Tok::Arrow, loc);
                    i += 2;
                    col += 2;
                } else if i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    let mut j = i + 1;
                    let mut text = String::from("-");
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        text.push(bytes[j]);
                        j += 1;
                    }
                    let value: i64 = text.parse().map_err(|_| FrontendError::Syntax {
                        loc,
                        message: format!("invalid integer `{}`", text),
                    })?;
                    push!(Tok::Int(value), loc);
                    col += (j - i) as u32;
                    i = j;
                } else {
                    return Err(FrontendError::Syntax {
                        loc,
                        message: "stray `-`".into(),
                    });
                }
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                let mut text = String::new();
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    text.push(bytes[j]);
                    j += 1;
                }
                let value: i64 = text.parse().map_err(|_| FrontendError::Syntax {
                    loc,
                    message: format!("invalid integer `{}`", text),
                })?;
                push!(Tok::Int(value), loc);
                col += (j - i) as u32;
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                let mut text = String::new();
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == '_') {
                    text.push(bytes[j]);
                    j += 1;
                }
                let tok = match text.as_str() {
                    "struct" => Tok::KwStruct,
                    "int" => Tok::KwInt,
                    "void" => Tok::KwVoid,
                    "ptr" => Tok::KwPtr,
                    "malloc" => Tok::KwMalloc,
                    "free" => Tok::KwFree,
                    "if" => Tok::KwIf,
                    "else" => Tok::KwElse,
                    "while" => Tok::KwWhile,
                    "return" => Tok::KwReturn,
                    "NULL" => Tok::KwNull,
                    _ => Tok::Ident(text),
                };
                push!(tok, loc);
                col += (j - i) as u32;
                i = j;
            }
            other => {
                return Err(FrontendError::Syntax {
                    loc,
                    message: format!("unexpected character `{}`", other),
                });
            }
        }
    }
    toks.push(Spanned {
        tok: Tok::Eof,
        loc: Loc::new(line, col),
    });
    Ok(toks)
}
