//! Pretty-printer for MiniC. Output reparses to a structurally identical
//! program (locations aside).

use super::ast::*;

pub fn pretty_program(program: &Program) -> String {
    let mut out = String::new();
    for st in &program.structs {
        out.push_str(&format!("struct {} {{\n", st.name));
        for (field, ty) in &st.fields {
            out.push_str(&format!("  {} {};\n", ty, field));
        }
        out.push_str("};\n\n");
    }
    for func in &program.functions {
        if func.world_tag == WorldTag::Vendor {
            out.push_str("// @vendor\n");
        }
        let params: Vec<String> = func
            .params
            .iter()
            .map(|(name, ty)| format!("{} {}", ty, name))
            .collect();
        out.push_str(&format!(
            "{} {}({}) {{\n",
            func.return_type,
            func.name,
            params.join(", ")
        ));
        for stmt in &func.body {
            pretty_stmt(stmt, 1, &mut out);
        }
        out.push_str("}\n\n");
    }
    out
}

fn pretty_stmt(stmt: &Stmt, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match &stmt.kind {
        StmtKind::If(cond, then_block, else_block) => {
            out.push_str(&format!("{}if ({}) {{\n", pad, cond));
            for s in then_block {
                pretty_stmt(s, depth + 1, out);
            }
            if let Some(else_block) = else_block {
                out.push_str(&format!("{}}} else {{\n", pad));
                for s in else_block {
                    pretty_stmt(s, depth + 1, out);
                }
            }
            out.push_str(&format!("{}}}\n", pad));
        }
        StmtKind::While(cond, body) => {
            out.push_str(&format!("{}while ({}) {{\n", pad, cond));
            for s in body {
                pretty_stmt(s, depth + 1, out);
            }
            out.push_str(&format!("{}}}\n", pad));
        }
        _ => out.push_str(&format!("{}{};\n", pad, stmt.describe())),
    }
}
