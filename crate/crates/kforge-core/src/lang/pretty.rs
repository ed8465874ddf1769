//! Source renderer for kernel ASTs. `parse(pretty_print(parse(s)))` is a
//! fixpoint on AST structure.

use super::ast::*;
use super::KernelSource;
use std::fmt::Write;

pub fn pretty_print(k: &KernelSource) -> String {
    let mut out = String::new();
    let params = k
        .params
        .iter()
        .map(|p| format!("{}: {}", p.name, p.ty))
        .collect::<Vec<_>>()
        .join(", ");
    let _ = writeln!(out, "kernel {}({}) {{", k.name, params);
    for s in &k.body {
        stmt(&mut out, s, 1);
    }
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn stmt(out: &mut String, s: &AstStmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::VarDecl { name, ty, init } => {
            match ty {
                Some(t) => {
                    let _ = writeln!(out, "var {name}: {t} = {};", expr(init));
                }
                None => {
                    let _ = writeln!(out, "var {name} = {};", expr(init));
                }
            };
        }
        StmtKind::Assign { name, value } => {
            let _ = writeln!(out, "{name} = {};", expr(value));
        }
        StmtKind::ArrayStore {
            array,
            index,
            value,
        } => {
            let _ = writeln!(out, "{array}[{}] = {};", expr(index), expr(value));
        }
        StmtKind::ForRange {
            var,
            lo,
            hi,
            parallel,
            body,
        } => {
            let ann = if *parallel { "@parallel " } else { "" };
            let _ = writeln!(out, "{ann}for {var} in {}..{} {{", expr(lo), expr(hi));
            for b in body {
                stmt(out, b, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while {} {{", expr(cond));
            for b in body {
                stmt(out, b, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            let _ = writeln!(out, "if {} {{", expr(cond));
            for b in then_body {
                stmt(out, b, level + 1);
            }
            indent(out, level);
            if else_body.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                for b in else_body {
                    stmt(out, b, level + 1);
                }
                indent(out, level);
                out.push_str("}\n");
            }
        }
        StmtKind::Block(body) => {
            out.push_str("{\n");
            for b in body {
                stmt(out, b, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
    }
}

/// Renders with full parenthesization, so precedence survives re-parsing.
fn expr(e: &AstExpr) -> String {
    match &e.kind {
        ExprKind::IntLit(v) => format!("{v}"),
        ExprKind::FloatLit(v) => float_literal(*v),
        ExprKind::Pi => "PI".to_string(),
        ExprKind::Var(name) => name.clone(),
        ExprKind::ArrayLoad { array, index } => format!("{array}[{}]", expr(index)),
        ExprKind::Binary { op, lhs, rhs } => {
            format!("({} {} {})", expr(lhs), op.symbol(), expr(rhs))
        }
        ExprKind::Unary { op: UnOp::Neg, operand } => format!("(-{})", expr(operand)),
        ExprKind::Call { builtin, args } => {
            let args = args.iter().map(expr).collect::<Vec<_>>().join(", ");
            format!("{}({args})", builtin.name())
        }
        ExprKind::Convert { to, operand } => format!("{to}({})", expr(operand)),
    }
}

/// Shortest decimal that round-trips to the same f32, always with a decimal
/// point or exponent so it re-lexes as a float.
pub fn float_literal(v: f32) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains('E') {
        s
    } else {
        format!("{s}.0")
    }
}
