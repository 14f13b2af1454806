//! Deterministic canonical layout printer.
//!
//! Layout rules: 4-space indents, one statement per line, single spaces
//! around binary operators, minimal parentheses, no trailing whitespace,
//! one blank line after each function, no trailing newline. `parse`
//! composed with `unparse` is the identity on ASTs, which also makes the
//! printed form injective over structurally distinct programs.

use super::ast::*;

pub fn unparse(program: &Program) -> String {
    let mut lines: Vec<String> = Vec::new();
    for func in &program.functions {
        lines.push(format!("def {}({}):", func.name, func.params.join(", ")));
        if let Some(doc) = &func.docstring {
            lines.push(format!("    \"\"\"{}\"\"\"", escape_docstring(doc)));
        }
        for stmt in &func.body {
            emit_stmt(stmt, 1, &mut lines);
        }
        lines.push(String::new());
    }
    for stmt in &program.epilogue {
        emit_stmt(stmt, 0, &mut lines);
    }
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

fn indent(level: usize) -> String {
    "    ".repeat(level)
}

fn emit_stmt(stmt: &Stmt, level: usize, lines: &mut Vec<String>) {
    let pad = indent(level);
    match &stmt.kind {
        StmtKind::Assign { target, value } => {
            lines.push(format!("{}{} = {}", pad, target, expr_text(value, 0)));
        }
        StmtKind::AugAssign { target, op, value } => {
            lines.push(format!(
                "{}{} {}= {}",
                pad,
                target,
                op.symbol(),
                expr_text(value, 0)
            ));
        }
        StmtKind::Return { value } => match value {
            Some(e) => lines.push(format!("{}return {}", pad, expr_text(e, 0))),
            None => lines.push(format!("{}return", pad)),
        },
        StmtKind::Expr { value } => {
            lines.push(format!("{}{}", pad, expr_text(value, 0)));
        }
        StmtKind::ForRange {
            var,
            start,
            stop,
            step,
            body,
        } => {
            let range_args = match (start, step) {
                (None, None) => expr_text(stop, 0),
                (Some(a), None) => format!("{}, {}", expr_text(a, 0), expr_text(stop, 0)),
                (Some(a), Some(s)) => format!(
                    "{}, {}, {}",
                    expr_text(a, 0),
                    expr_text(stop, 0),
                    expr_text(s, 0)
                ),
                // A step without a start cannot come from the parser; print
                // the 3-arg form with an explicit 0 to stay parseable.
                (None, Some(s)) => format!("0, {}, {}", expr_text(stop, 0), expr_text(s, 0)),
            };
            lines.push(format!("{}for {} in range({}):", pad, var, range_args));
            for s in body {
                emit_stmt(s, level + 1, lines);
            }
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => emit_if(cond, then_body, else_body, level, "if", lines),
    }
}

fn emit_if(
    cond: &Expr,
    then_body: &[Stmt],
    else_body: &[Stmt],
    level: usize,
    keyword: &str,
    lines: &mut Vec<String>,
) {
    let pad = indent(level);
    lines.push(format!("{}{} {}:", pad, keyword, expr_text(cond, 0)));
    for s in then_body {
        emit_stmt(s, level + 1, lines);
    }
    match else_body {
        [] => {}
        [Stmt {
            kind:
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                },
            ..
        }] => emit_if(cond, then_body, else_body, level, "elif", lines),
        _ => {
            lines.push(format!("{}else:", pad));
            for s in else_body {
                emit_stmt(s, level + 1, lines);
            }
        }
    }
}

// Precedence levels, loosest to tightest. An operand is parenthesized when
// its own level is below the minimum its position requires.
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_CMP: u8 = 4;
const PREC_ADD: u8 = 5;
const PREC_MUL: u8 = 6;
const PREC_NEG: u8 = 7;
const PREC_POW: u8 = 8;
const PREC_ATOM: u8 = 9;

fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Bool { op: BoolOp::Or, .. } => PREC_OR,
        Expr::Bool {
            op: BoolOp::And, ..
        } => PREC_AND,
        Expr::Unary {
            op: UnaryOp::Not, ..
        } => PREC_NOT,
        Expr::Compare { .. } => PREC_CMP,
        Expr::Binary { op, .. } => match op {
            BinOp::Add | BinOp::Sub => PREC_ADD,
            BinOp::Mul | BinOp::Div | BinOp::FloorDiv | BinOp::Mod => PREC_MUL,
            BinOp::Pow => PREC_POW,
        },
        Expr::Unary {
            op: UnaryOp::Neg, ..
        } => PREC_NEG,
        Expr::Num(_) | Expr::Str(_) | Expr::Name(_) | Expr::Call { .. } => PREC_ATOM,
    }
}

fn expr_text(expr: &Expr, min_prec: u8) -> String {
    let prec = precedence(expr);
    let text = match expr {
        Expr::Num(lit) => lit.raw.clone(),
        Expr::Str(s) => format!("\"{}\"", escape_string(s)),
        Expr::Name(n) => n.clone(),
        Expr::Call { func, args } => {
            let args: Vec<String> = args.iter().map(|a| expr_text(a, 0)).collect();
            format!("{}({})", func, args.join(", "))
        }
        Expr::Binary { op, left, right } => match op {
            BinOp::Pow => format!(
                "{} ** {}",
                expr_text(left, PREC_ATOM),
                expr_text(right, PREC_NEG)
            ),
            BinOp::Add | BinOp::Sub => format!(
                "{} {} {}",
                expr_text(left, PREC_ADD),
                op.symbol(),
                expr_text(right, PREC_ADD + 1)
            ),
            _ => format!(
                "{} {} {}",
                expr_text(left, PREC_MUL),
                op.symbol(),
                expr_text(right, PREC_MUL + 1)
            ),
        },
        Expr::Compare { op, left, right } => format!(
            "{} {} {}",
            expr_text(left, PREC_CMP + 1),
            op.symbol(),
            expr_text(right, PREC_CMP + 1)
        ),
        Expr::Bool { op, left, right } => {
            let prec = precedence(expr);
            format!(
                "{} {} {}",
                expr_text(left, prec),
                op.symbol(),
                expr_text(right, prec + 1)
            )
        }
        Expr::Unary { op, operand } => match op {
            UnaryOp::Neg => format!("-{}", expr_text(operand, PREC_NEG)),
            UnaryOp::Not => format!("not {}", expr_text(operand, PREC_NOT)),
        },
    };
    if prec < min_prec {
        format!("({})", text)
    } else {
        text
    }
}

fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}

fn escape_docstring(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            other => out.push(other),
        }
    }
    out
}
