//! AST for the straight-line imperative solution dialect.
//!
//! The dialect is a closed subset of what appears in sampled solution
//! programs: function definitions with optional docstrings, assignments,
//! arithmetic, `if`/`for` control flow, a small builtin set, and a trailing
//! call/print epilogue. Anything outside the subset is rejected at parse
//! time so downstream stages can quarantine rather than crash.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use std::fmt;

/// Builtin callables that are part of the dialect and are never renamed
/// during canonicalization.
pub const BUILTINS: &[&str] = &[
    "min", "max", "abs", "round", "print", "range", "sum", "int", "float",
];

/// Returns true if `name` is one of the dialect builtins.
pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

/// A parsed solution program: function definitions followed by trailing
/// statements (the `x = f()` / `print(x)` epilogue). Equality is structural
/// and ignores diagnostics.
#[derive(Debug, Clone)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
    pub epilogue: Vec<Stmt>,
    /// Non-fatal findings attached at parse time (e.g. a function body with
    /// zero or multiple top-level returns).
    pub diagnostics: Vec<String>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.functions == other.functions && self.epilogue == other.epilogue
    }
}

#[derive(Debug, Clone)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub docstring: Option<String>,
    pub body: Vec<Stmt>,
    pub line: u32,
}

impl PartialEq for FunctionDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.docstring == other.docstring
            && self.body == other.body
    }
}

impl FunctionDef {
    /// Counts `return` statements at the top level of the body. The dialect
    /// expects exactly one; anything else is reported as a diagnostic, not
    /// an error.
    pub fn top_level_returns(&self) -> usize {
        self.body
            .iter()
            .filter(|s| matches!(s.kind, StmtKind::Return { .. }))
            .count()
    }
}

/// A statement with its source line. Equality is structural: the line is
/// carried for diagnostics only and does not participate in `==`.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub line: u32,
    pub kind: StmtKind,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Stmt {
    pub fn new(line: u32, kind: StmtKind) -> Self {
        Stmt { line, kind }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign {
        target: String,
        value: Expr,
    },
    AugAssign {
        target: String,
        op: BinOp,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    ForRange {
        var: String,
        start: Option<Expr>,
        stop: Expr,
        step: Option<Expr>,
        body: Vec<Stmt>,
    },
    Return {
        value: Option<Expr>,
    },
    Expr {
        value: Expr,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(NumLit),
    Str(String),
    Name(String),
    Binary {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Compare {
        op: CmpOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Bool {
        op: BoolOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Call {
        func: String,
        args: Vec<Expr>,
    },
}

/// A numeric literal. The raw spelling from the source is retained so that
/// unparsing reproduces it exactly ("2287720", "18.00").
#[derive(Debug, Clone, PartialEq)]
pub struct NumLit {
    pub raw: String,
    pub value: Number,
}

impl NumLit {
    /// Builds a literal whose raw text is the canonical spelling of `value`.
    pub fn from_number(value: Number) -> Self {
        NumLit {
            raw: value.to_literal(),
            value,
        }
    }
}

/// Numeric value of a literal: arbitrary-precision integer or binary float.
#[derive(Debug, Clone, PartialEq)]
pub enum Number {
    Int(BigInt),
    Float(f64),
}

impl Number {
    pub fn as_f64(&self) -> f64 {
        match self {
            Number::Int(i) => i.to_f64().unwrap_or(f64::INFINITY),
            Number::Float(f) => *f,
        }
    }

    /// True when the two values are numerically equal (5 == 5.0).
    pub fn numeric_eq(&self, other: &Number) -> bool {
        match (self, other) {
            (Number::Int(a), Number::Int(b)) => a == b,
            (Number::Float(a), Number::Float(b)) => a == b,
            (Number::Int(a), Number::Float(b)) | (Number::Float(b), Number::Int(a)) => {
                b.fract() == 0.0 && b.is_finite() && BigInt::from(*b as i64) == *a
            }
        }
    }

    /// Canonical source spelling: integers bare, floats always with a
    /// decimal point ("13.0", not "13").
    pub fn to_literal(&self) -> String {
        match self {
            Number::Int(i) => i.to_string(),
            Number::Float(f) => {
                if f.fract() == 0.0 && f.is_finite() && f.abs() < 1e16 {
                    format!("{:.1}", f)
                } else {
                    format!("{}", f)
                }
            }
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Int(i) => i.sign() == num_bigint::Sign::Minus,
            Number::Float(f) => *f < 0.0,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
}

impl BoolOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BoolOp::And => "and",
            BoolOp::Or => "or",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

impl Program {
    /// Walks every statement in source order (function bodies first, in
    /// definition order, then the epilogue), applying `f` to each.
    pub fn visit_stmts<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        fn walk<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
            for s in stmts {
                f(s);
                match &s.kind {
                    StmtKind::If {
                        then_body,
                        else_body,
                        ..
                    } => {
                        walk(then_body, f);
                        walk(else_body, f);
                    }
                    StmtKind::ForRange { body, .. } => walk(body, f),
                    _ => {}
                }
            }
        }
        for func in &self.functions {
            walk(&func.body, f);
        }
        walk(&self.epilogue, f);
    }

    /// Stable s-expression rendering for the `--dump-ast` debug flag.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::from("(program");
        for func in &self.functions {
            out.push_str(&format!(" (def {} (", func.name));
            out.push_str(&func.params.join(" "));
            out.push(')');
            if func.docstring.is_some() {
                out.push_str(" (doc)");
            }
            for s in &func.body {
                out.push(' ');
                out.push_str(&stmt_sexpr(s));
            }
            out.push(')');
        }
        for s in &self.epilogue {
            out.push(' ');
            out.push_str(&stmt_sexpr(s));
        }
        out.push(')');
        out
    }
}

fn stmt_sexpr(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Assign { target, value } => {
            format!("(assign {} {})", target, expr_sexpr(value))
        }
        StmtKind::AugAssign { target, op, value } => {
            format!("(augassign {} {} {})", op.symbol(), target, expr_sexpr(value))
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            let mut out = format!("(if {} (then", expr_sexpr(cond));
            for s in then_body {
                out.push(' ');
                out.push_str(&stmt_sexpr(s));
            }
            out.push_str(") (else");
            for s in else_body {
                out.push(' ');
                out.push_str(&stmt_sexpr(s));
            }
            out.push_str("))");
            out
        }
        StmtKind::ForRange {
            var,
            start,
            stop,
            step,
            body,
        } => {
            let mut out = format!("(for {} (range", var);
            if let Some(e) = start {
                out.push(' ');
                out.push_str(&expr_sexpr(e));
            }
            out.push(' ');
            out.push_str(&expr_sexpr(stop));
            if let Some(e) = step {
                out.push(' ');
                out.push_str(&expr_sexpr(e));
            }
            out.push(')');
            for s in body {
                out.push(' ');
                out.push_str(&stmt_sexpr(s));
            }
            out.push(')');
            out
        }
        StmtKind::Return { value } => match value {
            Some(e) => format!("(return {})", expr_sexpr(e)),
            None => "(return)".to_string(),
        },
        StmtKind::Expr { value } => format!("(expr {})", expr_sexpr(value)),
    }
}

fn expr_sexpr(e: &Expr) -> String {
    match e {
        Expr::Num(n) => format!("(num {})", n.raw),
        Expr::Str(s) => format!("(str {:?})", s),
        Expr::Name(n) => format!("(name {})", n),
        Expr::Binary { op, left, right } => {
            format!("({} {} {})", op.symbol(), expr_sexpr(left), expr_sexpr(right))
        }
        Expr::Compare { op, left, right } => {
            format!("({} {} {})", op.symbol(), expr_sexpr(left), expr_sexpr(right))
        }
        Expr::Bool { op, left, right } => {
            format!("({} {} {})", op.symbol(), expr_sexpr(left), expr_sexpr(right))
        }
        Expr::Unary { op, operand } => {
            let sym = match op {
                UnaryOp::Neg => "neg",
                UnaryOp::Not => "not",
            };
            format!("({} {})", sym, expr_sexpr(operand))
        }
        Expr::Call { func, args } => {
            let mut out = format!("(call {}", func);
            for a in args {
                out.push(' ');
                out.push_str(&expr_sexpr(a));
            }
            out.push(')');
            out
        }
    }
}
