//! Deterministic big-step interpreter with a step budget.
//!
//! The interpreter owns an isolated environment per run: no file, clock,
//! environment, or network access, and no state shared across runs. Every
//! failure becomes a status code; nothing panics on corpus input.
//!
//! Semantics follow the source dialect: `/` always yields a decimal, `//`
//! floors, `%` takes the divisor's sign, and integers are arbitrary
//! precision with a size guard so runaway growth is caught instead of
//! exhausting memory.

use super::value::Value;
use crate::lang::{BinOp, BoolOp, CmpOp, Expr, FunctionDef, Number, Program, Stmt, StmtKind, UnaryOp};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::HashMap;

/// Default step budget: generous for corpus programs (well under 10^3
/// steps) while stopping perturbation-induced loop blowups.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Integers larger than this many bits abort the run.
const MAX_INT_BITS: u64 = 1_000_000;

/// Call nesting beyond this aborts the run (self-recursive corpus programs
/// would otherwise overflow the host stack).
const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Runtime(String),
    BudgetExceeded,
}

impl RunError {
    fn runtime(msg: impl Into<String>) -> Self {
        RunError::Runtime(msg.into())
    }
}

enum Flow {
    Normal,
    Returned(Value),
}

/// Result of a successful run: the resolved answer and steps consumed.
pub struct RunOutput {
    pub answer: Value,
    pub steps: u64,
}

pub fn run_program(program: &Program, budget: u64) -> Result<RunOutput, (RunError, u64)> {
    let mut interp = Interp::new(program, budget);
    match interp.run() {
        Ok(answer) => Ok(RunOutput {
            answer,
            steps: interp.steps,
        }),
        Err(e) => Err((e, interp.steps)),
    }
}

struct Interp<'p> {
    functions: HashMap<&'p str, &'p FunctionDef>,
    program: &'p Program,
    globals: HashMap<String, Value>,
    budget: u64,
    steps: u64,
    depth: usize,
    printed: Option<Value>,
    epilogue_call: Option<Value>,
}

impl<'p> Interp<'p> {
    fn new(program: &'p Program, budget: u64) -> Self {
        let mut functions = HashMap::new();
        for f in &program.functions {
            functions.insert(f.name.as_str(), f);
        }
        Interp {
            functions,
            program,
            globals: HashMap::new(),
            budget,
            steps: 0,
            depth: 0,
            printed: None,
            epilogue_call: None,
        }
    }

    fn run(&mut self) -> Result<Value, RunError> {
        let epilogue: Vec<&Stmt> = self.program.epilogue.iter().collect();
        let mut scope = Scope::Global;
        for stmt in &epilogue {
            match self.exec_stmt(stmt, &mut scope)? {
                Flow::Normal => {}
                Flow::Returned(_) => {
                    return Err(RunError::runtime("return outside of a function"));
                }
            }
        }
        if let Some(v) = self.printed.take() {
            return Ok(v);
        }
        if let Some(v) = self.epilogue_call.take() {
            return Ok(v);
        }
        if self.program.epilogue.is_empty() {
            if let Some(last) = self.program.functions.last() {
                let name = last.name.clone();
                return self.call_function(&name, vec![]);
            }
        }
        Err(RunError::runtime("program produced no answer"))
    }

    fn charge(&mut self) -> Result<(), RunError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(RunError::BudgetExceeded)
        } else {
            Ok(())
        }
    }

    fn exec_block(&mut self, stmts: &[Stmt], scope: &mut Scope) -> Result<Flow, RunError> {
        for stmt in stmts {
            match self.exec_stmt(stmt, scope)? {
                Flow::Normal => {}
                returned => return Ok(returned),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, stmt: &Stmt, scope: &mut Scope) -> Result<Flow, RunError> {
        self.charge()?;
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, scope)?;
                self.store(target, v, scope);
                Ok(Flow::Normal)
            }
            StmtKind::AugAssign { target, op, value } => {
                let current = self
                    .lookup(target, scope)
                    .ok_or_else(|| RunError::runtime(format!("undefined name `{}`", target)))?;
                let rhs = self.eval(value, scope)?;
                let v = binary_op(*op, current, rhs)?;
                self.store(target, v, scope);
                Ok(Flow::Normal)
            }
            StmtKind::Return { value } => {
                let v = match value {
                    Some(e) => self.eval(e, scope)?,
                    None => {
                        return Err(RunError::runtime("bare return without a value"));
                    }
                };
                Ok(Flow::Returned(v))
            }
            StmtKind::Expr { value } => {
                self.eval(value, scope)?;
                Ok(Flow::Normal)
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let c = self.eval(cond, scope)?;
                if c.truthy() {
                    self.exec_block(then_body, scope)
                } else {
                    self.exec_block(else_body, scope)
                }
            }
            StmtKind::ForRange {
                var,
                start,
                stop,
                step,
                body,
            } => {
                let start = match start {
                    Some(e) => self.eval_int(e, scope)?,
                    None => BigInt::zero(),
                };
                let stop = self.eval_int(stop, scope)?;
                let step = match step {
                    Some(e) => self.eval_int(e, scope)?,
                    None => BigInt::from(1),
                };
                if step.is_zero() {
                    return Err(RunError::runtime("range() step must not be zero"));
                }
                let mut i = start;
                loop {
                    let more = if step.is_positive() {
                        i < stop
                    } else {
                        i > stop
                    };
                    if !more {
                        break;
                    }
                    self.charge()?;
                    self.store(var, Value::Int(i.clone()), scope);
                    match self.exec_block(body, scope)? {
                        Flow::Normal => {}
                        returned => return Ok(returned),
                    }
                    i += &step;
                }
                Ok(Flow::Normal)
            }
        }
    }

    fn eval_int(&mut self, expr: &Expr, scope: &mut Scope) -> Result<BigInt, RunError> {
        match self.eval(expr, scope)? {
            Value::Int(i) => Ok(i),
            other => Err(RunError::runtime(format!(
                "range() expects integer bounds, got {}",
                other.type_name()
            ))),
        }
    }

    fn eval(&mut self, expr: &Expr, scope: &mut Scope) -> Result<Value, RunError> {
        match expr {
            Expr::Num(lit) => Ok(match &lit.value {
                Number::Int(i) => Value::Int(i.clone()),
                Number::Float(f) => Value::Float(*f),
            }),
            Expr::Str(s) => Ok(Value::Str(s.clone())),
            Expr::Name(name) => self
                .lookup(name, scope)
                .ok_or_else(|| RunError::runtime(format!("undefined name `{}`", name))),
            Expr::Unary { op, operand } => {
                let v = self.eval(operand, scope)?;
                match op {
                    UnaryOp::Neg => match v {
                        Value::Int(i) => Ok(Value::Int(-i)),
                        Value::Float(f) => Ok(Value::Float(-f)),
                        Value::Bool(b) => Ok(Value::Int(BigInt::from(if b { -1 } else { 0 }))),
                        other => Err(RunError::runtime(format!(
                            "cannot negate {}",
                            other.type_name()
                        ))),
                    },
                    UnaryOp::Not => Ok(Value::Bool(!v.truthy())),
                }
            }
            Expr::Binary { op, left, right } => {
                let a = self.eval(left, scope)?;
                let b = self.eval(right, scope)?;
                binary_op(*op, a, b)
            }
            Expr::Compare { op, left, right } => {
                let a = self.eval(left, scope)?;
                let b = self.eval(right, scope)?;
                compare_op(*op, &a, &b)
            }
            Expr::Bool { op, left, right } => {
                let a = self.eval(left, scope)?;
                match op {
                    BoolOp::And => {
                        if a.truthy() {
                            self.eval(right, scope)
                        } else {
                            Ok(a)
                        }
                    }
                    BoolOp::Or => {
                        if a.truthy() {
                            Ok(a)
                        } else {
                            self.eval(right, scope)
                        }
                    }
                }
            }
            Expr::Call { func, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, scope)?);
                }
                self.call(func, values, scope)
            }
        }
    }

    fn call(&mut self, func: &str, args: Vec<Value>, scope: &mut Scope) -> Result<Value, RunError> {
        self.charge()?;
        if self.functions.contains_key(func) {
            let at_epilogue = matches!(scope, Scope::Global);
            let result = self.call_function(func, args)?;
            if at_epilogue {
                self.epilogue_call = Some(result.clone());
            }
            return Ok(result);
        }
        self.call_builtin(func, args)
    }

    fn call_function(&mut self, name: &str, args: Vec<Value>) -> Result<Value, RunError> {
        let func = *self
            .functions
            .get(name)
            .ok_or_else(|| RunError::runtime(format!("undefined function `{}`", name)))?;
        if args.len() != func.params.len() {
            return Err(RunError::runtime(format!(
                "{}() takes {} arguments, got {}",
                name,
                func.params.len(),
                args.len()
            )));
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(RunError::runtime("maximum call depth exceeded"));
        }
        self.depth += 1;
        let mut locals: HashMap<String, Value> = HashMap::new();
        for (param, arg) in func.params.iter().zip(args) {
            locals.insert(param.clone(), arg);
        }
        let mut scope = Scope::Local(locals);
        let flow = self.exec_block(&func.body, &mut scope);
        self.depth -= 1;
        match flow? {
            Flow::Returned(v) => Ok(v),
            Flow::Normal => Err(RunError::runtime(format!(
                "{}() finished without returning a value",
                name
            ))),
        }
    }

    fn call_builtin(&mut self, func: &str, args: Vec<Value>) -> Result<Value, RunError> {
        match func {
            "print" => {
                let value = match args.len() {
                    0 => Value::Str(String::new()),
                    1 => args.into_iter().next().unwrap(),
                    _ => Value::Str(
                        args.iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(" "),
                    ),
                };
                self.printed = Some(value.clone());
                Ok(value)
            }
            "abs" => {
                let [v] = take_args::<1>(func, args)?;
                match v {
                    Value::Int(i) => Ok(Value::Int(i.abs())),
                    Value::Float(f) => Ok(Value::Float(f.abs())),
                    other => Err(RunError::runtime(format!(
                        "abs() expects a number, got {}",
                        other.type_name()
                    ))),
                }
            }
            "min" | "max" => {
                if args.len() < 2 {
                    return Err(RunError::runtime(format!(
                        "{}() expects at least 2 arguments",
                        func
                    )));
                }
                let mut best: Option<Value> = None;
                for v in args {
                    if !matches!(v, Value::Int(_) | Value::Float(_)) {
                        return Err(RunError::runtime(format!(
                            "{}() expects numbers, got {}",
                            func,
                            v.type_name()
                        )));
                    }
                    best = Some(match best {
                        None => v,
                        Some(b) => {
                            let take_new = match numeric_cmp(&v, &b) {
                                Some(ord) => {
                                    if func == "min" {
                                        ord == std::cmp::Ordering::Less
                                    } else {
                                        ord == std::cmp::Ordering::Greater
                                    }
                                }
                                None => false,
                            };
                            if take_new {
                                v
                            } else {
                                b
                            }
                        }
                    });
                }
                Ok(best.expect("at least two arguments"))
            }
            "round" => match args.len() {
                1 => {
                    let [v] = take_args::<1>(func, args)?;
                    match v {
                        Value::Int(i) => Ok(Value::Int(i)),
                        Value::Float(f) => {
                            if !f.is_finite() || f.abs() >= 1e18 {
                                return Err(RunError::runtime("round() argument out of range"));
                            }
                            // Host-language semantics: ties to even.
                            Ok(Value::Int(BigInt::from(round_ties_even(f) as i128)))
                        }
                        other => Err(RunError::runtime(format!(
                            "round() expects a number, got {}",
                            other.type_name()
                        ))),
                    }
                }
                2 => {
                    let [v, nd] = take_args::<2>(func, args)?;
                    let digits = match nd {
                        Value::Int(i) => i.to_i32().filter(|d| d.abs() <= 15).ok_or_else(|| {
                            RunError::runtime("round() digit count out of range")
                        })?,
                        other => {
                            return Err(RunError::runtime(format!(
                                "round() digits must be an integer, got {}",
                                other.type_name()
                            )))
                        }
                    };
                    let scale = 10f64.powi(digits);
                    match v {
                        Value::Int(i) if digits >= 0 => Ok(Value::Int(i)),
                        Value::Int(i) => {
                            let f = i.to_f64().unwrap_or(f64::INFINITY);
                            Ok(Value::Int(BigInt::from(
                                (round_ties_even(f * scale) / scale) as i128,
                            )))
                        }
                        Value::Float(f) => Ok(Value::Float(round_ties_even(f * scale) / scale)),
                        other => Err(RunError::runtime(format!(
                            "round() expects a number, got {}",
                            other.type_name()
                        ))),
                    }
                }
                n => Err(RunError::runtime(format!(
                    "round() takes 1 or 2 arguments, got {}",
                    n
                ))),
            },
            "int" => {
                let [v] = take_args::<1>(func, args)?;
                match v {
                    Value::Int(i) => Ok(Value::Int(i)),
                    Value::Bool(b) => Ok(Value::Int(BigInt::from(if b { 1 } else { 0 }))),
                    Value::Float(f) => {
                        if !f.is_finite() || f.abs() >= 1e18 {
                            return Err(RunError::runtime("int() argument out of range"));
                        }
                        Ok(Value::Int(BigInt::from(f.trunc() as i128)))
                    }
                    Value::Str(s) => s
                        .trim()
                        .parse::<BigInt>()
                        .map(Value::Int)
                        .map_err(|_| RunError::runtime(format!("int() cannot parse {:?}", s))),
                    other => Err(RunError::runtime(format!(
                        "int() expects a number or string, got {}",
                        other.type_name()
                    ))),
                }
            }
            "float" => {
                let [v] = take_args::<1>(func, args)?;
                match v {
                    Value::Int(i) => Ok(Value::Float(i.to_f64().unwrap_or(f64::INFINITY))),
                    Value::Float(f) => Ok(Value::Float(f)),
                    Value::Bool(b) => Ok(Value::Float(if b { 1.0 } else { 0.0 })),
                    Value::Str(s) => s
                        .trim()
                        .parse::<f64>()
                        .map(Value::Float)
                        .map_err(|_| RunError::runtime(format!("float() cannot parse {:?}", s))),
                    other => Err(RunError::runtime(format!(
                        "float() expects a number or string, got {}",
                        other.type_name()
                    ))),
                }
            }
            "range" => {
                let ints: Vec<BigInt> = args
                    .into_iter()
                    .map(|v| match v {
                        Value::Int(i) => Ok(i),
                        other => Err(RunError::runtime(format!(
                            "range() expects integers, got {}",
                            other.type_name()
                        ))),
                    })
                    .collect::<Result<_, _>>()?;
                let (start, stop, step) = match ints.len() {
                    1 => (BigInt::zero(), ints[0].clone(), BigInt::from(1)),
                    2 => (ints[0].clone(), ints[1].clone(), BigInt::from(1)),
                    3 => (ints[0].clone(), ints[1].clone(), ints[2].clone()),
                    n => {
                        return Err(RunError::runtime(format!(
                            "range() takes 1 to 3 arguments, got {}",
                            n
                        )))
                    }
                };
                if step.is_zero() {
                    return Err(RunError::runtime("range() step must not be zero"));
                }
                Ok(Value::Range { start, stop, step })
            }
            "sum" => {
                let [v] = take_args::<1>(func, args)?;
                match v {
                    Value::Range { start, stop, step } => {
                        let mut total = BigInt::zero();
                        let mut i = start;
                        loop {
                            let more = if step.is_positive() { i < stop } else { i > stop };
                            if !more {
                                break;
                            }
                            self.charge()?;
                            total += &i;
                            i += &step;
                        }
                        Ok(Value::Int(total))
                    }
                    other => Err(RunError::runtime(format!(
                        "sum() expects a range, got {}",
                        other.type_name()
                    ))),
                }
            }
            other => Err(RunError::runtime(format!("undefined function `{}`", other))),
        }
    }

    fn lookup(&self, name: &str, scope: &Scope) -> Option<Value> {
        if let Scope::Local(locals) = scope {
            if let Some(v) = locals.get(name) {
                return Some(v.clone());
            }
        }
        self.globals.get(name).cloned()
    }

    fn store(&mut self, name: &str, value: Value, scope: &mut Scope) {
        match scope {
            Scope::Local(locals) => {
                locals.insert(name.to_string(), value);
            }
            Scope::Global => {
                self.globals.insert(name.to_string(), value);
            }
        }
    }
}

enum Scope {
    Global,
    Local(HashMap<String, Value>),
}

fn take_args<const N: usize>(func: &str, args: Vec<Value>) -> Result<[Value; N], RunError> {
    let len = args.len();
    args.try_into().map_err(|_| {
        RunError::runtime(format!("{}() takes {} arguments, got {}", func, N, len))
    })
}

fn round_ties_even(f: f64) -> f64 {
    let rounded = f.round();
    if (f - f.trunc()).abs() == 0.5 {
        // Exactly halfway: round to the even neighbor.
        let below = f.floor();
        let above = f.ceil();
        if (below / 2.0).fract() == 0.0 {
            below
        } else {
            above
        }
    } else {
        rounded
    }
}

fn guard_size(i: BigInt) -> Result<Value, RunError> {
    if i.bits() > MAX_INT_BITS {
        Err(RunError::runtime("integer result too large"))
    } else {
        Ok(Value::Int(i))
    }
}

fn binary_op(op: BinOp, a: Value, b: Value) -> Result<Value, RunError> {
    use Value::*;
    // Booleans participate in arithmetic as 0/1.
    let a = if let Bool(x) = a { Int(BigInt::from(x as i64)) } else { a };
    let b = if let Bool(x) = b { Int(BigInt::from(x as i64)) } else { b };
    match (a, b) {
        (Int(x), Int(y)) => int_binary(op, x, y),
        (Int(x), Float(y)) => float_binary(op, x.to_f64().unwrap_or(f64::INFINITY), y),
        (Float(x), Int(y)) => float_binary(op, x, y.to_f64().unwrap_or(f64::INFINITY)),
        (Float(x), Float(y)) => float_binary(op, x, y),
        (Str(x), Str(y)) if op == BinOp::Add => Ok(Str(format!("{}{}", x, y))),
        (a, b) => Err(RunError::runtime(format!(
            "unsupported operand types for {}: {} and {}",
            op.symbol(),
            a.type_name(),
            b.type_name()
        ))),
    }
}

fn int_binary(op: BinOp, x: BigInt, y: BigInt) -> Result<Value, RunError> {
    match op {
        BinOp::Add => guard_size(x + y),
        BinOp::Sub => guard_size(x - y),
        BinOp::Mul => guard_size(x * y),
        BinOp::Div => {
            if y.is_zero() {
                return Err(RunError::runtime("division by zero"));
            }
            Ok(Value::Float(
                x.to_f64().unwrap_or(f64::INFINITY) / y.to_f64().unwrap_or(f64::INFINITY),
            ))
        }
        BinOp::FloorDiv => {
            if y.is_zero() {
                return Err(RunError::runtime("integer division by zero"));
            }
            Ok(Value::Int(x.div_floor(&y)))
        }
        BinOp::Mod => {
            if y.is_zero() {
                return Err(RunError::runtime("integer modulo by zero"));
            }
            Ok(Value::Int(x.mod_floor(&y)))
        }
        BinOp::Pow => {
            if y.is_negative() {
                let base = x.to_f64().unwrap_or(f64::INFINITY);
                if base == 0.0 {
                    return Err(RunError::runtime("zero to a negative power"));
                }
                return Ok(Value::Float(base.powf(y.to_f64().unwrap_or(f64::NEG_INFINITY))));
            }
            let exp = y
                .to_u64()
                .ok_or_else(|| RunError::runtime("exponent too large"))?;
            if exp.saturating_mul(x.bits().max(1)) > MAX_INT_BITS {
                return Err(RunError::runtime("integer result too large"));
            }
            let exp_u32 =
                u32::try_from(exp).map_err(|_| RunError::runtime("exponent too large"))?;
            guard_size(x.pow(exp_u32))
        }
    }
}

fn float_binary(op: BinOp, x: f64, y: f64) -> Result<Value, RunError> {
    let v = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return Err(RunError::runtime("division by zero"));
            }
            x / y
        }
        BinOp::FloorDiv => {
            if y == 0.0 {
                return Err(RunError::runtime("division by zero"));
            }
            (x / y).floor()
        }
        BinOp::Mod => {
            if y == 0.0 {
                return Err(RunError::runtime("modulo by zero"));
            }
            // Result carries the divisor's sign.
            x - y * (x / y).floor()
        }
        BinOp::Pow => {
            if x == 0.0 && y < 0.0 {
                return Err(RunError::runtime("zero to a negative power"));
            }
            x.powf(y)
        }
    };
    Ok(Value::Float(v))
}

fn numeric_cmp(a: &Value, b: &Value) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Int(x), Value::Float(y)) => x.to_f64().unwrap_or(f64::INFINITY).partial_cmp(y),
        (Value::Float(x), Value::Int(y)) => x.partial_cmp(&y.to_f64().unwrap_or(f64::INFINITY)),
        (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
        _ => None,
    }
}

fn compare_op(op: CmpOp, a: &Value, b: &Value) -> Result<Value, RunError> {
    use std::cmp::Ordering;
    // Equality between unrelated types is a plain false, as in the host
    // language; ordering between them is an error.
    let ord = match (a, b) {
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(y)),
        (Value::Bool(x), _) => {
            return compare_op(op, &Value::Int(BigInt::from(*x as i64)), b);
        }
        (_, Value::Bool(y)) => {
            return compare_op(op, a, &Value::Int(BigInt::from(*y as i64)));
        }
        _ => numeric_cmp(a, b),
    };
    match ord {
        Some(ord) => {
            let result = match op {
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Eq => ord == Ordering::Equal,
                CmpOp::Ne => ord != Ordering::Equal,
                CmpOp::Ge => ord != Ordering::Less,
                CmpOp::Gt => ord == Ordering::Greater,
            };
            Ok(Value::Bool(result))
        }
        None => match op {
            CmpOp::Eq => Ok(Value::Bool(false)),
            CmpOp::Ne => Ok(Value::Bool(true)),
            _ => Err(RunError::runtime(format!(
                "cannot order {} and {}",
                a.type_name(),
                b.type_name()
            ))),
        },
    }
}
