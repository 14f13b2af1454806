//! Recursive-descent parser producing `Program` ASTs.

use super::ast::*;
use super::lexer::{lex, Kw, Tok, Token};
use super::LangError;
use num_bigint::BigInt;

pub fn parse(src: &str) -> Result<Program, LangError> {
    if src.trim().is_empty() {
        return Err(LangError::parse(1, 1, "empty source"));
    }
    let tokens = lex(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    parser.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn program(&mut self) -> Result<Program, LangError> {
        let mut functions = Vec::new();
        let mut epilogue: Vec<Stmt> = Vec::new();
        loop {
            self.skip_newlines();
            if self.check(&Tok::Eof) {
                break;
            }
            if self.check_kw(Kw::Def) {
                if !epilogue.is_empty() {
                    return Err(self.error_here("function definition after trailing statements"));
                }
                functions.push(self.function_def()?);
            } else {
                let mut stmts = self.statement()?;
                epilogue.append(&mut stmts);
            }
        }
        let mut diagnostics = Vec::new();
        for func in &functions {
            let returns = func.top_level_returns();
            if returns != 1 {
                diagnostics.push(format!(
                    "function `{}` has {} top-level return statements",
                    func.name, returns
                ));
            }
        }
        Ok(Program {
            functions,
            epilogue,
            diagnostics,
        })
    }

    fn function_def(&mut self) -> Result<FunctionDef, LangError> {
        let line = self.here().line;
        self.expect_kw(Kw::Def)?;
        let name = self.expect_ident("function name")?;
        self.expect(&Tok::LParen, "'(' after function name")?;
        let mut params = Vec::new();
        if !self.check(&Tok::RParen) {
            loop {
                params.push(self.expect_ident("parameter name")?);
                if self.eat(&Tok::Comma) {
                    if self.check(&Tok::RParen) {
                        break;
                    }
                    continue;
                }
                break;
            }
        }
        self.expect(&Tok::RParen, "')' after parameters")?;
        self.expect(&Tok::Colon, "':' after function signature")?;
        let mut body = self.block()?;
        let docstring = match body.first() {
            Some(Stmt {
                kind: StmtKind::Expr {
                    value: Expr::Str(_),
                },
                ..
            }) => {
                let first = body.remove(0);
                match first.kind {
                    StmtKind::Expr {
                        value: Expr::Str(s),
                    } => Some(s),
                    _ => unreachable!(),
                }
            }
            _ => None,
        };
        Ok(FunctionDef {
            name,
            params,
            docstring,
            body,
            line,
        })
    }

    /// A block is either an indented suite or inline simple statements
    /// separated by semicolons (`def f(): x = 2; return x`).
    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        if self.eat(&Tok::Newline) {
            self.expect(&Tok::Indent, "an indented block")?;
            let mut stmts = Vec::new();
            loop {
                self.skip_newlines();
                if self.eat(&Tok::Dedent) {
                    break;
                }
                if self.check(&Tok::Eof) {
                    break;
                }
                if self.check_kw(Kw::Def) {
                    return Err(self.error_here("nested function definition"));
                }
                let mut s = self.statement()?;
                stmts.append(&mut s);
            }
            if stmts.is_empty() {
                return Err(self.error_here("empty block"));
            }
            Ok(stmts)
        } else {
            // Inline suite: simple statements only.
            let mut stmts = Vec::new();
            loop {
                stmts.push(self.simple_statement()?);
                if self.eat(&Tok::Semi) {
                    if self.check(&Tok::Newline) || self.check(&Tok::Eof) {
                        break;
                    }
                    continue;
                }
                break;
            }
            if !self.eat(&Tok::Newline) && !self.check(&Tok::Eof) {
                return Err(self.error_here("expected end of line after inline statements"));
            }
            Ok(stmts)
        }
    }

    /// Parses one statement; compound statements return a single entry,
    /// inline simple-statement runs (`x = 1; y = 2`) return several.
    fn statement(&mut self) -> Result<Vec<Stmt>, LangError> {
        if self.check_kw(Kw::If) {
            return Ok(vec![self.if_statement()?]);
        }
        if self.check_kw(Kw::For) {
            return Ok(vec![self.for_statement()?]);
        }
        let mut stmts = vec![self.simple_statement()?];
        while self.eat(&Tok::Semi) {
            if self.check(&Tok::Newline) || self.check(&Tok::Eof) {
                break;
            }
            stmts.push(self.simple_statement()?);
        }
        if !self.eat(&Tok::Newline) && !self.check(&Tok::Eof) {
            return Err(self.error_here("expected end of line"));
        }
        Ok(stmts)
    }

    fn if_statement(&mut self) -> Result<Stmt, LangError> {
        let line = self.here().line;
        // `if` and `elif` parse identically.
        if !self.eat_kw(Kw::If) {
            self.expect_kw(Kw::Elif)?;
        }
        let cond = self.expression()?;
        self.expect(&Tok::Colon, "':' after condition")?;
        let then_body = self.block()?;
        let mut else_body = Vec::new();
        self.skip_newlines_before_else();
        if self.check_kw(Kw::Elif) {
            else_body.push(self.if_statement()?);
        } else if self.eat_kw(Kw::Else) {
            self.expect(&Tok::Colon, "':' after else")?;
            else_body = self.block()?;
        }
        Ok(Stmt::new(
            line,
            StmtKind::If {
                cond,
                then_body,
                else_body,
            },
        ))
    }

    /// `elif`/`else` continuation may be preceded by blank lines already
    /// swallowed by the lexer; nothing to skip between DEDENT and the
    /// keyword, but guard against stray newlines conservatively.
    fn skip_newlines_before_else(&mut self) {
        while self.check(&Tok::Newline)
            && matches!(
                self.tokens.get(self.pos + 1).map(|t| &t.tok),
                Some(Tok::Kw(Kw::Elif)) | Some(Tok::Kw(Kw::Else))
            )
        {
            self.pos += 1;
        }
    }

    fn for_statement(&mut self) -> Result<Stmt, LangError> {
        let line = self.here().line;
        self.expect_kw(Kw::For)?;
        let var = self.expect_ident("loop variable")?;
        if self.check(&Tok::Comma) {
            return Err(LangError::unsupported("tuple loop target", line));
        }
        self.expect_kw(Kw::In)?;
        let iterable = self.expression()?;
        let (start, stop, step) = match iterable {
            Expr::Call { func, args } if func == "range" => {
                let mut args = args.into_iter();
                match args.len() {
                    1 => (None, args.next().unwrap(), None),
                    2 => (args.next(), args.next().unwrap(), None),
                    3 => {
                        let start = args.next();
                        let stop = args.next().unwrap();
                        let step = args.next();
                        (start, stop, step)
                    }
                    n => {
                        return Err(self
                            .error_at(line, format!("range() takes 1 to 3 arguments, got {}", n)))
                    }
                }
            }
            _ => return Err(LangError::unsupported("for over a non-range iterable", line)),
        };
        self.expect(&Tok::Colon, "':' after for header")?;
        let body = self.block()?;
        Ok(Stmt::new(
            line,
            StmtKind::ForRange {
                var,
                start,
                stop,
                step,
                body,
            },
        ))
    }

    fn simple_statement(&mut self) -> Result<Stmt, LangError> {
        let line = self.here().line;
        if self.eat_kw(Kw::Return) {
            let value = if self.check(&Tok::Newline)
                || self.check(&Tok::Semi)
                || self.check(&Tok::Eof)
                || self.check(&Tok::Dedent)
            {
                None
            } else {
                Some(self.expression()?)
            };
            return Ok(Stmt::new(line, StmtKind::Return { value }));
        }
        let expr = self.expression()?;
        if self.check(&Tok::Comma) {
            return Err(LangError::unsupported("tuple or multiple assignment", line));
        }
        if let Some(Tok::Op(op)) = self.peek_tok() {
            let aug = match *op {
                "+=" => Some(BinOp::Add),
                "-=" => Some(BinOp::Sub),
                "*=" => Some(BinOp::Mul),
                "/=" => Some(BinOp::Div),
                "//=" => Some(BinOp::FloorDiv),
                "%=" => Some(BinOp::Mod),
                "**=" => Some(BinOp::Pow),
                _ => None,
            };
            if *op == "=" {
                let target = match expr {
                    Expr::Name(name) => name,
                    _ => return Err(self.error_at(line, "cannot assign to this expression")),
                };
                self.pos += 1;
                let value = self.expression()?;
                if matches!(self.peek_tok(), Some(Tok::Op("="))) {
                    return Err(LangError::unsupported("chained assignment", line));
                }
                return Ok(Stmt::new(line, StmtKind::Assign { target, value }));
            }
            if let Some(op) = aug {
                let target = match expr {
                    Expr::Name(name) => name,
                    _ => return Err(self.error_at(line, "cannot augment-assign to this expression")),
                };
                self.pos += 1;
                let value = self.expression()?;
                return Ok(Stmt::new(line, StmtKind::AugAssign { target, op, value }));
            }
        }
        Ok(Stmt::new(line, StmtKind::Expr { value: expr }))
    }

    // Expression grammar, loosest to tightest:
    //   or < and < not < comparison < +- < */ // % < unary- < **
    fn expression(&mut self) -> Result<Expr, LangError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, LangError> {
        let mut left = self.and_expr()?;
        while self.eat_kw(Kw::Or) {
            let right = self.and_expr()?;
            left = Expr::Bool {
                op: BoolOp::Or,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, LangError> {
        let mut left = self.not_expr()?;
        while self.eat_kw(Kw::And) {
            let right = self.not_expr()?;
            left = Expr::Bool {
                op: BoolOp::And,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, LangError> {
        if self.eat_kw(Kw::Not) {
            let operand = self.not_expr()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                operand: Box::new(operand),
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, LangError> {
        let left = self.arith()?;
        let op = match self.peek_tok() {
            Some(Tok::Op("<")) => Some(CmpOp::Lt),
            Some(Tok::Op("<=")) => Some(CmpOp::Le),
            Some(Tok::Op("==")) => Some(CmpOp::Eq),
            Some(Tok::Op("!=")) => Some(CmpOp::Ne),
            Some(Tok::Op(">=")) => Some(CmpOp::Ge),
            Some(Tok::Op(">")) => Some(CmpOp::Gt),
            _ => None,
        };
        let Some(op) = op else { return Ok(left) };
        let line = self.here().line;
        self.pos += 1;
        let right = self.arith()?;
        if matches!(
            self.peek_tok(),
            Some(Tok::Op("<" | "<=" | "==" | "!=" | ">=" | ">"))
        ) {
            return Err(LangError::unsupported("chained comparison", line));
        }
        Ok(Expr::Compare {
            op,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn arith(&mut self) -> Result<Expr, LangError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek_tok() {
                Some(Tok::Op("+")) => BinOp::Add,
                Some(Tok::Op("-")) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let right = self.term()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek_tok() {
                Some(Tok::Op("*")) => BinOp::Mul,
                Some(Tok::Op("/")) => BinOp::Div,
                Some(Tok::Op("//")) => BinOp::FloorDiv,
                Some(Tok::Op("%")) => BinOp::Mod,
                _ => break,
            };
            self.pos += 1;
            let right = self.factor()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Expr, LangError> {
        if matches!(self.peek_tok(), Some(Tok::Op("-"))) {
            self.pos += 1;
            let operand = self.factor()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                operand: Box::new(operand),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, LangError> {
        let base = self.primary()?;
        if matches!(self.peek_tok(), Some(Tok::Op("**"))) {
            self.pos += 1;
            // Right-associative; the exponent may carry a unary minus.
            let exponent = self.factor()?;
            return Ok(Expr::Binary {
                op: BinOp::Pow,
                left: Box::new(base),
                right: Box::new(exponent),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let token = self.here().clone();
        let expr = match token.tok {
            Tok::Number(raw) => {
                self.pos += 1;
                Expr::Num(parse_num_lit(&raw, token.line, token.col)?)
            }
            Tok::Str(s) => {
                self.pos += 1;
                Expr::Str(s)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.check(&Tok::LParen) {
                    self.pos += 1;
                    let args = self.call_args(token.line)?;
                    Expr::Call { func: name, args }
                } else {
                    Expr::Name(name)
                }
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expression()?;
                if self.check(&Tok::Comma) {
                    return Err(LangError::unsupported("tuple literal", token.line));
                }
                self.expect(&Tok::RParen, "')'")?;
                inner
            }
            _ => {
                return Err(self.error_at(
                    token.line,
                    format!("expected an expression, found {}", describe(&token.tok)),
                ))
            }
        };
        // Postfix constructs that the dialect excludes.
        match self.peek_tok() {
            Some(Tok::Dot) => Err(LangError::unsupported(
                "attribute or method access",
                self.here().line,
            )),
            Some(Tok::LParen) => Err(LangError::unsupported(
                "call of a call result",
                self.here().line,
            )),
            _ => Ok(expr),
        }
    }

    fn call_args(&mut self, line: u32) -> Result<Vec<Expr>, LangError> {
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            if self.check_kw(Kw::For) {
                return Err(LangError::unsupported("comprehension", line));
            }
            let arg = self.expression()?;
            if matches!(self.peek_tok(), Some(Tok::Op("="))) {
                return Err(LangError::unsupported("keyword argument", line));
            }
            if self.check_kw(Kw::For) {
                return Err(LangError::unsupported("comprehension", line));
            }
            args.push(arg);
            if self.eat(&Tok::Comma) {
                if self.check(&Tok::RParen) {
                    break;
                }
                continue;
            }
            break;
        }
        self.expect(&Tok::RParen, "')' after call arguments")?;
        Ok(args)
    }

    // Token helpers.

    fn here(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_tok(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn check(&self, tok: &Tok) -> bool {
        self.peek_tok() == Some(tok)
    }

    fn check_kw(&self, kw: Kw) -> bool {
        matches!(self.peek_tok(), Some(Tok::Kw(k)) if *k == kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.check(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Kw) -> bool {
        if self.check_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), LangError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                what,
                describe(&self.here().tok)
            )))
        }
    }

    fn expect_kw(&mut self, kw: Kw) -> Result<(), LangError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected `{}`, found {}",
                kw.as_str(),
                describe(&self.here().tok)
            )))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, LangError> {
        match self.peek_tok() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.error_here(format!(
                "expected {}, found {}",
                what,
                describe(&self.here().tok)
            ))),
        }
    }

    fn skip_newlines(&mut self) {
        while self.check(&Tok::Newline) {
            self.pos += 1;
        }
    }

    fn error_here(&self, message: impl Into<String>) -> LangError {
        let t = self.here();
        LangError::parse(t.line, t.col, message)
    }

    fn error_at(&self, line: u32, message: impl Into<String>) -> LangError {
        LangError::parse(line, self.here().col, message)
    }
}

fn parse_num_lit(raw: &str, line: u32, col: u32) -> Result<NumLit, LangError> {
    let is_float = raw.contains('.') || raw.contains('e') || raw.contains('E');
    let value = if is_float {
        let f: f64 = raw
            .parse()
            .map_err(|_| LangError::parse(line, col, format!("invalid number `{}`", raw)))?;
        Number::Float(f)
    } else {
        let i: BigInt = raw
            .parse()
            .map_err(|_| LangError::parse(line, col, format!("invalid number `{}`", raw)))?;
        Number::Int(i)
    };
    Ok(NumLit {
        raw: raw.to_string(),
        value,
    })
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{}`", s),
        Tok::Number(s) => format!("number `{}`", s),
        Tok::Str(_) => "string literal".to_string(),
        Tok::Kw(k) => format!("`{}`", k.as_str()),
        Tok::Op(o) => format!("`{}`", o),
        Tok::LParen => "`(`".to_string(),
        Tok::RParen => "`)`".to_string(),
        Tok::Comma => "`,`".to_string(),
        Tok::Colon => "`:`".to_string(),
        Tok::Semi => "`;`".to_string(),
        Tok::Dot => "`.`".to_string(),
        Tok::Newline => "end of line".to_string(),
        Tok::Indent => "indent".to_string(),
        Tok::Dedent => "dedent".to_string(),
        Tok::Eof => "end of input".to_string(),
    }
}
