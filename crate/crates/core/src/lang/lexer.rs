//! Indentation-aware lexer for the solution dialect.
//!
//! Produces a flat token stream with INDENT/DEDENT markers, skipping
//! comments and blank lines. Constructs outside the closed dialect
//! (imports, brackets, string prefixes, reserved keywords like `while`)
//! are rejected here with a named `Unsupported` error so callers can
//! quarantine the record instead of crashing.

use super::LangError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Kw(Kw),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Colon,
    Semi,
    Dot,
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    Def,
    Return,
    If,
    Elif,
    Else,
    For,
    In,
    And,
    Or,
    Not,
}

impl Kw {
    pub fn as_str(self) -> &'static str {
        match self {
            Kw::Def => "def",
            Kw::Return => "return",
            Kw::If => "if",
            Kw::Elif => "elif",
            Kw::Else => "else",
            Kw::For => "for",
            Kw::In => "in",
            Kw::And => "and",
            Kw::Or => "or",
            Kw::Not => "not",
        }
    }
}

/// Keywords of the host language that the dialect deliberately excludes.
/// Hitting one is an `Unsupported` error naming the construct.
const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "import", "from", "while", "class", "lambda", "with", "try", "except", "finally", "raise",
    "assert", "del", "global", "nonlocal", "yield", "pass", "break", "continue", "is", "async",
    "await",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

pub struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    paren_depth: usize,
    indents: Vec<u32>,
    tokens: Vec<Token>,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    Lexer::new(src).run()
}

/// Lexes `src` and returns just the content token texts (identifiers,
/// literals, operators, keywords), excluding layout markers. This is the
/// token stream used for n-gram embeddings.
pub fn lex_content_tokens(src: &str) -> Result<Vec<String>, LangError> {
    let tokens = lex(src)?;
    Ok(tokens
        .into_iter()
        .filter_map(|t| match t.tok {
            Tok::Ident(s) => Some(s),
            Tok::Number(s) => Some(s),
            Tok::Str(s) => Some(format!("\"{}\"", s)),
            Tok::Kw(k) => Some(k.as_str().to_string()),
            Tok::Op(o) => Some(o.to_string()),
            Tok::LParen => Some("(".to_string()),
            Tok::RParen => Some(")".to_string()),
            Tok::Comma => Some(",".to_string()),
            Tok::Colon => Some(":".to_string()),
            Tok::Semi => Some(";".to_string()),
            Tok::Dot => Some(".".to_string()),
            Tok::Newline | Tok::Indent | Tok::Dedent | Tok::Eof => None,
        })
        .collect())
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
            paren_depth: 0,
            indents: vec![0],
            tokens: Vec::new(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, LangError> {
        loop {
            self.start_of_line()?;
            if self.at_eof() {
                break;
            }
            // Tokens until end of logical line.
            loop {
                self.skip_inline_space();
                if self.at_eof() {
                    break;
                }
                let c = self.peek();
                if c == b'#' {
                    while !self.at_eof() && self.peek() != b'\n' {
                        self.bump();
                    }
                    continue;
                }
                if c == b'\n' {
                    let (line, col) = (self.line, self.col);
                    self.bump_newline();
                    if self.paren_depth == 0 {
                        self.push_at(Tok::Newline, line, col);
                        break;
                    }
                    continue;
                }
                self.token()?;
            }
            if self.at_eof() {
                break;
            }
        }
        // Close any dangling logical line and open blocks.
        if matches!(
            self.tokens.last().map(|t| &t.tok),
            Some(Tok::Ident(_))
                | Some(Tok::Number(_))
                | Some(Tok::Str(_))
                | Some(Tok::Kw(_))
                | Some(Tok::Op(_))
                | Some(Tok::LParen)
                | Some(Tok::RParen)
                | Some(Tok::Comma)
                | Some(Tok::Colon)
                | Some(Tok::Semi)
                | Some(Tok::Dot)
        ) {
            self.push(Tok::Newline);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent);
        }
        self.push(Tok::Eof);
        Ok(self.tokens)
    }

    /// Handles indentation at the start of each physical line, skipping
    /// blank and comment-only lines entirely.
    fn start_of_line(&mut self) -> Result<(), LangError> {
        loop {
            if self.at_eof() {
                return Ok(());
            }
            let line_start = self.pos;
            let mut width: u32 = 0;
            while !self.at_eof() {
                match self.peek() {
                    b' ' => {
                        width += 1;
                        self.bump();
                    }
                    b'\t' => {
                        return Err(LangError::parse(
                            self.line,
                            self.col,
                            "tab indentation is not supported",
                        ));
                    }
                    _ => break,
                }
            }
            if self.at_eof() {
                return Ok(());
            }
            match self.peek() {
                b'\n' => {
                    self.bump_newline();
                    continue;
                }
                b'#' => {
                    while !self.at_eof() && self.peek() != b'\n' {
                        self.bump();
                    }
                    continue;
                }
                b'\r' => {
                    self.bump();
                    continue;
                }
                _ => {}
            }
            if self.paren_depth > 0 {
                // Continuation line inside parentheses: indentation is free-form.
                let _ = line_start;
                return Ok(());
            }
            let current = *self.indents.last().unwrap();
            if width > current {
                self.indents.push(width);
                self.push(Tok::Indent);
            } else if width < current {
                while width < *self.indents.last().unwrap() {
                    self.indents.pop();
                    self.push(Tok::Dedent);
                }
                if width != *self.indents.last().unwrap() {
                    return Err(LangError::parse(
                        self.line,
                        self.col,
                        "unindent does not match any outer indentation level",
                    ));
                }
            }
            return Ok(());
        }
    }

    fn token(&mut self) -> Result<(), LangError> {
        let (line, col) = (self.line, self.col);
        let c = self.peek();
        if c.is_ascii_digit() || (c == b'.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
        {
            return self.number(line, col);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            return self.ident_or_keyword(line, col);
        }
        if c == b'"' || c == b'\'' {
            return self.string(line, col);
        }
        match c {
            b'(' => {
                self.bump();
                self.paren_depth += 1;
                self.push_at(Tok::LParen, line, col);
            }
            b')' => {
                self.bump();
                self.paren_depth = self.paren_depth.saturating_sub(1);
                self.push_at(Tok::RParen, line, col);
            }
            b',' => {
                self.bump();
                self.push_at(Tok::Comma, line, col);
            }
            b':' => {
                self.bump();
                self.push_at(Tok::Colon, line, col);
            }
            b';' => {
                self.bump();
                self.push_at(Tok::Semi, line, col);
            }
            b'.' => {
                self.bump();
                self.push_at(Tok::Dot, line, col);
            }
            b'[' | b']' => {
                return Err(LangError::unsupported("subscript or list syntax", line));
            }
            b'{' | b'}' => {
                return Err(LangError::unsupported("dict or set syntax", line));
            }
            b'@' => return Err(LangError::unsupported("decorator or matrix operator", line)),
            b'&' | b'|' | b'^' | b'~' => {
                return Err(LangError::unsupported("bitwise operator", line));
            }
            b'\r' => {
                self.bump();
            }
            _ => return self.operator(line, col),
        }
        Ok(())
    }

    fn operator(&mut self, line: u32, col: u32) -> Result<(), LangError> {
        // Longest-match over the dialect operator set.
        const OPS: &[&str] = &[
            "**=", "//=", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "**", "//", "<",
            ">", "+", "-", "*", "/", "%", "=",
        ];
        let rest = &self.src[self.pos..];
        for op in OPS {
            if rest.starts_with(op.as_bytes()) {
                for _ in 0..op.len() {
                    self.bump();
                }
                self.push_at(Tok::Op(op), line, col);
                return Ok(());
            }
        }
        Err(LangError::parse(
            line,
            col,
            format!("unexpected character {:?}", self.peek() as char),
        ))
    }

    fn number(&mut self, line: u32, col: u32) -> Result<(), LangError> {
        let start = self.pos;
        while !self.at_eof() && self.peek().is_ascii_digit() {
            self.bump();
        }
        if !self.at_eof() && self.peek() == b'.' {
            self.bump();
            while !self.at_eof() && self.peek().is_ascii_digit() {
                self.bump();
            }
        }
        if !self.at_eof() && (self.peek() == b'e' || self.peek() == b'E') {
            let mark = self.pos;
            self.bump();
            if !self.at_eof() && (self.peek() == b'+' || self.peek() == b'-') {
                self.bump();
            }
            if !self.at_eof() && self.peek().is_ascii_digit() {
                while !self.at_eof() && self.peek().is_ascii_digit() {
                    self.bump();
                }
            } else {
                // Not an exponent after all (e.g. `2e` would be `2` then ident `e`,
                // which is malformed anyway); rewind and let the suffix check fail.
                self.pos = mark;
            }
        }
        if !self.at_eof() && (self.peek().is_ascii_alphanumeric() || self.peek() == b'_') {
            return Err(LangError::parse(line, col, "invalid numeric literal suffix"));
        }
        let raw = std::str::from_utf8(&self.src[start..self.pos])
            .expect("number bytes are ascii")
            .to_string();
        self.push_at(Tok::Number(raw), line, col);
        Ok(())
    }

    fn ident_or_keyword(&mut self, line: u32, col: u32) -> Result<(), LangError> {
        let start = self.pos;
        while !self.at_eof() && (self.peek().is_ascii_alphanumeric() || self.peek() == b'_') {
            self.bump();
        }
        let text = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ident bytes are ascii")
            .to_string();
        // A string prefix like f"...", r'...' is outside the dialect.
        if !self.at_eof() && (self.peek() == b'"' || self.peek() == b'\'') {
            let construct = if text == "f" {
                "f-string"
            } else {
                "string prefix"
            };
            return Err(LangError::unsupported(construct, line));
        }
        let kw = match text.as_str() {
            "def" => Some(Kw::Def),
            "return" => Some(Kw::Return),
            "if" => Some(Kw::If),
            "elif" => Some(Kw::Elif),
            "else" => Some(Kw::Else),
            "for" => Some(Kw::For),
            "in" => Some(Kw::In),
            "and" => Some(Kw::And),
            "or" => Some(Kw::Or),
            "not" => Some(Kw::Not),
            _ => None,
        };
        if let Some(kw) = kw {
            self.push_at(Tok::Kw(kw), line, col);
            return Ok(());
        }
        if UNSUPPORTED_KEYWORDS.contains(&text.as_str()) {
            return Err(LangError::unsupported(text, line));
        }
        if text == "True" || text == "False" {
            return Err(LangError::unsupported("boolean literal", line));
        }
        if text == "None" {
            return Err(LangError::unsupported("None literal", line));
        }
        self.push_at(Tok::Ident(text), line, col);
        Ok(())
    }

    fn string(&mut self, line: u32, col: u32) -> Result<(), LangError> {
        let quote = self.peek();
        let triple = self.src[self.pos..].len() >= 3
            && self.src[self.pos + 1] == quote
            && self.src[self.pos + 2] == quote;
        if triple {
            self.bump();
            self.bump();
            self.bump();
        } else {
            self.bump();
        }
        let mut content = String::new();
        loop {
            if self.at_eof() {
                return Err(LangError::parse(line, col, "unterminated string literal"));
            }
            let c = self.peek();
            if c == b'\\' {
                self.bump();
                if self.at_eof() {
                    return Err(LangError::parse(line, col, "unterminated string literal"));
                }
                let esc = self.peek();
                match esc {
                    b'n' => content.push('\n'),
                    b't' => content.push('\t'),
                    b'\\' => content.push('\\'),
                    b'\'' => content.push('\''),
                    b'"' => content.push('"'),
                    other => {
                        // Unknown escape: keep verbatim, as the host language does.
                        content.push('\\');
                        content.push(other as char);
                    }
                }
                if esc == b'\n' {
                    self.bump_newline();
                } else {
                    self.bump();
                }
                continue;
            }
            if c == quote {
                if triple {
                    if self.src[self.pos..].len() >= 3
                        && self.src[self.pos + 1] == quote
                        && self.src[self.pos + 2] == quote
                    {
                        self.bump();
                        self.bump();
                        self.bump();
                        break;
                    }
                    content.push(c as char);
                    self.bump();
                    continue;
                }
                self.bump();
                break;
            }
            if c == b'\n' {
                if !triple {
                    return Err(LangError::parse(line, col, "unterminated string literal"));
                }
                content.push('\n');
                self.bump_newline();
                continue;
            }
            // Multi-byte UTF-8 is carried through verbatim.
            let ch_len = utf8_len(c);
            let bytes = &self.src[self.pos..self.pos + ch_len];
            content.push_str(std::str::from_utf8(bytes).map_err(|_| {
                LangError::parse(line, col, "invalid UTF-8 in string literal")
            })?);
            for _ in 0..ch_len {
                self.bump();
            }
        }
        self.push_at(Tok::Str(content), line, col);
        Ok(())
    }

    fn skip_inline_space(&mut self) {
        while !self.at_eof() {
            match self.peek() {
                b' ' | b'\r' => {
                    self.bump();
                }
                b'\\' if self.peek_at(1) == Some(b'\n') => {
                    // Explicit line continuation.
                    self.bump();
                    self.bump_newline();
                }
                _ => break,
            }
        }
    }

    fn push(&mut self, tok: Tok) {
        let (line, col) = (self.line, self.col);
        self.push_at(tok, line, col);
    }

    fn push_at(&mut self, tok: Tok, line: u32, col: u32) {
        self.tokens.push(Token { tok, line, col });
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> u8 {
        self.src[self.pos]
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.src.get(self.pos + offset).copied()
    }

    fn bump(&mut self) {
        self.pos += 1;
        self.col += 1;
    }

    fn bump_newline(&mut self) {
        self.pos += 1;
        self.line += 1;
        self.col = 1;
    }
}

fn utf8_len(first: u8) -> usize {
    match first {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        _ => 4,
    }
}
