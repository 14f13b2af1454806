//! Lexer, parser, AST, and canonical unparser for the solution dialect.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod unparse;

pub use ast::{
    is_builtin, BinOp, BoolOp, CmpOp, Expr, FunctionDef, NumLit, Number, Program, Stmt, StmtKind,
    UnaryOp, BUILTINS,
};
pub use lexer::lex_content_tokens;
pub use parser::parse;
pub use unparse::unparse;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LangError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse { line: u32, col: u32, message: String },
    /// A construct outside the closed dialect. Carried separately from
    /// `Parse` so the pipeline can quarantine and count these records.
    #[error("unsupported syntax at line {line}: {construct}")]
    Unsupported { construct: String, line: u32 },
}

impl LangError {
    pub fn parse(line: u32, col: u32, message: impl Into<String>) -> Self {
        LangError::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    pub fn unsupported(construct: impl Into<String>, line: u32) -> Self {
        LangError::Unsupported {
            construct: construct.into(),
            line,
        }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, LangError::Unsupported { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    const ROBE_PROGRAM: &str = "def solution():\n    \"\"\"A robe takes 2287720 bolts of blue fiber and half that much white fiber.  How many bolts in total does it take?\"\"\"\n    blue_fiber = 2287720\n    white_fiber = blue_fiber / 2\n    total_fiber = blue_fiber + white_fiber\n    result = total_fiber\n    return result";

    #[test]
    fn minimal_function_parses() {
        let p = parse("def f():\n    return 0").unwrap();
        assert_eq!(p.functions.len(), 1);
        assert!(p.epilogue.is_empty());
        let f = &p.functions[0];
        assert_eq!(f.name, "f");
        assert!(f.params.is_empty());
        assert_eq!(
            f.body,
            vec![Stmt::new(
                0,
                StmtKind::Return {
                    value: Some(Expr::Num(NumLit {
                        raw: "0".into(),
                        value: Number::Int(BigInt::from(0)),
                    })),
                }
            )]
        );
    }

    #[test]
    fn robe_program_has_four_assigns_and_a_return() {
        let p = parse(ROBE_PROGRAM).unwrap();
        let f = &p.functions[0];
        assert!(f.docstring.is_some());
        let assigns = f
            .body
            .iter()
            .filter(|s| matches!(s.kind, StmtKind::Assign { .. }))
            .count();
        assert_eq!(assigns, 4);
        assert_eq!(f.top_level_returns(), 1);
        assert!(p.diagnostics.is_empty());
    }

    #[test]
    fn import_is_rejected_by_name() {
        let err = parse("import os\n").unwrap_err();
        assert_eq!(err, LangError::unsupported("import", 1));
    }

    #[test]
    fn method_call_is_rejected() {
        let err = parse("def f():\n    x = s.split()\n    return x").unwrap_err();
        assert!(matches!(err, LangError::Unsupported { ref construct, .. }
            if construct == "attribute or method access"));
    }

    #[test]
    fn fstring_is_rejected() {
        let err = parse("x = f\"{y}\"\n").unwrap_err();
        assert!(matches!(err, LangError::Unsupported { ref construct, .. } if construct == "f-string"));
    }

    #[test]
    fn while_is_rejected() {
        let err = parse("while x < 3:\n    x = x + 1").unwrap_err();
        assert!(matches!(err, LangError::Unsupported { ref construct, .. } if construct == "while"));
    }

    #[test]
    fn unparse_is_a_fixpoint_on_canonical_sources() {
        let canonical = "def f(n):\n    x = n + 1\n    return x\n\ny = f(3)\nprint(y)";
        let once = unparse(&parse(canonical).unwrap());
        assert_eq!(once, canonical);
        let twice = unparse(&parse(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn whitespace_variants_unparse_identically() {
        let a = "def f():\n    x = 1+2\n    return x";
        let b = "def f():\n        x =   1 + 2\n        return   x";
        let c = "def f(): x = 1 + 2; return x";
        let ua = unparse(&parse(a).unwrap());
        let ub = unparse(&parse(b).unwrap());
        let uc = unparse(&parse(c).unwrap());
        assert_eq!(ua, ub);
        assert_eq!(ua, uc);
    }

    #[test]
    fn semicolon_bodies_match_the_block_form() {
        let inline = parse("def solution(): x = 2; y = x / 2; return x + y").unwrap();
        let block = parse("def solution():\n    x = 2\n    y = x / 2\n    return x + y").unwrap();
        assert_eq!(inline, block);
    }

    #[test]
    fn elif_chains_round_trip() {
        let src = "def f(x):\n    if x > 10:\n        y = 1\n    elif x > 5:\n        y = 2\n    else:\n        y = 3\n    return y";
        let p = parse(src).unwrap();
        assert_eq!(unparse(&p), src);
        assert_eq!(parse(&unparse(&p)).unwrap(), p);
    }

    #[test]
    fn parenthesization_distinguishes_association() {
        let chained = parse("x = a - b - c\n").unwrap();
        let grouped = parse("x = a - (b - c)\n").unwrap();
        assert_ne!(chained, grouped);
        assert_eq!(unparse(&chained), "x = a - b - c");
        assert_eq!(unparse(&grouped), "x = a - (b - c)");
        assert_eq!(parse(&unparse(&grouped)).unwrap(), grouped);
    }

    #[test]
    fn power_and_unary_precedence_round_trip() {
        for src in [
            "x = -2 ** 2",
            "x = (-2) ** 2",
            "x = 2 ** -1",
            "x = 2 ** 3 ** 2",
            "x = (2 ** 3) ** 2",
            "x = -(a + b)",
            "x = not a == b",
            "x = a or b and c",
            "x = (a or b) and c",
        ] {
            let p = parse(&format!("{}\n", src)).unwrap();
            assert_eq!(unparse(&p), src, "canonical form of {:?}", src);
            assert_eq!(parse(&unparse(&p)).unwrap(), p, "round trip of {:?}", src);
        }
    }

    #[test]
    fn numeric_literal_spelling_is_preserved() {
        let src = "wage = 18.00\nbig = 2287720\nhalf = 1 / 2";
        let p = parse(src).unwrap();
        assert_eq!(unparse(&p), src);
    }

    #[test]
    fn docstrings_are_separated_from_the_body() {
        let src = "def f():\n    \"\"\"What is 2 + 2?\"\"\"\n    return 4";
        let p = parse(src).unwrap();
        assert_eq!(p.functions[0].docstring.as_deref(), Some("What is 2 + 2?"));
        assert_eq!(p.functions[0].body.len(), 1);
        assert_eq!(unparse(&p), src);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let src = "def f():\n    # setup\n    x = 1\n\n    return x  # done";
        let p = parse(src).unwrap();
        assert_eq!(unparse(&p), "def f():\n    x = 1\n    return x");
    }

    #[test]
    fn empty_source_is_a_parse_error() {
        assert!(matches!(parse("   \n"), Err(LangError::Parse { .. })));
    }

    #[test]
    fn missing_colon_reports_position() {
        let err = parse("def f()\n    return 1").unwrap_err();
        match err {
            LangError::Parse { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("':'"), "message: {}", message);
            }
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn sexpr_rendering_is_stable() {
        let p = parse("def f(n):\n    return n + 1\n\nprint(f(2))").unwrap();
        assert_eq!(
            p.to_sexpr(),
            "(program (def f (n) (return (+ (name n) (num 1)))) (expr (call print (call f (num 2)))))"
        );
    }
}
