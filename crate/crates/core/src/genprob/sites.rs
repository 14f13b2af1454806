//! Template-matching extraction of numeric sites from question text, and
//! value-based linking of sites to code literals.
//!
//! The pattern set is deliberately narrow and documented: standalone
//! integers and decimals, optionally comma-grouped (`2,287,720`) or
//! currency-prefixed (`$18.00` matches `18.00`). Excluded on purpose:
//! number words ("five"), fraction slashes ("1/2"), ordinal suffixes
//! ("3rd"), and digits glued to letters. The two published failure modes
//! of numeric perturbation (semantic ambiguity via word forms, illogical
//! results) are reproduced, not silently patched.

use crate::lang::{Expr, Number, Program, Stmt, StmtKind};
use num_bigint::BigInt;

/// One numeric site in a question.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberSite {
    /// Exact text as it appears ("18.00", "2,287,720").
    pub surface: String,
    pub value: Number,
    /// Byte range of `surface` within the question.
    pub span: (usize, usize),
}

/// Scans the question for numeric sites, left to right.
pub fn extract_numbers(question: &str) -> Vec<NumberSite> {
    let bytes = question.as_bytes();
    let mut sites = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        let (end, has_commas, has_decimal) = match_number(bytes, start);
        i = end;
        // Left boundary: a digit run glued to a word, a decimal tail, or a
        // fraction denominator is not a site.
        if start > 0 {
            let prev = bytes[start - 1];
            if prev.is_ascii_alphanumeric() || prev == b'_' || prev == b'.' || prev == b'/' {
                continue;
            }
        }
        // Right boundary checks.
        if end < bytes.len() {
            let next = bytes[end];
            if next == b'/' {
                continue; // fraction numerator
            }
            if next.is_ascii_alphabetic() || next == b'_' {
                // Ordinal suffixes ("3rd") and digits glued to words ("5x").
                continue;
            }
            if next == b'.' && end + 1 < bytes.len() && bytes[end + 1].is_ascii_digit() {
                // Unconsumed decimal tail can only happen after a comma
                // group mismatch; treat as non-site.
                continue;
            }
        }
        let surface = &question[start..end];
        let cleaned = surface.replace(',', "");
        let value = if has_decimal {
            match cleaned.parse::<f64>() {
                Ok(f) => Number::Float(f),
                Err(_) => continue,
            }
        } else {
            match cleaned.parse::<BigInt>() {
                Ok(n) => Number::Int(n),
                Err(_) => continue,
            }
        };
        let _ = has_commas;
        sites.push(NumberSite {
            surface: surface.to_string(),
            value,
            span: (start, end),
        });
    }
    sites
}

/// Matches digits with optional `,ddd` groups and an optional decimal part.
/// Returns (end, had_commas, had_decimal).
fn match_number(bytes: &[u8], start: usize) -> (usize, bool, bool) {
    let mut i = start;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut has_commas = false;
    // Comma groups must be exactly three digits and not be followed by a
    // fourth ("1,234" groups; "1,23" and "1,2345" do not).
    while i + 3 < bytes.len()
        && bytes[i] == b','
        && bytes[i + 1].is_ascii_digit()
        && bytes[i + 2].is_ascii_digit()
        && bytes[i + 3].is_ascii_digit()
        && !(i + 4 < bytes.len() && bytes[i + 4].is_ascii_digit())
    {
        has_commas = true;
        i += 4;
    }
    let mut has_decimal = false;
    if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
        has_decimal = true;
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    (i, has_commas, has_decimal)
}

/// Numeric literals of a program in deterministic traversal order
/// (functions in definition order, then the epilogue; statements and
/// expressions left to right). This order is shared with `rewrite`.
pub fn literal_values(program: &Program) -> Vec<Number> {
    let mut out = Vec::new();
    visit_stmt_literals(&flatten(program), &mut |n| out.push(n.clone()));
    out
}

fn flatten(program: &Program) -> Vec<&Stmt> {
    let mut stmts: Vec<&Stmt> = Vec::new();
    for f in &program.functions {
        for s in &f.body {
            stmts.push(s);
        }
    }
    for s in &program.epilogue {
        stmts.push(s);
    }
    stmts
}

fn visit_stmt_literals<'p>(stmts: &[&'p Stmt], f: &mut impl FnMut(&'p Number)) {
    for stmt in stmts {
        match &stmt.kind {
            StmtKind::Assign { value, .. }
            | StmtKind::AugAssign { value, .. }
            | StmtKind::Expr { value } => visit_expr_literals(value, f),
            StmtKind::Return { value } => {
                if let Some(e) = value {
                    visit_expr_literals(e, f);
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                visit_expr_literals(cond, f);
                visit_stmt_literals(&then_body.iter().collect::<Vec<_>>(), f);
                visit_stmt_literals(&else_body.iter().collect::<Vec<_>>(), f);
            }
            StmtKind::ForRange {
                start,
                stop,
                step,
                body,
                ..
            } => {
                if let Some(e) = start {
                    visit_expr_literals(e, f);
                }
                visit_expr_literals(stop, f);
                if let Some(e) = step {
                    visit_expr_literals(e, f);
                }
                visit_stmt_literals(&body.iter().collect::<Vec<_>>(), f);
            }
        }
    }
}

fn visit_expr_literals<'p>(expr: &'p Expr, f: &mut impl FnMut(&'p Number)) {
    match expr {
        Expr::Num(lit) => f(&lit.value),
        Expr::Str(_) | Expr::Name(_) => {}
        Expr::Binary { left, right, .. }
        | Expr::Compare { left, right, .. }
        | Expr::Bool { left, right, .. } => {
            visit_expr_literals(left, f);
            visit_expr_literals(right, f);
        }
        Expr::Unary { operand, .. } => visit_expr_literals(operand, f),
        Expr::Call { args, .. } => {
            for a in args {
                visit_expr_literals(a, f);
            }
        }
    }
}

/// Links sites to literal occurrences by exact numeric value, one-to-one in
/// order: the j-th site carrying value v pairs with the j-th literal
/// occurrence equal to v. Literals beyond the paired ones stay unlinked,
/// which is what protects structural constants (the `/ 2` of a "half"
/// phrasing) from being rewritten.
pub fn link_sites(sites: &[NumberSite], program: &Program) -> Vec<Option<usize>> {
    let literals = literal_values(program);
    let mut claimed: Vec<bool> = vec![false; literals.len()];
    sites
        .iter()
        .map(|site| {
            for (i, lit) in literals.iter().enumerate() {
                if !claimed[i] && lit.numeric_eq(&site.value) {
                    claimed[i] = true;
                    return Some(i);
                }
            }
            None
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use num_bigint::BigInt;

    fn values(question: &str) -> Vec<String> {
        extract_numbers(question)
            .iter()
            .map(|s| s.surface.clone())
            .collect()
    }

    #[test]
    fn pie_question_yields_three_linked_sites() {
        let q = "Grandma Jones baked 5 apple pies. She cut each pie into 8 pieces and set the five pies out. At the end there were 14 pieces remaining. How many pieces were taken?";
        let sites = extract_numbers(q);
        assert_eq!(values(q), vec!["5", "8", "14"]);
        // Spans splice back to the original surfaces.
        for site in &sites {
            assert_eq!(&q[site.span.0..site.span.1], site.surface);
        }
        let code = "def pie_pieces_taken():\n    pies_initial = 5\n    pieces_per_pie = 8\n    total_pie_pieces = pies_initial * pieces_per_pie\n    remaining_pie_pieces = 14\n    taken_pie_pieces = total_pie_pieces - remaining_pie_pieces\n    return taken_pie_pieces";
        let program = parse(code).unwrap();
        let links = link_sites(&sites, &program);
        assert_eq!(links, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn word_forms_are_not_sites() {
        // The published semantic-ambiguity failure: "five" stays untouched.
        assert_eq!(values("set the five pies out"), Vec::<String>::new());
    }

    #[test]
    fn fractions_and_ordinals_are_skipped() {
        let q = "Tina makes $18.00 an hour. Overtime pays your hourly wage + 1/2 your hourly wage. Her 3rd shift lasts 10 hours.";
        assert_eq!(values(q), vec!["18.00", "10"]);
    }

    #[test]
    fn comma_grouped_and_currency_numbers_match() {
        let q = "A robe takes 2,287,720 bolts and costs $450 to make; 1,23 is not a group.";
        // The failed group "1,23" decomposes into two standalone sites.
        assert_eq!(values(q), vec!["2,287,720", "450", "1", "23"]);
        let sites = extract_numbers(q);
        assert_eq!(sites[0].value, Number::Int(BigInt::from(2_287_720)));
    }

    #[test]
    fn glued_digits_are_not_sites() {
        assert_eq!(values("the 5x multiplier and item a12"), Vec::<String>::new());
    }

    #[test]
    fn decimals_parse_with_their_surface() {
        let sites = extract_numbers("wages of 18.00 and 7.25 per hour");
        assert_eq!(sites[0].value, Number::Float(18.0));
        assert_eq!(sites[0].surface, "18.00");
        assert_eq!(sites[1].value, Number::Float(7.25));
    }

    #[test]
    fn repeated_values_link_one_to_one_in_order() {
        // One question site of value 2; the code carries a data literal 2
        // and a structural divisor 2. Only the first occurrence links.
        let q = "A robe takes 2 bolts of blue fiber and half that much white fiber.";
        let sites = extract_numbers(q);
        assert_eq!(sites.len(), 1);
        let program = parse(
            "def solution():\n    blue_fiber = 2\n    white_fiber = blue_fiber / 2\n    return blue_fiber + white_fiber",
        )
        .unwrap();
        let links = link_sites(&sites, &program);
        assert_eq!(links, vec![Some(0)]);
    }

    #[test]
    fn unlinked_sites_are_retained() {
        let q = "There are 7 cats and 9 dogs.";
        let sites = extract_numbers(q);
        let program = parse("def f():\n    cats = 7\n    return cats").unwrap();
        let links = link_sites(&sites, &program);
        assert_eq!(links, vec![Some(0), None]);
    }

    #[test]
    fn literal_traversal_order_is_source_order() {
        let program = parse(
            "def f(n):\n    a = 1\n    if n > 2:\n        b = 3\n    else:\n        b = 4\n    for i in range(5, 6):\n        a = a + 7\n    return a\n\nprint(f(8))",
        )
        .unwrap();
        let lits: Vec<String> = literal_values(&program)
            .iter()
            .map(|n| n.to_literal())
            .collect();
        assert_eq!(lits, vec!["1", "2", "3", "4", "5", "6", "7", "8"]);
    }
}
