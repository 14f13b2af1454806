//! Language perturbation: rewriting integer question values as English
//! words. Answers and code stay untouched; rewritten spans no longer match
//! the numeric site scanner, which is the round-trip guarantee tests check.

use super::sites::extract_numbers;
use crate::lang::Number;
use num_traits::ToPrimitive;

/// Default upper bound for word conversion.
pub const DEFAULT_WORD_BOUND: u64 = 1_000_000;

const ONES: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen",
];
const TENS: &[&str] = &[
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

/// English words for a nonnegative integer up to the billions.
pub fn number_to_words(n: u64) -> String {
    if n < 20 {
        return ONES[n as usize].to_string();
    }
    if n < 100 {
        let tens = TENS[(n / 10) as usize];
        return if n % 10 == 0 {
            tens.to_string()
        } else {
            format!("{}-{}", tens, ONES[(n % 10) as usize])
        };
    }
    if n < 1_000 {
        return join(ONES[(n / 100) as usize], "hundred", n % 100);
    }
    if n < 1_000_000 {
        return join(&number_to_words(n / 1_000), "thousand", n % 1_000);
    }
    if n < 1_000_000_000 {
        return join(&number_to_words(n / 1_000_000), "million", n % 1_000_000);
    }
    join(&number_to_words(n / 1_000_000_000), "billion", n % 1_000_000_000)
}

fn join(head: &str, unit: &str, rest: u64) -> String {
    if rest == 0 {
        format!("{} {}", head, unit)
    } else {
        format!("{} {} {}", head, unit, number_to_words(rest))
    }
}

/// Rewrites every integer site with value within `bound` as words. Decimal
/// sites stay numeric by the integer-only rule.
pub fn language_perturb(question: &str, bound: u64) -> String {
    let sites = extract_numbers(question);
    let mut out = question.to_string();
    for site in sites.iter().rev() {
        let Number::Int(value) = &site.value else {
            continue;
        };
        let Some(v) = value.to_u64() else { continue };
        if v > bound {
            continue;
        }
        out.replace_range(site.span.0..site.span.1, &number_to_words(v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_numbers_become_single_words() {
        assert_eq!(number_to_words(5), "five");
        assert_eq!(number_to_words(20), "twenty");
        assert_eq!(number_to_words(0), "zero");
        assert_eq!(number_to_words(14), "fourteen");
    }

    #[test]
    fn compound_numbers_read_naturally() {
        assert_eq!(number_to_words(21), "twenty-one");
        assert_eq!(number_to_words(105), "one hundred five");
        assert_eq!(number_to_words(123), "one hundred twenty-three");
        assert_eq!(number_to_words(1_000), "one thousand");
        assert_eq!(number_to_words(2_287_720), "two million two hundred eighty-seven thousand seven hundred twenty");
    }

    #[test]
    fn perturbed_questions_keep_sentence_shape() {
        assert_eq!(
            language_perturb("Grandma baked 5 apple pies.", DEFAULT_WORD_BOUND),
            "Grandma baked five apple pies."
        );
        assert_eq!(
            language_perturb("There are 20 students in the class.", DEFAULT_WORD_BOUND),
            "There are twenty students in the class."
        );
    }

    #[test]
    fn decimal_sites_stay_numeric() {
        assert_eq!(
            language_perturb("Tina makes $18.00 an hour for 8 hours.", DEFAULT_WORD_BOUND),
            "Tina makes $18.00 an hour for eight hours."
        );
    }

    #[test]
    fn rewritten_spans_scan_to_zero_numeric_sites() {
        let q = "She buys 4 boxes with 13 marbles for $2.50 each.";
        let worded = language_perturb(q, DEFAULT_WORD_BOUND);
        let remaining = extract_numbers(&worded);
        // Only the decimal survives.
        assert_eq!(remaining.len(), 1);
        assert_eq!(remaining[0].surface, "2.50");
    }

    #[test]
    fn bound_limits_conversion() {
        assert_eq!(
            language_perturb("He counted 2,287,720 bolts.", 1_000_000),
            "He counted 2,287,720 bolts."
        );
    }
}
