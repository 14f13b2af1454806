//! Answer grading policies.
//!
//! Four modes cover the evaluation standards seen across the corpora:
//! strict equality, rounding to the nearest integer before comparing
//! (half away from zero), absolute-value comparison, and raw-decimal
//! comparison of the un-rounded initial calculation. Decimal equality is
//! always within a relative epsilon; the tolerance is configurable since
//! no fixed standard exists for these datasets.

use super::value::{AnswerValue, NumericView};
use serde::{Deserialize, Serialize};

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeMode {
    Exact,
    Round,
    Abs,
    GsmhardRaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradePolicy {
    pub mode: GradeMode,
    /// Relative epsilon for decimal comparison.
    pub epsilon: f64,
}

impl GradePolicy {
    pub fn new(mode: GradeMode) -> Self {
        GradePolicy {
            mode,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn exact() -> Self {
        Self::new(GradeMode::Exact)
    }
}

/// Compares a prediction against the ground truth under `policy`.
/// Incomparable kinds (text that does not parse as a number against a
/// numeric truth) grade as false.
pub fn grade(pred: &AnswerValue, truth: &AnswerValue, policy: &GradePolicy) -> bool {
    match policy.mode {
        GradeMode::Exact => grade_exact(pred, truth, policy.epsilon),
        GradeMode::Round => {
            let (Some(p), Some(t)) = (pred.as_numeric(), truth.as_numeric()) else {
                return false;
            };
            match (p.round_half_away(), t.round_half_away()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            }
        }
        GradeMode::Abs => {
            let (Some(p), Some(t)) = (pred.as_numeric(), truth.as_numeric()) else {
                return false;
            };
            numeric_eq(&p.abs(), &t.abs(), policy.epsilon)
        }
        GradeMode::GsmhardRaw => {
            let (Some(p), Some(t)) = (pred.as_numeric(), truth.as_numeric()) else {
                return false;
            };
            rel_eq(p.as_f64(), t.as_f64(), policy.epsilon)
        }
    }
}

fn grade_exact(pred: &AnswerValue, truth: &AnswerValue, epsilon: f64) -> bool {
    match (pred.as_numeric(), truth.as_numeric()) {
        (Some(p), Some(t)) => numeric_eq(&p, &t, epsilon),
        _ => match (pred, truth) {
            (AnswerValue::Text(a), AnswerValue::Text(b)) => a.trim() == b.trim(),
            _ => false,
        },
    }
}

/// Integer pairs compare exactly; anything involving a decimal compares
/// within the relative epsilon.
fn numeric_eq(a: &NumericView, b: &NumericView, epsilon: f64) -> bool {
    match (a, b) {
        (NumericView::Int(x), NumericView::Int(y)) => x == y,
        _ => rel_eq(a.as_f64(), b.as_f64(), epsilon),
    }
}

fn rel_eq(a: f64, b: f64, epsilon: f64) -> bool {
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    (a - b).abs() <= epsilon * 1f64.max(a.abs()).max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn int(v: i64) -> AnswerValue {
        AnswerValue::Int(BigInt::from(v))
    }

    fn dec(v: f64) -> AnswerValue {
        AnswerValue::Dec(v)
    }

    fn text(s: &str) -> AnswerValue {
        AnswerValue::Text(s.to_string())
    }

    #[test]
    fn round_mode_accepts_decimal_vs_integer() {
        let policy = GradePolicy::new(GradeMode::Round);
        assert!(grade(&dec(12.0), &int(12), &policy));
        assert!(grade(&dec(12.4), &int(12), &policy));
        assert!(grade(&dec(12.5), &int(13), &policy));
        assert!(grade(&dec(-12.5), &int(-13), &policy));
        assert!(!grade(&dec(12.5), &int(12), &policy));
    }

    #[test]
    fn abs_mode_is_symmetric_in_sign() {
        let policy = GradePolicy::new(GradeMode::Abs);
        assert!(grade(&int(-40), &int(40), &policy));
        assert!(grade(&int(40), &int(-40), &policy));
        assert!(!grade(&int(-41), &int(40), &policy));
    }

    #[test]
    fn gsmhard_raw_compares_unrounded_decimals() {
        let policy = GradePolicy::new(GradeMode::GsmhardRaw);
        assert!(grade(&dec(3431580.0), &dec(3431580.0), &policy));
        assert!(grade(&int(5), &dec(5.0), &policy));
        assert!(!grade(&dec(5.4), &dec(5.0), &policy));
    }

    #[test]
    fn exact_mode_distinguishes_kinds_but_parses_numeric_text() {
        let policy = GradePolicy::exact();
        assert!(grade(&int(60), &text("60"), &policy));
        assert!(grade(&dec(1092.0), &text("1,092"), &policy));
        assert!(grade(&text("hello"), &text(" hello "), &policy));
        assert!(!grade(&int(60), &text("sixty"), &policy));
    }

    #[test]
    fn grade_is_reflexive_for_well_kinded_values() {
        for mode in [GradeMode::Exact, GradeMode::Round, GradeMode::Abs, GradeMode::GsmhardRaw] {
            let policy = GradePolicy::new(mode);
            assert!(grade(&int(7), &int(7), &policy), "mode {:?}", mode);
            assert!(grade(&dec(7.25), &dec(7.25), &policy), "mode {:?}", mode);
        }
        assert!(grade(&text("abc"), &text("abc"), &GradePolicy::exact()));
    }

    #[test]
    fn epsilon_is_relative() {
        let policy = GradePolicy::exact();
        // 1e-9 relative tolerance at 1e7 magnitude is about 1e-2 absolute.
        assert!(grade(&dec(10_000_000.0), &dec(10_000_000.001), &policy));
        assert!(!grade(&dec(10_000_000.0), &dec(10_000_001.0), &policy));
    }
}
