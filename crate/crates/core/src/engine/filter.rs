//! Predicate evaluation over a single row.

use std::cmp::Ordering;

use crate::spec::{CompareOp, Literal, Operand, Predicate};
use crate::value::{epoch_millis, parse_datetime, parse_number, Value};

pub(crate) fn literal_value(l: &Literal) -> Value {
    match l {
        Literal::Null => Value::Null,
        Literal::Bool(b) => Value::Int(*b as i64),
        Literal::Number(n) => Value::Real(*n),
        Literal::Text(s) => Value::Text(s.clone()),
    }
}

/// Ordering between two non-null cells, or `None` when they are incomparable
/// (text that is not a number against a number, for instance).
fn coerce_cmp(a: &Value, b: &Value) -> Option<Ordering> {
    use Value::*;
    match (a, b) {
        (Int(x), Int(y)) => Some(x.cmp(y)),
        (Int(_) | Real(_), Int(_) | Real(_)) => a.as_number()?.partial_cmp(&b.as_number()?),
        (Text(x), Text(y)) => Some(x.cmp(y)),
        (Text(s), Int(_) | Real(_)) => parse_number(s)?.partial_cmp(&b.as_number()?),
        (Int(_) | Real(_), Text(s)) => a.as_number()?.partial_cmp(&parse_number(s)?),
        (DateTime(x), DateTime(y)) => Some(x.cmp(y)),
        (DateTime(x), Text(s)) => Some(x.cmp(&parse_datetime(s)?)),
        (Text(s), DateTime(y)) => Some(parse_datetime(s)?.cmp(y)),
        (DateTime(x), Int(_) | Real(_)) => epoch_millis(x).partial_cmp(&b.as_number()?),
        (Int(_) | Real(_), DateTime(y)) => a.as_number()?.partial_cmp(&epoch_millis(y)),
        (Null, _) | (_, Null) => None,
    }
}

pub(crate) fn compare(a: &Value, op: CompareOp, b: &Value) -> bool {
    let Some(ord) = coerce_cmp(a, b) else {
        return false;
    };
    match op {
        CompareOp::Eq => ord == Ordering::Equal,
        CompareOp::Ne => ord != Ordering::Equal,
        CompareOp::Lt => ord == Ordering::Less,
        CompareOp::Le => ord != Ordering::Greater,
        CompareOp::Gt => ord == Ordering::Greater,
        CompareOp::Ge => ord != Ordering::Less,
    }
}

/// `lookup` resolves a field name to the row's cell; callers check resolution first.
pub(crate) fn eval_predicate<'a>(p: &Predicate, lookup: &impl Fn(&str) -> &'a Value) -> bool {
    let operand = |o: &Operand| -> Value {
        match o {
            Operand::Field(f) => lookup(f).clone(),
            Operand::Literal(l) => literal_value(l),
        }
    };
    match p {
        Predicate::Compare { left, op, right } => {
            // `x == null` and `x != null` are presence tests, not comparisons.
            let null_lit = |o: &Operand| matches!(o, Operand::Literal(Literal::Null));
            if null_lit(left) || null_lit(right) {
                let both_null = operand(left).is_null() && operand(right).is_null();
                return match op {
                    CompareOp::Eq => both_null,
                    CompareOp::Ne => !both_null,
                    _ => false,
                };
            }
            compare(&operand(left), *op, &operand(right))
        }
        Predicate::OneOf { field, values } => {
            let v = lookup(field);
            values
                .iter()
                .any(|l| compare(v, CompareOp::Eq, &literal_value(l)))
        }
        Predicate::And(ps) => ps.iter().all(|q| eval_predicate(q, lookup)),
        Predicate::Or(ps) => ps.iter().any(|q| eval_predicate(q, lookup)),
        Predicate::Not(q) => !eval_predicate(q, lookup),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_coerces_only_when_numeric() {
        assert!(compare(
            &Value::Text("12".into()),
            CompareOp::Eq,
            &Value::Int(12)
        ));
        assert!(!compare(
            &Value::Text("twelve".into()),
            CompareOp::Eq,
            &Value::Int(12)
        ));
        assert!(!compare(
            &Value::Text("twelve".into()),
            CompareOp::Ne,
            &Value::Int(12)
        ));
    }

    #[test]
    fn null_compares_false() {
        for op in [CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Ge] {
            assert!(!compare(&Value::Null, op, &Value::Int(1)));
        }
    }

    #[test]
    fn null_literal_is_a_presence_test() {
        let p = crate::spec::predicate::parse_expression("datum.a != null").unwrap();
        let present = Value::Int(1);
        let absent = Value::Null;
        assert!(eval_predicate(&p, &|_| &present));
        assert!(!eval_predicate(&p, &|_| &absent));
    }

    #[test]
    fn datetimes_compare_with_text() {
        let d = Value::DateTime(parse_datetime("2020-05-01").unwrap());
        assert!(compare(
            &d,
            CompareOp::Gt,
            &Value::Text("2020-01-01".into())
        ));
    }
}
