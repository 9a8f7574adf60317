//! A deliberately naive nested-loop evaluator used as a test oracle for
//! [`evaluate`](super::evaluate). It shares no code with the pipeline beyond
//! the table and value types.

use std::collections::BTreeMap;

use super::{EvalError, TupleSet};
use crate::spec::{
    AggOp, AggregateOp, Channel, ChartSpec, CompareOp, DataRef, FieldDef, FieldType, Literal,
    MarkType, Operand, Predicate, Transform,
};
use crate::table::DataTable;
use crate::value::{parse_datetime, parse_number, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanAggregate {
    pub op: AggOp,
    pub field: Option<String>,
    pub alias: String,
}

/// SELECT projection FROM table WHERE filter GROUP BY groupby.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    pub filter: Option<Predicate>,
    pub groupby: Vec<String>,
    pub aggregates: Vec<PlanAggregate>,
    /// At most three names, bound to x, y and color in that order.
    pub projection: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Scalar {
    Missing,
    Num(f64),
    Str(String),
    Time(f64),
}

fn scalar(v: &Value) -> Scalar {
    match v {
        Value::Null => Scalar::Missing,
        Value::Int(i) => Scalar::Num(*i as f64),
        Value::Real(r) => Scalar::Num(*r),
        Value::Text(s) => Scalar::Str(s.clone()),
        Value::DateTime(d) => Scalar::Time(d.and_utc().timestamp_millis() as f64),
    }
}

fn lit(l: &Literal) -> Scalar {
    match l {
        Literal::Null => Scalar::Missing,
        Literal::Bool(true) => Scalar::Num(1.0),
        Literal::Bool(false) => Scalar::Num(0.0),
        Literal::Number(n) => Scalar::Num(*n),
        Literal::Text(s) => Scalar::Str(s.clone()),
    }
}

/// -1, 0, 1, or None when the two cannot be compared.
fn order(a: &Scalar, b: &Scalar) -> Option<i8> {
    let num = |x: f64, y: f64| {
        if x < y {
            Some(-1)
        } else if x > y {
            Some(1)
        } else if x == y {
            Some(0)
        } else {
            None
        }
    };
    let time = |s: &str| parse_datetime(s).map(|d| d.and_utc().timestamp_millis() as f64);
    match (a, b) {
        (Scalar::Missing, _) | (_, Scalar::Missing) => None,
        (Scalar::Num(x), Scalar::Num(y)) | (Scalar::Time(x), Scalar::Time(y)) => num(*x, *y),
        (Scalar::Time(x), Scalar::Num(y)) | (Scalar::Num(x), Scalar::Time(y)) => num(*x, *y),
        (Scalar::Str(x), Scalar::Str(y)) => Some(if x < y {
            -1
        } else if x > y {
            1
        } else {
            0
        }),
        (Scalar::Str(s), Scalar::Num(y)) => num(parse_number(s)?, *y),
        (Scalar::Num(x), Scalar::Str(s)) => num(*x, parse_number(s)?),
        (Scalar::Str(s), Scalar::Time(y)) => num(time(s)?, *y),
        (Scalar::Time(x), Scalar::Str(s)) => num(*x, time(s)?),
    }
}

fn holds(p: &Predicate, get: &dyn Fn(&str) -> Scalar) -> bool {
    match p {
        Predicate::Compare { left, op, right } => {
            let side = |o: &Operand| match o {
                Operand::Field(f) => get(f),
                Operand::Literal(l) => lit(l),
            };
            let is_null_lit = |o: &Operand| *o == Operand::Literal(Literal::Null);
            let (a, b) = (side(left), side(right));
            if is_null_lit(left) || is_null_lit(right) {
                let both = a == Scalar::Missing && b == Scalar::Missing;
                return match op {
                    CompareOp::Eq => both,
                    CompareOp::Ne => !both,
                    _ => false,
                };
            }
            match (order(&a, &b), op) {
                (None, _) => false,
                (Some(o), CompareOp::Eq) => o == 0,
                (Some(o), CompareOp::Ne) => o != 0,
                (Some(o), CompareOp::Lt) => o < 0,
                (Some(o), CompareOp::Le) => o <= 0,
                (Some(o), CompareOp::Gt) => o > 0,
                (Some(o), CompareOp::Ge) => o >= 0,
            }
        }
        Predicate::OneOf { field, values } => {
            let v = get(field);
            values.iter().any(|l| order(&v, &lit(l)) == Some(0))
        }
        Predicate::And(ps) => {
            for q in ps {
                if !holds(q, get) {
                    return false;
                }
            }
            true
        }
        Predicate::Or(ps) => {
            for q in ps {
                if holds(q, get) {
                    return true;
                }
            }
            false
        }
        Predicate::Not(q) => !holds(q, get),
    }
}

fn same_group(a: &[Value], b: &[Value]) -> bool {
    for i in 0..a.len() {
        let eq = match (scalar(&a[i]), scalar(&b[i])) {
            (Scalar::Missing, Scalar::Missing) => true,
            (Scalar::Num(x), Scalar::Num(y)) => x == y,
            (Scalar::Str(x), Scalar::Str(y)) => x == y,
            (Scalar::Time(x), Scalar::Time(y)) => x == y,
            _ => false,
        };
        if !eq {
            return false;
        }
    }
    true
}

fn aggregate(op: AggOp, cells: &[&Value]) -> Value {
    let mut nums = Vec::new();
    let mut times = Vec::new();
    for c in cells {
        match c {
            Value::Int(i) => nums.push(*i as f64),
            Value::Real(r) => nums.push(*r),
            Value::Text(s) => {
                if let Some(n) = parse_number(s) {
                    nums.push(n)
                }
            }
            Value::DateTime(d) => times.push(*d),
            Value::Null => {}
        }
    }
    match op {
        AggOp::Count => Value::Int(cells.len() as i64),
        AggOp::Sum => {
            let mut total = 0.0;
            for n in &nums {
                total += n;
            }
            Value::Real(total)
        }
        AggOp::Mean => {
            if nums.is_empty() {
                return Value::Null;
            }
            let mut total = 0.0;
            for n in &nums {
                total += n;
            }
            Value::Real(total / nums.len() as f64)
        }
        AggOp::Min | AggOp::Max => {
            let better = |x: f64, y: f64| if op == AggOp::Min { x < y } else { x > y };
            if !nums.is_empty() {
                let mut best = nums[0];
                for &n in &nums[1..] {
                    if better(n, best) {
                        best = n;
                    }
                }
                Value::Real(best)
            } else if !times.is_empty() {
                let mut best = times[0];
                for &t in &times[1..] {
                    if (op == AggOp::Min && t < best) || (op == AggOp::Max && t > best) {
                        best = t;
                    }
                }
                Value::DateTime(best)
            } else {
                Value::Null
            }
        }
    }
}

fn col(table: &DataTable, name: &str) -> Result<usize, EvalError> {
    let mut found = None;
    for (i, c) in table.columns().iter().enumerate() {
        if c.name == name {
            found = Some(i);
        }
    }
    found.ok_or_else(|| EvalError::UnresolvedField {
        field: name.to_string(),
        path: String::new(),
    })
}

pub fn evaluate_sql_reference(plan: &QueryPlan, table: &DataTable) -> Result<TupleSet, EvalError> {
    let mut filter_cols = BTreeMap::new();
    if let Some(p) = &plan.filter {
        for f in p.fields() {
            filter_cols.insert(f.to_string(), col(table, f)?);
        }
    }
    let mut kept: Vec<&Vec<Value>> = Vec::new();
    for row in table.rows() {
        let ok = match &plan.filter {
            None => true,
            Some(p) => holds(p, &|f: &str| scalar(&row[filter_cols[f]])),
        };
        if ok {
            kept.push(row);
        }
    }

    if plan.aggregates.is_empty() {
        let mut idx = Vec::new();
        for name in &plan.projection {
            idx.push(col(table, name)?);
        }
        let mut out = Vec::new();
        for row in &kept {
            let mut t = Vec::new();
            for &i in &idx {
                t.push(row[i].clone());
            }
            out.push(t);
        }
        return Ok(TupleSet::new(plan.projection.clone(), out));
    }

    let mut gidx = Vec::new();
    for g in &plan.groupby {
        gidx.push(col(table, g)?);
    }
    let mut aidx = Vec::new();
    for a in &plan.aggregates {
        aidx.push(match &a.field {
            Some(f) => Some(col(table, f)?),
            None => None,
        });
    }
    let mut groups: Vec<(Vec<Value>, Vec<&Vec<Value>>)> = Vec::new();
    for row in &kept {
        let key: Vec<Value> = gidx.iter().map(|&i| row[i].clone()).collect();
        let mut placed = false;
        for g in groups.iter_mut() {
            if same_group(&g.0, &key) {
                g.1.push(row);
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push((key, vec![row]));
        }
    }

    let mut out = Vec::new();
    for (key, members) in &groups {
        let mut named: Vec<(String, Value)> = Vec::new();
        for (g, v) in plan.groupby.iter().zip(key) {
            named.push((g.clone(), v.clone()));
        }
        for (a, ai) in plan.aggregates.iter().zip(&aidx) {
            let cells: Vec<&Value> = match (a.op, ai) {
                (AggOp::Count, _) | (_, None) => members.iter().map(|_| &Value::Null).collect(),
                (_, Some(i)) => members.iter().map(|r| &r[*i]).collect(),
            };
            named.push((a.alias.clone(), aggregate(a.op, &cells)));
        }
        let mut t = Vec::new();
        for p in &plan.projection {
            // Aliases shadow group columns of the same name.
            let v = named
                .iter()
                .rev()
                .find(|(n, _)| n == p)
                .map(|(_, v)| v.clone());
            t.push(v.ok_or_else(|| EvalError::UnresolvedField {
                field: p.clone(),
                path: String::new(),
            })?);
        }
        out.push(t);
    }
    Ok(TupleSet::new(plan.projection.clone(), out))
}

/// The chart spec expressing the same query.
pub fn translate(plan: &QueryPlan) -> ChartSpec {
    let mut transforms = Vec::new();
    if let Some(p) = &plan.filter {
        transforms.push(Transform::Filter(p.clone()));
    }
    if !plan.aggregates.is_empty() {
        transforms.push(Transform::Aggregate {
            ops: plan
                .aggregates
                .iter()
                .map(|a| AggregateOp {
                    op: a.op,
                    field: a.field.clone(),
                    alias: a.alias.clone(),
                })
                .collect(),
            groupby: Some(plan.groupby.clone()),
        });
    }
    let channels = [Channel::X, Channel::Y, Channel::Color];
    let encoding = plan
        .projection
        .iter()
        .zip(channels)
        .map(|(f, c)| {
            let ty = if plan.aggregates.iter().any(|a| &a.alias == f) {
                FieldType::Quantitative
            } else {
                FieldType::Nominal
            };
            (c, FieldDef::new(f.clone(), ty))
        })
        .collect();
    ChartSpec {
        schema_url: Some(crate::spec::VEGA_LITE_V5_SCHEMA.to_string()),
        data: Some(DataRef::Url("data.csv".into())),
        transforms,
        mark: MarkType::Point,
        encoding,
    }
}
