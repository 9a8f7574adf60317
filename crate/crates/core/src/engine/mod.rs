//! Evaluates a spec's transform pipeline and encoding against a table,
//! yielding the [`TupleSet`] the chart displays.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::spec::pointer::{push, push_index};
use crate::spec::{AggOp, Channel, ChartSpec, DataRef, FieldDef, Transform};
use crate::table::{DataTable, TableError};
use crate::value::{Value, ValueKind};

pub mod bin;
mod filter;
pub mod reference;
pub mod timeunit;
mod tuples;

pub use tuples::{Tolerance, TupleSet};

pub(crate) use filter::eval_predicate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("field `{field}` at {path} does not exist in the table or earlier transforms")]
    UnresolvedField { field: String, path: String },
    #[error("field `{field}` at {path} is binned but holds non-numeric values")]
    NonNumeric { field: String, path: String },
    #[error("inline data: {0}")]
    InlineData(String),
}

impl From<TableError> for EvalError {
    fn from(e: TableError) -> Self {
        EvalError::InlineData(e.to_string())
    }
}

/// Evaluation result with channel bindings.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Fields are the (derived) column names bound to channels.
    pub tuples: TupleSet,
    /// Same tuples keyed by channel name (`color`, `theta`, `x`, `y`).
    pub by_channel: TupleSet,
    pub channel_fields: BTreeMap<Channel, String>,
}

pub fn evaluate(spec: &ChartSpec, table: &DataTable) -> Result<TupleSet, EvalError> {
    evaluate_full(spec, table).map(|e| e.tuples)
}

/// Row store the pipeline threads through the transforms.
#[derive(Debug, Clone)]
struct Frame {
    names: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Frame {
    fn index(&self, field: &str, path: impl FnOnce() -> String) -> Result<usize, EvalError> {
        // Later columns shadow earlier ones with the same name.
        self.names
            .iter()
            .rposition(|n| n == field)
            .ok_or_else(|| EvalError::UnresolvedField {
                field: field.to_string(),
                path: path(),
            })
    }

    fn set_column(&mut self, name: &str, values: Vec<Value>) {
        match self.names.iter().rposition(|n| n == name) {
            Some(i) => {
                for (r, v) in self.rows.iter_mut().zip(values) {
                    r[i] = v;
                }
            }
            None => {
                self.names.push(name.to_string());
                for (r, v) in self.rows.iter_mut().zip(values) {
                    r.push(v);
                }
            }
        }
    }
}

/// Group key with the grouping equality of [`Value::group_eq`].
#[derive(Debug, Clone)]
struct Key(Vec<Value>);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    }
}

/// Groups in first-seen order.
fn group_rows(rows: &[Vec<Value>], key_cols: &[usize]) -> Vec<(Vec<Value>, Vec<usize>)> {
    let mut index: BTreeMap<Key, usize> = BTreeMap::new();
    let mut groups: Vec<(Vec<Value>, Vec<usize>)> = Vec::new();
    for (ri, row) in rows.iter().enumerate() {
        let key: Vec<Value> = key_cols.iter().map(|&c| row[c].clone()).collect();
        let slot = *index.entry(Key(key.clone())).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(ri);
    }
    groups
}

/// Reduce one group. `count` counts rows; other ops skip nulls and values that
/// are not numeric.
pub(crate) fn reduce<'a>(op: AggOp, values: impl Iterator<Item = &'a Value>, rows: usize) -> Value {
    if op == AggOp::Count {
        return Value::Int(rows as i64);
    }
    let vals: Vec<&Value> = values.filter(|v| !v.is_null()).collect();
    let nums: Vec<(f64, bool)> = vals
        .iter()
        .filter_map(|v| match v {
            Value::Int(i) => Some((*i as f64, true)),
            other => other.as_number().map(|n| (n, false)),
        })
        .collect();
    match op {
        AggOp::Count => unreachable!(),
        AggOp::Sum => {
            if nums.iter().all(|(_, int)| *int) {
                let mut acc: i64 = 0;
                for v in &vals {
                    if let Value::Int(i) = v {
                        match acc.checked_add(*i) {
                            Some(s) => acc = s,
                            None => return Value::Real(nums.iter().map(|(n, _)| n).sum()),
                        }
                    }
                }
                Value::Int(acc)
            } else {
                Value::Real(nums.iter().map(|(n, _)| n).sum())
            }
        }
        AggOp::Mean => {
            if nums.is_empty() {
                Value::Null
            } else {
                Value::Real(nums.iter().map(|(n, _)| n).sum::<f64>() / nums.len() as f64)
            }
        }
        AggOp::Min | AggOp::Max => {
            let pick = |a: Ordering| {
                if op == AggOp::Min {
                    a == Ordering::Less
                } else {
                    a == Ordering::Greater
                }
            };
            if !nums.is_empty() {
                let numeric = vals.iter().filter(|v| v.as_number().is_some());
                let mut best: Option<&Value> = None;
                for v in numeric {
                    let better = match best {
                        None => true,
                        Some(b) => pick(
                            v.as_number()
                                .unwrap_or(0.0)
                                .total_cmp(&b.as_number().unwrap_or(0.0)),
                        ),
                    };
                    if better {
                        best = Some(v);
                    }
                }
                match best {
                    Some(Value::Text(s)) => crate::value::parse_number(s)
                        .map(Value::Real)
                        .unwrap_or(Value::Null),
                    Some(v) => (*v).clone(),
                    None => Value::Null,
                }
            } else {
                let mut best: Option<&Value> = None;
                for v in vals.iter().filter(|v| matches!(v, Value::DateTime(_))) {
                    if best.is_none_or(|b| pick(v.total_cmp(b))) {
                        best = Some(v);
                    }
                }
                best.map(|v| (*v).clone()).unwrap_or(Value::Null)
            }
        }
    }
}

fn aggregate_frame(
    frame: &Frame,
    groupby: &[usize],
    group_names: &[String],
    ops: &[(AggOp, Option<usize>, String)],
) -> Frame {
    let mut names: Vec<String> = group_names.to_vec();
    names.extend(ops.iter().map(|(_, _, alias)| alias.clone()));
    let mut rows = Vec::new();
    for (key, members) in group_rows(&frame.rows, groupby) {
        let mut out = key;
        for (op, col, _) in ops {
            let values = members
                .iter()
                .filter_map(|&r| col.map(|c| &frame.rows[r][c]));
            out.push(reduce(*op, values, members.len()));
        }
        rows.push(out);
    }
    Frame { names, rows }
}

fn numeric_column(
    frame: &Frame,
    col: usize,
    field: &str,
    path: &str,
) -> Result<Vec<Option<f64>>, EvalError> {
    frame
        .rows
        .iter()
        .map(|r| match &r[col] {
            Value::Null => Ok(None),
            v => v
                .as_number()
                .map(Some)
                .ok_or_else(|| EvalError::NonNumeric {
                    field: field.to_string(),
                    path: path.to_string(),
                }),
        })
        .collect()
}

fn bin_column(
    frame: &Frame,
    col: usize,
    maxbins: u32,
    field: &str,
    path: &str,
) -> Result<Vec<Value>, EvalError> {
    let nums = numeric_column(frame, col, field, path)?;
    Ok(bin::bin_values(&nums, maxbins)
        .into_iter()
        .map(|l| l.map(Value::Text).unwrap_or(Value::Null))
        .collect())
}

/// Column name a channel's encoding-level derivation produces.
pub fn derived_name(def: &FieldDef) -> String {
    let field = def.field.as_deref().unwrap_or("");
    if let Some(op) = def.aggregate {
        return match op {
            AggOp::Count => "__count".to_string(),
            op => format!("{}_{field}", op.as_str()),
        };
    }
    if let Some(u) = def.time_unit {
        return format!("{}_{field}", u.as_str());
    }
    if let Some(b) = &def.bin {
        return format!("bin_maxbins_{}_{field}", b.effective_maxbins());
    }
    field.to_string()
}

pub fn evaluate_full(spec: &ChartSpec, table: &DataTable) -> Result<Evaluation, EvalError> {
    let inline;
    let source = match &spec.data {
        Some(DataRef::Inline(rows)) => {
            inline = DataTable::from_json_rows("inline", rows)?;
            &inline
        }
        _ => table,
    };
    let mut frame = Frame {
        names: source.columns().iter().map(|c| c.name.clone()).collect(),
        rows: source.rows().to_vec(),
    };

    for (ti, t) in spec.transforms.iter().enumerate() {
        let tpath = push_index("/transform", ti);
        match t {
            Transform::Filter(p) => {
                let mut cols = BTreeMap::new();
                for f in p.fields() {
                    cols.insert(f.to_string(), frame.index(f, || push(&tpath, "filter"))?);
                }
                frame
                    .rows
                    .retain(|row| eval_predicate(p, &|f: &str| &row[cols[f]]));
            }
            Transform::Aggregate { ops, groupby } => {
                let groupby = groupby.as_deref().unwrap_or(&[]);
                let mut gcols = Vec::new();
                for (gi, g) in groupby.iter().enumerate() {
                    gcols.push(frame.index(g, || push_index(&push(&tpath, "groupby"), gi))?);
                }
                let mut resolved = Vec::new();
                for (oi, o) in ops.iter().enumerate() {
                    let col = match (&o.field, o.op) {
                        (Some(f), op) if op != AggOp::Count => Some(frame.index(f, || {
                            push(&push_index(&push(&tpath, "aggregate"), oi), "field")
                        })?),
                        (Some(f), _) => {
                            frame.index(f, || {
                                push(&push_index(&push(&tpath, "aggregate"), oi), "field")
                            })?;
                            None
                        }
                        (None, _) => None,
                    };
                    resolved.push((o.op, col, o.alias.clone()));
                }
                frame = aggregate_frame(&frame, &gcols, groupby, &resolved);
            }
            Transform::Bin {
                field,
                alias,
                params,
            } => {
                let fpath = push(&tpath, "field");
                let col = frame.index(field, || fpath.clone())?;
                let values = bin_column(&frame, col, params.effective_maxbins(), field, &fpath)?;
                frame.set_column(alias, values);
            }
            Transform::TimeUnit { unit, field, alias } => {
                let col = frame.index(field, || push(&tpath, "field"))?;
                let values = frame
                    .rows
                    .iter()
                    .map(|r| timeunit::truncate_value(&r[col], *unit))
                    .collect();
                frame.set_column(alias, values);
            }
        }
    }

    // Encoding-level derivations: timeUnit and bin first, then aggregation
    // grouped by every non-aggregated channel.
    let mut bound: Vec<(Channel, String)> = Vec::new();
    let mut aggregates: Vec<(Channel, AggOp, Option<usize>, String)> = Vec::new();
    for (channel, def) in &spec.encoding {
        let cpath = push("/encoding", channel.as_str());
        let col = match &def.field {
            Some(f) => Some(frame.index(f, || push(&cpath, "field"))?),
            None => None,
        };
        let name = derived_name(def);
        if let Some(op) = def.aggregate {
            let col = if op == AggOp::Count { None } else { col };
            aggregates.push((*channel, op, col, name));
            continue;
        }
        let col = col.expect("non-count channels carry a field");
        if let Some(u) = def.time_unit {
            let values = frame
                .rows
                .iter()
                .map(|r| timeunit::truncate_value(&r[col], u))
                .collect();
            frame.set_column(&name, values);
        } else if let Some(b) = &def.bin {
            let field = def.field.as_deref().unwrap_or_default();
            let values = bin_column(
                &frame,
                col,
                b.effective_maxbins(),
                field,
                &push(&cpath, "field"),
            )?;
            frame.set_column(&name, values);
        }
        bound.push((*channel, name));
    }

    if !aggregates.is_empty() {
        let mut group_names: Vec<String> = Vec::new();
        for (_, name) in &bound {
            if !group_names.contains(name) {
                group_names.push(name.clone());
            }
        }
        let gcols: Vec<usize> = group_names
            .iter()
            .map(|n| {
                frame
                    .names
                    .iter()
                    .rposition(|x| x == n)
                    .expect("derived column exists")
            })
            .collect();
        let ops: Vec<(AggOp, Option<usize>, String)> = aggregates
            .iter()
            .map(|(_, op, col, name)| (*op, *col, name.clone()))
            .collect();
        // Encoding aggregates always produce a row per group, even with no
        // grouping channel, except over an empty input.
        frame = aggregate_frame(&frame, &gcols, &group_names, &ops);
        for (channel, _, _, name) in aggregates {
            bound.push((channel, name));
        }
    }

    bound.sort_by_key(|(c, _)| *c);
    let cols: Vec<usize> = bound
        .iter()
        .map(|(_, n)| {
            frame
                .names
                .iter()
                .rposition(|x| x == n)
                .expect("bound column exists")
        })
        .collect();
    let rows: Vec<Vec<Value>> = frame
        .rows
        .iter()
        .map(|r| cols.iter().map(|&c| r[c].clone()).collect())
        .collect();
    let names: Vec<String> = bound.iter().map(|(_, n)| n.clone()).collect();
    let channel_names: Vec<String> = bound.iter().map(|(c, _)| c.as_str().to_string()).collect();
    Ok(Evaluation {
        tuples: TupleSet::new(names, rows.clone()),
        by_channel: TupleSet::new(channel_names, rows),
        channel_fields: bound.into_iter().collect(),
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TruncateError {
    #[error("field `{0}` does not exist")]
    UnresolvedField(String),
    #[error("field `{0}` is not real-valued")]
    FieldNotReal(String),
}

/// Copy of `table` with `field` truncated toward zero. Integer columns are
/// returned unchanged.
pub fn truncate_decimals(table: &DataTable, field: &str) -> Result<DataTable, TruncateError> {
    let idx = table
        .column_index(field)
        .ok_or_else(|| TruncateError::UnresolvedField(field.to_string()))?;
    let kind = table.columns()[idx].kind;
    let mut out = table.clone();
    match kind {
        ValueKind::Integer => Ok(out),
        ValueKind::Real => {
            let values: Vec<Value> = table
                .rows()
                .iter()
                .map(|r| match &r[idx] {
                    Value::Real(x) => Value::Real(x.trunc()),
                    other => other.clone(),
                })
                .collect();
            out.replace_column(idx, ValueKind::Real, values);
            Ok(out)
        }
        _ => Err(TruncateError::FieldNotReal(field.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{parse_spec, FieldType};

    fn table(csv: &str) -> DataTable {
        DataTable::from_csv_reader("t", csv.as_bytes()).unwrap()
    }

    fn spec(text: &str) -> ChartSpec {
        let out = parse_spec(text);
        out.spec.unwrap_or_else(|| panic!("{:?}", out.report))
    }

    fn t(fields: &[&str], rows: Vec<Vec<Value>>) -> TupleSet {
        TupleSet::new(fields.iter().map(|s| s.to_string()).collect(), rows)
    }

    fn s(x: &str) -> Value {
        Value::Text(x.into())
    }

    #[test]
    fn case_one_counts_majors() {
        let tbl = table("Major,Height\nCS,1.8\nCS,1.7\nMath,1.6\n");
        let got = evaluate(
            &spec(include_str!("../../exemplars/scatter.spec.json")),
            &tbl,
        )
        .unwrap();
        let want = t(
            &["Major", "Number of Students"],
            vec![vec![s("CS"), Value::Int(2)], vec![s("Math"), Value::Int(1)]],
        );
        assert_eq!(got, want);
    }

    #[test]
    fn identity_pipeline_keeps_multiplicity() {
        let tbl = table("Major,Height\nCS,1.8\nCS,1.8\nMath,1.6\n");
        let sp = spec(
            r#"{"mark": "point", "encoding": {"x": {"field": "Major", "type": "nominal"}, "y": {"field": "Height", "type": "quantitative"}}}"#,
        );
        let got = evaluate(&sp, &tbl).unwrap();
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn filter_then_project_matches_row_scan() {
        let csv = "age,weight,abandoned_yn\n1,10,1\n2,20,0\n3,30,1\n4,40,0\n5,50,0\n6,60,0\n";
        let tbl = table(csv);
        let sp = spec(
            r#"{"mark": "point", "transform": [{"filter": "datum.abandoned_yn == 1"}],
            "encoding": {"x": {"field": "age", "type": "quantitative"}, "y": {"field": "weight", "type": "quantitative"}}}"#,
        );
        let got = evaluate(&sp, &tbl).unwrap();
        // Independent scan.
        let mut want = Vec::new();
        for line in csv.lines().skip(1) {
            let cells: Vec<i64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            if cells[2] == 1 {
                want.push(vec![Value::Int(cells[0]), Value::Int(cells[1])]);
            }
        }
        assert_eq!(want.len(), 2);
        assert_eq!(got, t(&["age", "weight"], want));
    }

    #[test]
    fn encoding_aggregate_groups_by_other_channels() {
        let tbl = table("a,b,v\nx,p,1\nx,p,2\nx,q,3\ny,p,4\n");
        let sp = spec(
            r#"{"mark": "bar", "encoding": {"x": {"field": "a"}, "color": {"field": "b"}, "y": {"aggregate": "sum", "field": "v"}}}"#,
        );
        let ev = evaluate_full(&sp, &tbl).unwrap();
        assert_eq!(ev.channel_fields[&Channel::Y], "sum_v");
        assert_eq!(
            ev.tuples,
            t(
                &["a", "b", "sum_v"],
                vec![
                    vec![s("x"), s("p"), Value::Int(3)],
                    vec![s("x"), s("q"), Value::Int(3)],
                    vec![s("y"), s("p"), Value::Int(4)],
                ]
            )
        );
    }

    #[test]
    fn unresolved_field_reports_path() {
        let tbl = table("a\n1\n");
        let sp =
            spec(r#"{"mark": "bar", "encoding": {"x": {"field": "nope", "type": "nominal"}}}"#);
        assert_eq!(
            evaluate(&sp, &tbl).unwrap_err(),
            EvalError::UnresolvedField {
                field: "nope".into(),
                path: "/encoding/x/field".into()
            }
        );
        let sp = spec(
            r#"{"mark": "bar", "transform": [{"aggregate": [{"op": "sum", "field": "zz", "as": "s"}], "groupby": ["a"]}],
            "encoding": {"x": {"field": "a"}}}"#,
        );
        assert_eq!(
            evaluate(&sp, &tbl).unwrap_err(),
            EvalError::UnresolvedField {
                field: "zz".into(),
                path: "/transform/0/aggregate/0/field".into()
            }
        );
    }

    #[test]
    fn transform_aliases_are_visible_downstream() {
        let tbl = table("d,v\n2020-01-05,1\n2020-01-20,2\n2020-02-01,3\n");
        let sp = spec(
            r#"{"mark": "line", "transform": [{"timeUnit": "yearmonth", "field": "d", "as": "m"},
            {"aggregate": [{"op": "sum", "field": "v", "as": "total"}], "groupby": ["m"]}],
            "encoding": {"x": {"field": "m", "type": "temporal"}, "y": {"field": "total", "type": "quantitative"}}}"#,
        );
        let got = evaluate(&sp, &tbl).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(
            got.column("total").unwrap(),
            vec![&Value::Int(3), &Value::Int(3)]
        );
    }

    #[test]
    fn encoding_and_transform_bins_agree() {
        let tbl = table("p\n1\n5\n12\n17\n33\n");
        let enc = spec(
            r#"{"mark": "bar", "encoding": {"x": {"field": "p", "bin": true}, "y": {"aggregate": "count"}}}"#,
        );
        let tr = spec(
            r#"{"mark": "bar", "transform": [{"bin": true, "field": "p", "as": "pb"}, {"aggregate": [{"op": "count", "as": "n"}], "groupby": ["pb"]}],
            "encoding": {"x": {"field": "pb", "type": "ordinal"}, "y": {"field": "n", "type": "quantitative"}}}"#,
        );
        let a = evaluate_full(&enc, &tbl).unwrap().by_channel;
        let b = evaluate_full(&tr, &tbl).unwrap().by_channel;
        assert!(a.equals(&b, Tolerance::EVALUATION));
    }

    #[test]
    fn bin_on_text_is_an_error() {
        let tbl = table("d\n2020-01-01\n2020-02-01\n");
        let sp = spec(
            r#"{"mark": "bar", "transform": [{"bin": true, "field": "d", "as": "b"}], "encoding": {"x": {"field": "b"}}}"#,
        );
        assert!(matches!(
            evaluate(&sp, &tbl),
            Err(EvalError::NonNumeric { .. })
        ));
    }

    #[test]
    fn empty_result_is_legal() {
        let tbl = table("a,v\nx,1\n");
        let sp = spec(
            r#"{"mark": "bar", "transform": [{"filter": "datum.v > 5"}], "encoding": {"x": {"field": "a"}, "y": {"aggregate": "count"}}}"#,
        );
        assert!(evaluate(&sp, &tbl).unwrap().is_empty());
    }

    #[test]
    fn inline_rows_override_the_table() {
        let tbl = table("a\nz\n");
        let sp = spec(
            r#"{"data": {"values": [{"a": "x"}, {"a": "y"}]}, "mark": "bar", "encoding": {"x": {"field": "a"}}}"#,
        );
        assert_eq!(evaluate(&sp, &tbl).unwrap().len(), 2);
    }

    #[test]
    fn null_handling_in_aggregates() {
        let tbl = table("g,v\na,1\na,\na,3\nb,\n");
        let ops = [
            ("count", Value::Int(3)),
            ("sum", Value::Int(4)),
            ("mean", Value::Real(2.0)),
            ("min", Value::Int(1)),
        ];
        for (op, want) in ops {
            let sp = spec(&format!(
                r#"{{"mark": "bar", "transform": [{{"aggregate": [{{"op": "{op}", "field": "v", "as": "r"}}], "groupby": ["g"]}}],
                "encoding": {{"x": {{"field": "g"}}, "y": {{"field": "r", "type": "quantitative"}}}}}}"#
            ));
            let got = evaluate(&sp, &tbl).unwrap();
            let a = got.tuples().iter().find(|r| r[0] == s("a")).unwrap();
            assert_eq!(a[1], want, "{op}");
        }
        let sp = spec(
            r#"{"mark": "bar", "transform": [{"aggregate": [{"op": "mean", "field": "v", "as": "r"}], "groupby": ["g"]}],
                "encoding": {"x": {"field": "g"}, "y": {"field": "r", "type": "quantitative"}}}"#,
        );
        let got = evaluate(&sp, &tbl).unwrap();
        let b = got.tuples().iter().find(|r| r[0] == s("b")).unwrap();
        assert_eq!(b[1], Value::Null);
    }

    #[test]
    fn truncation_helper() {
        let tbl = table("r,i\n12.9,1\n3.5,2\n-2.5,3\n");
        let out = truncate_decimals(&tbl, "r").unwrap();
        let col: Vec<_> = out.rows().iter().map(|r| r[0].clone()).collect();
        assert_eq!(
            col,
            vec![Value::Real(12.0), Value::Real(3.0), Value::Real(-2.0)]
        );
        assert_eq!(truncate_decimals(&tbl, "i").unwrap(), tbl);
        assert_eq!(
            truncate_decimals(&tbl, "q"),
            Err(TruncateError::UnresolvedField("q".into()))
        );
        let txt = table("s\nx\n");
        assert_eq!(
            truncate_decimals(&txt, "s"),
            Err(TruncateError::FieldNotReal("s".into()))
        );
    }

    #[test]
    fn truncated_sum_bounds() {
        // 10 rows, 7 fractional: the truncated sum loses between 0 and 7.
        let vals: [f64; 10] = [
            1250.5, 980.25, 1100.0, 1500.75, 999.99, 870.0, 1320.4, 1010.0, 1205.6, 1440.3,
        ];
        let csv: String = std::iter::once("monthly_rental".to_string())
            .chain(vals.iter().map(|v| v.to_string()))
            .collect::<Vec<_>>()
            .join("\n");
        let tbl = table(&csv);
        let truncated = truncate_decimals(&tbl, "monthly_rental").unwrap();
        let sum = |t: &DataTable| {
            t.rows()
                .iter()
                .map(|r| r[0].as_number().unwrap())
                .sum::<f64>()
        };
        let fractional = vals.iter().filter(|v| v.fract() != 0.0).count() as f64;
        let diff = sum(&tbl) - sum(&truncated);
        assert!(diff >= 0.0 && diff <= fractional);
        assert!(diff > 0.0);
    }

    #[test]
    fn derived_names() {
        let d = FieldDef::new("price", FieldType::Quantitative).with_aggregate(AggOp::Mean);
        assert_eq!(derived_name(&d), "mean_price");
    }
}
