//! The multiset of tuples a chart displays, and tolerant multiset equality.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::table::kind_of_values;
use crate::value::{epoch_millis, parse_datetime, parse_number, Value, ValueKind};

/// `|a - b| <= max(absolute, relative * max(|a|, |b|))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Tolerance {
    /// Cross-spec comparison.
    pub const COMPARISON: Tolerance = Tolerance {
        relative: 1e-6,
        absolute: 1e-9,
    };
    /// Comparing two evaluations of the same pipeline.
    pub const EVALUATION: Tolerance = Tolerance {
        relative: 1e-9,
        absolute: 1e-12,
    };

    pub fn relative(relative: f64) -> Tolerance {
        Tolerance {
            relative,
            absolute: relative * 1e-3,
        }
    }

    pub fn close(&self, a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= self.absolute.max(self.relative * a.abs().max(b.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleSet {
    fields: Vec<String>,
    kinds: Vec<ValueKind>,
    tuples: Vec<Vec<Value>>,
}

impl TupleSet {
    /// Columns are reordered by field name and tuples sorted, so two sets built
    /// from the same data in any order are structurally identical.
    pub fn new(fields: Vec<String>, tuples: Vec<Vec<Value>>) -> TupleSet {
        let mut order: Vec<usize> = (0..fields.len()).collect();
        order.sort_by(|&a, &b| fields[a].cmp(&fields[b]));
        let fields: Vec<String> = order.iter().map(|&i| fields[i].clone()).collect();
        let mut tuples: Vec<Vec<Value>> = tuples
            .into_iter()
            .map(|t| order.iter().map(|&i| t[i].clone()).collect())
            .collect();
        tuples.sort_by(|a, b| cmp_tuples(a, b));
        let kinds = (0..fields.len())
            .map(|c| {
                let col: Vec<Value> = tuples.iter().map(|t| t[c].clone()).collect();
                kind_of_values(&col)
            })
            .collect();
        TupleSet {
            fields,
            kinds,
            tuples,
        }
    }

    pub fn empty(fields: Vec<String>) -> TupleSet {
        TupleSet::new(fields, vec![])
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn kinds(&self) -> &[ValueKind] {
        &self.kinds
    }

    pub fn tuples(&self) -> &[Vec<Value>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn column(&self, field: &str) -> Option<Vec<&Value>> {
        let i = self.fields.iter().position(|f| f == field)?;
        Some(self.tuples.iter().map(|t| &t[i]).collect())
    }

    /// Rename fields through `f`, re-canonicalizing the column order.
    pub fn rename(&self, f: impl Fn(&str) -> String) -> TupleSet {
        TupleSet::new(
            self.fields.iter().map(|n| f(n)).collect(),
            self.tuples.clone(),
        )
    }

    /// Multiset equality with numeric tolerance. Text is compared after trimming;
    /// numeric text and datetimes compare as numbers (datetimes as epoch ms).
    pub fn equals(&self, other: &TupleSet, tol: Tolerance) -> bool {
        if self.is_empty() && other.is_empty() {
            return true;
        }
        if self.fields != other.fields || self.len() != other.len() {
            return false;
        }
        let a = bucket(&self.tuples);
        let b = bucket(&other.tuples);
        if a.len() != b.len() {
            return false;
        }
        a.iter().all(|(key, xs)| match b.get(key) {
            Some(ys) => multiset_match(xs, ys, tol),
            None => false,
        })
    }
}

fn cmp_tuples(a: &[Value], b: &[Value]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum KeyPart {
    Null,
    Number,
    Text(String),
}

pub(crate) fn normalized_number(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Real(r) => Some(*r),
        Value::DateTime(d) => Some(epoch_millis(d)),
        Value::Text(s) => parse_number(s).or_else(|| parse_datetime(s).map(|d| epoch_millis(&d))),
        Value::Null => None,
    }
}

/// Group tuples by their non-numeric parts; numeric parts are what tolerance applies to.
fn bucket(tuples: &[Vec<Value>]) -> BTreeMap<Vec<KeyPart>, Vec<Vec<f64>>> {
    let mut out: BTreeMap<Vec<KeyPart>, Vec<Vec<f64>>> = BTreeMap::new();
    for t in tuples {
        let mut key = Vec::with_capacity(t.len());
        let mut nums = Vec::new();
        for v in t {
            match (v, normalized_number(v)) {
                (Value::Null, _) => key.push(KeyPart::Null),
                (_, Some(n)) => {
                    key.push(KeyPart::Number);
                    nums.push(n);
                }
                (Value::Text(s), None) => key.push(KeyPart::Text(s.trim().to_string())),
                (_, None) => key.push(KeyPart::Null),
            }
        }
        out.entry(key).or_default().push(nums);
    }
    out
}

fn close_vec(a: &[f64], b: &[f64], tol: Tolerance) -> bool {
    a.iter().zip(b).all(|(x, y)| tol.close(*x, *y))
}

/// Is there a perfect matching between `xs` and `ys` where matched vectors are
/// close? Tries sorted pairing first, then exact bipartite matching.
fn multiset_match(xs: &[Vec<f64>], ys: &[Vec<f64>], tol: Tolerance) -> bool {
    if xs.len() != ys.len() {
        return false;
    }
    let sort = |v: &[Vec<f64>]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
        v
    };
    let (sx, sy) = (sort(xs), sort(ys));
    if sx.iter().zip(&sy).all(|(a, b)| close_vec(a, b, tol)) {
        return true;
    }
    let n = sx.len();
    let adj: Vec<Vec<usize>> = sx
        .iter()
        .map(|a| (0..n).filter(|&j| close_vec(a, &sy[j], tol)).collect())
        .collect();
    let mut match_y: Vec<Option<usize>> = vec![None; n];
    fn augment(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_y: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if match_y[v].is_none_or(|w| augment(w, adj, seen, match_y)) {
                match_y[v] = Some(u);
                return true;
            }
        }
        false
    }
    for u in 0..n {
        let mut seen = vec![false; n];
        if !augment(u, &adj, &mut seen, &mut match_y) {
            return false;
        }
    }
    true
}
