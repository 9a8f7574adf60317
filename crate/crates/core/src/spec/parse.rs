//! Raw model output → validated [`ChartSpec`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use super::pointer::{push, push_index};
use super::predicate::{parse_filter, PredicateErrorKind};
use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    UnknownProperty,
    UnknownMark,
    SortInTransform,
    InvalidTimeunit,
    UnknownAggregateOp,
    UnsupportedConstruct,
    MissingProperty,
    InvalidValue,
    InvalidPredicate,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::UnknownProperty => "unknown-property",
            ViolationKind::UnknownMark => "unknown-mark",
            ViolationKind::SortInTransform => "sort-in-transform",
            ViolationKind::InvalidTimeunit => "invalid-timeunit",
            ViolationKind::UnknownAggregateOp => "unknown-aggregate-op",
            ViolationKind::UnsupportedConstruct => "unsupported-construct",
            ViolationKind::MissingProperty => "missing-property",
            ViolationKind::InvalidValue => "invalid-value",
            ViolationKind::InvalidPredicate => "invalid-predicate",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One grammar problem, located by a JSON pointer into the parsed document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum ValidityReport {
    ParsedOk,
    /// `offset` is a byte offset into the raw text.
    JsonError {
        message: String,
        offset: usize,
    },
    GrammarError {
        violations: Vec<Violation>,
    },
}

impl ValidityReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, ValidityReport::ParsedOk)
    }
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub report: ValidityReport,
    /// Present exactly when the report is `ParsedOk`.
    pub spec: Option<ChartSpec>,
    /// The extracted JSON document, present unless the report is `JsonError`.
    pub document: Option<Json>,
}

/// Parse arbitrary model output. Never panics; every input yields one report.
pub fn parse_spec(raw_text: &str) -> ParseOutcome {
    let (start, slice) = match extract_object(raw_text) {
        Some(found) => found,
        None => {
            return ParseOutcome {
                report: ValidityReport::JsonError {
                    message: "no JSON object found".into(),
                    offset: 0,
                },
                spec: None,
                document: None,
            }
        }
    };
    let doc: Json = match serde_json::from_str(slice) {
        Ok(d) => d,
        Err(e) => {
            let offset = start + byte_offset(slice, e.line(), e.column());
            return ParseOutcome {
                report: ValidityReport::JsonError {
                    message: e.to_string(),
                    offset: offset.min(raw_text.len()),
                },
                spec: None,
                document: None,
            };
        }
    };
    match parse_document(&doc) {
        Ok(spec) => ParseOutcome {
            report: ValidityReport::ParsedOk,
            spec: Some(spec),
            document: Some(doc),
        },
        Err(violations) => ParseOutcome {
            report: ValidityReport::GrammarError { violations },
            spec: None,
            document: Some(doc),
        },
    }
}

/// First balanced `{...}` block, string-aware. An unbalanced tail is returned
/// as is so the JSON parser can report where it breaks.
fn extract_object(text: &str) -> Option<(usize, &str)> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_str {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_str = false;
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((start, &text[start..=i]));
                }
            }
            _ => {}
        }
    }
    Some((start, &text[start..]))
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

// Vocabulary of the full grammar, used to tell "valid but outside the subset"
// apart from "does not exist".
const VL_MARKS: &[&str] = &[
    "area",
    "boxplot",
    "circle",
    "errorband",
    "errorbar",
    "geoshape",
    "image",
    "rect",
    "rule",
    "square",
    "text",
    "tick",
    "trail",
];
const VL_CHANNELS: &[&str] = &[
    "x2",
    "y2",
    "xOffset",
    "yOffset",
    "xError",
    "xError2",
    "yError",
    "yError2",
    "radius",
    "radius2",
    "theta2",
    "size",
    "shape",
    "opacity",
    "fillOpacity",
    "strokeOpacity",
    "strokeWidth",
    "strokeDash",
    "fill",
    "stroke",
    "text",
    "detail",
    "key",
    "order",
    "row",
    "column",
    "facet",
    "latitude",
    "longitude",
    "latitude2",
    "longitude2",
    "angle",
    "url",
];
const IGNORED_CHANNELS: &[&str] = &["tooltip", "href", "description"];
const VL_TRANSFORMS: &[&str] = &[
    "calculate",
    "density",
    "extent",
    "flatten",
    "fold",
    "impute",
    "joinaggregate",
    "loess",
    "lookup",
    "pivot",
    "quantile",
    "regression",
    "sample",
    "stack",
    "window",
];
const VL_AGG_OPS: &[&str] = &[
    "argmax",
    "argmin",
    "ci0",
    "ci1",
    "distinct",
    "exponential",
    "exponentialb",
    "median",
    "missing",
    "product",
    "q1",
    "q3",
    "stderr",
    "stdev",
    "stdevp",
    "valid",
    "values",
    "variance",
    "variancep",
];
const VL_BIN_PARAMS: &[&str] = &[
    "anchor", "base", "binned", "divide", "extent", "minstep", "nice", "span", "step", "steps",
];
const COMPOSITION_KEYS: &[&str] = &[
    "layer", "concat", "hconcat", "vconcat", "facet", "repeat", "spec",
];
const IGNORED_FIELDDEF_KEYS: &[&str] = &[
    "title",
    "axis",
    "legend",
    "scale",
    "stack",
    "format",
    "formatType",
    "header",
];
const VL_FIELDDEF_KEYS: &[&str] = &["condition", "impute", "bandPosition"];

/// Units outside the subset that the full grammar still accepts. The weekday
/// family is deliberately absent: `weekday` is treated as a misspelled `day`.
fn is_valid_vl_timeunit(s: &str) -> bool {
    const UNITS: &[&str] = &[
        "quarter",
        "minutes",
        "seconds",
        "milliseconds",
        "dayofyear",
        "yearquarter",
        "yearquartermonth",
        "yearmonthdate",
        "yearmonthdatehours",
        "yearmonthdatehoursminutes",
        "yearmonthdatehoursminutesseconds",
        "yearweek",
        "yeardayofyear",
        "quartermonth",
        "monthdate",
        "monthdatehours",
        "monthdatehoursminutes",
        "monthdatehoursminutesseconds",
        "dayhours",
        "dayhoursminutes",
        "dayhoursminutesseconds",
        "hoursminutes",
        "hoursminutesseconds",
        "minutesseconds",
        "secondsmilliseconds",
    ];
    let s = s.strip_prefix("utc").unwrap_or(s);
    let s = s.strip_prefix("binned").unwrap_or(s);
    UNITS.contains(&s) || TimeUnit::parse(s).is_some()
}

struct Ctx {
    violations: Vec<Violation>,
}

impl Ctx {
    fn report(&mut self, kind: ViolationKind, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            path: path.into(),
            message: message.into(),
        });
    }
}

/// Validate an already-parsed JSON document against the supported subset.
pub fn parse_document(doc: &Json) -> Result<ChartSpec, Vec<Violation>> {
    let mut cx = Ctx { violations: vec![] };
    let Some(root) = doc.as_object() else {
        cx.report(
            ViolationKind::InvalidValue,
            "",
            "top level must be an object",
        );
        return Err(cx.violations);
    };

    for key in root.keys() {
        if COMPOSITION_KEYS.contains(&key.as_str()) {
            cx.report(
                ViolationKind::UnsupportedConstruct,
                push("", key),
                format!("composition `{key}` is not supported"),
            );
        }
    }

    let schema_url = match root.get("$schema") {
        None => None,
        Some(Json::String(s)) => Some(s.clone()),
        Some(_) => {
            cx.report(
                ViolationKind::InvalidValue,
                "/$schema",
                "`$schema` must be a string",
            );
            None
        }
    };

    let data = root.get("data").and_then(|d| parse_data(&mut cx, d));

    let mut transforms = Vec::new();
    match root.get("transform") {
        None => {}
        Some(Json::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                if let Some(t) = parse_transform(&mut cx, item, &push_index("/transform", i)) {
                    transforms.push(t);
                }
            }
        }
        Some(_) => cx.report(
            ViolationKind::InvalidValue,
            "/transform",
            "`transform` must be an array",
        ),
    }

    let mark = match root.get("mark") {
        None => {
            cx.report(ViolationKind::MissingProperty, "", "`mark` is required");
            None
        }
        Some(m) => parse_mark(&mut cx, m),
    };

    let mut encoding = BTreeMap::new();
    match root.get("encoding") {
        None => cx.report(ViolationKind::MissingProperty, "", "`encoding` is required"),
        Some(Json::Object(enc)) => {
            for (name, def) in enc {
                let path = push("/encoding", name);
                if let Ok(channel) = name.parse::<Channel>() {
                    if let Some(fd) = parse_field_def(&mut cx, def, &path) {
                        encoding.insert(channel, fd);
                    }
                } else if IGNORED_CHANNELS.contains(&name.as_str()) {
                } else if VL_CHANNELS.contains(&name.as_str()) {
                    cx.report(
                        ViolationKind::UnsupportedConstruct,
                        path,
                        format!("channel `{name}` is not supported"),
                    );
                } else {
                    cx.report(
                        ViolationKind::UnknownProperty,
                        path,
                        format!("`{name}` is not an encoding channel"),
                    );
                }
            }
        }
        Some(_) => cx.report(
            ViolationKind::InvalidValue,
            "/encoding",
            "`encoding` must be an object",
        ),
    }

    if !cx.violations.is_empty() {
        return Err(cx.violations);
    }
    Ok(ChartSpec {
        schema_url,
        data,
        transforms,
        mark: mark.expect("mark present when no violations"),
        encoding,
    })
}

fn parse_data(cx: &mut Ctx, d: &Json) -> Option<DataRef> {
    let Some(obj) = d.as_object() else {
        cx.report(
            ViolationKind::InvalidValue,
            "/data",
            "`data` must be an object",
        );
        return None;
    };
    let mut out = None;
    for (k, v) in obj {
        let path = push("/data", k);
        match k.as_str() {
            "url" => match v {
                Json::String(s) => out = Some(DataRef::Url(s.clone())),
                _ => cx.report(ViolationKind::InvalidValue, path, "`url` must be a string"),
            },
            "values" => {
                let rows = v.as_array().and_then(|a| {
                    a.iter()
                        .map(|r| r.as_object().cloned())
                        .collect::<Option<Vec<Map<String, Json>>>>()
                });
                match rows {
                    Some(rows) => out = Some(DataRef::Inline(rows)),
                    None => cx.report(
                        ViolationKind::InvalidValue,
                        path,
                        "`values` must be an array of objects",
                    ),
                }
            }
            "format" => {}
            "name" | "sequence" | "sphere" | "graticule" => cx.report(
                ViolationKind::UnsupportedConstruct,
                path,
                format!("data source `{k}` is not supported"),
            ),
            other => cx.report(
                ViolationKind::UnknownProperty,
                path,
                format!("`{other}` is not a data property"),
            ),
        }
    }
    if out.is_none() && !obj.keys().any(|k| k != "format") {
        cx.report(
            ViolationKind::MissingProperty,
            "/data",
            "`data` needs `url` or `values`",
        );
    }
    out
}

fn parse_mark(cx: &mut Ctx, m: &Json) -> Option<MarkType> {
    let (name, path) = match m {
        Json::String(s) => (s.as_str(), "/mark".to_string()),
        Json::Object(o) => match o.get("type") {
            Some(Json::String(s)) => (s.as_str(), "/mark/type".to_string()),
            _ => {
                cx.report(
                    ViolationKind::MissingProperty,
                    "/mark",
                    "mark object needs a string `type`",
                );
                return None;
            }
        },
        _ => {
            cx.report(
                ViolationKind::InvalidValue,
                "/mark",
                "`mark` must be a string or object",
            );
            return None;
        }
    };
    match name.parse::<MarkType>() {
        Ok(mark) => Some(mark),
        Err(()) if VL_MARKS.contains(&name) => {
            cx.report(
                ViolationKind::UnsupportedConstruct,
                path,
                format!("mark `{name}` is not supported"),
            );
            None
        }
        Err(()) => {
            cx.report(
                ViolationKind::UnknownMark,
                path,
                format!("`{name}` is not a mark type"),
            );
            None
        }
    }
}

fn expect_string(cx: &mut Ctx, obj: &Map<String, Json>, key: &str, base: &str) -> Option<String> {
    match obj.get(key) {
        Some(Json::String(s)) => Some(s.clone()),
        Some(_) => {
            cx.report(
                ViolationKind::InvalidValue,
                push(base, key),
                format!("`{key}` must be a string"),
            );
            None
        }
        None => {
            cx.report(
                ViolationKind::MissingProperty,
                base,
                format!("`{key}` is required"),
            );
            None
        }
    }
}

fn parse_agg_op(cx: &mut Ctx, v: &Json, path: &str) -> Option<AggOp> {
    let Some(s) = v.as_str() else {
        cx.report(
            ViolationKind::UnsupportedConstruct,
            path,
            "aggregate must be an op name",
        );
        return None;
    };
    if let Some(op) = AggOp::parse(s) {
        return Some(op);
    }
    if VL_AGG_OPS.contains(&s) {
        cx.report(
            ViolationKind::UnsupportedConstruct,
            path,
            format!("aggregate op `{s}` is not supported"),
        );
    } else {
        cx.report(
            ViolationKind::UnknownAggregateOp,
            path,
            format!("`{s}` is not an aggregate op"),
        );
    }
    None
}

fn parse_time_unit(cx: &mut Ctx, v: &Json, path: &str) -> Option<TimeUnit> {
    let (s, path) = match v {
        Json::String(s) => (s.as_str(), path.to_string()),
        Json::Object(o) if o.len() == 1 && o.get("unit").is_some_and(Json::is_string) => {
            (o["unit"].as_str().unwrap_or_default(), push(path, "unit"))
        }
        _ => {
            cx.report(
                ViolationKind::UnsupportedConstruct,
                path,
                "time unit parameters are not supported",
            );
            return None;
        }
    };
    if let Some(u) = TimeUnit::parse(s) {
        return Some(u);
    }
    if is_valid_vl_timeunit(s) {
        cx.report(
            ViolationKind::UnsupportedConstruct,
            path,
            format!("time unit `{s}` is not supported"),
        );
    } else {
        cx.report(
            ViolationKind::InvalidTimeunit,
            path,
            format!("`{s}` is not a valid time unit"),
        );
    }
    None
}

/// `true`, `{}` or `{"maxbins": n}`; `Ok(None)` for `false`/`null`.
fn parse_bin_params(cx: &mut Ctx, v: &Json, path: &str) -> Result<Option<BinParams>, ()> {
    match v {
        Json::Bool(true) => Ok(Some(BinParams::default())),
        Json::Bool(false) | Json::Null => Ok(None),
        Json::Object(o) => {
            let mut params = BinParams::default();
            let mut ok = true;
            for (k, val) in o {
                let p = push(path, k);
                match k.as_str() {
                    "maxbins" => match val.as_u64().filter(|&n| n >= 1 && n <= u32::MAX as u64) {
                        Some(n) => params.maxbins = Some(n as u32),
                        None => {
                            cx.report(
                                ViolationKind::InvalidValue,
                                p,
                                "`maxbins` must be a positive integer",
                            );
                            ok = false;
                        }
                    },
                    other if VL_BIN_PARAMS.contains(&other) => {
                        cx.report(
                            ViolationKind::UnsupportedConstruct,
                            p,
                            format!("bin parameter `{other}` is not supported"),
                        );
                        ok = false;
                    }
                    other => {
                        cx.report(
                            ViolationKind::UnknownProperty,
                            p,
                            format!("`{other}` is not a bin parameter"),
                        );
                        ok = false;
                    }
                }
            }
            if ok {
                Ok(Some(params))
            } else {
                Err(())
            }
        }
        _ => {
            cx.report(
                ViolationKind::InvalidValue,
                path,
                "`bin` must be a boolean or object",
            );
            Err(())
        }
    }
}

fn parse_transform(cx: &mut Ctx, item: &Json, path: &str) -> Option<Transform> {
    let Some(obj) = item.as_object() else {
        cx.report(
            ViolationKind::InvalidValue,
            path,
            "transform entries must be objects",
        );
        return None;
    };
    if obj.contains_key("sort") {
        cx.report(
            ViolationKind::SortInTransform,
            path,
            "`sort` is not a transform; order axes in the encoding",
        );
    }
    const PRIMARY: [&str; 4] = ["filter", "aggregate", "bin", "timeUnit"];
    let primaries: Vec<&str> = PRIMARY
        .iter()
        .copied()
        .filter(|k| obj.contains_key(*k))
        .collect();
    let allowed: &[&str] = match primaries.as_slice() {
        ["filter"] => &["filter"],
        ["aggregate"] => &["aggregate", "groupby"],
        ["bin"] | ["timeUnit"] => &["bin", "timeUnit", "field", "as"],
        [] => &[],
        _ => {
            cx.report(
                ViolationKind::InvalidValue,
                path,
                format!("transform combines {}", primaries.join(" and ")),
            );
            return None;
        }
    };
    let mut clean = true;
    for k in obj.keys() {
        if k == "sort" || allowed.contains(&k.as_str()) {
            continue;
        }
        clean = false;
        if VL_TRANSFORMS.contains(&k.as_str()) {
            cx.report(
                ViolationKind::UnsupportedConstruct,
                push(path, k),
                format!("transform `{k}` is not supported"),
            );
        } else {
            cx.report(
                ViolationKind::UnknownProperty,
                push(path, k),
                format!("`{k}` is not a transform property"),
            );
        }
    }
    if primaries.is_empty() {
        if clean && !obj.contains_key("sort") {
            cx.report(ViolationKind::InvalidValue, path, "empty transform");
        }
        return None;
    }

    match primaries[0] {
        "filter" => match parse_filter(&obj["filter"]) {
            Ok(p) => Some(Transform::Filter(p)),
            Err(e) => {
                let kind = match e.kind {
                    PredicateErrorKind::Syntax => ViolationKind::InvalidPredicate,
                    PredicateErrorKind::Unsupported => ViolationKind::UnsupportedConstruct,
                    PredicateErrorKind::UnknownProperty => ViolationKind::UnknownProperty,
                };
                cx.report(
                    kind,
                    format!("{}{}", push(path, "filter"), e.rel_path),
                    e.message,
                );
                None
            }
        },
        "aggregate" => parse_aggregate_transform(cx, obj, path),
        "bin" => {
            let field = expect_string(cx, obj, "field", path);
            let alias = parse_as(cx, obj, path);
            if obj.contains_key("timeUnit") {
                cx.report(
                    ViolationKind::UnknownProperty,
                    push(path, "timeUnit"),
                    "`timeUnit` is not a bin transform property",
                );
            }
            let bin_path = push(path, "bin");
            let params = match parse_bin_params(cx, &obj["bin"], &bin_path) {
                Ok(Some(p)) => Some(p),
                Ok(None) => {
                    cx.report(
                        ViolationKind::InvalidValue,
                        bin_path,
                        "bin transform must enable binning",
                    );
                    None
                }
                Err(()) => None,
            };
            Some(Transform::Bin {
                field: field?,
                alias: alias?,
                params: params?,
            })
        }
        _ => {
            let field = expect_string(cx, obj, "field", path);
            let alias = parse_as(cx, obj, path);
            if obj.contains_key("bin") {
                cx.report(
                    ViolationKind::UnknownProperty,
                    push(path, "bin"),
                    "`bin` is not a timeUnit transform property",
                );
            }
            let unit = parse_time_unit(cx, &obj["timeUnit"], &push(path, "timeUnit"));
            Some(Transform::TimeUnit {
                unit: unit?,
                field: field?,
                alias: alias?,
            })
        }
    }
}

/// `as` may be a string or, for bins, a `[start, end]` pair whose first name is used.
fn parse_as(cx: &mut Ctx, obj: &Map<String, Json>, path: &str) -> Option<String> {
    match obj.get("as") {
        Some(Json::Array(a)) if !a.is_empty() && a.iter().all(Json::is_string) => {
            a[0].as_str().map(str::to_string)
        }
        _ => expect_string(cx, obj, "as", path),
    }
}

fn parse_aggregate_transform(
    cx: &mut Ctx,
    obj: &Map<String, Json>,
    path: &str,
) -> Option<Transform> {
    let agg_path = push(path, "aggregate");
    let Some(items) = obj["aggregate"].as_array() else {
        cx.report(
            ViolationKind::InvalidValue,
            agg_path,
            "`aggregate` must be an array",
        );
        return None;
    };
    let mut ops = Vec::new();
    let mut ok = true;
    for (i, item) in items.iter().enumerate() {
        let p = push_index(&agg_path, i);
        let Some(o) = item.as_object() else {
            cx.report(
                ViolationKind::InvalidValue,
                p,
                "aggregate entries must be objects",
            );
            ok = false;
            continue;
        };
        for k in o.keys() {
            if !["op", "field", "as"].contains(&k.as_str()) {
                cx.report(
                    ViolationKind::UnknownProperty,
                    push(&p, k),
                    format!("`{k}` is not an aggregate property"),
                );
                ok = false;
            }
        }
        let op = match o.get("op") {
            Some(v) => parse_agg_op(cx, v, &push(&p, "op")),
            None => {
                cx.report(ViolationKind::MissingProperty, &p, "`op` is required");
                None
            }
        };
        let field = match o.get("field") {
            Some(Json::String(s)) => Some(s.clone()),
            Some(_) => {
                cx.report(
                    ViolationKind::InvalidValue,
                    push(&p, "field"),
                    "`field` must be a string",
                );
                ok = false;
                None
            }
            None => {
                if op.is_some() && op != Some(AggOp::Count) {
                    cx.report(
                        ViolationKind::MissingProperty,
                        &p,
                        "`field` is required for this op",
                    );
                    ok = false;
                }
                None
            }
        };
        let alias = expect_string(cx, o, "as", &p);
        match (op, alias) {
            (Some(op), Some(alias)) => ops.push(AggregateOp { op, field, alias }),
            _ => ok = false,
        }
    }
    let groupby = match obj.get("groupby") {
        None => None,
        Some(Json::Array(a)) if a.iter().all(Json::is_string) => Some(
            a.iter()
                .filter_map(|v| v.as_str().map(str::to_string))
                .collect(),
        ),
        Some(_) => {
            cx.report(
                ViolationKind::InvalidValue,
                push(path, "groupby"),
                "`groupby` must be an array of field names",
            );
            ok = false;
            None
        }
    };
    ok.then_some(Transform::Aggregate { ops, groupby })
}

fn parse_sort(cx: &mut Ctx, v: &Json, path: &str) -> Result<Option<SortSpec>, ()> {
    match v {
        Json::Null => Ok(None),
        Json::String(s) => {
            let (desc, name) = match s.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, s.as_str()),
            };
            let order = if desc {
                SortOrder::Descending
            } else {
                SortOrder::Ascending
            };
            match (s.as_str(), name.parse::<Channel>()) {
                ("ascending", _) => Ok(Some(SortSpec {
                    order: SortOrder::Ascending,
                    by: None,
                })),
                ("descending", _) => Ok(Some(SortSpec {
                    order: SortOrder::Descending,
                    by: None,
                })),
                (_, Ok(c)) => Ok(Some(SortSpec {
                    order,
                    by: Some(SortBy::Channel(c)),
                })),
                _ => {
                    cx.report(
                        ViolationKind::InvalidValue,
                        path,
                        format!("`{s}` is not a sort order"),
                    );
                    Err(())
                }
            }
        }
        Json::Object(o) => {
            let mut spec = SortSpec {
                order: SortOrder::Ascending,
                by: None,
            };
            let mut ok = true;
            for (k, val) in o {
                let p = push(path, k);
                match (k.as_str(), val) {
                    ("order", Json::String(s)) if s == "ascending" => {
                        spec.order = SortOrder::Ascending
                    }
                    ("order", Json::String(s)) if s == "descending" => {
                        spec.order = SortOrder::Descending
                    }
                    ("order", Json::Null) => {}
                    ("field", Json::String(f)) => spec.by = Some(SortBy::Field(f.clone())),
                    ("op" | "encoding", _) => {
                        cx.report(
                            ViolationKind::UnsupportedConstruct,
                            p,
                            format!("sort `{k}` is not supported"),
                        );
                        ok = false;
                    }
                    ("order" | "field", _) => {
                        cx.report(ViolationKind::InvalidValue, p, format!("bad sort `{k}`"));
                        ok = false;
                    }
                    _ => {
                        cx.report(
                            ViolationKind::UnknownProperty,
                            p,
                            format!("`{k}` is not a sort property"),
                        );
                        ok = false;
                    }
                }
            }
            if ok {
                Ok(Some(spec))
            } else {
                Err(())
            }
        }
        Json::Array(_) => {
            cx.report(
                ViolationKind::UnsupportedConstruct,
                path,
                "custom sort orders are not supported",
            );
            Err(())
        }
        _ => {
            cx.report(ViolationKind::InvalidValue, path, "bad sort value");
            Err(())
        }
    }
}

fn parse_field_def(cx: &mut Ctx, def: &Json, path: &str) -> Option<FieldDef> {
    let Some(o) = def.as_object() else {
        cx.report(
            ViolationKind::InvalidValue,
            path,
            "channel definition must be an object",
        );
        return None;
    };
    if !o.contains_key("field")
        && !o.contains_key("aggregate")
        && (o.contains_key("value") || o.contains_key("datum"))
    {
        // Constant channels carry no data.
        return None;
    }
    let before = cx.violations.len();
    let mut field = None;
    let mut type_tag = None;
    let mut aggregate = None;
    let mut bin = None;
    let mut time_unit = None;
    let mut sort = None;
    for (k, v) in o {
        let p = push(path, k);
        match k.as_str() {
            "field" => match v {
                Json::String(s) => field = Some(s.clone()),
                Json::Object(_) => cx.report(
                    ViolationKind::UnsupportedConstruct,
                    p,
                    "field references are not supported",
                ),
                _ => cx.report(ViolationKind::InvalidValue, p, "`field` must be a string"),
            },
            "type" => match v.as_str().map(|s| (s, s.parse::<FieldType>())) {
                Some((_, Ok(t))) => type_tag = Some(t),
                Some(("geojson", _)) => cx.report(
                    ViolationKind::UnsupportedConstruct,
                    p,
                    "geojson is not supported",
                ),
                Some((s, _)) => cx.report(
                    ViolationKind::InvalidValue,
                    p,
                    format!("`{s}` is not a field type"),
                ),
                None => cx.report(ViolationKind::InvalidValue, p, "`type` must be a string"),
            },
            "aggregate" => aggregate = parse_agg_op(cx, v, &p),
            "bin" => bin = parse_bin_params(cx, v, &p).ok().flatten(),
            "timeUnit" => time_unit = parse_time_unit(cx, v, &p),
            "sort" => sort = parse_sort(cx, v, &p).ok().flatten(),
            "value" | "datum" => {}
            other if IGNORED_FIELDDEF_KEYS.contains(&other) => {}
            other if VL_FIELDDEF_KEYS.contains(&other) => cx.report(
                ViolationKind::UnsupportedConstruct,
                p,
                format!("`{other}` is not supported"),
            ),
            other => cx.report(
                ViolationKind::UnknownProperty,
                p,
                format!("`{other}` is not a channel property"),
            ),
        }
    }
    if field.is_none() && aggregate != Some(AggOp::Count) && !o.contains_key("field") {
        cx.report(ViolationKind::MissingProperty, path, "`field` is required");
    }
    if cx.violations.len() != before {
        return None;
    }
    let type_tag = type_tag.unwrap_or(if aggregate.is_some() || bin.is_some() {
        FieldType::Quantitative
    } else if time_unit.is_some() {
        FieldType::Temporal
    } else {
        FieldType::Nominal
    });
    Some(FieldDef {
        field,
        type_tag,
        aggregate,
        bin,
        time_unit,
        sort,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE1: &str = include_str!("../../exemplars/scatter.spec.json");

    fn violations(text: &str) -> Vec<Violation> {
        match parse_spec(text).report {
            ValidityReport::GrammarError { violations } => violations,
            other => panic!("expected grammar error, got {other:?}"),
        }
    }

    #[test]
    fn parses_case_one() {
        let out = parse_spec(CASE1);
        assert!(out.report.is_ok(), "{:?}", out.report);
        let spec = out.spec.unwrap();
        assert_eq!(spec.mark, MarkType::Point);
        assert_eq!(spec.transforms.len(), 1);
        assert!(
            matches!(&spec.transforms[0], Transform::Aggregate { groupby: Some(g), .. } if g == &["Major"])
        );
        assert_eq!(chart_type_of(&spec), BenchChartType::Scatter);
    }

    #[test]
    fn missing_brace_is_json_error() {
        let out = parse_spec(r#"{"$schema": "x", "mark": "bar""#);
        assert!(matches!(out.report, ValidityReport::JsonError { .. }));
        assert!(out.document.is_none());
    }

    #[test]
    fn no_json_at_all() {
        assert_eq!(
            parse_spec("I cannot help with that.").report,
            ValidityReport::JsonError {
                message: "no JSON object found".into(),
                offset: 0
            }
        );
    }

    #[test]
    fn json_error_offset_points_into_raw_text() {
        let raw = "Here you go:\n{\"mark\": \"bar\",, \"encoding\": {}}";
        match parse_spec(raw).report {
            ValidityReport::JsonError { offset, .. } => {
                assert!(offset > raw.find('{').unwrap());
                assert!(offset <= raw.len());
                assert_eq!(&raw[offset..offset + 1], ",");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strips_prose_and_fences() {
        let raw = format!(
            "Sure! Here is the chart:\n```json\n{CASE1}\n```\nLet me know {{if}} you need more."
        );
        let out = parse_spec(&raw);
        assert!(out.report.is_ok(), "{:?}", out.report);
    }

    #[test]
    fn braces_inside_strings_do_not_confuse_extraction() {
        let raw =
            r#"{"mark": "bar", "encoding": {"x": {"field": "a}b", "type": "nominal"}}} trailing }"#;
        let spec = parse_spec(raw).spec.unwrap();
        assert_eq!(spec.encoding[&Channel::X].field.as_deref(), Some("a}b"));
    }

    #[test]
    fn sort_in_transform_is_located() {
        let v = violations(
            r#"{"mark": "bar", "transform": [{"sort": [{"field": "x"}]}], "encoding": {"x": {"field": "a", "type": "nominal"}}}"#,
        );
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::SortInTransform);
        assert_eq!(v[0].path, "/transform/0");
    }

    #[test]
    fn weekday_is_invalid_but_quarter_is_unsupported() {
        let base = |u: &str| {
            format!(
                r#"{{"mark": "line", "encoding": {{"x": {{"field": "d", "timeUnit": "{u}", "type": "temporal"}}}}}}"#
            )
        };
        assert_eq!(
            violations(&base("weekday"))[0].kind,
            ViolationKind::InvalidTimeunit
        );
        assert_eq!(
            violations(&base("quarter"))[0].kind,
            ViolationKind::UnsupportedConstruct
        );
        assert_eq!(
            violations(&base("yearmonthdate"))[0].kind,
            ViolationKind::UnsupportedConstruct
        );
        assert!(parse_spec(&base("month")).report.is_ok());
    }

    #[test]
    fn classifies_marks_and_ops() {
        let v = violations(r#"{"mark": "pie", "encoding": {}}"#);
        assert_eq!(v[0].kind, ViolationKind::UnknownMark);
        let v = violations(r#"{"mark": "area", "encoding": {}}"#);
        assert_eq!(v[0].kind, ViolationKind::UnsupportedConstruct);
        let v = violations(
            r#"{"mark": "bar", "encoding": {"y": {"aggregate": "total", "field": "a"}}}"#,
        );
        assert_eq!(v[0].kind, ViolationKind::UnknownAggregateOp);
        assert_eq!(v[0].path, "/encoding/y/aggregate");
        let v = violations(
            r#"{"mark": "bar", "encoding": {"y": {"aggregate": "median", "field": "a"}}}"#,
        );
        assert_eq!(v[0].kind, ViolationKind::UnsupportedConstruct);
    }

    #[test]
    fn reports_every_violation() {
        let raw = r#"{"mark": "bar", "transform": [{"sort": [{"field": "a"}]}, {"timeUnit": "weekday", "field": "d", "as": "w"}],
            "encoding": {"x": {"field": "a", "type": "nominal", "colour": "red"}, "size": {"field": "b"}}}"#;
        let kinds: Vec<_> = violations(raw).into_iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![
                ViolationKind::SortInTransform,
                ViolationKind::InvalidTimeunit,
                ViolationKind::UnknownProperty,
                ViolationKind::UnsupportedConstruct
            ]
        );
    }

    #[test]
    fn violation_paths_resolve() {
        let raw = r#"{"mark": {"type": "donut"}, "transform": [{"filter": {"field": "a", "eq": 1}}, {"aggregate": [{"op": "avg", "field": "x", "as": "m"}]}],
            "encoding": {"x": {"field": "a", "type": "nominal", "sort": {"op": "sum"}}, "a/b": {}}}"#;
        let out = parse_spec(raw);
        let doc = out.document.unwrap();
        let ValidityReport::GrammarError { violations } = out.report else {
            panic!()
        };
        assert_eq!(violations.len(), 5);
        for v in violations {
            assert!(
                doc.pointer(&v.path).is_some(),
                "{} does not resolve",
                v.path
            );
        }
    }

    #[test]
    fn ignores_presentation_properties() {
        let raw = r#"{"$schema": "https://vega.github.io/schema/vega-lite/v4.json", "title": "t", "width": 300,
            "mark": {"type": "bar", "tooltip": true},
            "encoding": {"x": {"field": "a", "type": "nominal", "axis": {"labelAngle": 0}, "title": "A"},
                         "tooltip": [{"field": "a"}], "y": {"aggregate": "count"}}}"#;
        let spec = parse_spec(raw).spec.unwrap();
        assert_eq!(spec.encoding.len(), 2);
        assert_eq!(spec.encoding[&Channel::Y].type_tag, FieldType::Quantitative);
        assert_eq!(spec.encoding[&Channel::Y].field, None);
    }

    #[test]
    fn average_becomes_mean_and_groupby_absence_is_kept() {
        let raw = r#"{"mark": "bar", "transform": [{"aggregate": [{"op": "average", "field": "p", "as": "m"}]}],
            "encoding": {"y": {"field": "m", "type": "quantitative"}}}"#;
        let spec = parse_spec(raw).spec.unwrap();
        match &spec.transforms[0] {
            Transform::Aggregate { ops, groupby } => {
                assert_eq!(ops[0].op, AggOp::Mean);
                assert_eq!(*groupby, None);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn layered_specs_are_unsupported() {
        let v = violations(r#"{"layer": [], "mark": "bar", "encoding": {}}"#);
        assert_eq!(v[0].kind, ViolationKind::UnsupportedConstruct);
        assert_eq!(v[0].path, "/layer");
    }

    #[test]
    fn missing_field_only_allowed_for_count() {
        let v = violations(
            r#"{"mark": "bar", "encoding": {"y": {"aggregate": "sum", "type": "quantitative"}}}"#,
        );
        assert_eq!(v[0].kind, ViolationKind::MissingProperty);
        assert_eq!(v[0].path, "/encoding/y");
    }
}
