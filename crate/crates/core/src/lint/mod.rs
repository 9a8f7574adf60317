//! Named lint checks for generated specifications, with mechanical auto-fixes.
//!
//! Checks run on the JSON document rather than the AST so that defects the
//! parser rejects (a `sort` transform, an unknown time unit) can still be
//! located and repaired.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use crate::spec::pointer::{document_order, push, push_index};
use crate::spec::{
    parse_spec, spec_to_document, ChartSpec, ValidityReport, Violation, ViolationKind,
    VEGA_LITE_V5_SCHEMA,
};
use crate::table::DataTable;
use crate::value::ValueKind;

mod fix;

pub use fix::{fix, fix_best_effort, fix_spec, AppliedFix, FixError, FixOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    #[serde(rename = "invalid-json")]
    InvalidJson,
    #[serde(rename = "R1-schema-version")]
    SchemaVersion,
    #[serde(rename = "R2-transform-order")]
    TransformOrder,
    #[serde(rename = "R3-missing-filter-hint")]
    MissingFilterHint,
    #[serde(rename = "R4-missing-groupby")]
    MissingGroupby,
    #[serde(rename = "R5-sort-in-transform")]
    SortInTransform,
    #[serde(rename = "E-nonexistent-property")]
    NonexistentProperty,
    #[serde(rename = "E-bin-timeunit-confusion")]
    BinTimeUnitConfusion,
    #[serde(rename = "E-invalid-timeunit-param")]
    InvalidTimeUnitParam,
    /// Grammar violations outside the named taxonomy (missing fields, bad
    /// values, unsupported constructs).
    #[serde(rename = "E-grammar")]
    Grammar,
}

impl RuleId {
    pub const ALL: [RuleId; 10] = [
        RuleId::InvalidJson,
        RuleId::SchemaVersion,
        RuleId::TransformOrder,
        RuleId::MissingFilterHint,
        RuleId::MissingGroupby,
        RuleId::SortInTransform,
        RuleId::NonexistentProperty,
        RuleId::BinTimeUnitConfusion,
        RuleId::InvalidTimeUnitParam,
        RuleId::Grammar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::InvalidJson => "invalid-json",
            RuleId::SchemaVersion => "R1-schema-version",
            RuleId::TransformOrder => "R2-transform-order",
            RuleId::MissingFilterHint => "R3-missing-filter-hint",
            RuleId::MissingGroupby => "R4-missing-groupby",
            RuleId::SortInTransform => "R5-sort-in-transform",
            RuleId::NonexistentProperty => "E-nonexistent-property",
            RuleId::BinTimeUnitConfusion => "E-bin-timeunit-confusion",
            RuleId::InvalidTimeUnitParam => "E-invalid-timeunit-param",
            RuleId::Grammar => "E-grammar",
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.as_str() == s)
    }

    /// Style rules warn; everything that changes validity or meaning is an error.
    pub fn severity(self) -> Severity {
        match self {
            RuleId::SchemaVersion | RuleId::TransformOrder | RuleId::MissingFilterHint => {
                Severity::Warning
            }
            _ => Severity::Error,
        }
    }

    /// Whether an auto-fix is registered for the rule.
    pub fn fixable(self) -> bool {
        matches!(
            self,
            RuleId::SchemaVersion
                | RuleId::TransformOrder
                | RuleId::MissingGroupby
                | RuleId::SortInTransform
                | RuleId::InvalidTimeUnitParam
        )
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub rule_id: RuleId,
    pub severity: Severity,
    #[serde(rename = "path")]
    pub json_path: String,
    pub message: String,
    pub fixable: bool,
}

impl LintFinding {
    fn new(rule_id: RuleId, json_path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            rule_id,
            severity: rule_id.severity(),
            json_path: json_path.into(),
            message: message.into(),
            fixable: rule_id.fixable(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum LintInput<'a> {
    Raw(&'a str),
    Spec(&'a ChartSpec),
}

impl<'a> From<&'a str> for LintInput<'a> {
    fn from(s: &'a str) -> Self {
        LintInput::Raw(s)
    }
}

impl<'a> From<&'a String> for LintInput<'a> {
    fn from(s: &'a String) -> Self {
        LintInput::Raw(s)
    }
}

impl<'a> From<&'a ChartSpec> for LintInput<'a> {
    fn from(s: &'a ChartSpec) -> Self {
        LintInput::Spec(s)
    }
}

/// Optional context that sharpens some checks: the query drives the filter
/// reminder, the table identifies temporal columns.
#[derive(Debug, Clone, Copy, Default)]
pub struct LintContext<'a> {
    pub query: Option<&'a str>,
    pub table: Option<&'a DataTable>,
}

pub fn lint<'a>(input: impl Into<LintInput<'a>>) -> Vec<LintFinding> {
    lint_with(input, &LintContext::default())
}

pub fn lint_with<'a>(input: impl Into<LintInput<'a>>, cx: &LintContext<'_>) -> Vec<LintFinding> {
    let (doc, violations) = match input.into() {
        LintInput::Spec(spec) => (spec_to_document(spec), Vec::new()),
        LintInput::Raw(raw) => {
            let outcome = parse_spec(raw);
            match outcome.report {
                ValidityReport::JsonError { message, offset } => {
                    return vec![LintFinding::new(
                        RuleId::InvalidJson,
                        "",
                        format!("not a JSON object: {message} (byte {offset})"),
                    )];
                }
                ValidityReport::GrammarError { violations } => {
                    (outcome.document.unwrap_or(Json::Null), violations)
                }
                ValidityReport::ParsedOk => (outcome.document.unwrap_or(Json::Null), Vec::new()),
            }
        }
    };
    lint_document(&doc, &violations, cx)
}

fn lint_document(doc: &Json, violations: &[Violation], cx: &LintContext<'_>) -> Vec<LintFinding> {
    let mut out = Vec::new();
    let Some(root) = doc.as_object() else {
        return out;
    };
    check_schema(root, &mut out);
    check_order(root, &mut out);
    check_filter_hint(root, cx, &mut out);
    check_groupby(root, &mut out);
    check_transform_sort(root, &mut out);
    check_temporal_bins(root, cx, &mut out);
    for v in violations {
        if let Some(f) = classify_violation(doc, v) {
            out.push(f);
        }
    }

    let order = document_order(doc);
    let mut seen = std::collections::HashSet::new();
    out.retain(|f| seen.insert((f.rule_id, f.json_path.clone())));
    out.sort_by_key(|f| {
        (
            order.get(&f.json_path).copied().unwrap_or(usize::MAX),
            f.rule_id,
        )
    });
    out
}

fn check_schema(root: &Map<String, Json>, out: &mut Vec<LintFinding>) {
    match root.get("$schema") {
        None => out.push(LintFinding::new(
            RuleId::SchemaVersion,
            "",
            format!("missing `$schema`; expected {VEGA_LITE_V5_SCHEMA}"),
        )),
        Some(Json::String(s)) if s == VEGA_LITE_V5_SCHEMA => {}
        Some(other) => out.push(LintFinding::new(
            RuleId::SchemaVersion,
            "/$schema",
            format!("`$schema` is {other}; expected {VEGA_LITE_V5_SCHEMA}"),
        )),
    }
}

fn check_order(root: &Map<String, Json>, out: &mut Vec<LintFinding>) {
    let pos = |k: &str| root.keys().position(|x| x == k);
    if let (Some(t), Some(e)) = (pos("transform"), pos("encoding")) {
        if t > e {
            out.push(LintFinding::new(
                RuleId::TransformOrder,
                "/transform",
                "`transform` should come before `encoding`",
            ));
        }
    }
}

fn transforms(root: &Map<String, Json>) -> &[Json] {
    root.get("transform")
        .and_then(Json::as_array)
        .map(Vec::as_slice)
        .unwrap_or(&[])
}

const COMPARISON_PHRASES: &[&str] = &[
    "greater than",
    "larger than",
    "bigger than",
    "more than",
    "higher than",
    "less than",
    "smaller than",
    "fewer than",
    "lower than",
    "equal to",
    "equals",
    "at least",
    "at most",
    "not equal",
    "between",
    "before",
    "after",
    "above",
    "below",
    "exceed",
    ">=",
    "<=",
    ">",
    "<",
    "=",
];

/// Heuristic: does the query describe a row condition?
pub fn query_implies_filter(query: &str, table: Option<&DataTable>) -> bool {
    let q = query.to_lowercase();
    let padded = format!(
        " {} ",
        q.replace(|c: char| !c.is_alphanumeric() && !"<>=".contains(c), " ")
    );
    if COMPARISON_PHRASES.iter().any(|p| {
        if p.chars().all(|c| c.is_alphanumeric() || c == ' ') {
            padded.contains(&format!(" {p} "))
        } else {
            q.contains(p)
        }
    }) {
        return true;
    }
    // A numeric literal next to a named attribute, e.g. "whose age is 30".
    let has_number = q
        .split(|c: char| !c.is_ascii_digit() && c != '.')
        .any(|t| t.chars().any(|c| c.is_ascii_digit()));
    let names_column = table
        .map(|t| {
            t.columns().iter().any(|c| {
                let name = c.name.to_lowercase().replace('_', " ");
                padded.contains(&format!(" {name} ")) || q.contains(&c.name.to_lowercase())
            })
        })
        .unwrap_or(false);
    has_number && names_column
}

fn check_filter_hint(root: &Map<String, Json>, cx: &LintContext<'_>, out: &mut Vec<LintFinding>) {
    let Some(query) = cx.query else { return };
    let has_filter = transforms(root).iter().any(|t| t.get("filter").is_some());
    if !has_filter && query_implies_filter(query, cx.table) {
        let path = if root.contains_key("transform") {
            "/transform"
        } else {
            ""
        };
        out.push(LintFinding::new(
            RuleId::MissingFilterHint,
            path,
            "the query states a condition but the spec has no `filter` transform",
        ));
    }
}

/// Fields an aggregate at `index` must group by so the encoding can resolve:
/// encoded fields without their own aggregate, traced back through later
/// bin/timeUnit aliases, minus the aggregate's own outputs. `None` when a
/// later aggregate makes the inference unreliable.
pub(crate) fn required_groupby(root: &Map<String, Json>, index: usize) -> Option<Vec<String>> {
    let ts = transforms(root);
    let outputs: Vec<&str> = ts[index]
        .get("aggregate")
        .and_then(Json::as_array)
        .map(|ops| {
            ops.iter()
                .filter_map(|o| o.get("as").and_then(Json::as_str))
                .collect()
        })
        .unwrap_or_default();
    let later = &ts[index + 1..];
    if later.iter().any(|t| t.get("aggregate").is_some()) {
        return None;
    }
    let mut needed: Vec<String> = Vec::new();
    let encoding = root.get("encoding").and_then(Json::as_object);
    for (_, def) in encoding.into_iter().flatten() {
        let Some(def) = def.as_object() else { continue };
        if def.contains_key("aggregate") {
            continue;
        }
        let Some(mut field) = def.get("field").and_then(Json::as_str).map(str::to_string) else {
            continue;
        };
        for t in later.iter().rev() {
            let alias = match t.get("as") {
                Some(Json::Array(a)) => a.first().and_then(Json::as_str),
                Some(a) => a.as_str(),
                None => None,
            };
            if alias == Some(field.as_str()) {
                if let Some(src) = t.get("field").and_then(Json::as_str) {
                    field = src.to_string();
                }
            }
        }
        if !outputs.contains(&field.as_str()) && !needed.contains(&field) {
            needed.push(field);
        }
    }
    Some(needed)
}

fn check_groupby(root: &Map<String, Json>, out: &mut Vec<LintFinding>) {
    for (i, t) in transforms(root).iter().enumerate() {
        let Some(obj) = t.as_object() else { continue };
        if !obj.contains_key("aggregate") {
            continue;
        }
        let path = push_index("/transform", i);
        match obj.get("groupby") {
            None => out.push(LintFinding::new(
                RuleId::MissingGroupby,
                path,
                "aggregate transform has no `groupby`",
            )),
            Some(Json::Array(g)) => {
                let present: Vec<&str> = g.iter().filter_map(Json::as_str).collect();
                let missing: Vec<String> = required_groupby(root, i)
                    .unwrap_or_default()
                    .into_iter()
                    .filter(|f| !present.contains(&f.as_str()))
                    .collect();
                if !missing.is_empty() {
                    out.push(LintFinding::new(
                        RuleId::MissingGroupby,
                        push(&path, "groupby"),
                        format!("`groupby` omits encoded field(s) {}", missing.join(", ")),
                    ));
                }
            }
            Some(_) => {}
        }
    }
}

fn check_transform_sort(root: &Map<String, Json>, out: &mut Vec<LintFinding>) {
    for (i, t) in transforms(root).iter().enumerate() {
        if t.get("sort").is_some() {
            out.push(LintFinding::new(
                RuleId::SortInTransform,
                push_index("/transform", i),
                "`sort` is not a transform; order the axis with the encoding's `sort`",
            ));
        }
    }
}

fn is_time_unit_word(s: &str) -> bool {
    let s = s.to_ascii_lowercase();
    let s = s.strip_prefix("utc").unwrap_or(&s);
    [
        "year",
        "quarter",
        "month",
        "week",
        "day",
        "date",
        "weekday",
        "hours",
        "hour",
        "minutes",
        "seconds",
        "milliseconds",
        "yearmonth",
        "yearmonthdate",
        "monthdate",
        "dayofweek",
        "time",
        "timeunit",
        "unit",
    ]
    .iter()
    .any(|w| s == *w || s == format!("{w}s"))
}

fn is_temporal_field(
    root: &Map<String, Json>,
    field: &str,
    cx: &LintContext<'_>,
    upto: usize,
) -> bool {
    let from_table = cx
        .table
        .and_then(|t| t.column(field))
        .map(|c| c.kind == ValueKind::Datetime)
        .unwrap_or(false);
    let from_timeunit = transforms(root)[..upto]
        .iter()
        .any(|t| t.get("timeUnit").is_some() && t.get("as").and_then(Json::as_str) == Some(field));
    from_table || from_timeunit
}

/// Binning applied to dates is the bin/timeUnit mix-up even when the grammar
/// accepts it.
fn check_temporal_bins(root: &Map<String, Json>, cx: &LintContext<'_>, out: &mut Vec<LintFinding>) {
    let ts = transforms(root);
    for (i, t) in ts.iter().enumerate() {
        let Some(obj) = t.as_object() else { continue };
        if !obj.contains_key("bin") || obj.contains_key("timeUnit") {
            continue;
        }
        if let Some(field) = obj.get("field").and_then(Json::as_str) {
            if is_temporal_field(root, field, cx, i) {
                out.push(LintFinding::new(
                    RuleId::BinTimeUnitConfusion,
                    push(&push_index("/transform", i), "bin"),
                    format!("`{field}` is temporal; group dates with `timeUnit`, not `bin`"),
                ));
            }
        }
    }
    let encoding = root.get("encoding").and_then(Json::as_object);
    for (ch, def) in encoding.into_iter().flatten() {
        let Some(def) = def.as_object() else { continue };
        let binned = matches!(
            def.get("bin"),
            Some(Json::Bool(true)) | Some(Json::Object(_))
        );
        if !binned {
            continue;
        }
        let temporal_type = def.get("type").and_then(Json::as_str) == Some("temporal");
        let temporal_field = def
            .get("field")
            .and_then(Json::as_str)
            .map(|f| is_temporal_field(root, f, cx, ts.len()))
            .unwrap_or(false);
        if temporal_type || temporal_field {
            out.push(LintFinding::new(
                RuleId::BinTimeUnitConfusion,
                push(&push("/encoding", ch), "bin"),
                "temporal field is binned; use `timeUnit` instead",
            ));
        }
    }
}

fn parent_of(path: &str) -> &str {
    path.rfind('/').map(|i| &path[..i]).unwrap_or("")
}

fn last_segment(path: &str) -> &str {
    path.rfind('/').map(|i| &path[i + 1..]).unwrap_or(path)
}

fn classify_violation(doc: &Json, v: &Violation) -> Option<LintFinding> {
    let rule = match v.kind {
        // Reported by the document check at the same path.
        ViolationKind::SortInTransform => return None,
        ViolationKind::InvalidTimeunit => RuleId::InvalidTimeUnitParam,
        ViolationKind::UnknownProperty => {
            let key = last_segment(&v.path);
            let parent = parent_of(&v.path);
            let parent_key = last_segment(parent);
            let in_bin_object = parent_key == "bin";
            let owner = doc.pointer(parent).and_then(Json::as_object);
            let bin_beside_timeunit = owner
                .map(|o| {
                    (key == "timeUnit" && o.contains_key("bin"))
                        || (key == "bin" && o.contains_key("timeUnit"))
                })
                .unwrap_or(false);
            if (in_bin_object && is_time_unit_word(key)) || bin_beside_timeunit {
                RuleId::BinTimeUnitConfusion
            } else {
                RuleId::NonexistentProperty
            }
        }
        ViolationKind::UnknownMark | ViolationKind::UnknownAggregateOp => {
            RuleId::NonexistentProperty
        }
        ViolationKind::InvalidValue
            if doc
                .pointer(&v.path)
                .and_then(Json::as_object)
                .is_some_and(|o| o.contains_key("bin") && o.contains_key("timeUnit")) =>
        {
            return Some(LintFinding::new(
                RuleId::BinTimeUnitConfusion,
                push(&v.path, "timeUnit"),
                "transform sets both `bin` and `timeUnit`; group dates with `timeUnit` alone",
            ));
        }
        ViolationKind::InvalidValue
            if last_segment(&v.path) == "bin"
                && doc
                    .pointer(&v.path)
                    .and_then(Json::as_str)
                    .map(is_time_unit_word)
                    .unwrap_or(false) =>
        {
            RuleId::BinTimeUnitConfusion
        }
        _ => RuleId::Grammar,
    };
    Some(LintFinding::new(rule, v.path.clone(), v.message.clone()))
}

pub fn has_errors(findings: &[LintFinding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}
