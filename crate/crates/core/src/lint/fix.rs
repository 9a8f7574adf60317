//! Auto-fixes for the mechanical lint rules, applied to the JSON document.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use super::{required_groupby, LintFinding, LintInput, RuleId};
use crate::spec::{
    parse_document, parse_spec, spec_to_document, ChartSpec, ValidityReport, VEGA_LITE_V5_SCHEMA,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedFix {
    pub rule_id: RuleId,
    pub path: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixError {
    #[error("cannot fix {rule_id} at {path:?}: {reason}")]
    UnfixableFinding {
        rule_id: RuleId,
        path: String,
        reason: String,
    },
    #[error("input is not a JSON object")]
    InvalidJson,
    #[error("fixed document is still not a valid specification")]
    StillInvalid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixOutcome {
    pub document: Json,
    /// The fixed document as a spec, when it now parses cleanly.
    pub spec: Option<ChartSpec>,
    pub applied: Vec<AppliedFix>,
}

impl FixOutcome {
    pub fn text(&self) -> String {
        serde_json::to_string_pretty(&self.document).unwrap_or_default()
    }
}

/// Apply every registered fix for `findings`; fails on the first finding
/// whose fix cannot be inferred. Findings for rules without a fix are ignored.
pub fn fix<'a>(
    input: impl Into<LintInput<'a>>,
    findings: &[LintFinding],
) -> Result<FixOutcome, FixError> {
    let mut doc = document_of(input.into())?;
    let (applied, errors) = apply_all(&mut doc, findings, true);
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    Ok(finish(doc, applied))
}

/// Like [`fix`] but skips unfixable findings and reports them alongside.
pub fn fix_best_effort<'a>(
    input: impl Into<LintInput<'a>>,
    findings: &[LintFinding],
) -> Result<(FixOutcome, Vec<FixError>), FixError> {
    let mut doc = document_of(input.into())?;
    let (applied, errors) = apply_all(&mut doc, findings, false);
    Ok((finish(doc, applied), errors))
}

/// AST form: the result must still be a valid spec.
pub fn fix_spec(
    spec: &ChartSpec,
    findings: &[LintFinding],
) -> Result<(ChartSpec, Vec<AppliedFix>), FixError> {
    let out = fix(spec, findings)?;
    let spec = out.spec.ok_or(FixError::StillInvalid)?;
    Ok((spec, out.applied))
}

fn document_of(input: LintInput<'_>) -> Result<Json, FixError> {
    match input {
        LintInput::Spec(s) => Ok(spec_to_document(s)),
        LintInput::Raw(raw) => {
            let outcome = parse_spec(raw);
            match outcome.report {
                ValidityReport::JsonError { .. } => Err(FixError::InvalidJson),
                _ => outcome
                    .document
                    .filter(Json::is_object)
                    .ok_or(FixError::InvalidJson),
            }
        }
    }
}

fn finish(document: Json, applied: Vec<AppliedFix>) -> FixOutcome {
    let spec = parse_document(&document).ok();
    FixOutcome {
        document,
        spec,
        applied,
    }
}

/// Corrections for time-unit names models commonly invent.
pub(crate) fn corrected_time_unit(s: &str) -> Option<&'static str> {
    let key: String = s
        .to_ascii_lowercase()
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .collect();
    Some(match key.as_str() {
        "weekday" | "weekdays" | "dayofweek" | "dayoftheweek" | "days" => "day",
        "years" => "year",
        "months" => "month",
        "dates" | "dayofmonth" => "date",
        "hour" => "hours",
        "yearmonths" => "yearmonth",
        _ => return None,
    })
}

fn transform_index(path: &str) -> Option<usize> {
    path.strip_prefix("/transform/")?
        .split('/')
        .next()?
        .parse()
        .ok()
}

fn apply_all(
    doc: &mut Json,
    findings: &[LintFinding],
    strict: bool,
) -> (Vec<AppliedFix>, Vec<FixError>) {
    let mut applied = Vec::new();
    let mut errors = Vec::new();
    let by_rule = |r: RuleId| findings.iter().filter(move |f| f.rule_id == r);
    let root = doc.as_object_mut().expect("document is an object");

    let fail = |errors: &mut Vec<FixError>, f: &LintFinding, reason: String| {
        errors.push(FixError::UnfixableFinding {
            rule_id: f.rule_id,
            path: f.json_path.clone(),
            reason,
        });
    };

    // In-place edits first, while transform indices are still the linted ones.
    for f in by_rule(RuleId::InvalidTimeUnitParam) {
        let slot = root_pointer_mut(root, &f.json_path);
        let current = slot.as_deref().and_then(Json::as_str).map(str::to_string);
        match (slot, current.as_deref().and_then(corrected_time_unit)) {
            (Some(v), Some(unit)) => {
                *v = Json::String(unit.to_string());
                applied.push(AppliedFix {
                    rule_id: f.rule_id,
                    path: f.json_path.clone(),
                    description: format!("time unit {:?} -> {unit:?}", current.unwrap_or_default()),
                });
            }
            _ => fail(
                &mut errors,
                f,
                format!("no known correction for {current:?}"),
            ),
        }
        if strict && !errors.is_empty() {
            return (applied, errors);
        }
    }

    for f in by_rule(RuleId::MissingGroupby) {
        let inferred = transform_index(&f.json_path)
            .filter(|&i| {
                i < root
                    .get("transform")
                    .and_then(Json::as_array)
                    .map_or(0, Vec::len)
            })
            .and_then(|i| required_groupby(root, i).map(|g| (i, g)));
        match inferred {
            Some((i, needed)) if !needed.is_empty() => {
                let t = root["transform"][i]
                    .as_object_mut()
                    .expect("aggregate transform");
                let mut groupby: Vec<Json> = t
                    .get("groupby")
                    .and_then(Json::as_array)
                    .cloned()
                    .unwrap_or_default();
                let mut added = Vec::new();
                for field in needed {
                    if !groupby.iter().any(|g| g.as_str() == Some(field.as_str())) {
                        groupby.push(Json::String(field.clone()));
                        added.push(field);
                    }
                }
                t.insert("groupby".to_string(), Json::Array(groupby));
                applied.push(AppliedFix {
                    rule_id: f.rule_id,
                    path: f.json_path.clone(),
                    description: format!("groupby += [{}]", added.join(", ")),
                });
            }
            Some(_) => fail(
                &mut errors,
                f,
                "no non-aggregated encoded field to group by".to_string(),
            ),
            None => fail(&mut errors, f, "groupby cannot be inferred".to_string()),
        }
        if strict && !errors.is_empty() {
            return (applied, errors);
        }
    }

    if let Some(f) = by_rule(RuleId::SchemaVersion).next() {
        let mut rebuilt = Map::new();
        rebuilt.insert("$schema".to_string(), json!(VEGA_LITE_V5_SCHEMA));
        for (k, v) in std::mem::take(root) {
            if k != "$schema" {
                rebuilt.insert(k, v);
            }
        }
        *root = rebuilt;
        applied.push(AppliedFix {
            rule_id: f.rule_id,
            path: f.json_path.clone(),
            description: format!("$schema = {VEGA_LITE_V5_SCHEMA}"),
        });
    }

    // Removals run from the last transform back so earlier indices stay valid.
    let mut sorts: Vec<(usize, &LintFinding)> = by_rule(RuleId::SortInTransform)
        .filter_map(|f| transform_index(&f.json_path).map(|i| (i, f)))
        .collect();
    sorts.sort_by_key(|s| std::cmp::Reverse(s.0));
    sorts.dedup_by_key(|s| s.0);
    for (i, f) in sorts {
        match move_sort(root, i) {
            Ok(description) => applied.push(AppliedFix {
                rule_id: f.rule_id,
                path: f.json_path.clone(),
                description,
            }),
            Err(reason) => fail(&mut errors, f, reason),
        }
        if strict && !errors.is_empty() {
            return (applied, errors);
        }
    }

    if let Some(f) = by_rule(RuleId::TransformOrder).next() {
        const ORDER: [&str; 5] = ["$schema", "data", "transform", "mark", "encoding"];
        let mut old = std::mem::take(root);
        for k in ORDER {
            if let Some(v) = old.remove(k) {
                root.insert(k.to_string(), v);
            }
        }
        root.extend(old);
        applied.push(AppliedFix {
            rule_id: f.rule_id,
            path: f.json_path.clone(),
            description: "moved `transform` ahead of `encoding`".to_string(),
        });
    }

    (applied, errors)
}

fn root_pointer_mut<'a>(root: &'a mut Map<String, Json>, pointer: &str) -> Option<&'a mut Json> {
    let rest = pointer.strip_prefix('/')?;
    let (head, tail) = match rest.find('/') {
        Some(i) => (&rest[..i], &rest[i..]),
        None => (rest, ""),
    };
    let head = head.replace("~1", "/").replace("~0", "~");
    let v = root.get_mut(&head)?;
    if tail.is_empty() {
        Some(v)
    } else {
        v.pointer_mut(tail)
    }
}

fn is_quantitative(def: &Json) -> bool {
    def.get("aggregate").is_some() || def.get("type").and_then(Json::as_str) == Some("quantitative")
}

/// Move the `sort` of transform `index` into the encoding and drop it from
/// the transform list.
fn move_sort(root: &mut Map<String, Json>, index: usize) -> Result<String, String> {
    let sort = root["transform"][index]["sort"].clone();
    let mut keys: Vec<(String, bool)> = Vec::new();
    let parse_item = |item: &Json| -> Result<(String, bool), String> {
        match item {
            Json::String(s) => Ok(match s.strip_prefix('-') {
                Some(f) => (f.to_string(), true),
                None => (s.clone(), false),
            }),
            Json::Object(o) => {
                let field = o
                    .get("field")
                    .and_then(Json::as_str)
                    .ok_or("sort key has no `field`")?;
                let desc = o.get("order").and_then(Json::as_str) == Some("descending");
                Ok((field.to_string(), desc))
            }
            other => Err(format!("unrecognized sort key {other}")),
        }
    };
    match &sort {
        Json::Array(items) => {
            for item in items {
                keys.push(parse_item(item)?);
            }
        }
        Json::Null => {}
        other => keys.push(parse_item(other)?),
    }

    let mut moved = Vec::new();
    if !keys.is_empty() {
        let encoding = root
            .get_mut("encoding")
            .and_then(Json::as_object_mut)
            .ok_or("no encoding to carry the sort")?;
        let mut touched: Vec<String> = Vec::new();
        for (field, desc) in keys {
            let order = if desc { "descending" } else { "ascending" };
            let bound = encoding
                .iter()
                .find(|(_, d)| d.get("field").and_then(Json::as_str) == Some(field.as_str()))
                .map(|(c, d)| (c.clone(), is_quantitative(d)));
            let discrete_axis = ["x", "y"]
                .into_iter()
                .find(|c| encoding.get(*c).is_some_and(|d| !is_quantitative(d)));
            let (target, value) = match bound {
                Some((c, quant)) if quant && (c == "x" || c == "y") => {
                    let other = if c == "x" { "y" } else { "x" };
                    if discrete_axis == Some(other) {
                        let by = if desc { format!("-{c}") } else { c.clone() };
                        (other.to_string(), Json::String(by))
                    } else {
                        (c, json!(order))
                    }
                }
                Some((c, _)) => (c, json!(order)),
                None => match discrete_axis {
                    Some(axis) => (axis.to_string(), json!({"field": field, "order": order})),
                    None => {
                        return Err(format!(
                            "sort field `{field}` is not encoded and no discrete axis exists"
                        ))
                    }
                },
            };
            if touched.contains(&target) {
                continue;
            }
            let def = encoding[&target]
                .as_object_mut()
                .ok_or("encoding entry is not an object")?;
            if !def.contains_key("sort") {
                moved.push(format!("{target}.sort = {value}"));
                def.insert("sort".to_string(), value);
            }
            touched.push(target);
        }
    }

    let list = root
        .get_mut("transform")
        .and_then(Json::as_array_mut)
        .expect("transform list");
    let t = list[index].as_object_mut().expect("transform object");
    t.remove("sort");
    if t.is_empty() {
        list.remove(index);
    }
    if list.is_empty() {
        root.remove("transform");
    }
    Ok(if moved.is_empty() {
        "removed transform sort".to_string()
    } else {
        format!("moved sort to encoding: {}", moved.join(", "))
    })
}
