//! Benchmark defect detection: wrong ground-truth data, queries that do not
//! match their chart, missing chart-type or time-unit statements, and
//! questionable encodings.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{evaluate_full, truncate_decimals, Evaluation, Tolerance, TupleSet};
use crate::harness::{BenchInstance, HarnessError, Ingest};
use crate::spec::{AggOp, Channel, ChartSpec, FieldType, MarkType, TimeUnit, Transform};
use crate::table::DataTable;
use crate::value::{Value, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectClass {
    IncorrectQuery,
    InappropriateMapping,
    IncorrectData,
    UnstatedTimeUnit,
    UnstatedChartType,
}

impl DefectClass {
    pub const ALL: [DefectClass; 5] = [
        DefectClass::IncorrectQuery,
        DefectClass::InappropriateMapping,
        DefectClass::IncorrectData,
        DefectClass::UnstatedTimeUnit,
        DefectClass::UnstatedChartType,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DefectClass::IncorrectQuery => "incorrect_query",
            DefectClass::InappropriateMapping => "inappropriate_mapping",
            DefectClass::IncorrectData => "incorrect_data",
            DefectClass::UnstatedTimeUnit => "unstated_time_unit",
            DefectClass::UnstatedChartType => "unstated_chart_type",
        }
    }

    /// Whether the defect makes the instance unfit for scoring. Mapping
    /// problems do not change the data being compared.
    pub fn affects_scoring(self) -> bool {
        self != DefectClass::InappropriateMapping
    }
}

impl fmt::Display for DefectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Definite` findings are backed by a recomputation mismatch; `Heuristic`
/// ones by lexical or structural signals only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Definite,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// The truth could not be evaluated against the raw table.
    TruthNotEvaluable {
        cause: String,
    },
    /// Labels in the recomputed chart that the stored chart lacks, and the reverse.
    Labels {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    /// Stored values equal a recomputation over `field` with decimals dropped.
    Truncation {
        field: String,
        max_abs_deviation: f64,
    },
    Deviation {
        max_abs_deviation: f64,
    },
    /// A query names a statistic other than the one the truth computes, and
    /// computing the named statistic gives a different chart.
    StatisticConflict {
        query_index: usize,
        stated: AggOp,
        truth: AggOp,
        field: Option<String>,
    },
    UnstatedChartType {
        mark: MarkType,
        query_indices: Vec<usize>,
        ambiguous_terms: Vec<String>,
    },
    UnstatedTimeUnit {
        unit: TimeUnit,
        field: String,
    },
    TemporalAsNominal {
        channel: Channel,
        field: String,
    },
    CountAsQuantitative {
        channel: Channel,
        field: String,
        distinct: usize,
        total: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditFinding {
    pub instance_id: String,
    pub defect: DefectClass,
    pub confidence: Confidence,
    pub evidence: Evidence,
}

/// Keyword lists and thresholds, loadable from JSON so they can be extended
/// per corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub chart_keywords: BTreeMap<MarkType, Vec<String>>,
    pub ambiguous_chart_terms: Vec<String>,
    pub time_unit_words: BTreeMap<TimeUnit, Vec<String>>,
    /// Checked in order; earlier phrases claim their words first.
    pub statistic_phrases: Vec<(String, AggOp)>,
    pub small_integer_max: i64,
    pub deviation_threshold: f64,
}

const DEFAULT_CONFIG: &str = include_str!("keywords.json");

impl Default for AuditConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("built-in audit keywords are valid")
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Load { path: String, message: String },
}

impl AuditConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let err = |m: String| ConfigError::Load {
            path: path.display().to_string(),
            message: m,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn word_matches(token: &str, word: &str) -> bool {
    token == word || token.strip_suffix('s') == Some(word) || token.strip_suffix("es") == Some(word)
}

/// Start positions where `phrase` occurs as whole words; the last word may be
/// pluralized.
fn phrase_positions(toks: &[String], phrase: &str) -> Vec<usize> {
    let words = tokens(phrase);
    if words.is_empty() || words.len() > toks.len() {
        return Vec::new();
    }
    (0..=toks.len() - words.len())
        .filter(|&i| {
            words.iter().enumerate().all(|(j, w)| {
                let t = &toks[i + j];
                if j + 1 == words.len() {
                    word_matches(t, w)
                } else {
                    t == w
                }
            })
        })
        .collect()
}

fn mentions(toks: &[String], phrases: &[String]) -> bool {
    phrases
        .iter()
        .any(|p| !phrase_positions(toks, p).is_empty())
}

/// Statistics a query names, with longer phrases claiming words first.
fn stated_statistics(query: &str, config: &AuditConfig) -> BTreeSet<AggOp> {
    let toks = tokens(query);
    let mut claimed = vec![false; toks.len()];
    let mut ops = BTreeSet::new();
    let mut phrases: Vec<&(String, AggOp)> = config.statistic_phrases.iter().collect();
    phrases.sort_by_key(|(p, _)| std::cmp::Reverse(tokens(p).len()));
    for (phrase, op) in phrases {
        let n = tokens(phrase).len();
        for i in phrase_positions(&toks, phrase) {
            if claimed[i..i + n].iter().any(|c| *c) {
                continue;
            }
            claimed[i..i + n].iter_mut().for_each(|c| *c = true);
            ops.insert(*op);
        }
    }
    ops
}

fn raw_spec(spec: &ChartSpec) -> ChartSpec {
    let mut s = spec.clone();
    s.data = None;
    s
}

fn has_inline_data(spec: &ChartSpec) -> bool {
    matches!(spec.data, Some(crate::spec::DataRef::Inline(_)))
}

fn is_numeric(kind: ValueKind) -> bool {
    matches!(kind, ValueKind::Integer | ValueKind::Real)
}

fn label_set(t: &TupleSet) -> BTreeSet<String> {
    let discrete: Vec<usize> = (0..t.fields().len())
        .filter(|&i| !is_numeric(t.kinds()[i]))
        .collect();
    t.tuples()
        .iter()
        .flat_map(|row| {
            discrete
                .iter()
                .map(|&i| row[i].to_string())
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Largest numeric difference between tuples that share their discrete key.
fn max_deviation(a: &TupleSet, b: &TupleSet) -> Option<f64> {
    if a.fields() != b.fields() {
        return None;
    }
    let numeric: Vec<usize> = (0..a.fields().len())
        .filter(|&i| is_numeric(a.kinds()[i]) && is_numeric(b.kinds()[i]))
        .collect();
    let group = |t: &TupleSet| {
        let mut m: HashMap<Vec<String>, Vec<Vec<f64>>> = HashMap::new();
        for row in t.tuples() {
            let key = (0..row.len())
                .filter(|i| !numeric.contains(i))
                .map(|i| row[i].to_string())
                .collect();
            let nums = numeric
                .iter()
                .map(|&i| row[i].as_number().unwrap_or(f64::NAN))
                .collect();
            m.entry(key).or_default().push(nums);
        }
        for v in m.values_mut() {
            v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        }
        m
    };
    let (ga, gb) = (group(a), group(b));
    let mut worst: Option<f64> = None;
    for (k, rows_a) in &ga {
        let Some(rows_b) = gb.get(k) else { continue };
        for (ra, rb) in rows_a.iter().zip(rows_b) {
            for (x, y) in ra.iter().zip(rb) {
                let d = (x - y).abs();
                if d.is_finite() {
                    worst = Some(worst.map_or(d, |w: f64| w.max(d)));
                }
            }
        }
    }
    worst
}

fn finding(
    inst: &BenchInstance,
    defect: DefectClass,
    confidence: Confidence,
    evidence: Evidence,
) -> AuditFinding {
    AuditFinding {
        instance_id: inst.id.clone(),
        defect,
        confidence,
        evidence,
    }
}

/// Recomputes the chart from the raw table and compares it with what the
/// truth shows (its inline data when present), then checks each query's
/// named statistic against the one the truth computes.
pub fn audit_content(inst: &BenchInstance, config: &AuditConfig) -> Vec<AuditFinding> {
    let mut out = Vec::new();
    let not_evaluable = |cause: String| {
        finding(
            inst,
            DefectClass::IncorrectData,
            Confidence::Heuristic,
            Evidence::TruthNotEvaluable { cause },
        )
    };
    let raw = raw_spec(&inst.truth_spec);
    let exact = match evaluate_full(&raw, &inst.table) {
        Ok(e) => e,
        Err(e) => return vec![not_evaluable(e.to_string())],
    };
    let stored = if has_inline_data(&inst.truth_spec) {
        match evaluate_full(&inst.truth_spec, &inst.table) {
            Ok(e) => e,
            Err(e) => return vec![not_evaluable(format!("inline data: {e}"))],
        }
    } else {
        exact.clone()
    };

    let tol = Tolerance::COMPARISON;
    if !stored.by_channel.equals(&exact.by_channel, tol) {
        let (want, have) = (label_set(&exact.by_channel), label_set(&stored.by_channel));
        let missing: Vec<String> = want.difference(&have).cloned().collect();
        let extra: Vec<String> = have.difference(&want).cloned().collect();
        if !missing.is_empty() || !extra.is_empty() {
            out.push(finding(
                inst,
                DefectClass::IncorrectData,
                Confidence::Definite,
                Evidence::Labels { missing, extra },
            ));
        }
        let deviation = max_deviation(&stored.by_channel, &exact.by_channel).unwrap_or(0.0);
        let truncated_field = inst
            .table
            .columns()
            .iter()
            .filter(|c| c.kind == ValueKind::Real)
            .find(|c| {
                truncate_decimals(&inst.table, &c.name)
                    .ok()
                    .and_then(|t| evaluate_full(&raw, &t).ok())
                    .is_some_and(|e| e.by_channel.equals(&stored.by_channel, tol))
            });
        if let Some(c) = truncated_field {
            out.push(finding(
                inst,
                DefectClass::IncorrectData,
                Confidence::Definite,
                Evidence::Truncation {
                    field: c.name.clone(),
                    max_abs_deviation: deviation,
                },
            ));
        } else if deviation > config.deviation_threshold {
            out.push(finding(
                inst,
                DefectClass::IncorrectData,
                Confidence::Definite,
                Evidence::Deviation {
                    max_abs_deviation: deviation,
                },
            ));
        }
    }

    out.extend(statistic_conflicts(inst, &raw, &stored, config));
    out
}

#[derive(Clone, Copy)]
enum AggSite {
    Encoding(Channel),
    Transform(usize, usize),
}

fn aggregate_sites(spec: &ChartSpec) -> Vec<(AggSite, AggOp, Option<String>)> {
    let mut sites: Vec<_> = spec
        .encoding
        .iter()
        .filter_map(|(c, d)| {
            d.aggregate
                .map(|op| (AggSite::Encoding(*c), op, d.field.clone()))
        })
        .collect();
    for (ti, t) in spec.transforms.iter().enumerate() {
        if let Transform::Aggregate { ops, .. } = t {
            for (oi, o) in ops.iter().enumerate() {
                sites.push((AggSite::Transform(ti, oi), o.op, o.field.clone()));
            }
        }
    }
    sites
}

/// The one numeric column whose name the query spells out.
fn mentioned_numeric_column(query: &str, table: &DataTable) -> Option<String> {
    let toks = tokens(query);
    let hits: Vec<&str> = table
        .columns()
        .iter()
        .filter(|c| is_numeric(c.kind))
        .filter(|c| !phrase_positions(&toks, &c.name.replace('_', " ")).is_empty())
        .map(|c| c.name.as_str())
        .collect();
    match hits.as_slice() {
        [one] => Some(one.to_string()),
        _ => None,
    }
}

fn statistic_conflicts(
    inst: &BenchInstance,
    raw: &ChartSpec,
    stored: &Evaluation,
    config: &AuditConfig,
) -> Vec<AuditFinding> {
    let sites = aggregate_sites(raw);
    let [(site, truth_op, truth_field)] = sites.as_slice() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (qi, query) in inst.queries.iter().enumerate() {
        let stated = stated_statistics(query, config);
        let [op] = stated.iter().copied().collect::<Vec<_>>()[..] else {
            continue;
        };
        if op == *truth_op {
            continue;
        }
        let field = match (op, truth_field) {
            (AggOp::Count, f) => f.clone(),
            (_, Some(f)) => Some(f.clone()),
            (_, None) => match mentioned_numeric_column(query, &inst.table) {
                Some(f) => Some(f),
                None => continue,
            },
        };
        let mut alt = raw.clone();
        match *site {
            AggSite::Encoding(c) => {
                let def = alt.encoding.get_mut(&c).expect("site channel exists");
                def.aggregate = Some(op);
                def.field = field.clone();
            }
            AggSite::Transform(ti, oi) => {
                if let Transform::Aggregate { ops, .. } = &mut alt.transforms[ti] {
                    ops[oi].op = op;
                    ops[oi].field = field.clone();
                }
            }
        }
        let Ok(answer) = evaluate_full(&alt, &inst.table) else {
            continue;
        };
        if !answer
            .by_channel
            .equals(&stored.by_channel, Tolerance::COMPARISON)
        {
            out.push(finding(
                inst,
                DefectClass::IncorrectQuery,
                Confidence::Definite,
                Evidence::StatisticConflict {
                    query_index: qi,
                    stated: op,
                    truth: *truth_op,
                    field,
                },
            ));
        }
    }
    out
}

fn truth_time_units(spec: &ChartSpec) -> Vec<(TimeUnit, String)> {
    let mut out: Vec<(TimeUnit, String)> = spec
        .transforms
        .iter()
        .filter_map(|t| match t {
            Transform::TimeUnit { unit, field, .. } => Some((*unit, field.clone())),
            _ => None,
        })
        .collect();
    out.extend(
        spec.encoding
            .values()
            .filter_map(|d| Some((d.time_unit?, d.field.clone().unwrap_or_default()))),
    );
    out
}

/// Chart-type and time-unit statements missing from the queries.
pub fn audit_query_text(inst: &BenchInstance, config: &AuditConfig) -> Vec<AuditFinding> {
    let mut out = Vec::new();
    let toks: Vec<Vec<String>> = inst.queries.iter().map(|q| tokens(q)).collect();
    let mark = inst.truth_spec.mark;
    if let Some(words) = config.chart_keywords.get(&mark) {
        let unstated: Vec<usize> = (0..toks.len())
            .filter(|&i| !mentions(&toks[i], words))
            .collect();
        if !unstated.is_empty() {
            let ambiguous_terms: BTreeSet<String> = unstated
                .iter()
                .flat_map(|&i| {
                    config
                        .ambiguous_chart_terms
                        .iter()
                        .filter(|t| !phrase_positions(&toks[i], t).is_empty())
                        .cloned()
                        .collect::<Vec<_>>()
                })
                .collect();
            out.push(finding(
                inst,
                DefectClass::UnstatedChartType,
                Confidence::Heuristic,
                Evidence::UnstatedChartType {
                    mark,
                    query_indices: unstated,
                    ambiguous_terms: ambiguous_terms.into_iter().collect(),
                },
            ));
        }
    }
    for (unit, field) in truth_time_units(&inst.truth_spec) {
        let words = config
            .time_unit_words
            .get(&unit)
            .cloned()
            .unwrap_or_default();
        if !toks.iter().any(|t| mentions(t, &words)) {
            out.push(finding(
                inst,
                DefectClass::UnstatedTimeUnit,
                Confidence::Heuristic,
                Evidence::UnstatedTimeUnit { unit, field },
            ));
        }
    }
    out
}

/// Count-valued fields, traced through aggregate aliases.
fn count_fields(spec: &ChartSpec) -> BTreeSet<String> {
    spec.transforms
        .iter()
        .flat_map(|t| match t {
            Transform::Aggregate { ops, .. } => ops
                .iter()
                .filter(|o| o.op == AggOp::Count)
                .map(|o| o.alias.clone())
                .collect(),
            _ => Vec::new(),
        })
        .collect()
}

/// Encoding types that misrepresent the data.
pub fn audit_mapping(inst: &BenchInstance, config: &AuditConfig) -> Vec<AuditFinding> {
    let spec = &inst.truth_spec;
    let mut out = Vec::new();
    let temporal_aliases: BTreeSet<&str> = spec
        .transforms
        .iter()
        .filter_map(|t| match t {
            Transform::TimeUnit { alias, .. } => Some(alias.as_str()),
            _ => None,
        })
        .collect();
    let produced: BTreeSet<&str> = spec.transform_aliases().into_iter().collect();
    for (channel, def) in &spec.encoding {
        let Some(field) = &def.field else { continue };
        let raw_temporal = !produced.contains(field.as_str())
            && inst
                .table
                .column(field)
                .is_some_and(|c| c.kind == ValueKind::Datetime);
        if def.type_tag == FieldType::Nominal
            && def.time_unit.is_none()
            && (raw_temporal || temporal_aliases.contains(field.as_str()))
        {
            out.push(finding(
                inst,
                DefectClass::InappropriateMapping,
                Confidence::Heuristic,
                Evidence::TemporalAsNominal {
                    channel: *channel,
                    field: field.clone(),
                },
            ));
        }
    }

    if spec.mark == MarkType::Point {
        let counts = count_fields(spec);
        let eval = evaluate_full(&raw_spec(spec), &inst.table).ok();
        for channel in [Channel::X, Channel::Y] {
            let Some(def) = spec.encoding.get(&channel) else {
                continue;
            };
            let counted = def.aggregate == Some(AggOp::Count)
                || def.field.as_ref().is_some_and(|f| counts.contains(f));
            if def.type_tag != FieldType::Quantitative || !counted {
                continue;
            }
            let Some(values) = eval
                .as_ref()
                .and_then(|e| e.by_channel.column(channel.as_str()))
            else {
                continue;
            };
            let small: Option<Vec<i64>> = values
                .iter()
                .map(|v| match v {
                    Value::Int(i) if (0..=config.small_integer_max).contains(i) => Some(*i),
                    Value::Real(r)
                        if r.fract() == 0.0
                            && (0.0..=config.small_integer_max as f64).contains(r) =>
                    {
                        Some(*r as i64)
                    }
                    _ => None,
                })
                .collect();
            let Some(small) = small else { continue };
            let distinct = small.iter().collect::<BTreeSet<_>>().len();
            if small.len() >= 4 && distinct * 2 <= small.len() {
                out.push(finding(
                    inst,
                    DefectClass::InappropriateMapping,
                    Confidence::Heuristic,
                    Evidence::CountAsQuantitative {
                        channel,
                        field: def.field.clone().unwrap_or_else(|| "count".into()),
                        distinct,
                        total: small.len(),
                    },
                ));
            }
        }
    }
    out
}

pub fn audit_instance(inst: &BenchInstance, config: &AuditConfig) -> Vec<AuditFinding> {
    let mut out = audit_content(inst, config);
    out.extend(audit_query_text(inst, config));
    out.extend(audit_mapping(inst, config));
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub findings: Vec<AuditFinding>,
    /// Instances with a finding that affects scoring, sorted.
    pub quarantine: Vec<String>,
}

/// Audits every ingested instance; instances that failed ingest are
/// quarantined without findings.
pub fn audit_benchmark(ingest: &Ingest, config: &AuditConfig) -> AuditReport {
    let findings: Vec<AuditFinding> = std::thread::scope(|s| {
        let handles: Vec<_> = ingest
            .instances
            .iter()
            .map(|inst| s.spawn(move || audit_instance(inst, config)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("audit worker"))
            .collect()
    });
    let mut quarantine: BTreeSet<String> = findings
        .iter()
        .filter(|f| f.defect.affects_scoring())
        .map(|f| f.instance_id.clone())
        .collect();
    quarantine.extend(ingest.errors.iter().map(|e| e.id.clone()));
    AuditReport {
        findings,
        quarantine: quarantine.into_iter().collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Quarantine {
    pub exclude: Vec<String>,
}

impl Quarantine {
    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| crate::harness::io_err(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| crate::harness::io_err(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::harness::io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| crate::harness::io_err(path, e))
    }
}

fn summary(e: &Evidence) -> String {
    match e {
        Evidence::TruthNotEvaluable { cause } => format!("truth not evaluable: {cause}"),
        Evidence::Labels { missing, extra } => {
            format!("missing labels {missing:?}, unexpected labels {extra:?}")
        }
        Evidence::Truncation {
            field,
            max_abs_deviation,
        } => {
            format!("values match `{field}` with decimals dropped (max deviation {max_abs_deviation:.3})")
        }
        Evidence::Deviation { max_abs_deviation } => {
            format!("max deviation {max_abs_deviation:.3}")
        }
        Evidence::StatisticConflict {
            query_index,
            stated,
            truth,
            ..
        } => format!(
            "query {query_index} asks for {stated}, truth computes {truth}",
            stated = stated.as_str(),
            truth = truth.as_str()
        ),
        Evidence::UnstatedChartType {
            mark,
            query_indices,
            ambiguous_terms,
        } => format!(
            "queries {query_indices:?} never name a {} chart (ambiguous: {ambiguous_terms:?})",
            mark.as_str()
        ),
        Evidence::UnstatedTimeUnit { unit, field } => {
            format!("truth groups `{field}` by {unit}, no query says so")
        }
        Evidence::TemporalAsNominal { channel, field } => {
            format!("temporal `{field}` encoded nominal on {}", channel.as_str())
        }
        Evidence::CountAsQuantitative {
            channel,
            field,
            distinct,
            total,
        } => format!(
            "count `{field}` quantitative on {} ({distinct} distinct of {total})",
            channel.as_str()
        ),
    }
}

impl AuditReport {
    pub fn to_jsonl(&self) -> String {
        self.findings
            .iter()
            .map(|f| serde_json::to_string(f).expect("finding serializes") + "\n")
            .collect()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| Instance | Defect | Confidence | Evidence |\n| --- | --- | --- | --- |\n",
        );
        for f in &self.findings {
            let conf = match f.confidence {
                Confidence::Definite => "definite",
                Confidence::Heuristic => "heuristic",
            };
            s.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                f.instance_id,
                f.defect,
                conf,
                summary(&f.evidence).replace('|', "\\|")
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests;
