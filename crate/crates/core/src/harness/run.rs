//! Per-query evaluation: prompt, completion, parse, match, verdict.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::{io_err, BenchInstance, Hardness, HarnessError};
use crate::engine::{evaluate_full, Evaluation, Tolerance};
use crate::equivalence::{match_evaluations, match_pixels, MatchVerdict};
use crate::llm::{CompletionRequest, Gateway, DEFAULT_MODEL};
use crate::prompt::{build_prompt_with, ExemplarSet, PromptConfig, Strategy};
use crate::spec::{parse_spec, BenchChartType, ChartSpec, ValidityReport};
use crate::table::DataTable;

pub const OUTCOMES_FILE: &str = "outcomes.jsonl";
pub const TRUTH_DEFECTS_FILE: &str = "truth_defects.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    InvalidJson,
    InvalidVegaLite,
    ChartTypeMismatch,
    ChartContentMismatch,
}

impl Verdict {
    pub const ALL: [Verdict; 5] = [
        Verdict::Correct,
        Verdict::InvalidJson,
        Verdict::InvalidVegaLite,
        Verdict::ChartTypeMismatch,
        Verdict::ChartContentMismatch,
    ];

    pub const ERRORS: [Verdict; 4] = [
        Verdict::InvalidJson,
        Verdict::InvalidVegaLite,
        Verdict::ChartTypeMismatch,
        Verdict::ChartContentMismatch,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Correct => "Correct",
            Verdict::InvalidJson => "Invalid JSON",
            Verdict::InvalidVegaLite => "Invalid Vega-Lite",
            Verdict::ChartTypeMismatch => "Chart Type Mismatch",
            Verdict::ChartContentMismatch => "Chart Content Mismatch",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeDetail {
    Validity {
        report: ValidityReport,
    },
    /// The candidate parsed but its pipeline could not run on the table.
    EvaluationFailed {
        message: String,
    },
    Match {
        verdict: MatchVerdict,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub instance_id: String,
    pub query_index: usize,
    pub chart_type: BenchChartType,
    pub hardness: Hardness,
    pub verdict: Verdict,
    pub detail: OutcomeDetail,
    pub request_digest: String,
    pub spec_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub verdict: Verdict,
    pub detail: OutcomeDetail,
    pub candidate: Option<ChartSpec>,
}

/// First failing stage wins: JSON, then grammar and evaluability, then chart
/// type, then content.
pub fn classify(
    raw: &str,
    truth: &ChartSpec,
    truth_eval: &Evaluation,
    table: &DataTable,
) -> Classified {
    let parsed = parse_spec(raw);
    let spec = match (&parsed.report, parsed.spec) {
        (ValidityReport::ParsedOk, Some(spec)) => spec,
        (report, _) => {
            let verdict = match report {
                ValidityReport::JsonError { .. } => Verdict::InvalidJson,
                _ => Verdict::InvalidVegaLite,
            };
            return Classified {
                verdict,
                detail: OutcomeDetail::Validity {
                    report: report.clone(),
                },
                candidate: None,
            };
        }
    };
    let eval = match evaluate_full(&spec, table) {
        Ok(e) => e,
        Err(e) => {
            return Classified {
                verdict: Verdict::InvalidVegaLite,
                detail: OutcomeDetail::EvaluationFailed {
                    message: e.to_string(),
                },
                candidate: Some(spec),
            }
        }
    };
    let m = match_evaluations(&spec, &eval, truth, truth_eval, Tolerance::COMPARISON);
    let verdict = if !m.type_match {
        Verdict::ChartTypeMismatch
    } else if !m.content_match {
        Verdict::ChartContentMismatch
    } else {
        Verdict::Correct
    };
    Classified {
        verdict,
        detail: OutcomeDetail::Match { verdict: m },
        candidate: Some(spec),
    }
}

/// Optional raster renderer for the pixel metric.
pub trait PixelRenderer: Send + Sync {
    fn render_png(&self, spec: &ChartSpec, table: &DataTable) -> Result<Vec<u8>, String>;
}

pub struct RunConfig<'a> {
    pub strategy: Strategy,
    pub model_id: String,
    pub exemplars: Option<&'a ExemplarSet>,
    pub prompt: PromptConfig,
    pub workers: usize,
    /// When set, outcomes stream to `<dir>/outcomes.jsonl` and existing
    /// outcomes there are reused.
    pub out_dir: Option<PathBuf>,
    /// Instance ids to skip (an audit quarantine list).
    pub exclude: Vec<String>,
    pub renderer: Option<&'a dyn PixelRenderer>,
}

impl Default for RunConfig<'_> {
    fn default() -> Self {
        Self {
            strategy: Strategy::ZeroShot,
            model_id: DEFAULT_MODEL.to_string(),
            exemplars: None,
            prompt: PromptConfig::default(),
            workers: crate::llm::DEFAULT_CONCURRENCY,
            out_dir: None,
            exclude: Vec::new(),
            renderer: None,
        }
    }
}

/// A ground truth that could not be evaluated; not charged to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthDefect {
    pub instance_id: String,
    pub cause: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunResult {
    /// Sorted by (instance order, query index).
    pub outcomes: Vec<EvalOutcome>,
    pub truth_defects: Vec<TruthDefect>,
    pub excluded: Vec<String>,
    /// Outcomes reused from a previous, interrupted run.
    pub resumed: usize,
}

struct Item<'a> {
    instance: &'a BenchInstance,
    truth_eval: &'a Evaluation,
    query_index: usize,
    request: CompletionRequest,
}

/// Reads an outcomes file, dropping a torn final line.
pub fn load_outcomes(path: &Path) -> Result<Vec<EvalOutcome>, HarnessError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path, e)),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut out = Vec::new();
    for (n, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line).map_err(|e| io_err(path, format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let mut text = String::new();
    for it in items {
        text.push_str(&serde_json::to_string(it).map_err(|e| io_err(path, e))?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn run_experiment(
    instances: &[BenchInstance],
    config: &RunConfig<'_>,
    gateway: &Gateway,
) -> Result<RunResult, HarnessError> {
    let mut result = RunResult::default();
    let mut live: Vec<(&BenchInstance, Evaluation)> = Vec::new();
    for inst in instances {
        if inst.multi_table || config.exclude.contains(&inst.id) {
            result.excluded.push(inst.id.clone());
            continue;
        }
        match evaluate_full(&inst.truth_spec, &inst.table) {
            Ok(e) => live.push((inst, e)),
            Err(e) => result.truth_defects.push(TruthDefect {
                instance_id: inst.id.clone(),
                cause: e.to_string(),
            }),
        }
    }

    let mut items = Vec::new();
    for (inst, truth_eval) in &live {
        for (qi, query) in inst.queries.iter().enumerate() {
            let bundle = build_prompt_with(
                config.strategy,
                &inst.table,
                query,
                config.exemplars,
                &config.prompt,
            )
            .map_err(|e| HarnessError::Prompt {
                instance: inst.id.clone(),
                query: qi,
                message: e.to_string(),
            })?;
            items.push(Item {
                instance: inst,
                truth_eval,
                query_index: qi,
                request: CompletionRequest::from_bundle(config.model_id.clone(), &bundle),
            });
        }
    }

    // Resume: keep prior outcomes whose request is unchanged.
    let out_path = config.out_dir.as_ref().map(|d| d.join(OUTCOMES_FILE));
    let mut done: HashMap<(String, usize), EvalOutcome> = HashMap::new();
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(OUTCOMES_FILE);
        let prior = load_outcomes(&path)?;
        let wanted: HashMap<(String, usize), String> = items
            .iter()
            .map(|it| {
                (
                    (it.instance.id.clone(), it.query_index),
                    it.request.digest(),
                )
            })
            .collect();
        for o in prior {
            let key = (o.instance_id.clone(), o.query_index);
            if wanted.get(&key) == Some(&o.request_digest) {
                done.insert(key, o);
            }
        }
        let mut kept: Vec<&EvalOutcome> = items
            .iter()
            .filter_map(|it| done.get(&(it.instance.id.clone(), it.query_index)))
            .collect();
        kept.dedup_by_key(|o| (o.instance_id.clone(), o.query_index));
        write_lines(&path, &kept)?;
        write_lines(&dir.join(TRUTH_DEFECTS_FILE), &result.truth_defects)?;
    }
    result.resumed = done.len();

    let pending: Vec<&Item<'_>> = items
        .iter()
        .filter(|it| !done.contains_key(&(it.instance.id.clone(), it.query_index)))
        .collect();
    let mut fresh: Vec<EvalOutcome> = Vec::with_capacity(pending.len());
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<EvalOutcome, HarnessError>)>();
    let workers = config.workers.max(1).min(pending.len().max(1));
    let mut first_error = None;

    std::thread::scope(|s| -> Result<(), HarnessError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, pending) = (&next, &stop, &pending);
            s.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = pending.get(i) else { break };
                let r = attempt(item, gateway, config.renderer);
                if tx.send((i, r)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Reorder buffer: write outcomes in item order as soon as the prefix
        // is complete, so the file is deterministic and still streams.
        let mut file = match &out_path {
            Some(p) => Some(
                OpenOptions::new()
                    .append(true)
                    .create(true)
                    .open(p)
                    .map_err(|e| io_err(p, e))?,
            ),
            None => None,
        };
        let mut buffer: BTreeMap<usize, EvalOutcome> = BTreeMap::new();
        let mut written = 0;
        for (i, r) in rx {
            match r {
                Ok(o) => {
                    buffer.insert(i, o);
                }
                Err(e) => {
                    stop.store(true, Ordering::SeqCst);
                    first_error.get_or_insert(e);
                }
            }
            while let Some(o) = buffer.remove(&written) {
                if let (Some(f), Some(p)) = (file.as_mut(), &out_path) {
                    let line = serde_json::to_string(&o).map_err(|e| io_err(p, e))?;
                    writeln!(f, "{line}").map_err(|e| io_err(p, e))?;
                }
                fresh.push(o);
                written += 1;
            }
        }
        Ok(())
    })?;
    if let Some(e) = first_error {
        return Err(e);
    }

    let mut fresh = fresh.into_iter();
    for it in &items {
        let key = (it.instance.id.clone(), it.query_index);
        match done.remove(&key) {
            Some(o) => result.outcomes.push(o),
            None => result.outcomes.extend(fresh.next()),
        }
    }
    Ok(result)
}

fn attempt(
    item: &Item<'_>,
    gateway: &Gateway,
    renderer: Option<&dyn PixelRenderer>,
) -> Result<EvalOutcome, HarnessError> {
    let inst = item.instance;
    let record = gateway
        .complete(&item.request)
        .map_err(|source| HarnessError::Gateway {
            instance: inst.id.clone(),
            query: item.query_index,
            source,
        })?;
    let mut c = classify(
        &record.response_text,
        &inst.truth_spec,
        item.truth_eval,
        &inst.table,
    );
    if let (Some(r), Some(cand), OutcomeDetail::Match { verdict }) =
        (renderer, &c.candidate, &mut c.detail)
    {
        verdict.pixel_match = match (
            r.render_png(cand, &inst.table),
            r.render_png(&inst.truth_spec, &inst.table),
        ) {
            (Ok(a), Ok(b)) => match_pixels(&a, &b).ok(),
            _ => None,
        };
    }
    Ok(EvalOutcome {
        instance_id: inst.id.clone(),
        query_index: item.query_index,
        chart_type: inst.chart_type,
        hardness: inst.hardness,
        verdict: c.verdict,
        detail: c.detail,
        request_digest: record.request_digest,
        spec_text: record.response_text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::serialize_spec;

    fn setup() -> (DataTable, ChartSpec, Evaluation) {
        let table =
            DataTable::from_csv_reader("t", "Major,Age\nCS,20\nCS,21\nMath,30\n".as_bytes())
                .unwrap();
        let truth = parse_spec(include_str!("../../exemplars/scatter.spec.json"))
            .spec
            .unwrap();
        let eval = evaluate_full(&truth, &table).unwrap();
        (table, truth, eval)
    }

    #[test]
    fn stages_in_order() {
        let (table, truth, eval) = setup();
        let v = |raw: &str| classify(raw, &truth, &eval, &table).verdict;
        assert_eq!(v(&serialize_spec(&truth)), Verdict::Correct);
        assert_eq!(v("not json at all"), Verdict::InvalidJson);
        assert_eq!(
            v(r#"{"mark": "circle", "encoding": {}}"#),
            Verdict::InvalidVegaLite
        );
        assert_eq!(
            v(r#"{"mark": "point", "encoding": {"x": {"field": "Nope", "type": "nominal"}}}"#),
            Verdict::InvalidVegaLite
        );
        assert_eq!(
            v(
                r#"{"mark": "bar", "encoding": {"x": {"field": "Major", "type": "nominal"}, "y": {"aggregate": "count", "type": "quantitative"}}}"#
            ),
            Verdict::ChartTypeMismatch
        );
        assert_eq!(
            v(
                r#"{"mark": "point", "encoding": {"x": {"field": "Major", "type": "nominal"}, "y": {"aggregate": "sum", "field": "Age", "type": "quantitative"}}}"#
            ),
            Verdict::ChartContentMismatch
        );
    }

    #[test]
    fn torn_last_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(OUTCOMES_FILE);
        let o = EvalOutcome {
            instance_id: "a".into(),
            query_index: 0,
            chart_type: BenchChartType::Bar,
            hardness: Hardness::Easy,
            verdict: Verdict::InvalidJson,
            detail: OutcomeDetail::EvaluationFailed {
                message: "m".into(),
            },
            request_digest: "00".into(),
            spec_text: "x".into(),
        };
        let line = serde_json::to_string(&o).unwrap();
        std::fs::write(&p, format!("{line}\n{}", &line[..10])).unwrap();
        assert_eq!(load_outcomes(&p).unwrap(), vec![o]);
    }
}
