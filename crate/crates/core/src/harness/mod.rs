//! Benchmark ingest, the prompt → completion → verdict pipeline, and
//! accuracy reporting.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spec::{chart_type_of, parse_spec, BenchChartType, ChartSpec, ValidityReport};
use crate::table::DataTable;

mod report;
mod run;

pub use report::{
    aggregate, percent, render_comparison_table, AccuracyReport, ComparisonRow, ReportFormat,
    Stratum, VerdictShare, PUBLISHED_BASELINES,
};
pub use run::{
    classify, load_outcomes, run_experiment, Classified, EvalOutcome, OutcomeDetail, PixelRenderer,
    RunConfig, RunResult, TruthDefect, Verdict, OUTCOMES_FILE, TRUTH_DEFECTS_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hardness {
    Easy,
    Medium,
    Hard,
    ExtraHard,
}

impl Hardness {
    pub const ALL: [Hardness; 4] = [
        Hardness::Easy,
        Hardness::Medium,
        Hardness::Hard,
        Hardness::ExtraHard,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Hardness::Easy => "Easy",
            Hardness::Medium => "Medium",
            Hardness::Hard => "Hard",
            Hardness::ExtraHard => "Extra hard",
        }
    }

    /// Accepts `Extra Hard`, `extra_hard`, `extra-hard`, `extrahard`.
    pub fn parse_lenient(s: &str) -> Option<Hardness> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "easy" => Some(Hardness::Easy),
            "medium" => Some(Hardness::Medium),
            "hard" => Some(Hardness::Hard),
            "extrahard" | "extra" => Some(Hardness::ExtraHard),
            _ => None,
        }
    }
}

impl fmt::Display for Hardness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Strata an instance is reported under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub id: String,
    pub chart_type: BenchChartType,
    pub hardness: Hardness,
}

#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub id: String,
    pub dir: PathBuf,
    pub table: Arc<DataTable>,
    pub table_files: Vec<String>,
    pub queries: Vec<String>,
    pub truth_spec: ChartSpec,
    pub truth_text: String,
    pub chart_type: BenchChartType,
    pub hardness: Hardness,
    pub multi_table: bool,
}

impl BenchInstance {
    pub fn info(&self) -> InstanceInfo {
        InstanceInfo {
            id: self.id.clone(),
            chart_type: self.chart_type,
            hardness: self.hardness,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceMeta {
    id: String,
    table_file: OneOrMany,
    /// Name used in prompts; defaults to the table file's stem.
    #[serde(default)]
    table_name: Option<String>,
    queries: Vec<String>,
    hardness: String,
    chart_type: String,
    #[serde(default)]
    multi_table: bool,
}

pub const META_FILE: &str = "meta.json";
pub const TRUTH_FILE: &str = "truth.vl.json";

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("instance {id}: {cause}")]
pub struct MalformedInstance {
    pub id: String,
    pub cause: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingest {
    pub instances: Vec<BenchInstance>,
    pub errors: Vec<MalformedInstance>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("outcome references unknown instance {0}")]
    UnknownInstance(String),
    #[error("instance {instance} query {query}: {message}")]
    Prompt {
        instance: String,
        query: usize,
        message: String,
    },
    #[error("instance {instance} query {query}: {source}")]
    Gateway {
        instance: String,
        query: usize,
        #[source]
        source: crate::llm::GatewayError,
    },
}

pub(crate) fn io_err(path: &Path, e: impl fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Loads every `<id>/meta.json` under `root`, in directory-name order.
/// Directories without a meta file are skipped; broken instances are
/// collected as errors without stopping the ingest.
pub fn ingest_benchmark(root: &Path) -> Result<Ingest, HarnessError> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| io_err(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(META_FILE).is_file())
        .collect();
    dirs.sort();
    let mut out = Ingest::default();
    for dir in dirs {
        let fallback_id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match load_instance(&dir) {
            Ok(inst) => out.instances.push(inst),
            Err((id, cause)) => out.errors.push(MalformedInstance {
                id: id.unwrap_or(fallback_id),
                cause,
            }),
        }
    }
    Ok(out)
}

fn load_instance(dir: &Path) -> Result<BenchInstance, (Option<String>, String)> {
    let meta_text = std::fs::read_to_string(dir.join(META_FILE))
        .map_err(|e| (None, format!("{META_FILE}: {e}")))?;
    let meta: InstanceMeta =
        serde_json::from_str(&meta_text).map_err(|e| (None, format!("{META_FILE}: {e}")))?;
    let id = meta.id.clone();
    let fail = |msg: String| (Some(id.clone()), msg);

    let table_files = match meta.table_file {
        OneOrMany::One(f) => vec![f],
        OneOrMany::Many(v) => v,
    };
    let first = table_files
        .first()
        .ok_or_else(|| fail("no table_file".into()))?;
    let stem = Path::new(first)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| first.clone());
    let table = DataTable::from_csv_path(&dir.join(first))
        .map_err(|e| fail(format!("{first}: {e}")))?
        .with_name(meta.table_name.clone().unwrap_or(stem));

    let truth_text = std::fs::read_to_string(dir.join(TRUTH_FILE))
        .map_err(|e| fail(format!("{TRUTH_FILE}: {e}")))?;
    let parsed = parse_spec(&truth_text);
    let truth_spec = match (parsed.report, parsed.spec) {
        (ValidityReport::ParsedOk, Some(s)) => s,
        (report, _) => {
            return Err(fail(format!(
                "{TRUTH_FILE} is not a valid spec: {report:?}"
            )))
        }
    };
    let chart_type = BenchChartType::parse_lenient(&meta.chart_type)
        .ok_or_else(|| fail(format!("unknown chart_type {:?}", meta.chart_type)))?;
    let actual = chart_type_of(&truth_spec);
    if actual != chart_type {
        return Err(fail(format!(
            "chart_type {chart_type} but truth draws a {actual}"
        )));
    }
    let hardness = Hardness::parse_lenient(&meta.hardness)
        .ok_or_else(|| fail(format!("unknown hardness {:?}", meta.hardness)))?;
    if meta.queries.is_empty() {
        return Err(fail("no queries".into()));
    }
    Ok(BenchInstance {
        id: meta.id,
        dir: dir.to_path_buf(),
        table: Arc::new(table),
        multi_table: meta.multi_table || table_files.len() > 1,
        table_files,
        queries: meta.queries,
        truth_spec,
        truth_text,
        chart_type,
        hardness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_instance(root: &Path, id: &str, meta: serde_json::Value, truth: &str, csv: &str) {
        let d = root.join(id);
        std::fs::create_dir_all(&d).unwrap();
        std::fs::write(d.join(META_FILE), meta.to_string()).unwrap();
        std::fs::write(d.join(TRUTH_FILE), truth).unwrap();
        std::fs::write(d.join("data.csv"), csv).unwrap();
    }

    const CASE1: &str = include_str!("../../exemplars/scatter.spec.json");

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let ingest = ingest_benchmark(dir.path()).unwrap();
        assert!(ingest.instances.is_empty() && ingest.errors.is_empty());
    }

    #[test]
    fn loads_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let meta = |id: &str, tables: serde_json::Value| serde_json::json!({"id": id, "table_file": tables, "queries": ["q"], "hardness": "Extra Hard", "chart_type": "Scatter"});
        write_instance(
            dir.path(),
            "a",
            meta("a", "data.csv".into()),
            CASE1,
            "Major\nCS\n",
        );
        write_instance(
            dir.path(),
            "b",
            meta("b", serde_json::json!(["data.csv", "other.csv"])),
            CASE1,
            "Major\nCS\n",
        );
        write_instance(
            dir.path(),
            "c",
            meta("c", "data.csv".into()),
            "{\"mark\": \"bar\"",
            "Major\nCS\n",
        );
        write_instance(
            dir.path(),
            "d",
            serde_json::json!({"id": "d", "table_file": "data.csv", "queries": ["q"], "hardness": "Easy", "chart_type": "Pie"}),
            CASE1,
            "Major\nCS\n",
        );
        let ingest = ingest_benchmark(dir.path()).unwrap();
        assert_eq!(ingest.instances.len(), 2);
        assert_eq!(ingest.instances[0].hardness, Hardness::ExtraHard);
        assert_eq!(ingest.instances[0].table.name(), "data");
        assert!(!ingest.instances[0].multi_table);
        assert!(ingest.instances[1].multi_table);
        assert_eq!(
            ingest
                .errors
                .iter()
                .map(|e| e.id.as_str())
                .collect::<Vec<_>>(),
            vec!["c", "d"]
        );
    }

    #[test]
    fn hardness_labels() {
        for h in Hardness::ALL {
            assert_eq!(Hardness::parse_lenient(h.label()), Some(h));
        }
    }
}
