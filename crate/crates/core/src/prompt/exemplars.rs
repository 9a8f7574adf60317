//! The few-shot exemplar set: one (query, spec) pair per chart type.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lint::{lint, Severity};
use crate::spec::{chart_type_of, parse_spec, BenchChartType, ChartSpec, Transform};

/// Presentation order; the scatter plot is Case 1.
pub const EXEMPLAR_ORDER: [BenchChartType; 7] = [
    BenchChartType::Scatter,
    BenchChartType::Bar,
    BenchChartType::Pie,
    BenchChartType::Line,
    BenchChartType::StackedBar,
    BenchChartType::GroupingLine,
    BenchChartType::GroupingScatter,
];

const BUILTIN: [(BenchChartType, &str, &str); 7] = [
    (
        BenchChartType::Scatter,
        include_str!("../../exemplars/scatter.query.txt"),
        include_str!("../../exemplars/scatter.spec.json"),
    ),
    (
        BenchChartType::Bar,
        include_str!("../../exemplars/bar.query.txt"),
        include_str!("../../exemplars/bar.spec.json"),
    ),
    (
        BenchChartType::Pie,
        include_str!("../../exemplars/pie.query.txt"),
        include_str!("../../exemplars/pie.spec.json"),
    ),
    (
        BenchChartType::Line,
        include_str!("../../exemplars/line.query.txt"),
        include_str!("../../exemplars/line.spec.json"),
    ),
    (
        BenchChartType::StackedBar,
        include_str!("../../exemplars/stacked_bar.query.txt"),
        include_str!("../../exemplars/stacked_bar.spec.json"),
    ),
    (
        BenchChartType::GroupingLine,
        include_str!("../../exemplars/grouping_line.query.txt"),
        include_str!("../../exemplars/grouping_line.spec.json"),
    ),
    (
        BenchChartType::GroupingScatter,
        include_str!("../../exemplars/grouping_scatter.query.txt"),
        include_str!("../../exemplars/grouping_scatter.spec.json"),
    ),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExemplarError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{chart_type} exemplar: {reason}")]
    Invalid {
        chart_type: BenchChartType,
        reason: String,
    },
    #[error("two exemplars for {0}")]
    Duplicate(BenchChartType),
    #[error("no exemplar demonstrates {0}")]
    MissingTask(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExemplar {
    pub chart_type: BenchChartType,
    pub query: String,
    /// Shown to the model as written.
    pub spec_text: String,
}

impl FewShotExemplar {
    fn spec(&self) -> Result<ChartSpec, ExemplarError> {
        let invalid = |reason: String| ExemplarError::Invalid {
            chart_type: self.chart_type,
            reason,
        };
        let spec = parse_spec(&self.spec_text)
            .spec
            .ok_or_else(|| invalid("spec does not parse".to_string()))?;
        if let Some(f) = lint(self.spec_text.as_str())
            .into_iter()
            .find(|f| f.severity == Severity::Error)
        {
            return Err(invalid(format!("lint {} at {}", f.rule_id, f.json_path)));
        }
        let actual = chart_type_of(&spec);
        if actual != self.chart_type {
            return Err(invalid(format!("spec draws a {actual}")));
        }
        Ok(spec)
    }
}

/// How a chart type is named in the exemplar header ("Case 1 is a scatter plot").
pub fn case_description(t: BenchChartType) -> &'static str {
    match t {
        BenchChartType::Bar => "bar chart",
        BenchChartType::Pie => "pie chart",
        BenchChartType::Line => "line chart",
        BenchChartType::Scatter => "scatter plot",
        BenchChartType::StackedBar => "stacked bar chart",
        BenchChartType::GroupingLine => "grouping line chart",
        BenchChartType::GroupingScatter => "grouping scatter plot",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExemplarSet {
    items: Vec<FewShotExemplar>,
}

impl ExemplarSet {
    /// Validates every exemplar and orders them. A complete set must also
    /// demonstrate sorting, filtering and aggregation somewhere.
    pub fn new(items: Vec<FewShotExemplar>) -> Result<Self, ExemplarError> {
        let mut specs = Vec::new();
        for (i, e) in items.iter().enumerate() {
            if items[..i].iter().any(|p| p.chart_type == e.chart_type) {
                return Err(ExemplarError::Duplicate(e.chart_type));
            }
            specs.push(e.spec()?);
        }
        if items.len() == EXEMPLAR_ORDER.len() {
            let sorts = specs
                .iter()
                .any(|s| s.encoding.values().any(|d| d.sort.is_some()));
            let filters = specs.iter().any(|s| {
                s.transforms
                    .iter()
                    .any(|t| matches!(t, Transform::Filter(_)))
            });
            let aggregates = specs.iter().any(|s| {
                s.transforms
                    .iter()
                    .any(|t| matches!(t, Transform::Aggregate { .. }))
                    || s.encoding.values().any(|d| d.aggregate.is_some())
            });
            for (ok, name) in [
                (sorts, "sorting"),
                (filters, "filtering"),
                (aggregates, "aggregation"),
            ] {
                if !ok {
                    return Err(ExemplarError::MissingTask(name));
                }
            }
        }
        let mut items = items;
        items.sort_by_key(|e| EXEMPLAR_ORDER.iter().position(|t| *t == e.chart_type));
        Ok(Self { items })
    }

    pub fn builtin() -> Self {
        let items = BUILTIN
            .iter()
            .map(|(t, q, s)| FewShotExemplar {
                chart_type: *t,
                query: q.to_string(),
                spec_text: s.to_string(),
            })
            .collect();
        Self::new(items).expect("built-in exemplars are valid")
    }

    /// Reads `<chart_type>.query.txt` / `<chart_type>.spec.json` pairs; chart
    /// types without both files are simply absent.
    pub fn load_dir(dir: &Path) -> Result<Self, ExemplarError> {
        let read = |p: PathBuf| -> Result<Option<String>, ExemplarError> {
            match std::fs::read_to_string(&p) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(ExemplarError::Io {
                    path: p,
                    message: e.to_string(),
                }),
            }
        };
        if !dir.is_dir() {
            return Err(ExemplarError::Io {
                path: dir.to_path_buf(),
                message: "not a directory".to_string(),
            });
        }
        let mut items = Vec::new();
        for t in EXEMPLAR_ORDER {
            let query = read(dir.join(format!("{}.query.txt", t.slug())))?;
            let spec = read(dir.join(format!("{}.spec.json", t.slug())))?;
            if let (Some(query), Some(spec_text)) = (query, spec) {
                items.push(FewShotExemplar {
                    chart_type: t,
                    query,
                    spec_text,
                });
            }
        }
        Self::new(items)
    }

    pub fn items(&self) -> &[FewShotExemplar] {
        &self.items
    }

    pub fn get(&self, t: BenchChartType) -> Option<&FewShotExemplar> {
        self.items.iter().find(|e| e.chart_type == t)
    }

    /// Chart types without an exemplar, in presentation order.
    pub fn missing(&self) -> Vec<BenchChartType> {
        EXEMPLAR_ORDER
            .into_iter()
            .filter(|t| self.get(*t).is_none())
            .collect()
    }

    /// The exemplar section placed ahead of the task.
    pub fn block(&self) -> String {
        let mut out = String::from(super::FEW_SHOT_HEADER);
        for (i, e) in self.items.iter().enumerate() {
            out.push_str(&format!(
                "\nCase {} is a {}:\nThe query is: \n```{}```\nThe Vega-Lite specification is:\n{}",
                i + 1,
                case_description(e.chart_type),
                e.query,
                e.spec_text
            ));
        }
        out
    }
}
