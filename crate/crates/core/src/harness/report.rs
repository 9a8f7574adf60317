//! Accuracy aggregation and table rendering.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::run::{EvalOutcome, OutcomeDetail, Verdict};
use super::{Hardness, HarnessError, InstanceInfo};
use crate::spec::BenchChartType;

/// Published accuracies of earlier approaches, in percent.
pub const PUBLISHED_BASELINES: [(&str, f64); 5] = [
    ("Seq2Vis", 2.0),
    ("Transformer", 3.0),
    ("ncNet", 26.0),
    ("Chat2VIS", 43.0),
    ("RGVisNet", 45.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Md,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Some(ReportFormat::Md),
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    pub attempted: usize,
    pub correct: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictShare {
    pub verdict: Verdict,
    pub count: usize,
    pub rate: f64,
}

/// Every rate shares the same denominator within its stratum; the error
/// shares and `overall` all divide by `attempted`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub attempted: usize,
    pub correct: usize,
    pub overall: f64,
    pub by_chart_type: Vec<Stratum>,
    pub by_hardness: Vec<Stratum>,
    pub error_distribution: Vec<VerdictShare>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixel_accuracy: Option<f64>,
}

fn rate(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Two-decimal percent, e.g. `43.23%`.
pub fn percent(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}

fn strata<K: Copy + Eq + std::hash::Hash>(
    order: &[K],
    label: impl Fn(K) -> &'static str,
    counts: &HashMap<K, (usize, usize)>,
) -> Vec<Stratum> {
    order
        .iter()
        .filter_map(|k| {
            let &(attempted, correct) = counts.get(k)?;
            Some(Stratum {
                label: label(*k).to_string(),
                attempted,
                correct,
                rate: rate(correct, attempted),
            })
        })
        .collect()
}

/// Folds outcomes into a report; strata appear in table order and only when
/// present in the data.
pub fn aggregate(
    outcomes: &[EvalOutcome],
    instances: &[InstanceInfo],
) -> Result<AccuracyReport, HarnessError> {
    let known: HashMap<&str, &InstanceInfo> =
        instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut by_type: HashMap<BenchChartType, (usize, usize)> = HashMap::new();
    let mut by_hard: HashMap<Hardness, (usize, usize)> = HashMap::new();
    let mut verdicts: HashMap<Verdict, usize> = HashMap::new();
    let (mut pixel_seen, mut pixel_hits) = (false, 0);
    for o in outcomes {
        let info = known
            .get(o.instance_id.as_str())
            .ok_or_else(|| HarnessError::UnknownInstance(o.instance_id.clone()))?;
        let ok = usize::from(o.verdict == Verdict::Correct);
        let t = by_type.entry(info.chart_type).or_default();
        t.0 += 1;
        t.1 += ok;
        let h = by_hard.entry(info.hardness).or_default();
        h.0 += 1;
        h.1 += ok;
        *verdicts.entry(o.verdict).or_default() += 1;
        if let OutcomeDetail::Match { verdict } = &o.detail {
            if let Some(p) = verdict.pixel_match {
                pixel_seen = true;
                pixel_hits += usize::from(p);
            }
        }
    }
    let attempted = outcomes.len();
    let correct = verdicts.get(&Verdict::Correct).copied().unwrap_or(0);
    Ok(AccuracyReport {
        attempted,
        correct,
        overall: rate(correct, attempted),
        by_chart_type: strata(&BenchChartType::ALL, BenchChartType::label, &by_type),
        by_hardness: strata(&Hardness::ALL, Hardness::label, &by_hard),
        error_distribution: Verdict::ERRORS
            .iter()
            .map(|v| {
                let count = verdicts.get(v).copied().unwrap_or(0);
                VerdictShare {
                    verdict: *v,
                    count,
                    rate: rate(count, attempted),
                }
            })
            .collect(),
        pixel_accuracy: pixel_seen.then(|| rate(pixel_hits, attempted)),
    })
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn csv_row(cells: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(cells).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv of utf-8 cells")
}

fn table(format: ReportFormat, header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Md => {
            out.push_str(&md_row(header));
            out.push_str(&md_row(&vec!["---".to_string(); header.len()]));
            for r in rows {
                out.push_str(&md_row(r));
            }
        }
        _ => {
            out.push_str(&csv_row(header));
            for r in rows {
                out.push_str(&csv_row(r));
            }
        }
    }
    out
}

impl AccuracyReport {
    /// Accuracy table (overall, chart types, hardness) followed by the error
    /// distribution; JSON is the report itself.
    pub fn render(&self, format: ReportFormat) -> String {
        if format == ReportFormat::Json {
            let mut s = serde_json::to_string_pretty(self).expect("report serializes");
            s.push('\n');
            return s;
        }
        let strata = self.by_chart_type.iter().chain(&self.by_hardness);
        let mut header = vec!["Accuracy".to_string(), "Overall".to_string()];
        header.extend(strata.clone().map(|s| s.label.clone()));
        let mut row = vec![format!("n={}", self.attempted), percent(self.overall)];
        row.extend(strata.map(|s| percent(s.rate)));
        let mut out = table(format, &header, &[row]);

        out.push('\n');
        let mut header = vec!["Errors".to_string()];
        header.extend(
            self.error_distribution
                .iter()
                .map(|e| e.verdict.label().to_string()),
        );
        let mut row = vec![format!("n={}", self.attempted)];
        row.extend(self.error_distribution.iter().map(|e| percent(e.rate)));
        out.push_str(&table(format, &header, &[row]));

        if let Some(p) = self.pixel_accuracy {
            out.push('\n');
            out.push_str(&table(
                format,
                &["Metric".to_string(), "Accuracy".to_string()],
                &[vec!["Pixel match".to_string(), percent(p)]],
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub approach: String,
    /// Percent, not a fraction.
    pub accuracy: f64,
}

/// Approach × accuracy, baselines first then the supplied reports.
pub fn render_comparison_table(
    reports: &[(&str, &AccuracyReport)],
    baselines: &[(&str, f64)],
    format: ReportFormat,
) -> String {
    let rows: Vec<ComparisonRow> = baselines
        .iter()
        .map(|(n, a)| ComparisonRow {
            approach: n.to_string(),
            accuracy: *a,
        })
        .chain(reports.iter().map(|(n, r)| ComparisonRow {
            approach: n.to_string(),
            accuracy: r.overall * 100.0,
        }))
        .collect();
    if format == ReportFormat::Json {
        let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
        s.push('\n');
        return s;
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.approach.clone(), format!("{:.2}%", r.accuracy)])
        .collect();
    table(
        format,
        &["Approach".to_string(), "Accuracy".to_string()],
        &cells,
    )
}
