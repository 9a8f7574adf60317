//! Deterministic workload generators for the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use vlbench_core::harness::{EvalOutcome, Hardness, InstanceInfo, OutcomeDetail, Verdict};
use vlbench_core::spec::{parse_spec, BenchChartType, ChartSpec};
use vlbench_core::table::DataTable;

const MAJORS: [&str; 8] = [
    "CS", "Math", "Physics", "History", "Art", "Biology", "Law", "Music",
];

/// A students-like table with `rows` rows: id, major, sex, age, gpa, enrolled.
pub fn students(rows: usize, seed: u64) -> DataTable {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut csv = String::from("StuID,Major,Sex,Age,GPA,Enrolled\n");
    for i in 0..rows {
        let major = MAJORS[rng.gen_range(0..MAJORS.len())];
        let sex = if rng.gen_bool(0.5) { "F" } else { "M" };
        let age = rng.gen_range(17..30);
        let gpa = rng.gen_range(1.0..4.0);
        let month = rng.gen_range(1..=12);
        let day = rng.gen_range(1..=28);
        let year = rng.gen_range(2015..2024);
        csv.push_str(&format!(
            "{i},{major},{sex},{age},{gpa:.2},{year}-{month:02}-{day:02}\n"
        ));
    }
    DataTable::from_csv_reader("students", csv.as_bytes()).expect("generated table parses")
}

fn spec(text: &str) -> ChartSpec {
    parse_spec(text).spec.expect("workload spec parses")
}

/// Filter, grouped mean and a sorted nominal axis.
pub fn grouped_bar() -> ChartSpec {
    spec(
        r#"{
  "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
  "data": {"url": "data.csv"},
  "transform": [
    {"filter": "datum.Age > 18 && datum.Sex == 'F'"},
    {"aggregate": [{"op": "mean", "field": "GPA", "as": "avg_gpa"}], "groupby": ["Major"]}
  ],
  "mark": "bar",
  "encoding": {
    "x": {"field": "Major", "type": "nominal", "sort": "-y"},
    "y": {"field": "avg_gpa", "type": "quantitative"}
  }
}"#,
    )
}

/// Monthly counts per sex.
pub fn monthly_lines() -> ChartSpec {
    spec(
        r#"{
  "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
  "data": {"url": "data.csv"},
  "transform": [{"timeUnit": "yearmonth", "field": "Enrolled", "as": "month"}],
  "mark": "line",
  "encoding": {
    "x": {"field": "month", "type": "temporal"},
    "y": {"aggregate": "count", "type": "quantitative"},
    "color": {"field": "Sex", "type": "nominal"}
  }
}"#,
    )
}

/// Binned ages.
pub fn histogram() -> ChartSpec {
    spec(
        r#"{
  "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
  "data": {"url": "data.csv"},
  "mark": "bar",
  "encoding": {
    "x": {"field": "Age", "bin": {"maxbins": 10}, "type": "quantitative"},
    "y": {"aggregate": "count", "type": "quantitative"}
  }
}"#,
    )
}

/// `n` outcomes over `instances` instances with verdicts drawn uniformly.
pub fn outcomes(n: usize, instances: usize, seed: u64) -> (Vec<EvalOutcome>, Vec<InstanceInfo>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let infos: Vec<InstanceInfo> = (0..instances)
        .map(|i| InstanceInfo {
            id: format!("i{i}"),
            chart_type: BenchChartType::ALL[rng.gen_range(0..BenchChartType::ALL.len())],
            hardness: Hardness::ALL[rng.gen_range(0..Hardness::ALL.len())],
        })
        .collect();
    let outs = (0..n)
        .map(|q| {
            let info = &infos[rng.gen_range(0..infos.len())];
            EvalOutcome {
                instance_id: info.id.clone(),
                query_index: q,
                chart_type: info.chart_type,
                hardness: info.hardness,
                verdict: Verdict::ALL[rng.gen_range(0..Verdict::ALL.len())],
                detail: OutcomeDetail::EvaluationFailed {
                    message: String::new(),
                },
                request_digest: String::new(),
                spec_text: String::new(),
            }
        })
        .collect();
    (outs, infos)
}
