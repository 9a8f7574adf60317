use std::path::PathBuf;
use std::sync::Arc;

use serde_json::json;

use super::*;
use crate::harness::Hardness;
use crate::spec::{chart_type_of, parse_document, parse_spec};

fn instance(csv: &str, truth: serde_json::Value, queries: &[&str]) -> BenchInstance {
    let table = DataTable::from_csv_reader("data", csv.as_bytes()).unwrap();
    let truth_spec = parse_document(&truth).unwrap_or_else(|e| panic!("{e:?}"));
    BenchInstance {
        id: "i".into(),
        dir: PathBuf::new(),
        table: Arc::new(table),
        table_files: vec!["data.csv".into()],
        queries: queries.iter().map(|q| q.to_string()).collect(),
        truth_text: truth.to_string(),
        chart_type: chart_type_of(&truth_spec),
        truth_spec,
        hardness: Hardness::Easy,
        multi_table: false,
    }
}

fn cfg() -> AuditConfig {
    AuditConfig::default()
}

const PRODUCTS: &str = "product,price\nApple,3\nSony,5\nDell,4\nApple,2\n";

fn product_rows(with_sony: bool) -> serde_json::Value {
    let mut rows = vec![
        json!({"product": "Apple", "price": 3}),
        json!({"product": "Dell", "price": 4}),
        json!({"product": "Apple", "price": 2}),
    ];
    if with_sony {
        rows.push(json!({"product": "Sony", "price": 5}));
    }
    json!(rows)
}

fn pie(values: serde_json::Value) -> serde_json::Value {
    json!({
        "data": {"values": values},
        "mark": "arc",
        "encoding": {
            "theta": {"aggregate": "count", "type": "quantitative"},
            "color": {"field": "product", "type": "nominal"}
        }
    })
}

#[test]
fn lost_label_is_definite() {
    let inst = instance(
        PRODUCTS,
        pie(product_rows(false)),
        &["Draw a pie chart of the number of products per product name"],
    );
    let f = audit_content(&inst, &cfg());
    assert_eq!(f.len(), 1, "{f:?}");
    assert_eq!(f[0].defect, DefectClass::IncorrectData);
    assert_eq!(f[0].confidence, Confidence::Definite);
    assert_eq!(
        f[0].evidence,
        Evidence::Labels {
            missing: vec!["Sony".into()],
            extra: vec![]
        }
    );
}

#[test]
fn consistent_inline_data_is_clean() {
    let inst = instance(
        PRODUCTS,
        pie(product_rows(true)),
        &["Draw a pie chart of the number of products per product name"],
    );
    assert_eq!(audit_instance(&inst, &cfg()), vec![]);
}

const RENTALS: &str = "apt_type,monthly_rental\nflat,1200.75\nflat,1100.5\nflat,980.9\nhouse,2100.6\nhouse,1999.99\nhouse,2050.45\nstudio,800.3\nstudio,760.8\nstudio,810.55\nstudio,790.7\n";

fn rental_truth(rows: serde_json::Value) -> serde_json::Value {
    json!({
        "data": {"values": rows},
        "mark": "bar",
        "encoding": {
            "x": {"field": "apt_type", "type": "nominal"},
            "y": {"aggregate": "sum", "field": "monthly_rental", "type": "quantitative"}
        }
    })
}

fn rental_rows(f: impl Fn(f64) -> f64) -> serde_json::Value {
    let t = DataTable::from_csv_reader("d", RENTALS.as_bytes()).unwrap();
    json!(t
        .rows()
        .iter()
        .map(|r| json!({"apt_type": r[0].to_string(), "monthly_rental": f(r[1].as_number().unwrap())}))
        .collect::<Vec<_>>())
}

#[test]
fn truncated_sums_are_caught() {
    let q = ["Show the total monthly rental for each apartment type in a bar chart"];
    let inst = instance(RENTALS, rental_truth(rental_rows(f64::trunc)), &q);
    let f = audit_content(&inst, &cfg());
    assert_eq!(f.len(), 1, "{f:?}");
    match &f[0].evidence {
        Evidence::Truncation {
            field,
            max_abs_deviation,
        } => {
            assert_eq!(field, "monthly_rental");
            assert!(*max_abs_deviation > 1.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn large_deviation_without_truncation() {
    let q = ["Show the total monthly rental for each apartment type in a bar chart"];
    let inst = instance(RENTALS, rental_truth(rental_rows(|x| x + 5.0)), &q);
    let f = audit_content(&inst, &cfg());
    assert!(
        matches!(f.as_slice(), [AuditFinding { evidence: Evidence::Deviation { max_abs_deviation }, .. }] if *max_abs_deviation > 14.0),
        "{f:?}"
    );
    let tiny = instance(RENTALS, rental_truth(rental_rows(|x| x + 0.01)), &q);
    assert_eq!(audit_content(&tiny, &cfg()), vec![]);
}

const FACULTY: &str = "rank,sex,age\nProfessor,F,61\nProfessor,F,58\nProfessor,F,49\nAssociate,M,45\nAssociate,F,41\nAssistant,M,33\nAssistant,F,35\nAssistant,M,30\n";

fn faculty_truth(op: &str) -> serde_json::Value {
    json!({
        "mark": "bar",
        "encoding": {
            "x": {"field": "rank", "type": "nominal"},
            "y": {"aggregate": op, "field": "age", "type": "quantitative"}
        }
    })
}

#[test]
fn query_asking_a_different_statistic() {
    let inst = instance(
        FACULTY,
        faculty_truth("mean"),
        &[
            "Show the number of faculty members for each rank in a bar chart",
            "Bar chart of average age by rank",
        ],
    );
    let f = audit_content(&inst, &cfg());
    assert_eq!(
        f,
        vec![AuditFinding {
            instance_id: "i".into(),
            defect: DefectClass::IncorrectQuery,
            confidence: Confidence::Definite,
            evidence: Evidence::StatisticConflict {
                query_index: 0,
                stated: AggOp::Count,
                truth: AggOp::Mean,
                field: Some("age".into())
            }
        }]
    );
}

#[test]
fn agreeing_statistic_is_clean() {
    let inst = instance(
        FACULTY,
        faculty_truth("count"),
        &["How many faculty members are in each rank? Use a bar chart."],
    );
    assert_eq!(audit_instance(&inst, &cfg()), vec![]);
}

#[test]
fn statistic_phrases_prefer_longer_matches() {
    assert_eq!(
        stated_statistics("the total number of rooms", &cfg()),
        BTreeSet::from([AggOp::Count])
    );
    assert_eq!(
        stated_statistics("total and average price", &cfg()),
        BTreeSet::from([AggOp::Sum, AggOp::Mean])
    );
    assert!(stated_statistics("list names", &cfg()).is_empty());
}

#[test]
fn proportion_without_pie_is_flagged() {
    let inst = instance(
        PRODUCTS,
        pie(product_rows(true)),
        &[
            "A pie chart for the number of products",
            "What is the proportion of each product?",
            "pie chart: products",
        ],
    );
    let f = audit_query_text(&inst, &cfg());
    assert_eq!(
        f.iter().map(|f| &f.evidence).collect::<Vec<_>>(),
        vec![&Evidence::UnstatedChartType {
            mark: MarkType::Arc,
            query_indices: vec![1],
            ambiguous_terms: vec!["proportion".into()]
        }]
    );
    assert_eq!(f[0].confidence, Confidence::Heuristic);
}

#[test]
fn stated_bar_chart_is_clean() {
    let inst = instance(
        FACULTY,
        faculty_truth("count"),
        &["Show a bar chart of the number of faculty per rank"],
    );
    assert_eq!(audit_query_text(&inst, &cfg()), vec![]);
}

const NOTES: &str = "note_id,date_of_notes\n1,2018-03-05 10:00:00\n2,2018-03-06 11:30:00\n3,2018-03-14 09:00:00\n4,2018-03-21 16:45:00\n";

#[test]
fn week_grouping_never_mentioned() {
    let truth = json!({
        "transform": [{"timeUnit": "week", "field": "date_of_notes", "as": "week_of_notes"}],
        "mark": "line",
        "encoding": {
            "x": {"field": "week_of_notes", "type": "temporal"},
            "y": {"aggregate": "count", "type": "quantitative"}
        }
    });
    let inst = instance(
        NOTES,
        truth.clone(),
        &["Draw a line chart of how many notes were written over time"],
    );
    assert_eq!(
        audit_query_text(&inst, &cfg())
            .iter()
            .map(|f| f.evidence.clone())
            .collect::<Vec<_>>(),
        vec![Evidence::UnstatedTimeUnit {
            unit: TimeUnit::Week,
            field: "date_of_notes".into()
        }]
    );
    let stated = instance(
        NOTES,
        truth,
        &["Draw a line chart of how many notes were written each week"],
    );
    assert_eq!(audit_query_text(&stated, &cfg()), vec![]);
}

#[test]
fn temporal_encoded_nominal() {
    let truth = json!({
        "mark": "bar",
        "encoding": {
            "x": {"field": "date_of_notes", "type": "nominal"},
            "y": {"aggregate": "count", "type": "quantitative"}
        }
    });
    let inst = instance(NOTES, truth, &["bar chart of notes per date"]);
    let f = audit_mapping(&inst, &cfg());
    assert_eq!(
        f.iter().map(|f| f.evidence.clone()).collect::<Vec<_>>(),
        vec![Evidence::TemporalAsNominal {
            channel: Channel::X,
            field: "date_of_notes".into()
        }]
    );
}

const STUDENTS: &str =
    "Major,Age\n600,18\n600,19\n520,18\n520,20\n540,19\n550,21\n600,20\n540,22\n550,23\n";

#[test]
fn count_on_quantitative_scatter_axis() {
    let truth = json!({
        "transform": [{"aggregate": [{"op": "count", "as": "majors"}], "groupby": ["Age"]}],
        "mark": "point",
        "encoding": {
            "x": {"field": "majors", "type": "quantitative"},
            "y": {"field": "Age", "type": "quantitative"}
        }
    });
    let inst = instance(
        STUDENTS,
        truth,
        &["scatter plot of the number of majors for each age"],
    );
    let f = audit_mapping(&inst, &cfg());
    assert!(
        matches!(
            f.as_slice(),
            [AuditFinding {
                evidence: Evidence::CountAsQuantitative {
                    channel: Channel::X,
                    ..
                },
                ..
            }]
        ),
        "{f:?}"
    );
}

#[test]
fn real_measure_on_scatter_is_fine() {
    let csv = "h,w\n1.62,55.1\n1.75,70.3\n1.80,81.9\n1.68,60.2\n";
    let truth = json!({
        "mark": "point",
        "encoding": {"x": {"field": "h", "type": "quantitative"}, "y": {"field": "w", "type": "quantitative"}}
    });
    let inst = instance(csv, truth, &["scatter plot of h against w"]);
    assert_eq!(audit_instance(&inst, &cfg()), vec![]);
}

#[test]
fn unevaluable_truth_is_heuristic() {
    let truth = json!({
        "mark": "bar",
        "encoding": {"x": {"field": "nope", "type": "nominal"}, "y": {"aggregate": "count", "type": "quantitative"}}
    });
    let inst = instance(PRODUCTS, truth, &["bar chart"]);
    let f = audit_content(&inst, &cfg());
    assert!(matches!(
        f.as_slice(),
        [AuditFinding {
            defect: DefectClass::IncorrectData,
            confidence: Confidence::Heuristic,
            evidence: Evidence::TruthNotEvaluable { .. },
            ..
        }]
    ));
}

#[test]
fn config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("k.json");
    std::fs::write(&p, serde_json::to_string(&cfg()).unwrap()).unwrap();
    assert_eq!(AuditConfig::load(&p).unwrap(), cfg());
    assert!(parse_spec("{}").spec.is_none());
}

#[test]
fn quarantine_skips_mapping_only_findings() {
    let truth = json!({
        "mark": "bar",
        "encoding": {"x": {"field": "date_of_notes", "type": "nominal"}, "y": {"aggregate": "count", "type": "quantitative"}}
    });
    let mut mapping = instance(NOTES, truth, &["bar chart of notes per date"]);
    mapping.id = "mapping".into();
    let mut lost = instance(
        PRODUCTS,
        pie(product_rows(false)),
        &["pie chart of the number of products"],
    );
    lost.id = "lost".into();
    let ingest = Ingest {
        instances: vec![mapping, lost],
        errors: vec![],
    };
    let r = audit_benchmark(&ingest, &cfg());
    assert_eq!(r.quarantine, vec!["lost".to_string()]);
    assert_eq!(r.findings.len(), 2);
    assert_eq!(r.to_jsonl().lines().count(), 2);
    assert!(r.to_markdown().contains("Sony"));
}
