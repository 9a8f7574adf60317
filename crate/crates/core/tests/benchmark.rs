use std::path::{Path, PathBuf};

use serde_json::Value as Json;

use vlbench_core::harness::{ingest_benchmark, run_experiment, RunConfig, OUTCOMES_FILE};
use vlbench_core::llm::{CompletionRequest, Gateway, ReplayStore, StoredRecord, DEFAULT_MODEL};
use vlbench_core::prompt::{build_prompt, Strategy};

fn bench_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bench")
}

fn primed_store(dir: &Path) -> ReplayStore {
    let ingest = ingest_benchmark(&bench_dir()).unwrap();
    let expected: Json = serde_json::from_str(
        &std::fs::read_to_string(bench_dir().with_file_name("bench_expected.json")).unwrap(),
    )
    .unwrap();
    let store = ReplayStore::open(dir).unwrap();
    for case in expected["outcomes"].as_array().unwrap() {
        let inst = ingest
            .instances
            .iter()
            .find(|i| i.id == case["instance"])
            .unwrap();
        let q = case["query_index"].as_u64().unwrap() as usize;
        let bundle = build_prompt(Strategy::ZeroShot, &inst.table, &inst.queries[q], None).unwrap();
        let request = CompletionRequest::from_bundle(DEFAULT_MODEL, &bundle);
        let record = StoredRecord {
            request: request.clone(),
            response_text: case["response"].as_str().unwrap().to_string(),
            latency_ms: 0,
        };
        store.put(&request.digest(), &record).unwrap();
    }
    store
}

#[test]
fn ingest_flags_multi_table_instances() {
    let ingest = ingest_benchmark(&bench_dir()).unwrap();
    assert_eq!(ingest.instances.len(), 24);
    assert!(ingest.errors.is_empty());
    let multi: Vec<&str> = ingest
        .instances
        .iter()
        .filter(|i| i.multi_table)
        .map(|i| i.id.as_str())
        .collect();
    assert_eq!(multi, ["b23", "b24"]);
    let b24 = ingest.instances.iter().find(|i| i.id == "b24").unwrap();
    assert_eq!(b24.table_files, ["data.csv", "has_pet.csv"]);
}

#[test]
fn interrupted_run_resumes_without_new_requests() {
    let tmp = tempfile::tempdir().unwrap();
    let store = primed_store(&tmp.path().join("store"));
    let ingest = ingest_benchmark(&bench_dir()).unwrap();
    let out = tmp.path().join("run");
    let config = RunConfig {
        out_dir: Some(out.clone()),
        workers: 3,
        ..RunConfig::default()
    };
    let full = run_experiment(&ingest.instances, &config, &Gateway::replay(store.clone())).unwrap();
    let text = std::fs::read_to_string(out.join(OUTCOMES_FILE)).unwrap();

    let kept: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    let torn = &text.lines().nth(5).unwrap()[..20];
    std::fs::write(out.join(OUTCOMES_FILE), format!("{kept}{torn}")).unwrap();

    let resumed = run_experiment(&ingest.instances, &config, &Gateway::replay(store)).unwrap();
    assert_eq!(resumed.resumed, 5);
    assert_eq!(resumed.outcomes, full.outcomes);
    assert_eq!(
        std::fs::read_to_string(out.join(OUTCOMES_FILE)).unwrap(),
        text
    );
}

#[test]
fn missing_recording_aborts_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let ingest = ingest_benchmark(&bench_dir()).unwrap();
    let store = ReplayStore::open(tmp.path()).unwrap();
    let err = run_experiment(
        &ingest.instances,
        &RunConfig::default(),
        &Gateway::replay(store),
    )
    .unwrap_err();
    assert!(err.to_string().contains("no recorded response"), "{err}");
}

#[test]
fn published_tables_cannot_share_one_outcome_list() {
    // Zero-shot: overall accuracy from the per-type table, error shares from
    // the error table. A single list would need them to sum to 100.
    let accuracy = 43.23;
    let errors = [0.11, 18.71, 1.38, 29.79];
    let total: f64 = accuracy + errors.iter().sum::<f64>();
    assert!((total - 93.22).abs() < 1e-9);
}
