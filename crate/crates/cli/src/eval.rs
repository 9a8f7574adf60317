use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use vlbench_core::audit::Quarantine;
use vlbench_core::harness::{
    aggregate, ingest_benchmark, load_outcomes, render_comparison_table, run_experiment,
    AccuracyReport, InstanceInfo, ReportFormat, RunConfig, OUTCOMES_FILE, PUBLISHED_BASELINES,
};
use vlbench_core::llm::{Gateway, HttpTransport, ReplayStore, DEFAULT_MODEL, ENV_MODEL};
use vlbench_core::prompt::{ExemplarSet, Strategy};
use vlbench_core::render::{RendererClient, SidecarRenderer};

use crate::{BackendArg, CompareArgs, FormatArg, ReportArgs, RunArgs, StrategyArg};

const INSTANCES_FILE: &str = "instances.json";
const RUN_FILE: &str = "run.json";
const REPORT_FILE: &str = "report.json";

#[derive(Serialize, Deserialize)]
struct RunManifest {
    benchmark: PathBuf,
    strategy: Strategy,
    model_id: String,
    backend: String,
}

fn format_of(f: FormatArg) -> ReportFormat {
    match f {
        FormatArg::Md => ReportFormat::Md,
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gateway(backend: BackendArg, store: ReplayStore) -> Result<Gateway> {
    Ok(match backend {
        BackendArg::Replay => Gateway::replay(store),
        BackendArg::Live => Gateway::live(Arc::new(HttpTransport::from_env()?), Some(store)),
        BackendArg::Hybrid => Gateway::hybrid(Arc::new(HttpTransport::from_env()?), store),
    })
}

pub fn run(args: &RunArgs) -> Result<()> {
    let ingest = ingest_benchmark(&args.benchmark)?;
    for e in &ingest.errors {
        eprintln!("skipping {e}");
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let strategy = match args.strategy {
        StrategyArg::Base => Strategy::Base,
        StrategyArg::ZeroShot => Strategy::ZeroShot,
        StrategyArg::FewShot => Strategy::FewShot,
    };
    let exemplars = match &args.exemplars {
        Some(dir) => ExemplarSet::load_dir(dir)?,
        None => ExemplarSet::builtin(),
    };
    let model_id = args
        .model
        .clone()
        .or_else(|| std::env::var(ENV_MODEL).ok())
        .unwrap_or_else(|| DEFAULT_MODEL.to_string());
    let exclude = match &args.exclude {
        Some(p) => Quarantine::read(p)?.exclude,
        None => Vec::new(),
    };
    let renderer = if args.pixels {
        Some(SidecarRenderer::new(RendererClient::from_env()?))
    } else {
        None
    };
    let store = ReplayStore::open(
        args.store
            .clone()
            .unwrap_or_else(|| args.out.join("replay")),
    )?;
    let gateway = gateway(args.backend, store)?.with_concurrency(args.workers);

    let infos: Vec<InstanceInfo> = ingest.instances.iter().map(|i| i.info()).collect();
    write_json(&args.out.join(INSTANCES_FILE), &infos)?;
    let backend = match args.backend {
        BackendArg::Live => "live",
        BackendArg::Replay => "replay",
        BackendArg::Hybrid => "hybrid",
    };
    write_json(
        &args.out.join(RUN_FILE),
        &RunManifest {
            benchmark: args.benchmark.clone(),
            strategy,
            model_id: model_id.clone(),
            backend: backend.to_string(),
        },
    )?;

    let config = RunConfig {
        strategy,
        model_id,
        exemplars: Some(&exemplars),
        workers: args.workers,
        out_dir: Some(args.out.clone()),
        exclude,
        renderer: renderer.as_ref().map(|r| r as _),
        ..RunConfig::default()
    };
    let result = run_experiment(&ingest.instances, &config, &gateway)?;
    let report = aggregate(&result.outcomes, &infos)?;
    write_json(&args.out.join(REPORT_FILE), &report)?;
    eprintln!(
        "{} attempted ({} resumed), {} excluded, {} truth defects",
        result.outcomes.len(),
        result.resumed,
        result.excluded.len(),
        result.truth_defects.len()
    );
    print!("{}", report.render(ReportFormat::Md));
    Ok(())
}

fn report_of_run(dir: &Path) -> Result<AccuracyReport> {
    let path = dir.join(INSTANCES_FILE);
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let infos: Vec<InstanceInfo> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let outcomes = load_outcomes(&dir.join(OUTCOMES_FILE))?;
    Ok(aggregate(&outcomes, &infos)?)
}

pub fn report(args: &ReportArgs) -> Result<()> {
    print!(
        "{}",
        report_of_run(&args.out)?.render(format_of(args.format))
    );
    Ok(())
}

fn load_report(path: &Path) -> Result<AccuracyReport> {
    if path.is_dir() {
        return report_of_run(path);
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} is not a JSON accuracy report", path.display()))
}

/// A run directory is named after itself; a report file after its stem, or
/// its directory when the stem is the default report name.
fn approach_name(path: &Path) -> Result<String> {
    let stem = if path.is_dir() {
        path.file_name()
    } else if path.file_stem().is_some_and(|s| s == "report") {
        path.parent().and_then(|p| p.file_name())
    } else {
        path.file_stem()
    };
    stem.map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| anyhow!("cannot name {}", path.display()))
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    let mut named = Vec::new();
    for p in &args.reports {
        named.push((approach_name(p)?, load_report(p)?));
    }
    if named.is_empty() {
        bail!("no reports given");
    }
    let refs: Vec<(&str, &AccuracyReport)> = named.iter().map(|(n, r)| (n.as_str(), r)).collect();
    let baselines: &[(&str, f64)] = if args.no_baselines {
        &[]
    } else {
        &PUBLISHED_BASELINES
    };
    print!(
        "{}",
        render_comparison_table(&refs, baselines, format_of(args.format))
    );
    Ok(())
}
