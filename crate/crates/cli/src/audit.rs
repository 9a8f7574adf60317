use anyhow::Result;

use vlbench_core::audit::{audit_benchmark, AuditConfig, Quarantine};
use vlbench_core::harness::ingest_benchmark;

use crate::{AuditArgs, AuditFormat};

pub fn run(args: &AuditArgs) -> Result<()> {
    let config = match &args.config {
        Some(p) => AuditConfig::load(p)?,
        None => AuditConfig::default(),
    };
    let ingest = ingest_benchmark(&args.benchmark)?;
    for e in &ingest.errors {
        eprintln!("malformed {e}");
    }
    let report = audit_benchmark(&ingest, &config);
    match args.format {
        AuditFormat::Jsonl => print!("{}", report.to_jsonl()),
        AuditFormat::Md => print!("{}", report.to_markdown()),
    }
    if let Some(path) = &args.quarantine {
        Quarantine {
            exclude: report.quarantine.clone(),
        }
        .write(path)?;
        eprintln!("{} instances quarantined", report.quarantine.len());
    }
    Ok(())
}
