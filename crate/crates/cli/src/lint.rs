use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use vlbench_core::lint::{fix_best_effort, lint_with, LintContext, LintFinding, Severity};

use crate::LintArgs;

#[derive(Serialize)]
struct Record<'a> {
    file: String,
    #[serde(flatten)]
    finding: &'a LintFinding,
}

fn spec_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn sibling_query(file: &Path) -> Option<String> {
    let stem = file.file_stem()?.to_string_lossy();
    std::fs::read_to_string(file.with_file_name(format!("{stem}.query.txt"))).ok()
}

/// Returns the exit code: 0 clean, 1 warnings only, 2 errors.
pub fn run(args: &LintArgs) -> Result<u8> {
    let mut worst = 0u8;
    for file in spec_files(&args.path)? {
        let mut text = std::fs::read_to_string(&file)
            .with_context(|| format!("reading {}", file.display()))?;
        let query = args.query.clone().or_else(|| sibling_query(&file));
        let cx = LintContext {
            query: query.as_deref(),
            table: None,
        };
        let mut findings = lint_with(text.as_str(), &cx);
        if args.fix && findings.iter().any(|f| f.fixable) {
            let fixable: Vec<LintFinding> =
                findings.iter().filter(|f| f.fixable).cloned().collect();
            if let Ok((outcome, _)) = fix_best_effort(text.as_str(), &fixable) {
                if !outcome.applied.is_empty() {
                    text = outcome.text() + "\n";
                    std::fs::write(&file, &text)
                        .with_context(|| format!("writing {}", file.display()))?;
                    findings = lint_with(text.as_str(), &cx);
                }
            }
        }
        for f in &findings {
            let record = Record {
                file: file.display().to_string(),
                finding: f,
            };
            println!("{}", serde_json::to_string(&record)?);
            worst = worst.max(match f.severity {
                Severity::Warning => 1,
                Severity::Error => 2,
            });
        }
    }
    Ok(worst)
}
