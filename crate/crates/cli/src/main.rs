use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod audit;
mod eval;
mod lint;

#[derive(Parser)]
#[command(
    name = "vlbench",
    version,
    about = "Evaluate natural-language-to-Vega-Lite generation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lint Vega-Lite specs; exit 0 clean, 1 warnings only, 2 errors.
    Lint(LintArgs),
    /// Run, report and compare evaluations.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Detect defects in a benchmark directory.
    Audit(AuditArgs),
}

#[derive(Args)]
struct LintArgs {
    /// A spec file, or a directory of `*.json` specs.
    path: PathBuf,
    /// Rewrite files with every inferable fix applied, then report what remains.
    #[arg(long)]
    fix: bool,
    /// Query text for the filter reminder; otherwise `<stem>.query.txt` beside each spec is used.
    #[arg(long)]
    query: Option<String>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Attempt every query of a benchmark and record outcomes.
    Run(RunArgs),
    /// Aggregate recorded outcomes into an accuracy report.
    Report(ReportArgs),
    /// Tabulate overall accuracy of several runs next to published baselines.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Base,
    ZeroShot,
    FewShot,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Live,
    Replay,
    Hybrid,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    benchmark: PathBuf,
    #[arg(long, value_enum, default_value = "zero-shot")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "replay")]
    backend: BackendArg,
    #[arg(long)]
    out: PathBuf,
    /// Replay store directory; defaults to `<out>/replay`.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Model id; defaults to $VLBENCH_LLM_MODEL, then the built-in default.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Directory of `<chart_type>.query.txt` / `.spec.json` exemplar pairs.
    #[arg(long)]
    exemplars: Option<PathBuf>,
    /// Quarantine file written by `audit --quarantine`.
    #[arg(long)]
    exclude: Option<PathBuf>,
    /// Also score pixel equality through the renderer sidecar.
    #[arg(long)]
    pixels: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "md")]
    format: FormatArg,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directories or saved JSON reports.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "md")]
    format: FormatArg,
    /// Leave out the published baseline rows.
    #[arg(long)]
    no_baselines: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditFormat {
    Jsonl,
    Md,
}

#[derive(Args)]
struct AuditArgs {
    benchmark: PathBuf,
    /// Write the ids of instances to exclude from scoring.
    #[arg(long)]
    quarantine: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: AuditFormat,
    /// Keyword configuration overriding the built-in lists.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Lint(args) => lint::run(&args),
        Command::Eval(EvalCommand::Run(args)) => eval::run(&args).map(|()| 0),
        Command::Eval(EvalCommand::Report(args)) => eval::report(&args).map(|()| 0),
        Command::Eval(EvalCommand::Compare(args)) => eval::compare(&args).map(|()| 0),
        Command::Audit(args) => audit::run(&args).map(|()| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
