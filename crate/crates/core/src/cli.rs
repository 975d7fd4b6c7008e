//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O or parse error,
//! 3 refine verdict under `cycle run --gate-exit`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::ingest::{
    parse_compiler_log, parse_coverage_report, parse_issue_report, parse_test_results,
    scan_test_source, CoverageFormat, Dialect, IngestError, IssueFilter, IssueType, Severity,
};
use crate::model::ModelError;
use crate::pipeline::{
    list_files, load_catalog, load_json, read_bytes, run_cycle, CycleConfig, PipelineError,
    PromptMeta, RunOptions, Verdict,
};
use crate::report::{comparison_table, export, trend_report, Document, Format, ReportError};
use crate::review::{validate_review, ReviewRecord};
use crate::store::{Store, StoreError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_REFINE: i32 = 3;

const DEFAULT_STORE: &str = ".aigen-store";

#[derive(Parser, Debug)]
#[command(name = "aigen-eval", version, about = "Score generated unit tests against expert ground truth")]
struct Cli {
    /// Store root (defaults to $AIGEN_STORE, then ./.aigen-store).
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground-truth catalog commands.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Prompt registry commands.
    #[command(subcommand)]
    Prompt(PromptCmd),
    /// Parse one tool report and print the extracted facts as JSON.
    Ingest(IngestArgs),
    /// Reviewer assessment commands.
    #[command(subcommand)]
    Review(ReviewCmd),
    /// Evaluation cycle commands.
    #[command(subcommand)]
    Cycle(CycleCmd),
    /// Print the score breakdown of every candidate in a stored cycle.
    Score {
        #[arg(long)]
        cycle: String,
    },
    /// Render comparison tables and trends.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Store inspection.
    #[command(subcommand)]
    Store(StoreCmd),
}

#[derive(Subcommand, Debug)]
enum CatalogCmd {
    /// Check a catalog's invariants.
    Validate { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum PromptCmd {
    /// Register a prompt text; identical text returns the existing version.
    Register {
        file: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long, default_value = "java")]
        language: String,
        #[arg(long, default_value = "")]
        notes: String,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum IngestKind {
    Compile,
    Issues,
    Coverage,
    Tests,
    Source,
}

#[derive(Args, Debug)]
struct IngestArgs {
    kind: IngestKind,
    file: PathBuf,
    #[arg(long)]
    candidate: String,
    #[arg(long)]
    function: String,
    /// Coverage document format: xml or normalized-json.
    #[arg(long, default_value = "xml")]
    format: String,
    /// Issue types to count (comma separated); all when omitted.
    #[arg(long, value_delimiter = ',')]
    types: Vec<String>,
    /// Lowest issue severity to count.
    #[arg(long)]
    min_severity: Option<String>,
}

#[derive(Subcommand, Debug)]
enum ReviewCmd {
    /// Import one review record (or a JSON array of records) into the store.
    Import {
        file: PathBuf,
        /// Check ids against this catalog before storing.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum CycleCmd {
    /// Run adapters, ingest, score and store a cycle.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Exit 3 when any candidate is incomplete or gated to refine.
        #[arg(long)]
        gate_exit: bool,
        #[arg(long)]
        cycle_id: Option<String>,
        /// Cycle date (YYYY-MM-DD); today when omitted.
        #[arg(long)]
        date: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ReportCmd {
    /// Metric-by-candidate table for one cycle.
    Compare {
        #[arg(long)]
        cycle: String,
        #[arg(long, default_value = "md")]
        format: String,
    },
    /// Longitudinal series for one model.
    Trend {
        #[arg(long)]
        model: String,
        #[arg(long)]
        prompt: Option<String>,
        #[arg(long, default_value = "md")]
        format: String,
    },
}

#[derive(Subcommand, Debug)]
enum StoreCmd {
    /// List stored cycles.
    List,
}

/// A failure tagged with the module that raised it.
#[derive(Debug)]
pub struct CliError {
    pub module: &'static str,
    pub code: String,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    fn new(module: &'static str, code: impl Into<String>, message: impl ToString, exit: i32) -> Self {
        Self {
            module,
            code: code.into(),
            message: message.to_string(),
            exit,
        }
    }
}

fn exit_for(validation: bool) -> i32 {
    if validation {
        EXIT_VALIDATION
    } else {
        EXIT_IO
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::new("model", e.code(), &e, EXIT_VALIDATION)
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::new("ingest", e.code(), &e, EXIT_IO)
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::new("report", e.code(), &e, EXIT_VALIDATION)
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let module = match &e {
            PipelineError::Model(_) => "model",
            PipelineError::Ingest { .. } => "ingest",
            PipelineError::Review(_) => "review",
            PipelineError::Metrics(_) => "metrics",
            PipelineError::Scoring(_) => "scoring",
            _ => "pipeline",
        };
        CliError::new(module, e.code(), &e, exit_for(e.is_validation()))
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Pipeline(p) => p.into(),
            other => {
                let exit = exit_for(other.is_validation());
                CliError::new("store", other.code(), &other, exit)
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error[{}/{}]: {}", e.module, e.code, e.message);
            e.exit
        }
    }
}

fn open_store(flag: Option<PathBuf>) -> Result<Store, CliError> {
    Ok(match flag {
        Some(root) => Store::open(root)?,
        None => Store::from_env(DEFAULT_STORE)?,
    })
}

fn write_out(out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::new("cli", "io-error", e, EXIT_IO))
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    write_out(out, s.as_bytes())
}

fn warn(warnings: &[crate::model::Warning]) {
    for w in warnings {
        eprintln!("warning[{}]: {}", w.code, w.message);
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Catalog(CatalogCmd::Validate { file }) => {
            let (catalog, warnings) = load_catalog(&file)?;
            warn(&warnings);
            let line = format!(
                "catalog {} valid: {} functions, hash {}\n",
                catalog.catalog_id,
                catalog.functions.len(),
                catalog.content_hash()
            );
            write_out(out, line.as_bytes())?;
        }
        Command::Prompt(PromptCmd::Register {
            file,
            id,
            language,
            notes,
        }) => {
            let text = String::from_utf8(read_bytes(&file)?)
                .map_err(|e| CliError::new("pipeline", "parse-error", e, EXIT_IO))?;
            let store = open_store(cli.store)?;
            let (record, created) = store.register_prompt(&id, &text, PromptMeta { language, notes })?;
            if !created {
                eprintln!("prompt text already registered as {}", record.reference());
            }
            print_json(out, &record)?;
        }
        Command::Ingest(args) => ingest(args, out)?,
        Command::Review(ReviewCmd::Import { file, catalog }) => {
            let value: serde_json::Value = load_json(&file)?;
            let records: Vec<ReviewRecord> = match value {
                serde_json::Value::Array(_) => serde_json::from_value(value),
                other => serde_json::from_value(other).map(|r| vec![r]),
            }
            .map_err(|e| CliError::new("review", "parse-error", format!("{}: {e}", file.display()), EXIT_IO))?;
            let catalog = catalog.map(|c| load_catalog(&c)).transpose()?.map(|(c, _)| c);
            let store = open_store(cli.store)?;
            for record in &records {
                if let Some(cat) = &catalog {
                    let entry = cat.function(&record.function_name).ok_or_else(|| {
                        CliError::new(
                            "review",
                            "unknown-function",
                            format!("{} is not in catalog {}", record.function_name, cat.catalog_id),
                            EXIT_VALIDATION,
                        )
                    })?;
                    let validated = validate_review(record, entry).map_err(PipelineError::from)?;
                    warn(&validated.warnings);
                }
                let created = store.save_review(record)?;
                let state = if created { "imported" } else { "unchanged" };
                let line = format!("{state} {}/{}\n", record.candidate_id, record.function_name);
                write_out(out, line.as_bytes())?;
            }
        }
        Command::Cycle(CycleCmd::Run {
            config,
            gate_exit,
            cycle_id,
            date,
            workers,
            output_dir,
        }) => {
            let mut config = CycleConfig::load(&config)?;
            if let Some(dir) = output_dir {
                config.output_dir = std::path::absolute(&dir)
                    .map_err(|e| CliError::new("cli", "io-error", e, EXIT_IO))?;
            }
            let store = open_store(cli.store)?;
            let reviews = store.load_reviews()?;
            let cycle = run_cycle(
                &config,
                RunOptions {
                    cycle_id,
                    date,
                    workers,
                    reviews,
                },
            )?;
            warn(&cycle.warnings);
            store.save_cycle(&cycle, &config.output_dir())?;
            let mut summary = format!("cycle {} ({})\n", cycle.cycle_id, cycle.date);
            for r in &cycle.ranking {
                let c = cycle.candidate(&r.candidate_id).expect("ranked candidates are scored");
                let verdict = match c.gate.verdict {
                    Verdict::Document => "document",
                    Verdict::Refine => "refine",
                };
                summary.push_str(&format!(
                    "{}. {} total {} {verdict} ({})\n",
                    r.position,
                    r.candidate_id,
                    crate::report::format_fixed(r.total, 2),
                    c.gate.reasons.join("; ")
                ));
            }
            for inc in &cycle.incomplete {
                summary.push_str(&format!(
                    "-. {} incomplete ({} on {})\n",
                    inc.candidate_id, inc.error_code, inc.function
                ));
            }
            write_out(out, summary.as_bytes())?;
            if gate_exit && !cycle.all_documented() {
                return Ok(EXIT_REFINE);
            }
        }
        Command::Score { cycle } => {
            let store = open_store(cli.store)?;
            let loaded = store.load_cycle(&cycle)?;
            warn(&loaded.warnings);
            #[derive(Serialize)]
            struct Row<'a> {
                candidate_id: &'a str,
                label: String,
                score: &'a crate::model::ScoreBreakdown,
                verdict: Verdict,
                reasons: &'a [String],
            }
            let rows: Vec<Row<'_>> = loaded
                .cycle
                .candidates
                .iter()
                .map(|c| Row {
                    candidate_id: &c.run.candidate_id,
                    label: c.run.label(),
                    score: &c.score,
                    verdict: c.gate.verdict,
                    reasons: &c.gate.reasons,
                })
                .collect();
            print_json(out, &rows)?;
        }
        Command::Report(ReportCmd::Compare { cycle, format }) => {
            let format: Format = format.parse()?;
            let store = open_store(cli.store)?;
            let loaded = store.load_cycle(&cycle)?;
            warn(&loaded.warnings);
            let table = comparison_table(&loaded.cycle)?;
            write_out(out, &export(Document::Table(&table), format))?;
        }
        Command::Report(ReportCmd::Trend { model, prompt, format }) => {
            let format: Format = format.parse()?;
            let store = open_store(cli.store)?;
            let series = store.history(&model, prompt.as_deref())?;
            let trend = trend_report(&model, prompt.as_deref(), &series)?;
            write_out(out, &export(Document::Trend(&trend), format))?;
        }
        Command::Store(StoreCmd::List) => {
            let store = open_store(cli.store)?;
            let mut text = String::new();
            for entry in store.list_cycles()? {
                let ids: Vec<&str> = entry.candidates.iter().map(|c| c.candidate_id.as_str()).collect();
                text.push_str(&format!("{}\t{}\t{}\n", entry.cycle_id, entry.date, ids.join(",")));
            }
            write_out(out, text.as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

fn ingest(args: IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Facts<T: Serialize> {
        candidate_id: String,
        function: String,
        kind: &'static str,
        facts: T,
    }
    let bad = |m: String| CliError::new("ingest", "invalid-argument", m, EXIT_VALIDATION);
    let wrap = |kind, facts| Facts {
        candidate_id: args.candidate.clone(),
        function: args.function.clone(),
        kind,
        facts,
    };
    let facts: serde_json::Value = match args.kind {
        IngestKind::Compile => {
            let bytes = read_bytes(&args.file)?;
            to_value(parse_compiler_log(&String::from_utf8_lossy(&bytes)))
        }
        IngestKind::Issues => {
            let types = if args.types.is_empty() {
                None
            } else {
                Some(
                    args.types
                        .iter()
                        .map(|t| t.parse::<IssueType>())
                        .collect::<Result<_, _>>()?,
                )
            };
            let min_severity = args.min_severity.as_deref().map(str::parse::<Severity>).transpose()?;
            let filter = IssueFilter { types, min_severity };
            to_value(parse_issue_report(&read_bytes(&args.file)?, &filter)?)
        }
        IngestKind::Coverage => {
            let format: CoverageFormat = args.format.parse().map_err(bad)?;
            to_value(parse_coverage_report(&read_bytes(&args.file)?, format)?)
        }
        IngestKind::Tests => to_value(parse_test_results(&read_bytes(&args.file)?)?),
        IngestKind::Source => {
            let dialect = Dialect::default();
            let mut parts = Vec::new();
            for f in list_files(&args.file)? {
                parts.push(scan_test_source(&String::from_utf8_lossy(&read_bytes(&f)?), &dialect));
            }
            to_value(crate::ingest::LifecycleFacts::merge(parts))
        }
    };
    let kind = match args.kind {
        IngestKind::Compile => "compile",
        IngestKind::Issues => "issues",
        IngestKind::Coverage => "coverage",
        IngestKind::Tests => "tests",
        IngestKind::Source => "source",
    };
    print_json(out, &wrap(kind, facts))
}

fn to_value<T: Serialize>(v: T) -> serde_json::Value {
    serde_json::to_value(v).expect("facts serialize")
}
