//! External-command stages that produce the raw evidence for one
//! (candidate, function) pair.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{io_err, CycleConfig, PipelineError};
use crate::ingest::CoverageFormat;

pub const DEFAULT_TIMEOUT_SECS: u64 = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generate,
    Build,
    StaticAnalysis,
    Coverage,
    TestRun,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Generate,
        Stage::Build,
        Stage::StaticAnalysis,
        Stage::Coverage,
        Stage::TestRun,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Build => "build",
            Stage::StaticAnalysis => "static_analysis",
            Stage::Coverage => "coverage",
            Stage::TestRun => "test_run",
        }
    }

    pub fn default_artifact(self) -> &'static str {
        match self {
            Stage::Generate => "src",
            Stage::Build => "build.log",
            Stage::StaticAnalysis => "issues.json",
            Stage::Coverage => "coverage.xml",
            Stage::TestRun => "tests.xml",
        }
    }
}

/// One configured stage: a command template plus the artifact it leaves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub command: String,
    #[serde(default)]
    pub artifact: Option<String>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    /// Coverage stage only.
    #[serde(default)]
    pub format: Option<CoverageFormat>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterSet {
    #[serde(default)]
    pub generate: Option<StageSpec>,
    #[serde(default)]
    pub build: Option<StageSpec>,
    #[serde(default)]
    pub static_analysis: Option<StageSpec>,
    #[serde(default)]
    pub coverage: Option<StageSpec>,
    #[serde(default)]
    pub test_run: Option<StageSpec>,
}

impl AdapterSet {
    pub fn get(&self, stage: Stage) -> Option<&StageSpec> {
        match stage {
            Stage::Generate => self.generate.as_ref(),
            Stage::Build => self.build.as_ref(),
            Stage::StaticAnalysis => self.static_analysis.as_ref(),
            Stage::Coverage => self.coverage.as_ref(),
            Stage::TestRun => self.test_run.as_ref(),
        }
    }

    /// Artifact path (relative to the pair's outdir) for a stage.
    pub fn artifact(&self, stage: Stage) -> String {
        self.get(stage)
            .and_then(|s| s.artifact.clone())
            .unwrap_or_else(|| stage.default_artifact().to_string())
    }

    pub fn coverage_format(&self) -> CoverageFormat {
        if let Some(f) = self.coverage.as_ref().and_then(|s| s.format) {
            return f;
        }
        if self.artifact(Stage::Coverage).ends_with(".json") {
            CoverageFormat::NormalizedJson
        } else {
            CoverageFormat::Xml
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum StageStatus {
    /// Command ran and its artifact exists.
    Completed,
    /// No command configured; the artifact was staged beforehand.
    Prestaged,
    Failed(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub candidate_id: String,
    pub function: String,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
    #[serde(flatten)]
    pub status: StageStatus,
}

#[derive(Debug)]
pub struct AdapterRun {
    pub outdir: PathBuf,
    pub records: Vec<StageRecord>,
}

#[derive(Debug)]
pub struct AdapterFailure {
    pub outdir: PathBuf,
    pub records: Vec<StageRecord>,
    pub error: PipelineError,
}

/// Substitutes `{candidate}`, `{function}` and `{outdir}`.
pub fn render_template(template: &str, candidate: &str, function: &str, outdir: &Path) -> String {
    template
        .replace("{candidate}", candidate)
        .replace("{function}", function)
        .replace("{outdir}", &outdir.display().to_string())
}

pub fn pair_outdir(config: &CycleConfig, candidate: &str, function: &str) -> PathBuf {
    config.output_dir().join(candidate).join(function)
}

/// Runs every configured stage for one pair, in order.
///
/// A build that exits non-zero still completes: its captured output is
/// the compile evidence. A failed generate stage skips everything after it.
pub fn run_adapters(
    config: &CycleConfig,
    candidate: &str,
    function: &str,
) -> Result<AdapterRun, AdapterFailure> {
    let outdir = pair_outdir(config, candidate, function);
    let mut records = Vec::new();
    let fail = |records: Vec<StageRecord>, error| AdapterFailure {
        outdir: outdir.clone(),
        records,
        error,
    };
    if let Err(e) = prepare_outdir(&outdir, config.adapters.generate.is_some()) {
        return Err(fail(records, e));
    }
    let mut first_error: Option<PipelineError> = None;
    let mut skip_reason: Option<String> = None;
    for stage in Stage::ALL {
        let record = |exit_code, status| StageRecord {
            candidate_id: candidate.to_string(),
            function: function.to_string(),
            stage,
            exit_code,
            status,
        };
        if let Some(reason) = &skip_reason {
            if config.adapters.get(stage).is_some() {
                records.push(record(None, StageStatus::Skipped(reason.clone())));
            }
            continue;
        }
        let name = config.adapters.artifact(stage);
        let artifact = outdir.join(&name);
        let missing = || PipelineError::MissingArtifact(format!("{candidate}/{function}/{name}"));
        let outcome = match config.adapters.get(stage) {
            Some(spec) => run_stage(config, stage, spec, candidate, function, &outdir, &artifact)
                .map_err(|(code, e)| (code, e.unwrap_or_else(missing))),
            None if artifact.exists() => Ok((None, StageStatus::Prestaged)),
            None => Err((None, missing())),
        };
        match outcome {
            Ok((code, status)) => records.push(record(code, status)),
            Err((code, error)) => {
                records.push(record(code, StageStatus::Failed(error.to_string())));
                if stage == Stage::Generate {
                    skip_reason = Some(format!("generate stage failed: {}", error.code()));
                }
                first_error.get_or_insert(error);
            }
        }
    }
    match first_error {
        Some(error) => Err(fail(records, error)),
        None => Ok(AdapterRun { outdir, records }),
    }
}

fn prepare_outdir(outdir: &Path, clear: bool) -> Result<(), PipelineError> {
    if clear && outdir.exists() {
        fs::remove_dir_all(outdir).map_err(|e| io_err(outdir, e))?;
    }
    fs::create_dir_all(outdir.join("logs")).map_err(|e| io_err(outdir, e))
}

/// `Err((code, None))` means the artifact is missing.
type StageOutcome = Result<(Option<i32>, StageStatus), (Option<i32>, Option<PipelineError>)>;

fn run_stage(
    config: &CycleConfig,
    stage: Stage,
    spec: &StageSpec,
    candidate: &str,
    function: &str,
    outdir: &Path,
    artifact: &Path,
) -> StageOutcome {
    let logs = outdir.join("logs");
    let stdout_path = logs.join(format!("{}.stdout", stage.name()));
    let stderr_path = logs.join(format!("{}.stderr", stage.name()));
    let open = |p: &Path| File::create(p).map_err(|e| (None, Some(io_err(p, e))));
    let stdout = open(&stdout_path)?;
    let stderr = open(&stderr_path)?;

    let command = render_template(&spec.command, candidate, function, outdir);
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .current_dir(config.base_dir())
        .env("AIGEN_CANDIDATE", candidate)
        .env("AIGEN_FUNCTION", function)
        .env("AIGEN_OUTDIR", outdir)
        .stdin(Stdio::null())
        .stdout(Stdio::from(stdout))
        .stderr(Stdio::from(stderr))
        .spawn()
        .map_err(|e| (None, Some(io_err(Path::new("sh"), e))))?;

    let secs = spec.timeout_secs.unwrap_or(DEFAULT_TIMEOUT_SECS);
    let status = match child.wait_timeout(Duration::from_secs(secs)) {
        Ok(Some(status)) => status,
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            return Err((
                None,
                Some(PipelineError::AdapterTimeout {
                    stage: stage.name(),
                    secs,
                }),
            ));
        }
        Err(e) => return Err((None, Some(io_err(Path::new("sh"), e)))),
    };
    let code = status.code();

    if stage == Stage::Build && !artifact.exists() {
        let io = |p: &Path, e| (code, Some(io_err(p, e)));
        let mut log = fs::read(&stdout_path).map_err(|e| io(&stdout_path, e))?;
        log.extend(fs::read(&stderr_path).map_err(|e| io(&stderr_path, e))?);
        fs::write(artifact, log).map_err(|e| io(artifact, e))?;
    }
    // A failing exit explains a missing artifact better than its absence
    // does. Generation must also succeed outright; other tools may exit
    // non-zero to report findings.
    let exists = artifact.exists();
    if status.success() || (exists && stage != Stage::Generate) {
        return if exists { Ok((code, StageStatus::Completed)) } else { Err((code, None)) };
    }
    Err((
        code,
        Some(PipelineError::StageFailed {
            stage: stage.name(),
            exit_code: code,
        }),
    ))
}
