//! Cycle orchestration: configuration, adapter runs, evidence collection,
//! scoring of the cohort and the refine/document gate.

mod adapters;
mod prompts;

pub use adapters::{
    pair_outdir, render_template, run_adapters, AdapterFailure, AdapterRun, AdapterSet, Stage,
    StageRecord, StageSpec, StageStatus, DEFAULT_TIMEOUT_SECS,
};
pub use prompts::{register_prompt, PromptMeta, PromptRegistry, StoredPrompt};

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    parse_compiler_log, parse_coverage_report, parse_issue_report, parse_test_results,
    scan_test_source, CoverageFormat, Dialect, IngestError, IssueFilter, LifecycleFacts,
    TestRunFacts,
};
use crate::metrics::{aggregate_candidate, compute_example_metrics, MetricsError};
use crate::model::{
    sha256_hex, validate_date, validate_weight_profile, ArtifactBundle, CandidateRun,
    GroundTruthCatalog, MetricVector, ModelError, PromptRef, ScoreBreakdown,
    Warning, WeightProfile,
};
use crate::report::format_fixed;
use crate::review::{ReviewError, ReviewRecord, ReviewSet};
use crate::scoring::{normalize_penalties, rank, score_candidate, PenaltyRatios, RankInput, RankedCandidate, ScoringError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid-config: {0}")]
    InvalidConfig(String),
    #[error("io-error: {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse-error: {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Ingest { path: String, source: IngestError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("adapter-timeout: {stage} stage exceeded {secs}s")]
    AdapterTimeout { stage: &'static str, secs: u64 },
    #[error("stage-failed: {stage} stage exited with {exit_code:?}")]
    StageFailed {
        stage: &'static str,
        exit_code: Option<i32>,
    },
    #[error("missing-artifact: {0}")]
    MissingArtifact(String),
    #[error("missing-review: no review for {candidate}/{function}")]
    MissingReview { candidate: String, function: String },
    #[error("invalid-prompt: {0}")]
    InvalidPrompt(String),
    #[error("unknown-prompt: {0} is not registered")]
    UnknownPrompt(String),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::InvalidConfig(_) => "invalid-config",
            PipelineError::Io { .. } => "io-error",
            PipelineError::Parse { .. } => "parse-error",
            PipelineError::Ingest { source, .. } => source.code(),
            PipelineError::Model(e) => e.code(),
            PipelineError::Review(e) => e.code(),
            PipelineError::Metrics(e) => e.code(),
            PipelineError::Scoring(e) => e.code(),
            PipelineError::AdapterTimeout { .. } => "adapter-timeout",
            PipelineError::StageFailed { .. } => "stage-failed",
            PipelineError::MissingArtifact(_) => "missing-artifact",
            PipelineError::MissingReview { .. } => "missing-review",
            PipelineError::InvalidPrompt(_) => "invalid-prompt",
            PipelineError::UnknownPrompt(_) => "unknown-prompt",
        }
    }

    /// True for bad inputs as opposed to unreadable or unparsable ones.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            PipelineError::Io { .. }
                | PipelineError::Parse { .. }
                | PipelineError::Ingest { .. }
                | PipelineError::AdapterTimeout { .. }
                | PipelineError::StageFailed { .. }
                | PipelineError::MissingArtifact(_)
        )
    }
}

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub(crate) fn parse_err(path: &Path, e: serde_json::Error) -> PipelineError {
    PipelineError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|e| io_err(path, e))
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    serde_json::from_slice(&read_bytes(path)?).map_err(|e| parse_err(path, e))
}

pub fn load_catalog(path: &Path) -> Result<(GroundTruthCatalog, Vec<Warning>), PipelineError> {
    let catalog: GroundTruthCatalog = load_json(path)?;
    let warnings = catalog.validate()?;
    Ok((catalog, warnings))
}

pub fn load_profile(path: &Path) -> Result<WeightProfile, PipelineError> {
    Ok(validate_weight_profile(load_json(path)?)?)
}

/// Reads every `*.json` review below `dir`, in path order.
pub fn load_reviews(dir: &Path, into: &mut ReviewSet) -> Result<(), PipelineError> {
    for path in list_files(dir)? {
        if path.extension().is_some_and(|e| e == "json") {
            let record: ReviewRecord = load_json(&path)?;
            into.insert(record)?;
        }
    }
    Ok(())
}

/// All regular files below `root`, sorted by path. A file root lists itself.
pub fn list_files(root: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let meta = fs::metadata(root).map_err(|e| io_err(root, e))?;
    if meta.is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
            let entry = entry.map_err(|e| io_err(&dir, e))?;
            let kind = entry.file_type().map_err(|e| io_err(&entry.path(), e))?;
            if kind.is_dir() {
                stack.push(entry.path());
            } else if kind.is_file() {
                out.push(entry.path());
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(default = "default_min_total")]
    pub min_total: f64,
    /// `None` means unbounded.
    #[serde(default = "default_max_ce")]
    pub max_ce: Option<u64>,
}

fn default_min_total() -> f64 {
    80.0
}

fn default_max_ce() -> Option<u64> {
    Some(0)
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_total: default_min_total(),
            max_ce: default_max_ce(),
        }
    }
}

impl Thresholds {
    pub fn validate(&self, profile: &WeightProfile) -> Result<(), PipelineError> {
        let (lo, hi) = (profile.min_total(), profile.max_total());
        if !self.min_total.is_finite() || self.min_total < lo || self.min_total > hi {
            return Err(PipelineError::InvalidConfig(format!(
                "min_total {} outside the reachable range [{lo}, {hi}]",
                self.min_total
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Refine,
    Document,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDecision {
    pub verdict: Verdict,
    /// One line per check, e.g. `total 67.96 < 80`.
    pub reasons: Vec<String>,
}

/// Document when the total reaches the floor and compilation errors stay
/// within the ceiling; refine otherwise.
pub fn gate(score: &ScoreBreakdown, aggregate: &MetricVector, thresholds: &Thresholds) -> GateDecision {
    let total_ok = score.total >= thresholds.min_total;
    let total = format_fixed(score.total, 2);
    let mut reasons = vec![if total_ok {
        format!("total {total} >= {}", thresholds.min_total)
    } else {
        format!("total {total} < {}", thresholds.min_total)
    }];
    let ce_ok = match thresholds.max_ce {
        Some(max) if aggregate.ce > max => {
            reasons.push(format!("ce {} > {max}", aggregate.ce));
            false
        }
        Some(max) => {
            reasons.push(format!("ce {} <= {max}", aggregate.ce));
            true
        }
        None => {
            reasons.push(format!("ce {} <= unbounded", aggregate.ce));
            true
        }
    };
    GateDecision {
        verdict: if total_ok && ce_ok {
            Verdict::Document
        } else {
            Verdict::Refine
        },
        reasons,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub candidate_id: String,
    pub model_name: String,
    #[serde(default)]
    pub model_version: String,
    pub prompt: PromptRef,
    pub date: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    pub catalog: PathBuf,
    #[serde(default)]
    pub reviews: Option<PathBuf>,
    #[serde(default)]
    pub weights: Option<PathBuf>,
    /// Prompt registry to check candidate prompt references against.
    #[serde(default)]
    pub prompts: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub candidates: Vec<CandidateSpec>,
    #[serde(default)]
    pub adapters: AdapterSet,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub dialect: Option<Dialect>,
    #[serde(default)]
    pub issue_filter: IssueFilter,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_workers() -> usize {
    1
}

/// Ids name directories, so they stay within a portable character set.
pub fn validate_id(kind: &str, id: &str) -> Result<(), PipelineError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(PipelineError::InvalidConfig(format!(
            "{kind} {id:?} must be non-empty [A-Za-z0-9._-] and not start with '.'"
        )))
    }
}

impl CycleConfig {
    /// Loads a config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let mut config: CycleConfig = load_json(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        config.base_dir = if dir.as_os_str().is_empty() {
            PathBuf::from(".")
        } else {
            dir.to_path_buf()
        };
        config.base_dir = config
            .base_dir
            .canonicalize()
            .map_err(|e| io_err(&config.base_dir, e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn set_base_dir(&mut self, dir: impl Into<PathBuf>) {
        self.base_dir = dir.into();
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.candidates.is_empty() {
            return bad("no candidates".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.candidates {
            validate_id("candidate id", &c.candidate_id)?;
            if !seen.insert(&c.candidate_id) {
                return bad(format!("duplicate candidate {}", c.candidate_id));
            }
            validate_date(&c.date)?;
        }
        for stage in Stage::ALL {
            let name = self.adapters.artifact(stage);
            let p = Path::new(&name);
            if name.trim().is_empty()
                || p.is_absolute()
                || p.components().any(|c| matches!(c, std::path::Component::ParentDir))
            {
                return bad(format!(
                    "{} artifact {name:?} must be a non-empty relative path",
                    stage.name()
                ));
            }
            if let Some(spec) = self.adapters.get(stage) {
                if spec.command.trim().is_empty() {
                    return bad(format!("{} command is empty", stage.name()));
                }
                if spec.timeout_secs == Some(0) {
                    return bad(format!("{} timeout must be positive", stage.name()));
                }
            }
        }
        if !self.thresholds.min_total.is_finite() {
            return bad("min_total must be finite".into());
        }
        Ok(())
    }

    pub fn ingest_settings(&self) -> IngestSettings {
        IngestSettings {
            dialect: self.dialect.clone().unwrap_or_default(),
            issue_filter: self.issue_filter.clone(),
            coverage_format: self.adapters.coverage_format(),
            artifacts: Stage::ALL
                .iter()
                .map(|&s| (s, self.adapters.artifact(s)))
                .collect(),
        }
    }
}

/// Everything needed to turn a pair directory back into an evidence bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSettings {
    pub dialect: Dialect,
    pub issue_filter: IssueFilter,
    pub coverage_format: CoverageFormat,
    pub artifacts: BTreeMap<Stage, String>,
}

impl IngestSettings {
    fn artifact(&self, dir: &Path, stage: Stage) -> PathBuf {
        let name = self
            .artifacts
            .get(&stage)
            .map(String::as_str)
            .unwrap_or(stage.default_artifact());
        dir.join(name)
    }
}

fn ingest_err(path: &Path, source: IngestError) -> PipelineError {
    PipelineError::Ingest {
        path: path.display().to_string(),
        source,
    }
}

/// Parses the raw artifacts in one pair directory and attaches `review`.
/// Missing test results are tolerated with a warning; they feed no metric.
pub fn collect_bundle(
    dir: &Path,
    settings: &IngestSettings,
    review: ReviewRecord,
) -> Result<(ArtifactBundle, Vec<Warning>), PipelineError> {
    let mut warnings = Vec::new();
    let build = settings.artifact(dir, Stage::Build);
    let compile = parse_compiler_log(&String::from_utf8_lossy(&read_bytes(&build)?));
    if compile.unrecognized {
        warnings.push(Warning::new(
            "unrecognized-compiler-log",
            format!("{}/{}: no diagnostics recognized", review.candidate_id, review.function_name),
        ));
    }
    let issues_path = settings.artifact(dir, Stage::StaticAnalysis);
    let issues = parse_issue_report(&read_bytes(&issues_path)?, &settings.issue_filter)
        .map_err(|e| ingest_err(&issues_path, e))?;
    let coverage_path = settings.artifact(dir, Stage::Coverage);
    let coverage = parse_coverage_report(&read_bytes(&coverage_path)?, settings.coverage_format)
        .map_err(|e| ingest_err(&coverage_path, e))?;
    let tests_path = settings.artifact(dir, Stage::TestRun);
    let test_run = if tests_path.exists() {
        parse_test_results(&read_bytes(&tests_path)?).map_err(|e| ingest_err(&tests_path, e))?
    } else {
        warnings.push(Warning::new(
            "no-test-results",
            format!("{}/{}: test results missing", review.candidate_id, review.function_name),
        ));
        TestRunFacts::default()
    };
    let src = settings.artifact(dir, Stage::Generate);
    let mut parts = Vec::new();
    for file in list_files(&src)? {
        let text = String::from_utf8_lossy(&read_bytes(&file)?).into_owned();
        parts.push(scan_test_source(&text, &settings.dialect));
    }
    let lifecycle = LifecycleFacts::merge(parts);
    Ok((
        ArtifactBundle {
            compile,
            issues,
            coverage,
            test_run,
            lifecycle,
            review,
        },
        warnings,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub run: CandidateRun,
    pub examples: BTreeMap<String, MetricVector>,
    pub aggregate: MetricVector,
    pub penalties: PenaltyRatios,
    pub score: ScoreBreakdown,
    pub gate: GateDecision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompleteCandidate {
    pub candidate_id: String,
    pub model_name: String,
    pub model_version: String,
    pub prompt_ref: PromptRef,
    pub date: String,
    pub function: String,
    pub error_code: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the cycle's artifact directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// The persisted result of one run over a cohort of candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationCycle {
    pub cycle_id: String,
    pub date: String,
    pub catalog: GroundTruthCatalog,
    pub catalog_hash: String,
    pub profile: WeightProfile,
    pub profile_hash: String,
    pub thresholds: Thresholds,
    pub ingest: IngestSettings,
    pub candidates: Vec<ScoredCandidate>,
    pub ranking: Vec<RankedCandidate>,
    #[serde(default)]
    pub incomplete: Vec<IncompleteCandidate>,
    #[serde(default)]
    pub stages: Vec<StageRecord>,
    #[serde(default)]
    pub warnings: Vec<Warning>,
    #[serde(default)]
    pub manifest: Vec<ManifestEntry>,
}

impl EvaluationCycle {
    pub fn candidate(&self, id: &str) -> Option<&ScoredCandidate> {
        self.candidates.iter().find(|c| c.run.candidate_id == id)
    }

    /// True when every candidate was scored and none needs refinement.
    pub fn all_documented(&self) -> bool {
        self.incomplete.is_empty()
            && self
                .candidates
                .iter()
                .all(|c| c.gate.verdict == Verdict::Document)
    }
}

pub fn profile_hash(profile: &WeightProfile) -> String {
    sha256_hex(&serde_json::to_vec(profile).expect("profile serializes"))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub cycle_id: Option<String>,
    pub date: Option<String>,
    pub workers: Option<usize>,
    /// Reviews supplied alongside (or instead of) the config's review directory.
    pub reviews: ReviewSet,
}

struct JobResult {
    records: Vec<StageRecord>,
    bundle: Result<(ArtifactBundle, Vec<Warning>), PipelineError>,
}

/// Runs adapters for every (candidate, function) pair, then ingests,
/// computes metrics and scores the candidates that produced full evidence.
pub fn run_cycle(config: &CycleConfig, options: RunOptions) -> Result<EvaluationCycle, PipelineError> {
    config.validate()?;
    let now = chrono::Utc::now();
    let cycle_id = options
        .cycle_id
        .unwrap_or_else(|| now.format("cycle-%Y%m%dT%H%M%SZ").to_string());
    validate_id("cycle id", &cycle_id)?;
    let date = options
        .date
        .unwrap_or_else(|| now.format("%Y-%m-%d").to_string());
    validate_date(&date)?;

    let (catalog, mut warnings) = load_catalog(&config.resolve(&config.catalog))?;
    let profile = match &config.weights {
        Some(p) => load_profile(&config.resolve(p))?,
        None => WeightProfile::default(),
    };
    config.thresholds.validate(&profile)?;
    if let Some(p) = &config.prompts {
        let registry = PromptRegistry::load(&config.resolve(p))?;
        for c in &config.candidates {
            if registry.get(&c.prompt.prompt_id, c.prompt.version).is_none() {
                return Err(PipelineError::UnknownPrompt(c.prompt.to_string()));
            }
        }
    }
    let mut reviews = options.reviews;
    if let Some(dir) = &config.reviews {
        load_reviews(&config.resolve(dir), &mut reviews)?;
    }
    let settings = config.ingest_settings();

    let functions: Vec<&str> = catalog.functions.iter().map(|f| f.name.as_str()).collect();
    let jobs: Vec<(usize, usize)> = (0..config.candidates.len())
        .flat_map(|c| (0..functions.len()).map(move |f| (c, f)))
        .collect();
    let queue = Mutex::new(jobs.iter().copied().enumerate().collect::<VecDeque<_>>());
    let results: Mutex<Vec<Option<JobResult>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let workers = options.workers.unwrap_or(config.workers).clamp(1, jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let next = queue.lock().expect("queue lock").pop_front();
                let Some((slot, (c, f))) = next else { break };
                let candidate = &config.candidates[c].candidate_id;
                let function = functions[f];
                let result = run_pair(config, &settings, &reviews, candidate, function);
                results.lock().expect("results lock")[slot] = Some(result);
            });
        }
    });
    let results: Vec<JobResult> = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();

    let mut stages = Vec::new();
    let mut complete: Vec<(CandidateRun, BTreeMap<String, MetricVector>, MetricVector)> = Vec::new();
    let mut incomplete = Vec::new();
    let mut per_candidate = results.into_iter();
    for spec in &config.candidates {
        let mut run = CandidateRun {
            candidate_id: spec.candidate_id.clone(),
            model_name: spec.model_name.clone(),
            model_version: spec.model_version.clone(),
            prompt_ref: spec.prompt.clone(),
            date: spec.date.clone(),
            bundles: BTreeMap::new(),
        };
        let mut failure: Option<(String, PipelineError)> = None;
        let mut examples = BTreeMap::new();
        for (entry, job) in catalog.functions.iter().zip(per_candidate.by_ref().take(functions.len())) {
            stages.extend(job.records);
            if failure.is_some() {
                continue;
            }
            let computed = job.bundle.and_then(|(bundle, w)| {
                let m = compute_example_metrics(&bundle, entry)?;
                Ok((bundle, w, m))
            });
            match computed {
                Ok((bundle, w, m)) => {
                    warnings.extend(w);
                    let prefix = format!("{}/{}", spec.candidate_id, entry.name);
                    warnings.extend(
                        m.warnings
                            .into_iter()
                            .map(|x| Warning::new(x.code, format!("{prefix}: {}", x.message))),
                    );
                    examples.insert(entry.name.clone(), m.vector);
                    run.bundles.insert(entry.name.clone(), bundle);
                }
                Err(e) => failure = Some((entry.name.clone(), e)),
            }
        }
        if let Some((function, e)) = failure {
            incomplete.push(IncompleteCandidate {
                candidate_id: run.candidate_id,
                model_name: run.model_name,
                model_version: run.model_version,
                prompt_ref: run.prompt_ref,
                date: run.date,
                function,
                error_code: e.code().to_string(),
                detail: e.to_string(),
            });
            continue;
        }
        let vectors: Vec<MetricVector> = examples.values().copied().collect();
        let aggregate = aggregate_candidate(&vectors, functions.len())?;
        complete.push((run, examples, aggregate));
    }

    let candidates = score_complete(complete, &profile, &config.thresholds)?;
    let ranking = rank_candidates(&candidates);
    let manifest = build_manifest(&config.output_dir(), &config.candidates)?;
    warnings.sort();
    warnings.dedup();

    Ok(EvaluationCycle {
        cycle_id,
        date,
        catalog_hash: catalog.content_hash(),
        catalog,
        profile_hash: profile_hash(&profile),
        profile,
        thresholds: config.thresholds.clone(),
        ingest: settings,
        candidates,
        ranking,
        incomplete,
        stages,
        warnings,
        manifest,
    })
}

type Complete = (CandidateRun, BTreeMap<String, MetricVector>, MetricVector);

fn score_complete(
    complete: Vec<Complete>,
    profile: &WeightProfile,
    thresholds: &Thresholds,
) -> Result<Vec<ScoredCandidate>, PipelineError> {
    let aggregates: Vec<(String, MetricVector)> = complete
        .iter()
        .map(|(run, _, agg)| (run.candidate_id.clone(), *agg))
        .collect();
    let ratios = normalize_penalties(&aggregates);
    complete
        .into_iter()
        .map(|(run, examples, aggregate)| {
            let penalties = ratios[&run.candidate_id];
            let score = score_candidate(&aggregate, penalties, profile)?;
            let gate = gate(&score, &aggregate, thresholds);
            Ok(ScoredCandidate {
                run,
                examples,
                aggregate,
                penalties,
                score,
                gate,
            })
        })
        .collect()
}

pub fn rank_candidates(candidates: &[ScoredCandidate]) -> Vec<RankedCandidate> {
    let inputs: Vec<RankInput<'_>> = candidates
        .iter()
        .map(|c| RankInput {
            candidate_id: &c.run.candidate_id,
            score: &c.score,
            ce: c.aggregate.ce,
            sai: c.aggregate.sai,
        })
        .collect();
    rank(&inputs)
}

fn run_pair(
    config: &CycleConfig,
    settings: &IngestSettings,
    reviews: &ReviewSet,
    candidate: &str,
    function: &str,
) -> JobResult {
    let (dir, records, error) = match run_adapters(config, candidate, function) {
        Ok(run) => (run.outdir, run.records, None),
        Err(f) => (f.outdir, f.records, Some(f.error)),
    };
    // Test results feed no metric, so a failed test-run stage alone does
    // not block scoring.
    let blocking = records.iter().any(|r| {
        matches!(r.status, StageStatus::Failed(_) | StageStatus::Skipped(_)) && r.stage != Stage::TestRun
    });
    let bundle = match error {
        Some(e) if blocking || records.iter().all(|r| r.stage != Stage::TestRun) => Err(e),
        _ => match reviews.get(candidate, function) {
            Some(review) => collect_bundle(&dir, settings, review.clone()),
            None => Err(PipelineError::MissingReview {
                candidate: candidate.to_string(),
                function: function.to_string(),
            }),
        },
    };
    JobResult { records, bundle }
}

fn build_manifest(
    output_dir: &Path,
    candidates: &[CandidateSpec],
) -> Result<Vec<ManifestEntry>, PipelineError> {
    let mut out = Vec::new();
    for c in candidates {
        let dir = output_dir.join(&c.candidate_id);
        if !dir.exists() {
            continue;
        }
        for file in list_files(&dir)? {
            let bytes = read_bytes(&file)?;
            let rel = file
                .strip_prefix(output_dir)
                .expect("listed below output dir")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            out.push(ManifestEntry {
                path: rel,
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// Re-ingests a cycle's stored artifacts with its snapshotted catalog,
/// profile and reviews, returning freshly computed scores per candidate.
pub fn replay_cycle(
    cycle: &EvaluationCycle,
    artifacts_root: &Path,
) -> Result<Vec<(String, ScoreBreakdown)>, PipelineError> {
    let mut complete = Vec::new();
    for c in &cycle.candidates {
        let mut examples = BTreeMap::new();
        for entry in &cycle.catalog.functions {
            let stored = c.run.bundles.get(&entry.name).ok_or_else(|| {
                PipelineError::MissingArtifact(format!("{}/{}", c.run.candidate_id, entry.name))
            })?;
            let dir = artifacts_root.join(&c.run.candidate_id).join(&entry.name);
            let (bundle, _) = collect_bundle(&dir, &cycle.ingest, stored.review.clone())?;
            examples.insert(entry.name.clone(), compute_example_metrics(&bundle, entry)?.vector);
        }
        let vectors: Vec<MetricVector> = examples.values().copied().collect();
        let aggregate = aggregate_candidate(&vectors, cycle.catalog.functions.len())?;
        complete.push((c.run.clone(), examples, aggregate));
    }
    Ok(score_complete(complete, &cycle.profile, &cycle.thresholds)?
        .into_iter()
        .map(|c| (c.run.candidate_id, c.score))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(total: f64) -> ScoreBreakdown {
        ScoreBreakdown {
            ce_contrib: 0.0,
            sai_contrib: 0.0,
            stu_contrib: 0.0,
            whitebox_contrib: 0.0,
            blackbox_contrib: total,
            total,
        }
    }

    fn agg(ce: u64) -> MetricVector {
        MetricVector {
            ce,
            ..MetricVector::perfect()
        }
    }

    #[test]
    fn gate_refines_low_total() {
        let g = gate(&score(67.962853), &agg(3), &Thresholds::default());
        assert_eq!(g.verdict, Verdict::Refine);
        assert_eq!(g.reasons, ["total 67.96 < 80", "ce 3 > 0"]);
    }

    #[test]
    fn gate_documents_when_both_hold() {
        let g = gate(&score(91.755594), &agg(0), &Thresholds::default());
        assert_eq!(g.verdict, Verdict::Document);
        assert_eq!(g.reasons, ["total 91.76 >= 80", "ce 0 <= 0"]);
    }

    #[test]
    fn ce_ceiling_alone_refines() {
        let g = gate(&score(95.0), &agg(1), &Thresholds::default());
        assert_eq!(g.verdict, Verdict::Refine);
    }

    #[test]
    fn open_thresholds_always_document() {
        let t = Thresholds {
            min_total: 0.0,
            max_ce: None,
        };
        assert_eq!(gate(&score(0.0), &agg(400), &t).verdict, Verdict::Document);
    }

    #[test]
    fn threshold_range_checked_against_profile() {
        let p = WeightProfile::default();
        let ok = Thresholds {
            min_total: -25.0,
            max_ce: None,
        };
        assert!(ok.validate(&p).is_ok());
        let high = Thresholds {
            min_total: 100.5,
            max_ce: None,
        };
        assert_eq!(high.validate(&p).unwrap_err().code(), "invalid-config");
    }

    #[test]
    fn thresholds_json_defaults_and_null() {
        let t: Thresholds = serde_json::from_str("{}").unwrap();
        assert_eq!(t, Thresholds::default());
        let t: Thresholds = serde_json::from_str(r#"{"min_total": 0, "max_ce": null}"#).unwrap();
        assert_eq!(t.max_ce, None);
    }

    #[test]
    fn id_charset() {
        assert!(validate_id("candidate id", "o1-preview_dec.24").is_ok());
        for bad in ["", "../x", "a/b", ".hidden", "a b"] {
            assert!(validate_id("candidate id", bad).is_err(), "{bad}");
        }
    }
}
