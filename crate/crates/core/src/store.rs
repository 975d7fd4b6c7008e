//! On-disk persistence of cycles, reviews and prompts.
//!
//! Layout below the root:
//!
//! ```text
//! index.json
//! prompts.json
//! reviews/<candidate>/<function>.json
//! cycles/<cycle_id>/cycle.json
//! cycles/<cycle_id>/artifacts/<candidate>/<function>/...
//! ```
//!
//! Cycle directories are written under a temporary name and renamed into
//! place; the index is rewritten through a temporary file. A `.lock` file
//! serializes writers.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{sha256_hex, PromptRecord, Warning};
use crate::pipeline::{
    replay_cycle, validate_id, EvaluationCycle, PipelineError, PromptMeta, PromptRegistry,
    ScoredCandidate,
};
use crate::review::{ReviewRecord, ReviewSet};

pub const STORE_ENV: &str = "AIGEN_STORE";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io-error: {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse-error: {path}: {message}")]
    Parse { path: String, message: String },
    #[error("duplicate-cycle: cycle {0} already stored")]
    DuplicateCycle(String),
    #[error("unknown-cycle: no cycle {0}")]
    UnknownCycle(String),
    #[error("corrupt-record: cycle {cycle}: {detail}")]
    CorruptRecord { cycle: String, detail: String },
    #[error("store-locked: {0} exists; another writer is active or crashed")]
    Locked(String),
    #[error("duplicate-review: a different review for {candidate}/{function} is already stored")]
    DuplicateReview { candidate: String, function: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } => "io-error",
            StoreError::Parse { .. } => "parse-error",
            StoreError::DuplicateCycle(_) => "duplicate-cycle",
            StoreError::UnknownCycle(_) => "unknown-cycle",
            StoreError::CorruptRecord { .. } => "corrupt-record",
            StoreError::Locked(_) => "store-locked",
            StoreError::DuplicateReview { .. } => "duplicate-review",
            StoreError::Pipeline(e) => e.code(),
        }
    }

    pub fn is_validation(&self) -> bool {
        match self {
            StoreError::Io { .. } | StoreError::Parse { .. } | StoreError::CorruptRecord { .. } => false,
            StoreError::Pipeline(e) => e.is_validation(),
            _ => true,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("store records serialize");
    s.push('\n');
    s.into_bytes()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexCandidate {
    pub candidate_id: String,
    pub model_name: String,
    pub prompt_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub cycle_id: String,
    pub date: String,
    /// sha256 of `cycle.json`.
    pub digest: String,
    pub candidates: Vec<IndexCandidate>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Index {
    cycles: Vec<IndexEntry>,
}

#[derive(Debug, Clone)]
pub struct LoadedCycle {
    pub cycle: EvaluationCycle,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone)]
pub struct HistoryPoint {
    pub cycle_id: String,
    pub candidate: ScoredCandidate,
}

pub struct Store {
    root: PathBuf,
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for dir in [root.join("cycles"), root.join("reviews")] {
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        Ok(Self { root })
    }

    /// Root from `AIGEN_STORE`, falling back to `default`.
    pub fn from_env(default: impl Into<PathBuf>) -> Result<Self, StoreError> {
        match std::env::var_os(STORE_ENV) {
            Some(v) if !v.is_empty() => Self::open(PathBuf::from(v)),
            _ => Self::open(default),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn lock(&self) -> Result<LockGuard, StoreError> {
        let path = self.root.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(StoreError::Locked(path.display().to_string()))
            }
            Err(e) => Err(io_err(&path, e)),
        }
    }

    fn cycle_dir(&self, id: &str) -> PathBuf {
        self.root.join("cycles").join(id)
    }

    fn read_index(&self) -> Result<Index, StoreError> {
        let path = self.root.join("index.json");
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| StoreError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Index::default()),
            Err(e) => Err(io_err(&path, e)),
        }
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| io_err(path, e))
    }

    /// Persists `cycle` and copies every manifest file from `artifacts`
    /// (the run's output directory), checking each digest on the way.
    pub fn save_cycle(&self, cycle: &EvaluationCycle, artifacts: &Path) -> Result<(), StoreError> {
        validate_id("cycle id", &cycle.cycle_id)?;
        let _lock = self.lock()?;
        let dest = self.cycle_dir(&cycle.cycle_id);
        if dest.exists() {
            return Err(StoreError::DuplicateCycle(cycle.cycle_id.clone()));
        }
        let tmp = self.root.join("cycles").join(format!(".tmp-{}", cycle.cycle_id));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| io_err(&tmp, e))?;
        }
        let result = self.stage_cycle(cycle, artifacts, &tmp);
        if result.is_err() {
            let _ = fs::remove_dir_all(&tmp);
        }
        let digest = result?;
        fs::rename(&tmp, &dest).map_err(|e| io_err(&dest, e))?;

        let mut index = self.read_index()?;
        index.cycles.push(IndexEntry {
            cycle_id: cycle.cycle_id.clone(),
            date: cycle.date.clone(),
            digest,
            candidates: cycle
                .candidates
                .iter()
                .map(|c| IndexCandidate {
                    candidate_id: c.run.candidate_id.clone(),
                    model_name: c.run.model_name.clone(),
                    prompt_id: c.run.prompt_ref.prompt_id.clone(),
                })
                .collect(),
        });
        index.cycles.sort_by(|a, b| (&a.date, &a.cycle_id).cmp(&(&b.date, &b.cycle_id)));
        self.write_atomic(&self.root.join("index.json"), &to_json(&index))
    }

    fn stage_cycle(&self, cycle: &EvaluationCycle, artifacts: &Path, tmp: &Path) -> Result<String, StoreError> {
        for entry in &cycle.manifest {
            let src = artifacts.join(&entry.path);
            let bytes = fs::read(&src).map_err(|e| io_err(&src, e))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(StoreError::CorruptRecord {
                    cycle: cycle.cycle_id.clone(),
                    detail: format!("{} changed after the run", entry.path),
                });
            }
            let dst = tmp.join("artifacts").join(&entry.path);
            let parent = dst.parent().expect("artifact has a parent");
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
            fs::write(&dst, &bytes).map_err(|e| io_err(&dst, e))?;
        }
        fs::create_dir_all(tmp).map_err(|e| io_err(tmp, e))?;
        let body = to_json(cycle);
        let path = tmp.join("cycle.json");
        fs::write(&path, &body).map_err(|e| io_err(&path, e))?;
        Ok(sha256_hex(&body))
    }

    pub fn list_cycles(&self) -> Result<Vec<IndexEntry>, StoreError> {
        Ok(self.read_index()?.cycles)
    }

    /// Path to the raw `cycle.json` of a stored cycle.
    pub fn cycle_path(&self, id: &str) -> PathBuf {
        self.cycle_dir(id).join("cycle.json")
    }

    /// Loads a cycle, verifying its digest and every stored artifact. A
    /// stored score that its own artifacts no longer reproduce is reported
    /// as a warning.
    pub fn load_cycle(&self, id: &str) -> Result<LoadedCycle, StoreError> {
        let index = self.read_index()?;
        let entry = index
            .cycles
            .iter()
            .find(|c| c.cycle_id == id)
            .ok_or_else(|| StoreError::UnknownCycle(id.to_string()))?;
        let corrupt = |detail: String| StoreError::CorruptRecord {
            cycle: id.to_string(),
            detail,
        };
        let path = self.cycle_path(id);
        let body = fs::read(&path).map_err(|e| io_err(&path, e))?;
        if sha256_hex(&body) != entry.digest {
            return Err(corrupt("cycle.json digest mismatch".into()));
        }
        let cycle: EvaluationCycle =
            serde_json::from_slice(&body).map_err(|e| corrupt(format!("cycle.json: {e}")))?;
        let artifacts = self.cycle_dir(id).join("artifacts");
        for m in &cycle.manifest {
            let p = artifacts.join(&m.path);
            let bytes = fs::read(&p).map_err(|_| corrupt(format!("{} missing", m.path)))?;
            if sha256_hex(&bytes) != m.sha256 {
                return Err(corrupt(format!("{} digest mismatch", m.path)));
            }
        }
        let mut warnings = Vec::new();
        match replay_cycle(&cycle, &artifacts) {
            Ok(replayed) => {
                for (cid, score) in replayed {
                    let stored = cycle.candidate(&cid).map(|c| c.score);
                    if stored != Some(score) {
                        warnings.push(Warning::new(
                            "re-derivation-mismatch",
                            format!("{cid}: stored score differs from the score its artifacts produce"),
                        ));
                    }
                }
            }
            Err(e) => warnings.push(Warning::new(
                "re-derivation-failed",
                format!("{}: {e}", e.code()),
            )),
        }
        Ok(LoadedCycle { cycle, warnings })
    }

    /// Every scored entry of `model_name` (optionally under one prompt id),
    /// one per candidate id taken from its latest cycle, in candidate date
    /// order.
    pub fn history(&self, model_name: &str, prompt_id: Option<&str>) -> Result<Vec<HistoryPoint>, StoreError> {
        let mut points: Vec<HistoryPoint> = Vec::new();
        for entry in self.read_index()?.cycles {
            let relevant = entry.candidates.iter().any(|c| {
                c.model_name == model_name && prompt_id.is_none_or(|p| c.prompt_id == p)
            });
            if !relevant {
                continue;
            }
            let loaded = self.load_cycle(&entry.cycle_id)?;
            for c in loaded.cycle.candidates {
                if c.run.model_name != model_name
                    || prompt_id.is_some_and(|p| c.run.prompt_ref.prompt_id != p)
                {
                    continue;
                }
                // Index order is by cycle date, so later cycles replace earlier ones.
                points.retain(|p| p.candidate.run.candidate_id != c.run.candidate_id);
                points.push(HistoryPoint {
                    cycle_id: entry.cycle_id.clone(),
                    candidate: c,
                });
            }
        }
        points.sort_by(|a, b| {
            (&a.candidate.run.date, &a.candidate.run.candidate_id)
                .cmp(&(&b.candidate.run.date, &b.candidate.run.candidate_id))
        });
        Ok(points)
    }

    fn review_path(&self, candidate: &str, function: &str) -> PathBuf {
        self.root
            .join("reviews")
            .join(candidate)
            .join(format!("{function}.json"))
    }

    /// Stores a review. Re-importing an identical record is a no-op.
    pub fn save_review(&self, record: &ReviewRecord) -> Result<bool, StoreError> {
        validate_id("candidate id", &record.candidate_id)?;
        validate_id("function name", &record.function_name)?;
        let _lock = self.lock()?;
        let path = self.review_path(&record.candidate_id, &record.function_name);
        let body = to_json(record);
        if let Ok(existing) = fs::read(&path) {
            if existing == body {
                return Ok(false);
            }
            return Err(StoreError::DuplicateReview {
                candidate: record.candidate_id.clone(),
                function: record.function_name.clone(),
            });
        }
        let parent = path.parent().expect("review has a parent");
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        self.write_atomic(&path, &body)?;
        Ok(true)
    }

    pub fn load_reviews(&self) -> Result<ReviewSet, StoreError> {
        let mut set = ReviewSet::new();
        crate::pipeline::load_reviews(&self.root.join("reviews"), &mut set)?;
        Ok(set)
    }

    pub fn prompts_path(&self) -> PathBuf {
        self.root.join("prompts.json")
    }

    pub fn register_prompt(
        &self,
        prompt_id: &str,
        text: &str,
        meta: PromptMeta,
    ) -> Result<(PromptRecord, bool), StoreError> {
        let _lock = self.lock()?;
        let path = self.prompts_path();
        let mut registry = PromptRegistry::load(&path)?;
        let (record, created) = registry.register(prompt_id, text, meta)?;
        if created {
            self.write_atomic(&path, registry.to_json().as_bytes())?;
        }
        Ok((record, created))
    }
}
