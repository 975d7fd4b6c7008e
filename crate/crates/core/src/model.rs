//! Domain types shared by every stage of the harness: the expert catalog,
//! candidate runs, metric vectors, the weight profile and score breakdowns.
//!
//! Ratios are stored in `[0, 1]`; percentages only appear when rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{CompileReport, CoverageFacts, IssueReport, LifecycleFacts, TestRunFacts};
use crate::review::ReviewRecord;

/// Tolerance used when checking that the positive weights sum to 100.
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid-profile: {0}")]
    InvalidProfile(String),
    #[error("invalid-catalog: {0}")]
    InvalidCatalog(String),
    #[error("invalid-date: {0:?} is not an ISO-8601 date")]
    InvalidDate(String),
    #[error("invalid-metric: {0}")]
    InvalidMetric(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::InvalidProfile(_) => "invalid-profile",
            ModelError::InvalidCatalog(_) => "invalid-catalog",
            ModelError::InvalidDate(_) => "invalid-date",
            ModelError::InvalidMetric(_) => "invalid-metric",
        }
    }
}

/// A non-fatal observation recorded while validating or computing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Warning {
    pub code: String,
    pub message: String,
}

impl Warning {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// Checks that `date` is a calendar date in `YYYY-MM-DD` form.
pub fn validate_date(date: &str) -> Result<(), ModelError> {
    chrono::NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .map(|_| ())
        .map_err(|_| ModelError::InvalidDate(date.to_string()))
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validity {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    Unit,
    Integration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceClass {
    pub id: String,
    pub description: String,
    pub validity: Validity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryValue {
    pub id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub description: String,
}

/// Expert ground truth for one function under test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub name: String,
    pub kind: FunctionKind,
    pub equivalence_classes: Vec<EquivalenceClass>,
    pub boundary_values: Vec<BoundaryValue>,
    pub expected_parameterized_tests: u64,
    pub expert_scenarios: Vec<Scenario>,
    pub expected_isolated_tests: u64,
}

impl FunctionEntry {
    pub fn class_ids(&self) -> BTreeSet<&str> {
        self.equivalence_classes.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn boundary_ids(&self) -> BTreeSet<&str> {
        self.boundary_values.iter().map(|b| b.id.as_str()).collect()
    }

    pub fn scenario_ids(&self) -> BTreeSet<&str> {
        self.expert_scenarios.iter().map(|s| s.id.as_str()).collect()
    }

    fn validate(&self) -> Result<Vec<Warning>, ModelError> {
        let mut warnings = Vec::new();
        if self.name.trim().is_empty() {
            return Err(ModelError::InvalidCatalog("function name is empty".into()));
        }
        check_ids(
            &self.name,
            "equivalence class",
            self.equivalence_classes.iter().map(|c| c.id.as_str()),
        )?;
        check_ids(
            &self.name,
            "boundary value",
            self.boundary_values.iter().map(|b| b.id.as_str()),
        )?;
        check_ids(
            &self.name,
            "scenario",
            self.expert_scenarios.iter().map(|s| s.id.as_str()),
        )?;
        if self.expert_scenarios.is_empty() {
            return Err(ModelError::InvalidCatalog(format!(
                "function {} has no expert scenarios",
                self.name
            )));
        }
        if !self
            .equivalence_classes
            .iter()
            .any(|c| c.validity == Validity::Valid)
        {
            return Err(ModelError::InvalidCatalog(format!(
                "function {} has no valid equivalence class",
                self.name
            )));
        }
        if !self
            .equivalence_classes
            .iter()
            .any(|c| c.validity == Validity::Invalid)
        {
            warnings.push(Warning::new(
                "no-invalid-class",
                format!("function {} has no invalid equivalence class", self.name),
            ));
        }
        Ok(warnings)
    }
}

fn check_ids<'a>(
    function: &str,
    what: &str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if id.trim().is_empty() {
            return Err(ModelError::InvalidCatalog(format!(
                "function {function}: empty {what} id"
            )));
        }
        if !seen.insert(id) {
            return Err(ModelError::InvalidCatalog(format!(
                "function {function}: duplicate {what} id {id}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthCatalog {
    pub catalog_id: String,
    pub functions: Vec<FunctionEntry>,
}

impl GroundTruthCatalog {
    /// Checks every catalog invariant, returning soft findings as warnings.
    pub fn validate(&self) -> Result<Vec<Warning>, ModelError> {
        if self.catalog_id.trim().is_empty() {
            return Err(ModelError::InvalidCatalog("catalog_id is empty".into()));
        }
        let mut names = BTreeSet::new();
        let mut warnings = Vec::new();
        for entry in &self.functions {
            if !names.insert(entry.name.as_str()) {
                return Err(ModelError::InvalidCatalog(format!(
                    "duplicate function name {}",
                    entry.name
                )));
            }
            warnings.extend(entry.validate()?);
        }
        Ok(warnings)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionEntry> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_names(&self) -> BTreeSet<&str> {
        self.functions.iter().map(|f| f.name.as_str()).collect()
    }

    /// Content hash over the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("catalog serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PromptRef {
    pub prompt_id: String,
    pub version: u32,
}

impl fmt::Display for PromptRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@v{}", self.prompt_id, self.version)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt_id: String,
    pub version: u32,
    pub content_hash: String,
    pub language: String,
    pub notes: String,
}

impl PromptRecord {
    pub fn reference(&self) -> PromptRef {
        PromptRef {
            prompt_id: self.prompt_id.clone(),
            version: self.version,
        }
    }
}

/// All evidence gathered for one (candidate, function) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactBundle {
    pub compile: CompileReport,
    pub issues: IssueReport,
    pub coverage: CoverageFacts,
    pub test_run: TestRunFacts,
    pub lifecycle: LifecycleFacts,
    pub review: ReviewRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRun {
    pub candidate_id: String,
    pub model_name: String,
    pub model_version: String,
    pub prompt_ref: PromptRef,
    pub date: String,
    pub bundles: BTreeMap<String, ArtifactBundle>,
}

impl CandidateRun {
    /// Column label such as `ChatGPT-4 Iterative (2024-05-20)`.
    pub fn label(&self) -> String {
        let mut name = self.model_name.clone();
        if !self.model_version.is_empty() {
            name.push(' ');
            name.push_str(&self.model_version);
        }
        format!("{name} ({})", self.date)
    }
}

/// The eleven metric values for one example or one aggregated candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub ce: u64,
    pub sai: u64,
    pub stu: f64,
    pub lc: f64,
    pub bc: f64,
    pub bdc: f64,
    pub ti: f64,
    pub epc: f64,
    pub bva: f64,
    pub tp: f64,
    pub egtc: f64,
}

impl MetricVector {
    pub fn ratios(&self) -> [(&'static str, f64); 9] {
        [
            ("stu", self.stu),
            ("lc", self.lc),
            ("bc", self.bc),
            ("bdc", self.bdc),
            ("ti", self.ti),
            ("epc", self.epc),
            ("bva", self.bva),
            ("tp", self.tp),
            ("egtc", self.egtc),
        ]
    }

    pub fn ratios_mut(&mut self) -> [&mut f64; 9] {
        [
            &mut self.stu,
            &mut self.lc,
            &mut self.bc,
            &mut self.bdc,
            &mut self.ti,
            &mut self.epc,
            &mut self.bva,
            &mut self.tp,
            &mut self.egtc,
        ]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in self.ratios() {
            if !value.is_finite() {
                return Err(ModelError::InvalidMetric(format!("{name} is not a number")));
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::InvalidMetric(format!(
                    "{name} = {value} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// A vector with every ratio at 1 and no penalties.
    pub fn perfect() -> Self {
        Self {
            ce: 0,
            sai: 0,
            stu: 1.0,
            lc: 1.0,
            bc: 1.0,
            bdc: 1.0,
            ti: 1.0,
            epc: 1.0,
            bva: 1.0,
            tp: 1.0,
            egtc: 1.0,
        }
    }
}

/// Category weights in signed percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub w_ce: f64,
    pub w_sai: f64,
    pub w_stu: f64,
    pub w_whitebox: f64,
    pub w_blackbox: f64,
}

impl Default for WeightProfile {
    fn default() -> Self {
        Self {
            w_ce: -20.0,
            w_sai: -5.0,
            w_stu: 10.0,
            w_whitebox: 40.0,
            w_blackbox: 50.0,
        }
    }
}

impl WeightProfile {
    /// Lowest reachable total: every penalty at its maximum, every ratio at zero.
    pub fn min_total(&self) -> f64 {
        self.w_ce + self.w_sai
    }

    pub fn max_total(&self) -> f64 {
        self.w_stu + self.w_whitebox + self.w_blackbox
    }
}

/// Returns the profile unchanged when its invariants hold.
pub fn validate_weight_profile(profile: WeightProfile) -> Result<WeightProfile, ModelError> {
    let all = [
        ("w_ce", profile.w_ce),
        ("w_sai", profile.w_sai),
        ("w_stu", profile.w_stu),
        ("w_whitebox", profile.w_whitebox),
        ("w_blackbox", profile.w_blackbox),
    ];
    if let Some((name, _)) = all.iter().find(|(_, w)| !w.is_finite()) {
        return Err(ModelError::InvalidProfile(format!("{name} is not finite")));
    }
    for (name, w) in &all[..2] {
        if *w > 0.0 {
            return Err(ModelError::InvalidProfile(format!(
                "penalty weight {name} = {w} must be <= 0"
            )));
        }
    }
    for (name, w) in &all[2..] {
        if *w < 0.0 {
            return Err(ModelError::InvalidProfile(format!(
                "weight {name} = {w} must be >= 0"
            )));
        }
    }
    let positive = profile.max_total();
    if (positive - 100.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(ModelError::InvalidProfile(format!(
            "positive side sums to {positive}, expected 100"
        )));
    }
    Ok(profile)
}

/// Weighted contributions of each category; `total` is their exact sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub ce_contrib: f64,
    pub sai_contrib: f64,
    pub stu_contrib: f64,
    pub whitebox_contrib: f64,
    pub blackbox_contrib: f64,
    pub total: f64,
}
