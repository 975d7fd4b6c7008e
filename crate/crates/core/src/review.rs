//! Expert black-box assessments and how they combine with scanner facts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::LifecycleFacts;
use crate::model::{validate_date, FunctionEntry, Warning};

/// Override key that applies to every class of the suite.
pub const ALL_CLASSES: &str = "*";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReviewError {
    #[error("unknown-id: review of {function} references unknown ids {}", .ids.join(", "))]
    UnknownId { function: String, ids: Vec<String> },
    #[error("duplicate-review: a review for ({candidate}, {function}) already exists")]
    DuplicateReview { candidate: String, function: String },
    #[error("function-mismatch: review is for {record} but catalog entry is {entry}")]
    FunctionMismatch { record: String, entry: String },
    #[error("invalid-review: {0}")]
    Invalid(String),
}

impl ReviewError {
    pub fn code(&self) -> &'static str {
        match self {
            ReviewError::UnknownId { .. } => "unknown-id",
            ReviewError::DuplicateReview { .. } => "duplicate-review",
            ReviewError::FunctionMismatch { .. } => "function-mismatch",
            ReviewError::Invalid(_) => "invalid-review",
        }
    }
}

/// One reviewer's assessment of one generated suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub candidate_id: String,
    pub function_name: String,
    #[serde(default)]
    pub covered_equivalence_class_ids: BTreeSet<String>,
    #[serde(default)]
    pub covered_boundary_value_ids: BTreeSet<String>,
    #[serde(default)]
    pub replicated_scenario_ids: BTreeSet<String>,
    #[serde(default)]
    pub isolated_test_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameterized_override: Option<u64>,
    /// Per-class verdicts; the key `*` covers classes not listed.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub setup_teardown_valid: BTreeMap<String, bool>,
    /// Measured decision coverage ratio, used when the coverage report has
    /// no decision counter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_coverage: Option<f64>,
    pub reviewer: String,
    pub reviewed_at: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rationale: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedReview {
    pub record: ReviewRecord,
    pub warnings: Vec<Warning>,
}

/// Accepts a record whose ids all exist in `entry`; clamps an isolated-test
/// count above the expert expectation and records the raw value.
pub fn validate_review(
    record: &ReviewRecord,
    entry: &FunctionEntry,
) -> Result<ValidatedReview, ReviewError> {
    if record.function_name != entry.name {
        return Err(ReviewError::FunctionMismatch {
            record: record.function_name.clone(),
            entry: entry.name.clone(),
        });
    }
    validate_date(&record.reviewed_at).map_err(|e| ReviewError::Invalid(e.to_string()))?;
    if let Some(ratio) = record.decision_coverage {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(ReviewError::Invalid(format!(
                "decision_coverage {ratio} outside [0, 1]"
            )));
        }
    }

    let mut unknown: Vec<String> = Vec::new();
    let classes = entry.class_ids();
    let bounds = entry.boundary_ids();
    let scenarios = entry.scenario_ids();
    unknown.extend(
        record
            .covered_equivalence_class_ids
            .iter()
            .filter(|id| !classes.contains(id.as_str()))
            .cloned(),
    );
    unknown.extend(
        record
            .covered_boundary_value_ids
            .iter()
            .filter(|id| !bounds.contains(id.as_str()))
            .cloned(),
    );
    unknown.extend(
        record
            .replicated_scenario_ids
            .iter()
            .filter(|id| !scenarios.contains(id.as_str()))
            .cloned(),
    );
    if !unknown.is_empty() {
        return Err(ReviewError::UnknownId {
            function: entry.name.clone(),
            ids: unknown,
        });
    }

    let mut out = record.clone();
    let mut warnings = Vec::new();
    if out.isolated_test_count > entry.expected_isolated_tests {
        warnings.push(Warning::new(
            "isolation-over-count",
            format!(
                "{}/{}: isolated_test_count {} clamped to expected {}",
                record.candidate_id,
                record.function_name,
                record.isolated_test_count,
                entry.expected_isolated_tests
            ),
        ));
        out.isolated_test_count = entry.expected_isolated_tests;
    }
    Ok(ValidatedReview {
        record: out,
        warnings,
    })
}

/// Reviews of one cycle, at most one per (candidate, function).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReviewSet {
    records: BTreeMap<(String, String), ReviewRecord>,
}

impl ReviewSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: ReviewRecord) -> Result<(), ReviewError> {
        let key = (record.candidate_id.clone(), record.function_name.clone());
        if self.records.contains_key(&key) {
            return Err(ReviewError::DuplicateReview {
                candidate: key.0,
                function: key.1,
            });
        }
        self.records.insert(key, record);
        Ok(())
    }

    pub fn get(&self, candidate: &str, function: &str) -> Option<&ReviewRecord> {
        self.records
            .get(&(candidate.to_string(), function.to_string()))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReviewRecord> {
        self.records.values()
    }
}

/// Human judgment merged with scanner facts for one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedAssessment {
    pub parameterized_count: u64,
    pub total_tests: u64,
    /// Tests living in classes whose setup/teardown is judged valid.
    pub valid_setup_tests: u64,
    pub class_validity: BTreeMap<String, bool>,
}

/// Reviewer overrides win; otherwise a class is valid when it has at least
/// one lifecycle hook.
pub fn resolve_assessment(record: &ReviewRecord, lifecycle: &LifecycleFacts) -> ResolvedAssessment {
    let parameterized_count = record
        .parameterized_override
        .unwrap_or(lifecycle.parameterized_methods);
    let wildcard = record.setup_teardown_valid.get(ALL_CLASSES).copied();
    let mut class_validity = BTreeMap::new();
    let mut valid_setup_tests = 0;
    for class in &lifecycle.classes {
        let valid = record
            .setup_teardown_valid
            .get(&class.name)
            .copied()
            .or(wildcard)
            .unwrap_or(!class.hooks.is_empty());
        if valid {
            valid_setup_tests += class.test_methods;
        }
        class_validity.insert(class.name.clone(), valid);
    }
    ResolvedAssessment {
        parameterized_count,
        total_tests: lifecycle.test_methods,
        valid_setup_tests,
        class_validity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{scan_test_source, Dialect};
    use crate::model::{BoundaryValue, EquivalenceClass, FunctionKind, Scenario, Validity};

    fn entry() -> FunctionEntry {
        FunctionEntry {
            name: "isPrime".into(),
            kind: FunctionKind::Unit,
            equivalence_classes: ["EC1", "EC2", "EC3"]
                .iter()
                .map(|id| EquivalenceClass {
                    id: id.to_string(),
                    description: String::new(),
                    validity: Validity::Valid,
                })
                .collect(),
            boundary_values: vec![BoundaryValue {
                id: "BV1".into(),
                description: String::new(),
            }],
            expected_parameterized_tests: 2,
            expert_scenarios: vec![Scenario {
                id: "SC1".into(),
                description: String::new(),
            }],
            expected_isolated_tests: 4,
        }
    }

    fn record() -> ReviewRecord {
        ReviewRecord {
            candidate_id: "c1".into(),
            function_name: "isPrime".into(),
            covered_equivalence_class_ids: ["EC1", "EC2"].iter().map(|s| s.to_string()).collect(),
            covered_boundary_value_ids: BTreeSet::new(),
            replicated_scenario_ids: BTreeSet::new(),
            isolated_test_count: 2,
            parameterized_override: None,
            setup_teardown_valid: BTreeMap::new(),
            decision_coverage: None,
            reviewer: "qa".into(),
            reviewed_at: "2024-03-20".into(),
            rationale: BTreeMap::new(),
        }
    }

    #[test]
    fn subset_ids_accepted() {
        let v = validate_review(&record(), &entry()).unwrap();
        assert_eq!(v.record, record());
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn unknown_ids_listed() {
        let mut r = record();
        r.covered_equivalence_class_ids.insert("EC9".into());
        r.replicated_scenario_ids.insert("SC7".into());
        let err = validate_review(&r, &entry()).unwrap_err();
        assert_eq!(
            err,
            ReviewError::UnknownId {
                function: "isPrime".into(),
                ids: vec!["EC9".into(), "SC7".into()]
            }
        );
        assert!(err.to_string().contains("EC9"));
    }

    #[test]
    fn isolation_over_count_is_clamped() {
        let mut r = record();
        r.isolated_test_count = 5;
        let v = validate_review(&r, &entry()).unwrap();
        assert_eq!(v.record.isolated_test_count, 4);
        assert_eq!(v.warnings.len(), 1);
        assert!(v.warnings[0].message.contains("5"));
    }

    #[test]
    fn wrong_function_rejected() {
        let mut r = record();
        r.function_name = "other".into();
        assert_eq!(validate_review(&r, &entry()).unwrap_err().code(), "function-mismatch");
    }

    #[test]
    fn bad_decision_ratio_rejected() {
        let mut r = record();
        r.decision_coverage = Some(1.2);
        assert!(validate_review(&r, &entry()).is_err());
    }

    #[test]
    fn duplicate_review_rejected() {
        let mut set = ReviewSet::new();
        set.insert(record()).unwrap();
        let err = set.insert(record()).unwrap_err();
        assert_eq!(err.code(), "duplicate-review");
        assert_eq!(set.len(), 1);
    }

    fn lifecycle(src: &str) -> LifecycleFacts {
        scan_test_source(src, &Dialect::default())
    }

    #[test]
    fn scanner_count_passes_through() {
        let facts = lifecycle(
            "class T { @ParameterizedTest void a(){} @ParameterizedTest void b(){} @ParameterizedTest void c(){} }",
        );
        let r = resolve_assessment(&record(), &facts);
        assert_eq!(r.parameterized_count, 3);
        assert_eq!(r.total_tests, 3);
        assert_eq!(r.valid_setup_tests, 0);
    }

    #[test]
    fn parameterized_override_wins() {
        let facts = lifecycle(
            "class T { @ParameterizedTest void a(){} @ParameterizedTest void b(){} @ParameterizedTest void c(){} }",
        );
        let mut rec = record();
        rec.parameterized_override = Some(2);
        assert_eq!(resolve_assessment(&rec, &facts).parameterized_count, 2);
    }

    #[test]
    fn setup_override_wins() {
        let facts = lifecycle("class T { @Test void a(){} @Test void b(){} }");
        assert!(facts.lifecycle_hooks.is_empty());
        let mut rec = record();
        rec.setup_teardown_valid.insert("T".into(), true);
        let r = resolve_assessment(&rec, &facts);
        assert_eq!(r.class_validity.get("T"), Some(&true));
        assert_eq!(r.valid_setup_tests, 2);

        let mut rec = record();
        rec.setup_teardown_valid.insert(ALL_CLASSES.into(), true);
        assert_eq!(resolve_assessment(&rec, &facts).valid_setup_tests, 2);
    }

    #[test]
    fn hooks_make_class_valid() {
        let facts = lifecycle(
            "class A { @BeforeEach void s(){} @Test void a(){} } class B { @Test void b(){} @Test void c(){} }",
        );
        let r = resolve_assessment(&record(), &facts);
        assert_eq!(r.total_tests, 3);
        assert_eq!(r.valid_setup_tests, 1);
    }

    #[test]
    fn resolve_is_idempotent() {
        let facts = lifecycle("class A { @BeforeEach void s(){} @Test void a(){} }");
        let a = resolve_assessment(&record(), &facts);
        let b = resolve_assessment(&record(), &facts);
        assert_eq!(a, b);
    }
}
