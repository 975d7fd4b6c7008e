//! Per-example metric computation and candidate-level aggregation.
//!
//! Penalty counts (CE, SAI) are summed across examples; every ratio metric
//! is the unweighted mean over examples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ArtifactBundle, FunctionEntry, MetricVector, Warning};
use crate::review::{resolve_assessment, validate_review, ReviewError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("missing-bdc-source: {0} has no decision counter and no reviewer-supplied decision coverage")]
    MissingBdcSource(String),
    #[error("zero-denominator: {function} has no executable {what}")]
    ZeroDenominator { function: String, what: &'static str },
    #[error("count-mismatch: expected {expected} example vectors, got {actual}")]
    CountMismatch { expected: usize, actual: usize },
    #[error("penalty-overflow: summed {0} does not fit in 64 bits")]
    PenaltyOverflow(&'static str),
    #[error(transparent)]
    Review(#[from] ReviewError),
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::MissingBdcSource(_) => "missing-bdc-source",
            MetricsError::ZeroDenominator { .. } => "zero-denominator",
            MetricsError::CountMismatch { .. } => "count-mismatch",
            MetricsError::PenaltyOverflow(_) => "penalty-overflow",
            MetricsError::Review(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleMetrics {
    pub vector: MetricVector,
    pub warnings: Vec<Warning>,
}

/// `numerator / denominator`, 1 when nothing was expected, and clamped to 1
/// (with a warning) when the candidate exceeds the expert total.
fn expert_ratio(
    numerator: u64,
    denominator: u64,
    label: &str,
    function: &str,
    warnings: &mut Vec<Warning>,
) -> f64 {
    if denominator == 0 {
        return 1.0;
    }
    if numerator > denominator {
        warnings.push(Warning::new(
            "over-count",
            format!("{function}: {label} {numerator} clamped to expected {denominator}"),
        ));
        return 1.0;
    }
    numerator as f64 / denominator as f64
}

pub fn compute_example_metrics(
    bundle: &ArtifactBundle,
    entry: &FunctionEntry,
) -> Result<ExampleMetrics, MetricsError> {
    let validated = validate_review(&bundle.review, entry)?;
    let review = &validated.record;
    let mut warnings = validated.warnings;
    let name = entry.name.as_str();
    let coverage = &bundle.coverage;

    if coverage.lines.total == 0 {
        return Err(MetricsError::ZeroDenominator {
            function: name.to_string(),
            what: "lines",
        });
    }
    let lc = coverage.lines.covered as f64 / coverage.lines.total as f64;
    let bc = if coverage.branches.total == 0 {
        1.0
    } else {
        coverage.branches.covered as f64 / coverage.branches.total as f64
    };
    let bdc = match (coverage.decisions, review.decision_coverage) {
        (Some(d), _) if d.total == 0 => 1.0,
        (Some(d), _) => d.covered as f64 / d.total as f64,
        (None, Some(measured)) => measured,
        (None, None) if coverage.branches.total == 0 => 1.0,
        (None, None) => return Err(MetricsError::MissingBdcSource(name.to_string())),
    };

    let assessment = resolve_assessment(review, &bundle.lifecycle);
    let stu = if assessment.total_tests == 0 {
        warnings.push(Warning::new(
            "no-tests",
            format!("{name}: no test methods detected"),
        ));
        0.0
    } else {
        assessment.valid_setup_tests as f64 / assessment.total_tests as f64
    };

    let ti = expert_ratio(
        review.isolated_test_count,
        entry.expected_isolated_tests,
        "isolated tests",
        name,
        &mut warnings,
    );
    let epc = expert_ratio(
        review.covered_equivalence_class_ids.len() as u64,
        entry.equivalence_classes.len() as u64,
        "equivalence classes",
        name,
        &mut warnings,
    );
    let bva = expert_ratio(
        review.covered_boundary_value_ids.len() as u64,
        entry.boundary_values.len() as u64,
        "boundary values",
        name,
        &mut warnings,
    );
    let tp = expert_ratio(
        assessment.parameterized_count,
        entry.expected_parameterized_tests,
        "parameterized tests",
        name,
        &mut warnings,
    );
    let egtc = expert_ratio(
        review.replicated_scenario_ids.len() as u64,
        entry.expert_scenarios.len() as u64,
        "replicated scenarios",
        name,
        &mut warnings,
    );

    Ok(ExampleMetrics {
        vector: MetricVector {
            ce: bundle.compile.error_count,
            sai: bundle.issues.counted_total,
            stu,
            lc,
            bc,
            bdc,
            ti,
            epc,
            bva,
            tp,
            egtc,
        },
        warnings,
    })
}

/// Order-independent mean: values are summed in sorted order.
fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / n as f64
}

/// Sums CE and SAI, averages every ratio, over exactly `n_examples` vectors.
pub fn aggregate_candidate(
    vectors: &[MetricVector],
    n_examples: usize,
) -> Result<MetricVector, MetricsError> {
    if n_examples == 0 || vectors.len() != n_examples {
        return Err(MetricsError::CountMismatch {
            expected: n_examples,
            actual: vectors.len(),
        });
    }
    let ce = vectors
        .iter()
        .try_fold(0u64, |acc, v| acc.checked_add(v.ce))
        .ok_or(MetricsError::PenaltyOverflow("ce"))?;
    let sai = vectors
        .iter()
        .try_fold(0u64, |acc, v| acc.checked_add(v.sai))
        .ok_or(MetricsError::PenaltyOverflow("sai"))?;
    let n = n_examples;
    Ok(MetricVector {
        ce,
        sai,
        stu: mean(vectors.iter().map(|v| v.stu), n),
        lc: mean(vectors.iter().map(|v| v.lc), n),
        bc: mean(vectors.iter().map(|v| v.bc), n),
        bdc: mean(vectors.iter().map(|v| v.bdc), n),
        ti: mean(vectors.iter().map(|v| v.ti), n),
        epc: mean(vectors.iter().map(|v| v.epc), n),
        bva: mean(vectors.iter().map(|v| v.bva), n),
        tp: mean(vectors.iter().map(|v| v.tp), n),
        egtc: mean(vectors.iter().map(|v| v.egtc), n),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::ingest::{
        scan_test_source, CompileReport, Counter, CoverageFacts, Dialect, IssueReport,
        TestRunFacts,
    };
    use crate::model::{BoundaryValue, EquivalenceClass, FunctionKind, Scenario, Validity};
    use crate::review::ReviewRecord;

    fn ids(prefix: &str, n: usize) -> BTreeSet<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn entry(classes: usize, expected_isolated: u64) -> FunctionEntry {
        FunctionEntry {
            name: "f".into(),
            kind: FunctionKind::Unit,
            equivalence_classes: (1..=classes)
                .map(|i| EquivalenceClass {
                    id: format!("EC{i}"),
                    description: String::new(),
                    validity: if i == 1 { Validity::Valid } else { Validity::Invalid },
                })
                .collect(),
            boundary_values: (1..=4)
                .map(|i| BoundaryValue {
                    id: format!("BV{i}"),
                    description: String::new(),
                })
                .collect(),
            expected_parameterized_tests: 2,
            expert_scenarios: (1..=5)
                .map(|i| Scenario {
                    id: format!("SC{i}"),
                    description: String::new(),
                })
                .collect(),
            expected_isolated_tests: expected_isolated,
        }
    }

    fn bundle(covered_classes: usize, coverage: CoverageFacts) -> ArtifactBundle {
        ArtifactBundle {
            compile: CompileReport {
                error_count: 2,
                diagnostics: vec![],
                unrecognized: false,
            },
            issues: IssueReport {
                issues: vec![],
                counted_total: 3,
            },
            coverage,
            test_run: TestRunFacts::default(),
            lifecycle: scan_test_source(
                "class T { @BeforeEach void s(){} @ParameterizedTest void a(){} @Test void b(){} }",
                &Dialect::default(),
            ),
            review: ReviewRecord {
                candidate_id: "c".into(),
                function_name: "f".into(),
                covered_equivalence_class_ids: ids("EC", covered_classes),
                covered_boundary_value_ids: ids("BV", 3),
                replicated_scenario_ids: ids("SC", 4),
                isolated_test_count: 0,
                parameterized_override: None,
                setup_teardown_valid: BTreeMap::new(),
                decision_coverage: None,
                reviewer: "qa".into(),
                reviewed_at: "2024-01-01".into(),
                rationale: BTreeMap::new(),
            },
        }
    }

    fn full_coverage() -> CoverageFacts {
        CoverageFacts {
            lines: Counter::new(10, 10),
            branches: Counter::new(6, 6),
            decisions: Some(Counter::new(6, 6)),
        }
    }

    #[test]
    fn epc_five_of_six() {
        let m = compute_example_metrics(&bundle(5, full_coverage()), &entry(6, 0)).unwrap();
        assert!((m.vector.epc - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(format!("{:.4}", m.vector.epc), "0.8333");
    }

    #[test]
    fn full_coverage_and_vacuous_isolation() {
        let v = compute_example_metrics(&bundle(1, full_coverage()), &entry(6, 0))
            .unwrap()
            .vector;
        assert_eq!((v.lc, v.bc, v.bdc, v.ti), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(v.ce, 2);
        assert_eq!(v.sai, 3);
        assert_eq!(v.stu, 1.0);
        assert_eq!(v.tp, 0.5);
        assert_eq!(v.bva, 0.75);
        assert_eq!(v.egtc, 0.8);
    }

    #[test]
    fn missing_decisions_need_a_reviewer_value() {
        let mut cov = full_coverage();
        cov.decisions = None;
        let err = compute_example_metrics(&bundle(1, cov), &entry(2, 0)).unwrap_err();
        assert_eq!(err.code(), "missing-bdc-source");

        let mut b = bundle(1, cov);
        b.review.decision_coverage = Some(0.75);
        let v = compute_example_metrics(&b, &entry(2, 0)).unwrap().vector;
        assert_eq!(v.bdc, 0.75);
    }

    #[test]
    fn zero_branches_are_vacuous_and_zero_lines_rejected() {
        let cov = CoverageFacts {
            lines: Counter::new(3, 4),
            branches: Counter::new(0, 0),
            decisions: None,
        };
        let v = compute_example_metrics(&bundle(1, cov), &entry(2, 0)).unwrap().vector;
        assert_eq!((v.bc, v.bdc), (1.0, 1.0));
        assert_eq!(v.lc, 0.75);

        let cov = CoverageFacts {
            lines: Counter::new(0, 0),
            ..cov
        };
        let err = compute_example_metrics(&bundle(1, cov), &entry(2, 0)).unwrap_err();
        assert_eq!(err.code(), "zero-denominator");
    }

    #[test]
    fn over_counts_are_clamped() {
        let mut b = bundle(1, full_coverage());
        b.review.parameterized_override = Some(5);
        b.review.isolated_test_count = 9;
        let m = compute_example_metrics(&b, &entry(2, 3)).unwrap();
        assert_eq!(m.vector.tp, 1.0);
        assert_eq!(m.vector.ti, 1.0);
        assert_eq!(m.warnings.len(), 2);
    }

    #[test]
    fn unknown_review_ids_propagate() {
        let b = bundle(6, full_coverage());
        let err = compute_example_metrics(&b, &entry(2, 0)).unwrap_err();
        assert_eq!(err.code(), "unknown-id");
    }

    fn with(stu: f64, lc: f64, ce: u64) -> MetricVector {
        MetricVector {
            ce,
            stu,
            lc,
            ..MetricVector::perfect()
        }
    }

    #[test]
    fn penalties_sum() {
        let vectors: Vec<_> = [5, 0, 3, 10, 2, 7, 4].iter().map(|&ce| with(1.0, 1.0, ce)).collect();
        assert_eq!(aggregate_candidate(&vectors, 7).unwrap().ce, 31);
    }

    #[test]
    fn constant_vectors_aggregate_to_themselves() {
        let v = MetricVector {
            ce: 1,
            sai: 2,
            stu: 0.3,
            lc: 0.7,
            bc: 0.1,
            bdc: 0.9,
            ti: 0.5,
            epc: 0.25,
            bva: 0.125,
            tp: 0.6,
            egtc: 1.0,
        };
        let agg = aggregate_candidate(&[v; 7], 7).unwrap();
        assert_eq!((agg.ce, agg.sai), (7, 14));
        for ((name, a), (_, b)) in agg.ratios().into_iter().zip(v.ratios()) {
            assert!((a - b).abs() <= 1e-15, "{name}: {a} vs {b}");
        }
    }

    #[test]
    fn mean_line_coverage() {
        let vectors: Vec<_> = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.86]
            .iter()
            .map(|&lc| with(1.0, lc, 0))
            .collect();
        let agg = aggregate_candidate(&vectors, 7).unwrap();
        assert!((agg.lc - 0.98).abs() < 1e-12);
    }

    #[test]
    fn six_valid_one_invalid_stu() {
        let vectors: Vec<_> = (0..7).map(|i| with(if i == 3 { 0.0 } else { 1.0 }, 1.0, 0)).collect();
        let agg = aggregate_candidate(&vectors, 7).unwrap();
        assert_eq!(format!("{:.4}", agg.stu), "0.8571");
    }

    #[test]
    fn count_mismatch() {
        let v = [MetricVector::perfect(); 3];
        assert_eq!(aggregate_candidate(&v, 7).unwrap_err().code(), "count-mismatch");
        assert!(aggregate_candidate(&[], 0).is_err());
    }
}
