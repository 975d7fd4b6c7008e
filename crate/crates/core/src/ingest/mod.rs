//! Parsers for the reports external tools leave behind, plus a lexical
//! scanner over generated test source.
//!
//! Every parser is a pure function of its input bytes. Arbitrary input
//! yields either facts or an [`IngestError`]; nothing here panics on data.

mod compile;
mod coverage;
mod issues;
mod junit;
mod scanner;

pub use compile::{parse_compiler_log, CompileReport, Diagnostic, DiagnosticSeverity};
pub use coverage::{parse_coverage_report, Counter, CoverageFacts, CoverageFormat};
pub use issues::{parse_issue_report, Issue, IssueFilter, IssueReport, IssueType, Severity};
pub use junit::{parse_test_results, TestRunFacts};
pub use scanner::{scan_test_source, ClassFacts, Dialect, LifecycleFacts, LifecycleHook};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed-document: {message} (at byte {offset})")]
    Malformed { offset: usize, message: String },
    #[error("unknown-severity: {0:?}")]
    UnknownSeverity(String),
    #[error("unknown-issue-type: {0:?}")]
    UnknownIssueType(String),
    #[error("counter-overflow: {counter} covered {covered} exceeds total {total}")]
    CounterOverflow {
        counter: String,
        covered: u64,
        total: u64,
    },
    #[error("inconsistent-counts: {0}")]
    InconsistentCounts(String),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Malformed { .. } => "malformed-document",
            IngestError::UnknownSeverity(_) => "unknown-severity",
            IngestError::UnknownIssueType(_) => "unknown-issue-type",
            IngestError::CounterOverflow { .. } => "counter-overflow",
            IngestError::InconsistentCounts(_) => "inconsistent-counts",
        }
    }

    pub(crate) fn malformed(offset: usize, message: impl Into<String>) -> Self {
        IngestError::Malformed {
            offset,
            message: message.into(),
        }
    }

    /// Maps a serde_json failure to a byte offset within `bytes`.
    pub(crate) fn from_json(bytes: &[u8], err: &serde_json::Error) -> Self {
        let offset = line_col_to_offset(bytes, err.line(), err.column());
        IngestError::malformed(offset, err.to_string())
    }
}

fn line_col_to_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    let mut start = 0;
    for (i, b) in bytes.iter().enumerate() {
        if current == line {
            break;
        }
        if *b == b'\n' {
            current += 1;
            start = i + 1;
        }
    }
    (start + column.saturating_sub(1)).min(bytes.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_offsets_point_into_the_document() {
        let doc = b"{\n  \"issues\": [\n    {\"ruleId\": 3}\n  ]\n}";
        let err = serde_json::from_slice::<serde_json::Value>(b"{\n  \"a\": ]").unwrap_err();
        let mapped = IngestError::from_json(b"{\n  \"a\": ]", &err);
        match mapped {
            IngestError::Malformed { offset, .. } => assert_eq!(offset, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(line_col_to_offset(doc, 1, 1), 0);
        assert_eq!(line_col_to_offset(doc, 3, 5), 20);
    }
}
