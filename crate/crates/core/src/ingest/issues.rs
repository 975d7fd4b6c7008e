use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Severity levels of the generic issue format, lowest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Info,
    Minor,
    Major,
    Critical,
    Blocker,
}

impl FromStr for Severity {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "INFO" => Ok(Severity::Info),
            "MINOR" => Ok(Severity::Minor),
            "MAJOR" => Ok(Severity::Major),
            "CRITICAL" => Ok(Severity::Critical),
            "BLOCKER" => Ok(Severity::Blocker),
            _ => Err(IngestError::UnknownSeverity(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueType {
    Bug,
    CodeSmell,
    Vulnerability,
}

impl FromStr for IssueType {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "BUG" => Ok(IssueType::Bug),
            "CODE_SMELL" => Ok(IssueType::CodeSmell),
            "VULNERABILITY" => Ok(IssueType::Vulnerability),
            _ => Err(IngestError::UnknownIssueType(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub rule_id: String,
    pub severity: Severity,
    #[serde(rename = "type")]
    pub issue_type: IssueType,
    pub file: String,
    pub line: Option<u64>,
    pub message: String,
}

/// Which issues count toward the static-analysis total.
///
/// The default accepts every type at every severity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueFilter {
    #[serde(default)]
    pub types: Option<BTreeSet<IssueType>>,
    #[serde(default)]
    pub min_severity: Option<Severity>,
}

impl IssueFilter {
    pub fn accepts(&self, issue: &Issue) -> bool {
        let type_ok = self
            .types
            .as_ref()
            .is_none_or(|t| t.contains(&issue.issue_type));
        let severity_ok = self.min_severity.is_none_or(|m| issue.severity >= m);
        type_ok && severity_ok
    }

    pub fn only(types: impl IntoIterator<Item = IssueType>) -> Self {
        Self {
            types: Some(types.into_iter().collect()),
            min_severity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueReport {
    pub issues: Vec<Issue>,
    pub counted_total: u64,
}

#[derive(Deserialize)]
struct RawDocument {
    issues: Vec<RawIssue>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawIssue {
    rule_id: String,
    severity: String,
    #[serde(rename = "type")]
    issue_type: String,
    #[serde(default)]
    file: String,
    #[serde(default)]
    line: Option<u64>,
    #[serde(default)]
    message: String,
}

/// Parses a generic issue export and counts the issues the filter accepts.
pub fn parse_issue_report(bytes: &[u8], filter: &IssueFilter) -> Result<IssueReport, IngestError> {
    let raw: RawDocument =
        serde_json::from_slice(bytes).map_err(|e| IngestError::from_json(bytes, &e))?;
    let mut issues = Vec::with_capacity(raw.issues.len());
    for r in raw.issues {
        issues.push(Issue {
            severity: r.severity.parse()?,
            issue_type: r.issue_type.parse()?,
            rule_id: r.rule_id,
            file: r.file,
            line: r.line,
            message: r.message,
        });
    }
    let counted_total = issues.iter().filter(|i| filter.accepts(i)).count() as u64;
    Ok(IssueReport {
        issues,
        counted_total,
    })
}
