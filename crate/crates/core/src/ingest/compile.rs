use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticSeverity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: DiagnosticSeverity,
    pub file: String,
    pub line: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileReport {
    pub error_count: u64,
    pub diagnostics: Vec<Diagnostic>,
    /// Set when a non-empty log contained no line the grammar recognizes.
    #[serde(default)]
    pub unrecognized: bool,
}

fn maven_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // [ERROR] /path/FooTest.java:[12,5] cannot find symbol
    RE.get_or_init(|| {
        Regex::new(r"^\[(ERROR|WARNING)\]\s+(.+?):\[(\d+)(?:,\d+)?\]\s*(.*)$").unwrap()
    })
}

fn prefixed_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // FooTest.java:12: error: cannot find symbol | error: message
    RE.get_or_init(|| {
        Regex::new(r"^(?:(.+?):(\d+):(?:\d+:)?\s*)?(error|warning):\s*(.*)$").unwrap()
    })
}

/// Counts error diagnostics in captured build output.
///
/// Recognizes Maven-style `[ERROR] file:[line,col] message` lines and
/// `file:line: error: message` / `error: message` lines. Cascading
/// diagnostics are counted as reported.
pub fn parse_compiler_log(text: &str) -> CompileReport {
    let mut diagnostics = Vec::new();
    for raw in text.lines() {
        let line = raw.trim_end_matches('\r').trim_start();
        if let Some(d) = parse_line(line) {
            diagnostics.push(d);
        }
    }
    let error_count = diagnostics
        .iter()
        .filter(|d| d.severity == DiagnosticSeverity::Error)
        .count() as u64;
    let unrecognized = diagnostics.is_empty() && !text.trim().is_empty() && !looks_clean(text);
    CompileReport {
        error_count,
        diagnostics,
        unrecognized,
    }
}

fn parse_line(line: &str) -> Option<Diagnostic> {
    if let Some(caps) = maven_line().captures(line) {
        let severity = match &caps[1] {
            "ERROR" => DiagnosticSeverity::Error,
            _ => DiagnosticSeverity::Warning,
        };
        return Some(Diagnostic {
            severity,
            file: caps[2].to_string(),
            line: caps[3].parse().ok(),
            message: caps[4].to_string(),
        });
    }
    if line.starts_with('[') {
        return None;
    }
    let caps = prefixed_line().captures(line)?;
    let severity = match &caps[3] {
        "error" => DiagnosticSeverity::Error,
        _ => DiagnosticSeverity::Warning,
    };
    Some(Diagnostic {
        severity,
        file: caps.get(1).map(|m| m.as_str().to_string()).unwrap_or_default(),
        line: caps.get(2).and_then(|m| m.as_str().parse().ok()),
        message: caps[4].to_string(),
    })
}

/// Build-tool chatter with a recognizable status but no diagnostics.
fn looks_clean(text: &str) -> bool {
    text.lines().any(|l| {
        let l = l.trim();
        l.starts_with("[INFO]") || l.contains("BUILD SUCCESS") || l.contains("BUILD FAILURE")
    })
}
