//! Comparison tables and longitudinal trends, rendered as markdown, CSV
//! or JSON.
//!
//! Documents keep full-precision values; rounding (half-up, two decimals)
//! happens only when a cell is rendered.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MetricVector;
use crate::pipeline::EvaluationCycle;
use crate::store::HistoryPoint;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("empty-cycle: cycle {0} has no scored candidate")]
    EmptyCycle(String),
    #[error("empty-series: no history to report")]
    EmptySeries,
    #[error("unknown-format: {0:?} (expected md, csv or json)")]
    UnknownFormat(String),
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        match self {
            ReportError::EmptyCycle(_) => "empty-cycle",
            ReportError::EmptySeries => "empty-series",
            ReportError::UnknownFormat(_) => "unknown-format",
        }
    }
}

/// Renders `value` with `decimals` places, rounding half away from zero.
///
/// The value is first printed at six decimals so binary representation
/// noise (0.125 stored as 0.12499999…) cannot flip the last digit.
pub fn format_fixed(value: f64, decimals: usize) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let decimals = decimals.min(6);
    let printed = format!("{:.6}", value.abs());
    let (int_part, frac_part) = printed.split_once('.').expect("fixed notation has a point");
    let mut digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).map(|b| b - b'0').collect();
    let keep = int_part.len() + decimals;
    let round_up = digits[keep] >= 5;
    digits.truncate(keep);
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let int_len = digits.len() - decimals;
    let mut out = String::new();
    if value.is_sign_negative() && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    for d in &digits[..int_len] {
        out.push((b'0' + d) as char);
    }
    if decimals > 0 {
        out.push('.');
        for d in &digits[int_len..] {
            out.push((b'0' + d) as char);
        }
    }
    out
}

fn format_weight(w: f64) -> String {
    let s = format_fixed(w, 2);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}%")
}

fn format_signed(value: f64, decimals: usize) -> String {
    let s = format_fixed(value, decimals);
    if s.starts_with('-') || s.bytes().all(|b| b == b'0' || b == b'.') {
        s
    } else {
        format!("+{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    /// Integer count.
    Count,
    /// Ratio in [0, 1], shown as a percentage.
    Ratio,
    /// Already in percentage points.
    Points,
}

impl CellKind {
    fn render(self, value: f64, with_percent: bool) -> String {
        let pct = if with_percent { "%" } else { "" };
        match self {
            CellKind::Count => format_fixed(value, 0),
            CellKind::Ratio => format!("{}{pct}", format_fixed(value * 100.0, 2)),
            CellKind::Points => format!("{}{pct}", format_fixed(value, 2)),
        }
    }
}

/// Display metadata for the eleven metrics, in table order.
pub struct MetricInfo {
    pub key: &'static str,
    pub name: &'static str,
    pub category: &'static str,
}

pub const CODE_QUALITY: &str = "Code Quality Metrics";
pub const WHITE_BOX: &str = "White Box Testing";
pub const BLACK_BOX: &str = "Black Box Testing";
pub const TOTAL_ROW: &str = "Total Weight Assessment";

pub const METRICS: [MetricInfo; 11] = [
    MetricInfo { key: "ce", name: "Compilation Errors", category: CODE_QUALITY },
    MetricInfo { key: "sai", name: "Static Analysis Issues", category: CODE_QUALITY },
    MetricInfo { key: "stu", name: "Setup/Teardown Usage", category: CODE_QUALITY },
    MetricInfo { key: "lc", name: "Line Coverage", category: WHITE_BOX },
    MetricInfo { key: "bc", name: "Branch Coverage", category: WHITE_BOX },
    MetricInfo { key: "bdc", name: "Branch/Decision Coverage", category: WHITE_BOX },
    MetricInfo { key: "ti", name: "Test Isolation", category: WHITE_BOX },
    MetricInfo { key: "epc", name: "Equivalence Partitioning Coverage", category: BLACK_BOX },
    MetricInfo { key: "bva", name: "Boundary Value Analysis Coverage", category: BLACK_BOX },
    MetricInfo { key: "tp", name: "Test Parameterization", category: BLACK_BOX },
    MetricInfo { key: "egtc", name: "Expert-generated Test Coverage", category: BLACK_BOX },
];

/// The metric values of `v` in [`METRICS`] order; counts as f64.
pub fn metric_values(v: &MetricVector) -> [f64; 11] {
    [
        v.ce as f64, v.sai as f64, v.stu, v.lc, v.bc, v.bdc, v.ti, v.epc, v.bva, v.tp, v.egtc,
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableColumn {
    pub candidate_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub category: String,
    pub metric: String,
    pub key: String,
    /// Set on the first row a weight applies to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    pub kind: CellKind,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub cycle_id: String,
    pub date: String,
    pub columns: Vec<TableColumn>,
    pub rows: Vec<TableRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn comparison_table(cycle: &EvaluationCycle) -> Result<ComparisonTable, ReportError> {
    if cycle.candidates.is_empty() {
        return Err(ReportError::EmptyCycle(cycle.cycle_id.clone()));
    }
    let columns = cycle
        .candidates
        .iter()
        .map(|c| TableColumn {
            candidate_id: c.run.candidate_id.clone(),
            label: c.run.label(),
        })
        .collect();
    let values: Vec<[f64; 11]> = cycle.candidates.iter().map(|c| metric_values(&c.aggregate)).collect();
    let p = &cycle.profile;
    let mut rows: Vec<TableRow> = METRICS
        .iter()
        .enumerate()
        .map(|(i, m)| TableRow {
            category: m.category.to_string(),
            metric: m.name.to_string(),
            key: m.key.to_string(),
            weight: match m.key {
                "ce" => Some(p.w_ce),
                "sai" => Some(p.w_sai),
                "stu" => Some(p.w_stu),
                "lc" => Some(p.w_whitebox),
                "epc" => Some(p.w_blackbox),
                _ => None,
            },
            kind: if i < 2 { CellKind::Count } else { CellKind::Ratio },
            values: values.iter().map(|v| v[i]).collect(),
        })
        .collect();
    rows.push(TableRow {
        category: TOTAL_ROW.to_string(),
        metric: String::new(),
        key: "total".to_string(),
        weight: None,
        kind: CellKind::Points,
        values: cycle.candidates.iter().map(|c| c.score.total).collect(),
    });
    let mut notes = Vec::new();
    if cycle.candidates.len() == 1 {
        notes.push(
            "Single-candidate cycle: penalty counts are normalized against the candidate itself."
                .to_string(),
        );
    }
    for inc in &cycle.incomplete {
        notes.push(format!(
            "Incomplete: {} ({}) not scored: {} on {}.",
            inc.candidate_id, inc.model_name, inc.error_code, inc.function
        ));
    }
    Ok(ComparisonTable {
        cycle_id: cycle.cycle_id.clone(),
        date: cycle.date.clone(),
        columns,
        rows,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendEntry {
    pub cycle_id: String,
    pub candidate_id: String,
    pub label: String,
    pub date: String,
    pub total: f64,
    pub metrics: MetricVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub key: String,
    pub delta: f64,
    pub regressed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendStep {
    pub from: String,
    pub to: String,
    pub total_delta: f64,
    pub metrics: Vec<MetricDelta>,
    /// Keys of metrics (and `total`) that got worse.
    pub regressions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_id: Option<String>,
    pub entries: Vec<TrendEntry>,
    pub steps: Vec<TrendStep>,
}

impl TrendReport {
    pub fn regressed(&self) -> bool {
        self.steps.iter().any(|s| !s.regressions.is_empty())
    }
}

/// Deltas between consecutive entries. CE and SAI regress when they rise,
/// every ratio metric and the total when they fall.
pub fn trend_report(
    model_name: &str,
    prompt_id: Option<&str>,
    series: &[HistoryPoint],
) -> Result<TrendReport, ReportError> {
    if series.is_empty() {
        return Err(ReportError::EmptySeries);
    }
    let entries: Vec<TrendEntry> = series
        .iter()
        .map(|p| TrendEntry {
            cycle_id: p.cycle_id.clone(),
            candidate_id: p.candidate.run.candidate_id.clone(),
            label: p.candidate.run.label(),
            date: p.candidate.run.date.clone(),
            total: p.candidate.score.total,
            metrics: p.candidate.aggregate,
        })
        .collect();
    let steps = entries
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (va, vb) = (metric_values(&a.metrics), metric_values(&b.metrics));
            let metrics: Vec<MetricDelta> = METRICS
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let delta = vb[i] - va[i];
                    let penalty = i < 2;
                    MetricDelta {
                        key: m.key.to_string(),
                        delta,
                        regressed: if penalty { delta > 0.0 } else { delta < 0.0 },
                    }
                })
                .collect();
            let total_delta = b.total - a.total;
            let mut regressions: Vec<String> =
                metrics.iter().filter(|m| m.regressed).map(|m| m.key.clone()).collect();
            if total_delta < 0.0 {
                regressions.push("total".to_string());
            }
            TrendStep {
                from: a.candidate_id.clone(),
                to: b.candidate_id.clone(),
                total_delta,
                metrics,
                regressions,
            }
        })
        .collect();
    Ok(TrendReport {
        model_name: model_name.to_string(),
        prompt_id: prompt_id.map(str::to_string),
        entries,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

pub enum Document<'a> {
    Table(&'a ComparisonTable),
    Trend(&'a TrendReport),
}

pub fn export(doc: Document<'_>, format: Format) -> Vec<u8> {
    let text = match (doc, format) {
        (Document::Table(t), Format::Markdown) => table_markdown(t),
        (Document::Table(t), Format::Csv) => table_csv(t),
        (Document::Table(t), Format::Json) => json(t),
        (Document::Trend(t), Format::Markdown) => trend_markdown(t),
        (Document::Trend(t), Format::Csv) => trend_csv(t),
        (Document::Trend(t), Format::Json) => json(t),
    };
    text.into_bytes()
}

fn json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report documents serialize");
    s.push('\n');
    s
}

fn md_row(cells: &[String]) -> String {
    let escaped: Vec<String> = cells.iter().map(|c| c.replace('|', "\\|")).collect();
    format!("| {} |\n", escaped.join(" | "))
}

fn table_markdown(t: &ComparisonTable) -> String {
    let mut out = String::new();
    let mut header = vec!["Category".to_string(), "Metric".to_string(), "Weight".to_string()];
    header.extend(t.columns.iter().map(|c| c.label.clone()));
    out.push_str(&md_row(&header));
    let mut rule = vec!["---".to_string(); 3];
    rule.extend(t.columns.iter().map(|_| "---:".to_string()));
    out.push_str(&format!("|{}|\n", rule.join("|")));
    let mut last_category = "";
    for row in &t.rows {
        let category = if row.category != last_category {
            row.category.clone()
        } else {
            String::new()
        };
        last_category = &row.category;
        let mut cells = vec![
            category,
            row.metric.clone(),
            row.weight.map(format_weight).unwrap_or_default(),
        ];
        cells.extend(row.values.iter().map(|&v| row.kind.render(v, true)));
        out.push_str(&md_row(&cells));
    }
    if !t.notes.is_empty() {
        out.push('\n');
        for note in &t.notes {
            out.push_str(note);
            out.push('\n');
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_row(cells: &[String]) -> String {
    let mut line = cells.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn table_csv(t: &ComparisonTable) -> String {
    let mut out = String::new();
    let mut header = vec!["category".to_string(), "metric".to_string(), "weight".to_string()];
    header.extend(t.columns.iter().map(|c| c.label.clone()));
    out.push_str(&csv_row(&header));
    for row in &t.rows {
        let mut cells = vec![
            row.category.clone(),
            if row.metric.is_empty() { row.key.clone() } else { row.metric.clone() },
            row.weight.map(|w| format_weight(w).trim_end_matches('%').to_string()).unwrap_or_default(),
        ];
        cells.extend(row.values.iter().map(|&v| row.kind.render(v, false)));
        out.push_str(&csv_row(&cells));
    }
    out
}

fn trend_markdown(t: &TrendReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Trend: {}", t.model_name);
    if let Some(p) = &t.prompt_id {
        let _ = writeln!(out, "\nPrompt: {p}");
    }
    out.push('\n');
    let mut header = vec!["Entry".to_string(), "Date".to_string(), "Cycle".to_string()];
    header.extend(METRICS.iter().map(|m| m.key.to_uppercase()));
    header.push("Total".to_string());
    out.push_str(&md_row(&header));
    let mut rule = vec!["---".to_string(); 3];
    rule.extend((0..=METRICS.len()).map(|_| "---:".to_string()));
    out.push_str(&format!("|{}|\n", rule.join("|")));
    for e in &t.entries {
        let mut cells = vec![e.label.clone(), e.date.clone(), e.cycle_id.clone()];
        let v = metric_values(&e.metrics);
        cells.extend((0..METRICS.len()).map(|i| {
            let kind = if i < 2 { CellKind::Count } else { CellKind::Ratio };
            kind.render(v[i], true)
        }));
        cells.push(CellKind::Points.render(e.total, true));
        out.push_str(&md_row(&cells));
    }
    if !t.steps.is_empty() {
        out.push_str("\n## Changes\n\n");
        let mut header = vec!["From".to_string(), "To".to_string()];
        header.extend(METRICS.iter().map(|m| m.key.to_uppercase()));
        header.push("Total".to_string());
        header.push("Regressions".to_string());
        out.push_str(&md_row(&header));
        let mut rule = vec!["---".to_string(); 2];
        rule.extend((0..=METRICS.len()).map(|_| "---:".to_string()));
        rule.push("---".to_string());
        out.push_str(&format!("|{}|\n", rule.join("|")));
        for s in &t.steps {
            let mut cells = vec![s.from.clone(), s.to.clone()];
            cells.extend(s.metrics.iter().enumerate().map(|(i, m)| delta_cell(i, m.delta)));
            cells.push(format_signed(s.total_delta, 2));
            cells.push(if s.regressions.is_empty() {
                "none".to_string()
            } else {
                s.regressions.join(", ")
            });
            out.push_str(&md_row(&cells));
        }
    }
    out
}

/// Count deltas as integers, ratio deltas in percentage points.
fn delta_cell(metric_index: usize, delta: f64) -> String {
    if metric_index < 2 {
        format_signed(delta, 0)
    } else {
        format_signed(delta * 100.0, 2)
    }
}

fn trend_csv(t: &TrendReport) -> String {
    let mut out = String::new();
    let mut header = vec![
        "candidate_id".to_string(),
        "date".to_string(),
        "cycle_id".to_string(),
    ];
    header.extend(METRICS.iter().map(|m| m.key.to_string()));
    header.push("total".to_string());
    header.push("total_delta".to_string());
    header.push("regressions".to_string());
    out.push_str(&csv_row(&header));
    for (i, e) in t.entries.iter().enumerate() {
        let mut cells = vec![e.candidate_id.clone(), e.date.clone(), e.cycle_id.clone()];
        let v = metric_values(&e.metrics);
        cells.extend((0..METRICS.len()).map(|k| {
            let kind = if k < 2 { CellKind::Count } else { CellKind::Ratio };
            kind.render(v[k], false)
        }));
        cells.push(CellKind::Points.render(e.total, false));
        match i.checked_sub(1).map(|p| &t.steps[p]) {
            Some(step) => {
                cells.push(format_signed(step.total_delta, 2));
                cells.push(step.regressions.join(" "));
            }
            None => {
                cells.push(String::new());
                cells.push(String::new());
            }
        }
        out.push_str(&csv_row(&cells));
    }
    out
}
