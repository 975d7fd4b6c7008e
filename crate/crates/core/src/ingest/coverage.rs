use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counter {
    pub covered: u64,
    pub total: u64,
}

impl Counter {
    pub fn new(covered: u64, total: u64) -> Self {
        Self { covered, total }
    }

    fn checked(self, name: &str) -> Result<Self, IngestError> {
        if self.covered > self.total {
            return Err(IngestError::CounterOverflow {
                counter: name.to_string(),
                covered: self.covered,
                total: self.total,
            });
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageFacts {
    pub lines: Counter,
    pub branches: Counter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decisions: Option<Counter>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageFormat {
    Xml,
    NormalizedJson,
}

impl FromStr for CoverageFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xml" => Ok(CoverageFormat::Xml),
            "normalized-json" | "json" => Ok(CoverageFormat::NormalizedJson),
            other => Err(format!("unknown coverage format {other:?}")),
        }
    }
}

pub fn parse_coverage_report(
    bytes: &[u8],
    format: CoverageFormat,
) -> Result<CoverageFacts, IngestError> {
    match format {
        CoverageFormat::Xml => parse_xml(bytes),
        CoverageFormat::NormalizedJson => parse_json(bytes),
    }
}

fn parse_json(bytes: &[u8]) -> Result<CoverageFacts, IngestError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        lines: Counter,
        branches: Counter,
        #[serde(default)]
        decisions: Option<Counter>,
    }
    let raw: Raw = serde_json::from_slice(bytes).map_err(|e| IngestError::from_json(bytes, &e))?;
    Ok(CoverageFacts {
        lines: raw.lines.checked("lines")?,
        branches: raw.branches.checked("branches")?,
        decisions: raw.decisions.map(|d| d.checked("decisions")).transpose()?,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Line,
    Branch,
    Decision,
}

/// Nesting level a counter was found at: report, package, class, method.
const LEVELS: usize = 4;

#[derive(Default)]
struct LevelSums {
    // [kind][level]
    sums: [[Option<Counter>; LEVELS]; 3],
}

impl LevelSums {
    fn add(&mut self, kind: Kind, level: usize, c: Counter, at: usize) -> Result<(), IngestError> {
        let slot = &mut self.sums[kind as usize][level];
        let cur = slot.get_or_insert_with(Counter::default);
        let overflow = || IngestError::malformed(at, "counter sum overflows");
        cur.covered = cur.covered.checked_add(c.covered).ok_or_else(overflow)?;
        cur.total = cur.total.checked_add(c.total).ok_or_else(overflow)?;
        Ok(())
    }

    /// The shallowest level carrying this counter; deeper levels repeat it.
    fn resolve(&self, kind: Kind) -> Option<Counter> {
        self.sums[kind as usize].iter().flatten().next().copied()
    }
}

fn level_of(name: &[u8]) -> Option<usize> {
    match name {
        b"report" => Some(0),
        b"package" => Some(1),
        b"class" => Some(2),
        b"method" => Some(3),
        _ => None,
    }
}

fn parse_xml(bytes: &[u8]) -> Result<CoverageFacts, IngestError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut sums = LevelSums::default();
    let mut saw_root = false;
    loop {
        let at = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|e| IngestError::malformed(at, e.to_string()))?;
        match event {
            Event::Start(e) => {
                check_root(&stack, &e, &mut saw_root, at)?;
                if e.name().as_ref() == b"counter" {
                    record_counter(&stack, &e, &mut sums, at)?;
                }
                stack.push(e.name().as_ref().to_vec());
            }
            Event::Empty(e) => {
                check_root(&stack, &e, &mut saw_root, at)?;
                if e.name().as_ref() == b"counter" {
                    record_counter(&stack, &e, &mut sums, at)?;
                }
            }
            Event::End(e) => match stack.pop() {
                Some(open) if open == e.name().as_ref() => {}
                _ => return Err(IngestError::malformed(at, "mismatched closing tag")),
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(IngestError::malformed(bytes.len(), "unexpected end of document"));
    }
    if !saw_root {
        return Err(IngestError::malformed(0, "no <report> element"));
    }
    Ok(CoverageFacts {
        lines: sums.resolve(Kind::Line).unwrap_or_default(),
        branches: sums.resolve(Kind::Branch).unwrap_or_default(),
        decisions: sums.resolve(Kind::Decision),
    })
}

fn check_root(
    stack: &[Vec<u8>],
    e: &BytesStart<'_>,
    saw_root: &mut bool,
    at: usize,
) -> Result<(), IngestError> {
    if stack.is_empty() {
        if e.name().as_ref() != b"report" || *saw_root {
            return Err(IngestError::malformed(at, "root element must be a single <report>"));
        }
        *saw_root = true;
    }
    Ok(())
}

fn record_counter(
    stack: &[Vec<u8>],
    e: &BytesStart<'_>,
    sums: &mut LevelSums,
    at: usize,
) -> Result<(), IngestError> {
    let Some(level) = stack.last().and_then(|p| level_of(p)) else {
        return Ok(());
    };
    let mut kind = None;
    let mut missed = None;
    let mut covered = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| IngestError::malformed(at, err.to_string()))?;
        let value = attr
            .unescape_value()
            .map_err(|err| IngestError::malformed(at, err.to_string()))?;
        match attr.key.as_ref() {
            b"type" => {
                kind = match value.as_ref() {
                    "LINE" => Some(Some(Kind::Line)),
                    "BRANCH" => Some(Some(Kind::Branch)),
                    "DECISION" => Some(Some(Kind::Decision)),
                    _ => Some(None),
                }
            }
            b"missed" => missed = Some(parse_count(&value, at)?),
            b"covered" => covered = Some(parse_count(&value, at)?),
            _ => {}
        }
    }
    let kind = match kind {
        Some(Some(k)) => k,
        Some(None) => return Ok(()),
        None => return Err(IngestError::malformed(at, "counter without type")),
    };
    let (Some(missed), Some(covered)) = (missed, covered) else {
        return Err(IngestError::malformed(at, "counter missing missed/covered"));
    };
    let total = missed
        .checked_add(covered)
        .ok_or_else(|| IngestError::malformed(at, "counter total overflows"))?;
    sums.add(kind, level, Counter::new(covered, total), at)
}

fn parse_count(value: &str, at: usize) -> Result<u64, IngestError> {
    value
        .trim()
        .parse()
        .map_err(|_| IngestError::malformed(at, format!("counter value {value:?} is not a count")))
}
