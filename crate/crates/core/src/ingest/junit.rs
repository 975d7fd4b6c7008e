use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRunFacts {
    pub tests_total: u64,
    pub tests_failed: u64,
    pub tests_errored: u64,
    pub tests_skipped: u64,
}

impl TestRunFacts {
    pub fn passed(&self) -> u64 {
        self.tests_total - self.tests_failed - self.tests_errored - self.tests_skipped
    }

    fn add(&mut self, other: TestRunFacts, at: usize) -> Result<(), IngestError> {
        let overflow = || IngestError::malformed(at, "test count overflows");
        self.tests_total = self.tests_total.checked_add(other.tests_total).ok_or_else(overflow)?;
        self.tests_failed = self.tests_failed.checked_add(other.tests_failed).ok_or_else(overflow)?;
        self.tests_errored = self
            .tests_errored
            .checked_add(other.tests_errored)
            .ok_or_else(overflow)?;
        self.tests_skipped = self
            .tests_skipped
            .checked_add(other.tests_skipped)
            .ok_or_else(overflow)?;
        Ok(())
    }
}

struct OpenSuite {
    counts: TestRunFacts,
    has_children: bool,
}

/// Sums the counts of every leaf `<testsuite>`.
///
/// Parent suites that contain other suites are treated as containers so
/// their (usually aggregated) attributes are not counted twice.
pub fn parse_test_results(bytes: &[u8]) -> Result<TestRunFacts, IngestError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);
    let mut depth = 0usize;
    let mut suites: Vec<OpenSuite> = Vec::new();
    let mut total = TestRunFacts::default();
    let mut seen_suite = false;
    let mut seen_root = false;
    loop {
        let at = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|e| IngestError::malformed(at, e.to_string()))?;
        match event {
            Event::Start(e) => {
                root_check(depth, &mut seen_root, at)?;
                depth += 1;
                if e.name().as_ref() == b"testsuite" {
                    seen_suite = true;
                    if let Some(parent) = suites.last_mut() {
                        parent.has_children = true;
                    }
                    suites.push(OpenSuite {
                        counts: suite_counts(&e, at)?,
                        has_children: false,
                    });
                }
            }
            Event::Empty(e) => {
                root_check(depth, &mut seen_root, at)?;
                if e.name().as_ref() == b"testsuite" {
                    seen_suite = true;
                    if let Some(parent) = suites.last_mut() {
                        parent.has_children = true;
                    }
                    total.add(suite_counts(&e, at)?, at)?;
                }
            }
            Event::End(e) => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| IngestError::malformed(at, "unbalanced closing tag"))?;
                if e.name().as_ref() == b"testsuite" {
                    let suite = suites
                        .pop()
                        .ok_or_else(|| IngestError::malformed(at, "unbalanced </testsuite>"))?;
                    if !suite.has_children {
                        total.add(suite.counts, at)?;
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if depth != 0 {
        return Err(IngestError::malformed(bytes.len(), "unexpected end of document"));
    }
    if !seen_suite {
        return Err(IngestError::malformed(0, "no <testsuite> element"));
    }
    Ok(total)
}

fn root_check(depth: usize, seen_root: &mut bool, at: usize) -> Result<(), IngestError> {
    if depth == 0 {
        if *seen_root {
            return Err(IngestError::malformed(at, "multiple root elements"));
        }
        *seen_root = true;
    }
    Ok(())
}

fn suite_counts(e: &BytesStart<'_>, at: usize) -> Result<TestRunFacts, IngestError> {
    let mut facts = TestRunFacts::default();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| IngestError::malformed(at, err.to_string()))?;
        let slot = match attr.key.as_ref() {
            b"tests" => &mut facts.tests_total,
            b"failures" => &mut facts.tests_failed,
            b"errors" => &mut facts.tests_errored,
            b"skipped" => &mut facts.tests_skipped,
            _ => continue,
        };
        let value = attr
            .unescape_value()
            .map_err(|err| IngestError::malformed(at, err.to_string()))?;
        *slot = value.trim().parse().map_err(|_| {
            IngestError::malformed(at, format!("attribute value {value:?} is not a count"))
        })?;
    }
    let not_passing = facts
        .tests_failed
        .checked_add(facts.tests_errored)
        .and_then(|s| s.checked_add(facts.tests_skipped));
    match not_passing {
        Some(n) if n <= facts.tests_total => Ok(facts),
        _ => Err(IngestError::InconsistentCounts(format!(
            "failures {} + errors {} + skipped {} exceed tests {}",
            facts.tests_failed, facts.tests_errored, facts.tests_skipped, facts.tests_total
        ))),
    }
}
