#![allow(dead_code)]

use std::path::{Path, PathBuf};

use aigen_eval::model::MetricVector;
use aigen_eval::pipeline::{run_cycle, CycleConfig, EvaluationCycle, RunOptions};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn published_dir() -> PathBuf {
    fixtures().join("published")
}

/// Published comparison table, one entry per candidate column:
/// ChatGPT-4 1st Time, ChatGPT-4 Iterative, GPT-o, o1-Preview, o1-Mini,
/// Claude 3.5 Sonnet.
pub const IDS: [&str; 6] = [
    "chatgpt4-mar24",
    "chatgpt4-may24",
    "gpt-o-dec24",
    "o1-preview-dec24",
    "o1-mini-dec24",
    "claude35-sonnet-dec24",
];
pub const CE: [u64; 6] = [31, 3, 2, 0, 7, 0];
pub const SAI: [u64; 6] = [45, 18, 29, 15, 10, 13];
pub const STU: [f64; 6] = [100.00, 100.00, 100.00, 100.00, 85.71, 100.00];
pub const LC: [f64; 6] = [39.14, 65.57, 70.14, 98.00, 28.57, 95.71];
pub const BC: [f64; 6] = [39.14, 65.57, 71.29, 95.71, 28.57, 94.00];
pub const BDC: [f64; 6] = [36.57, 61.57, 68.29, 95.71, 28.57, 93.29];
pub const TI: [f64; 6] = [85.71, 100.00, 100.00, 100.00, 100.00, 100.00];
pub const EPC: [f64; 6] = [71.19, 75.00, 79.88, 84.52, 85.12, 86.90];
pub const BVA: [f64; 6] = [69.39, 71.77, 78.20, 81.53, 83.57, 83.67];
pub const TP: [f64; 6] = [12.70, 38.89, 83.81, 91.84, 88.10, 88.89];
pub const EGTC: [f64; 6] = [65.77, 75.36, 66.23, 97.94, 81.57, 91.48];
pub const TOTALS: [f64; 6] = [32.44, 67.96, 74.97, 91.76, 63.81, 90.72];

/// Candidate `i` as an aggregate vector, percentages converted to ratios.
pub fn published_vector(i: usize) -> MetricVector {
    MetricVector {
        ce: CE[i],
        sai: SAI[i],
        stu: STU[i] / 100.0,
        lc: LC[i] / 100.0,
        bc: BC[i] / 100.0,
        bdc: BDC[i] / 100.0,
        ti: TI[i] / 100.0,
        epc: EPC[i] / 100.0,
        bva: BVA[i] / 100.0,
        tp: TP[i] / 100.0,
        egtc: EGTC[i] / 100.0,
    }
}

/// Loads a fixture config with its output directory redirected to `out`.
pub fn config(name: &str, out: &Path) -> CycleConfig {
    let mut config = CycleConfig::load(&published_dir().join(name)).expect("fixture config loads");
    config.output_dir = out.to_path_buf();
    config
}

pub fn run_fixture(name: &str, out: &Path, cycle_id: &str, date: &str) -> EvaluationCycle {
    run_cycle(
        &config(name, out),
        RunOptions {
            cycle_id: Some(cycle_id.to_string()),
            date: Some(date.to_string()),
            ..RunOptions::default()
        },
    )
    .expect("fixture cycle runs")
}

/// Prints the single result line for an acceptance criterion.
pub fn verdict(name: &str, result: Result<String, String>) -> bool {
    match result {
        Ok(detail) => {
            println!("ACCEPTANCE PASS {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("ACCEPTANCE FAIL {name}: {detail}");
            false
        }
    }
}

/// Copies a directory tree.
pub fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let dst = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &dst);
        } else {
            std::fs::copy(entry.path(), &dst).unwrap();
        }
    }
}

/// A writable copy of the fixture cycle directory.
pub fn scratch() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&published_dir(), dir.path());
    dir
}

/// Loads a config from a scratch copy, writing output inside it.
pub fn scratch_config(dir: &Path, name: &str) -> CycleConfig {
    let mut config = CycleConfig::load(&dir.join(name)).expect("config loads");
    config.output_dir = dir.join("out");
    config
}

pub fn options(cycle_id: &str, date: &str) -> RunOptions {
    RunOptions {
        cycle_id: Some(cycle_id.to_string()),
        date: Some(date.to_string()),
        ..RunOptions::default()
    }
}
