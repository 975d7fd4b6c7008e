mod common;

use aigen_eval::pipeline::{
    run_cycle, PipelineError, Stage, StageSpec, StageStatus, Verdict,
};

use common::*;

fn spec(command: &str) -> StageSpec {
    StageSpec {
        command: command.to_string(),
        artifact: None,
        timeout_secs: None,
        format: None,
    }
}

#[test]
fn fixture_cycle_scores_and_gates() {
    let dir = scratch();
    let config = scratch_config(dir.path(), "published.json");
    let cycle = run_cycle(&config, options("t5", "2024-12-10")).unwrap();
    assert_eq!(cycle.candidates.len(), 6);
    assert!(cycle.incomplete.is_empty());
    assert_eq!(cycle.stages.len(), 6 * 7 * 5);
    let order: Vec<&str> = cycle.ranking.iter().map(|r| r.candidate_id.as_str()).collect();
    assert_eq!(
        order,
        [
            "o1-preview-dec24",
            "claude35-sonnet-dec24",
            "gpt-o-dec24",
            "chatgpt4-may24",
            "o1-mini-dec24",
            "chatgpt4-mar24"
        ]
    );
    let documented: Vec<&str> = cycle
        .candidates
        .iter()
        .filter(|c| c.gate.verdict == Verdict::Document)
        .map(|c| c.run.candidate_id.as_str())
        .collect();
    assert_eq!(documented, ["o1-preview-dec24", "claude35-sonnet-dec24"]);
    assert!(!cycle.all_documented());
    let may = cycle.candidate("chatgpt4-may24").unwrap();
    assert_eq!(may.gate.reasons, ["total 67.96 < 80", "ce 3 > 0"]);
    // A non-zero build exit is the compiler's verdict, not a stage failure.
    assert!(cycle
        .stages
        .iter()
        .filter(|s| s.stage == Stage::Build && s.candidate_id == "chatgpt4-mar24")
        .any(|s| s.exit_code.unwrap_or(0) != 0 && s.status == StageStatus::Completed));
}

#[test]
fn manifest_covers_every_artifact() {
    let dir = scratch();
    let config = scratch_config(dir.path(), "mar24.json");
    let cycle = run_cycle(&config, options("m", "2024-03-15")).unwrap();
    for function in cycle.catalog.functions.iter().map(|f| &f.name) {
        for name in ["build.log", "issues.json", "coverage.xml", "tests.xml"] {
            let path = format!("chatgpt4-mar24/{function}/{name}");
            assert!(cycle.manifest.iter().any(|m| m.path == path), "{path} missing");
        }
    }
    assert!(cycle.manifest.windows(2).all(|w| w[0].path < w[1].path));
}

#[test]
fn generate_failure_skips_later_stages() {
    let dir = scratch();
    let mut config = scratch_config(dir.path(), "mar24.json");
    config.adapters.generate = Some(StageSpec {
        artifact: Some("src".into()),
        ..spec("exit 7")
    });
    let cycle = run_cycle(&config, options("g", "2024-03-15")).unwrap();
    assert!(cycle.candidates.is_empty());
    assert_eq!(cycle.incomplete.len(), 1);
    assert_eq!(cycle.incomplete[0].error_code, "stage-failed");
    let first: Vec<_> = cycle
        .stages
        .iter()
        .filter(|s| s.function == cycle.incomplete[0].function)
        .collect();
    assert_eq!(first[0].stage, Stage::Generate);
    assert_eq!(first[0].exit_code, Some(7));
    assert!(matches!(first[0].status, StageStatus::Failed(_)));
    assert!(first[1..].iter().all(|s| matches!(s.status, StageStatus::Skipped(_))));
}

#[test]
fn stage_timeout_is_reported() {
    let dir = scratch();
    let mut config = scratch_config(dir.path(), "mar24.json");
    config.adapters.static_analysis = Some(StageSpec {
        timeout_secs: Some(1),
        artifact: Some("issues.json".into()),
        ..spec("sleep 5")
    });
    config.workers = 7;
    let start = std::time::Instant::now();
    let cycle = run_cycle(&config, options("t", "2024-03-15")).unwrap();
    assert!(start.elapsed().as_secs() < 5);
    assert_eq!(cycle.incomplete[0].error_code, "adapter-timeout");
}

#[test]
fn missing_artifact_marks_candidate_incomplete() {
    let dir = scratch();
    let mut config = scratch_config(dir.path(), "mar24.json");
    config.adapters.coverage = Some(StageSpec {
        artifact: Some("coverage.xml".into()),
        ..spec("true")
    });
    let cycle = run_cycle(&config, options("a", "2024-03-15")).unwrap();
    assert!(cycle.candidates.is_empty());
    assert_eq!(cycle.incomplete[0].error_code, "missing-artifact");
    assert!(cycle.incomplete[0].detail.contains("coverage.xml"));
}

#[test]
fn failed_test_run_does_not_block_scoring() {
    let dir = scratch();
    let mut reference = scratch_config(dir.path(), "mar24.json");
    reference.output_dir = dir.path().join("ref");
    let expected = run_cycle(&reference, options("r", "2024-03-15")).unwrap();

    let mut config = scratch_config(dir.path(), "mar24.json");
    config.adapters.test_run = Some(StageSpec {
        artifact: Some("tests.xml".into()),
        ..spec("exit 1")
    });
    let cycle = run_cycle(&config, options("f", "2024-03-15")).unwrap();
    assert_eq!(cycle.candidates.len(), 1);
    assert_eq!(cycle.candidates[0].score, expected.candidates[0].score);
    assert!(cycle.warnings.iter().any(|w| w.code == "no-test-results"));
}

#[test]
fn missing_review_marks_candidate_incomplete() {
    let dir = scratch();
    std::fs::remove_file(dir.path().join("reviews/chatgpt4-mar24/isPrime.json")).unwrap();
    let config = scratch_config(dir.path(), "mar24.json");
    let cycle = run_cycle(&config, options("r", "2024-03-15")).unwrap();
    assert!(cycle.candidates.is_empty());
    assert_eq!(cycle.incomplete[0].function, "isPrime");
    assert_eq!(cycle.incomplete[0].error_code, "missing-review");
}

#[test]
fn incomplete_candidate_leaves_cohort_scored() {
    let dir = scratch();
    std::fs::remove_dir_all(dir.path().join("reviews/o1-mini-dec24")).unwrap();
    let config = scratch_config(dir.path(), "published.json");
    let cycle = run_cycle(&config, options("i", "2024-12-10")).unwrap();
    assert_eq!(cycle.candidates.len(), 5);
    assert_eq!(cycle.ranking.len(), 5);
    assert_eq!(cycle.incomplete[0].candidate_id, "o1-mini-dec24");
}

#[test]
fn single_candidate_takes_full_penalty_ratios() {
    let dir = scratch();
    let config = scratch_config(dir.path(), "mar24.json");
    let cycle = run_cycle(&config, options("s", "2024-03-15")).unwrap();
    let only = &cycle.candidates[0];
    assert_eq!(only.penalties.ce_ratio, 1.0);
    assert_eq!(only.penalties.sai_ratio, 1.0);
    assert_eq!(cycle.ranking[0].position, 1);
}

#[test]
fn invalid_inputs_are_rejected_before_running() {
    let dir = scratch();
    let mut config = scratch_config(dir.path(), "mar24.json");
    config.thresholds.min_total = 101.0;
    let err = run_cycle(&config, options("x", "2024-03-15")).unwrap_err();
    assert!(err.is_validation(), "{err}");

    let config = scratch_config(dir.path(), "mar24.json");
    let err = run_cycle(&config, options("../up", "2024-03-15")).unwrap_err();
    assert!(matches!(err, PipelineError::InvalidConfig(_)));
    let err = run_cycle(&config, options("ok", "2024-13-40")).unwrap_err();
    assert_eq!(err.code(), "invalid-date");
}

#[test]
fn unknown_prompt_reference_is_rejected() {
    let dir = scratch();
    std::fs::write(dir.path().join("prompts.json"), r#"{"prompts": []}"#).unwrap();
    let mut config = scratch_config(dir.path(), "mar24.json");
    config.prompts = Some("prompts.json".into());
    let err = run_cycle(&config, options("p", "2024-03-15")).unwrap_err();
    assert_eq!(err.code(), "unknown-prompt");
}
