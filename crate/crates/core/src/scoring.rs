//! Weighted assessment: penalty normalization over the cycle's cohort,
//! category contributions, the total, and ranking.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MetricVector, ScoreBreakdown, WeightProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("incomplete-vector: {0}")]
    IncompleteVector(String),
}

impl ScoringError {
    pub fn code(&self) -> &'static str {
        match self {
            ScoringError::IncompleteVector(_) => "incomplete-vector",
        }
    }
}

/// CE and SAI counts divided by the cohort maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRatios {
    pub ce_ratio: f64,
    pub sai_ratio: f64,
}

fn ratio_to_max(value: u64, max: u64) -> f64 {
    if max == 0 {
        0.0
    } else {
        value as f64 / max as f64
    }
}

pub fn normalize_penalties(
    aggregates: &[(String, MetricVector)],
) -> BTreeMap<String, PenaltyRatios> {
    let max_ce = aggregates.iter().map(|(_, v)| v.ce).max().unwrap_or(0);
    let max_sai = aggregates.iter().map(|(_, v)| v.sai).max().unwrap_or(0);
    aggregates
        .iter()
        .map(|(id, v)| {
            (
                id.clone(),
                PenaltyRatios {
                    ce_ratio: ratio_to_max(v.ce, max_ce),
                    sai_ratio: ratio_to_max(v.sai, max_sai),
                },
            )
        })
        .collect()
}

pub fn score_candidate(
    agg: &MetricVector,
    ratios: PenaltyRatios,
    profile: &WeightProfile,
) -> Result<ScoreBreakdown, ScoringError> {
    for (name, value) in agg.ratios() {
        if !value.is_finite() {
            return Err(ScoringError::IncompleteVector(format!("{name} has no value")));
        }
    }
    if !ratios.ce_ratio.is_finite() || !ratios.sai_ratio.is_finite() {
        return Err(ScoringError::IncompleteVector("penalty ratio has no value".into()));
    }
    let whitebox = (agg.lc + agg.bc + agg.bdc + agg.ti) / 4.0;
    let blackbox = (agg.epc + agg.bva + agg.tp + agg.egtc) / 4.0;
    let ce_contrib = profile.w_ce * ratios.ce_ratio;
    let sai_contrib = profile.w_sai * ratios.sai_ratio;
    let stu_contrib = profile.w_stu * agg.stu;
    let whitebox_contrib = profile.w_whitebox * whitebox;
    let blackbox_contrib = profile.w_blackbox * blackbox;
    Ok(ScoreBreakdown {
        ce_contrib,
        sai_contrib,
        stu_contrib,
        whitebox_contrib,
        blackbox_contrib,
        total: ce_contrib + sai_contrib + stu_contrib + whitebox_contrib + blackbox_contrib,
    })
}

/// Scores every candidate of a cohort in one step.
pub fn score_cohort(
    aggregates: &[(String, MetricVector)],
    profile: &WeightProfile,
) -> Result<Vec<(String, ScoreBreakdown)>, ScoringError> {
    let ratios = normalize_penalties(aggregates);
    aggregates
        .iter()
        .map(|(id, agg)| Ok((id.clone(), score_candidate(agg, ratios[id], profile)?)))
        .collect()
}

/// Which key separated a candidate from the one ranked directly above it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    CompilationErrors,
    StaticAnalysisIssues,
    CandidateId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub position: usize,
    pub candidate_id: String,
    pub total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_break: Option<TieBreak>,
}

pub struct RankInput<'a> {
    pub candidate_id: &'a str,
    pub score: &'a ScoreBreakdown,
    pub ce: u64,
    pub sai: u64,
}

/// Descending by total; equal totals fall back to fewer compilation errors,
/// fewer static-analysis issues, then candidate id.
pub fn rank(scores: &[RankInput<'_>]) -> Vec<RankedCandidate> {
    let mut order: Vec<&RankInput<'_>> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .total
            .total_cmp(&a.score.total)
            .then(a.ce.cmp(&b.ce))
            .then(a.sai.cmp(&b.sai))
            .then_with(|| a.candidate_id.cmp(b.candidate_id))
    });
    let mut out: Vec<RankedCandidate> = Vec::with_capacity(order.len());
    for (i, entry) in order.iter().enumerate() {
        let tie_break = i.checked_sub(1).and_then(|p| {
            let prev = order[p];
            if prev.score.total.total_cmp(&entry.score.total) != Ordering::Equal {
                None
            } else if prev.ce != entry.ce {
                Some(TieBreak::CompilationErrors)
            } else if prev.sai != entry.sai {
                Some(TieBreak::StaticAnalysisIssues)
            } else {
                Some(TieBreak::CandidateId)
            }
        });
        out.push(RankedCandidate {
            position: i + 1,
            candidate_id: entry.candidate_id.to_string(),
            total: entry.score.total,
            tie_break,
        });
    }
    out
}
