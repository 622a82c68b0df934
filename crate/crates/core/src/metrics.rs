//! Cohort-level governance metrics: DI, AI, level histograms, agreement-gap
//! metrics, and fleet governance-state classification.

use crate::record::{DefensibilityLevel, InverseCheck, ProposedAction};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("EMPTY_COHORT")]
    EmptyCohort,
    #[error("NO_FALSE_NEGATIVES")]
    NoFalseNegatives,
    #[error("NO_AGREEMENTS")]
    NoAgreements,
    #[error("COHORT_TOO_SMALL: n = {n}, minimum {min}")]
    CohortTooSmall { n: usize, min: usize },
}

/// Fleet governance state of a cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GovernanceState {
    EarnedAutonomy,
    PolicyGaps,
    NormativeComplexity,
}

/// Aggregated audit outcomes for one cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub cohort_id: String,
    pub n: usize,
    pub di: f64,
    pub ai: f64,
    /// (L1, L2, L3) counts; sums to n.
    pub level_counts: (usize, usize, usize),
    /// Count of inverse_check = Yes; ai = inverse_yes / n exactly.
    pub inverse_yes: usize,
    pub f1: Option<f64>,
    /// di - f1, when f1 is available.
    pub gap: Option<f64>,
    pub defensible_fn_rate: Option<f64>,
    pub accurate_but_indefensible_rate: Option<f64>,
    pub governance_state: Option<GovernanceState>,
}

/// Fraction of levels in {L1, L2}.
pub fn compute_di(levels: &[DefensibilityLevel]) -> Result<f64, MetricError> {
    if levels.is_empty() {
        return Err(MetricError::EmptyCohort);
    }
    let defensible = levels.iter().filter(|l| l.is_defensible()).count();
    Ok(defensible as f64 / levels.len() as f64)
}

/// Fraction of inverse checks that fired.
pub fn compute_ai(checks: &[InverseCheck]) -> Result<f64, MetricError> {
    if checks.is_empty() {
        return Err(MetricError::EmptyCohort);
    }
    let yes = checks.iter().filter(|c| c.fired()).count();
    Ok(yes as f64 / checks.len() as f64)
}

/// F1 of the model's positive-class decisions against human labels. Returns
/// 0 when precision + recall is 0.
pub fn compute_f1_with_positive(
    pairs: &[(ProposedAction, ProposedAction)],
    positive: ProposedAction,
) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyCohort);
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for &(model, human) in pairs {
        match (model == positive, human == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// F1 with REMOVE as the positive class.
pub fn compute_f1(pairs: &[(ProposedAction, ProposedAction)]) -> Result<f64, MetricError> {
    compute_f1_with_positive(pairs, ProposedAction::Remove)
}

/// Among false negatives (model APPROVE, human REMOVE), the fraction whose
/// audited level is defensible.
pub fn defensible_fn_rate(
    records: &[(DefensibilityLevel, ProposedAction, ProposedAction)],
) -> Result<f64, MetricError> {
    let fns: Vec<_> = records
        .iter()
        .filter(|(_, model, human)| {
            *model == ProposedAction::Approve && *human == ProposedAction::Remove
        })
        .collect();
    if fns.is_empty() {
        return Err(MetricError::NoFalseNegatives);
    }
    let defensible = fns.iter().filter(|(l, _, _)| l.is_defensible()).count();
    Ok(defensible as f64 / fns.len() as f64)
}

/// Among model-human agreement cases, the fraction audited L3.
pub fn accurate_but_indefensible_rate(
    records: &[(DefensibilityLevel, ProposedAction, ProposedAction)],
) -> Result<f64, MetricError> {
    let agreements: Vec<_> = records
        .iter()
        .filter(|(_, model, human)| model == human)
        .collect();
    if agreements.is_empty() {
        return Err(MetricError::NoAgreements);
    }
    let indefensible = agreements
        .iter()
        .filter(|(l, _, _)| !l.is_defensible())
        .count();
    Ok(indefensible as f64 / agreements.len() as f64)
}

/// Per-record cohort input: audited level, inverse check, model action and
/// optional human action.
#[derive(Debug, Clone)]
pub struct CohortCase {
    pub level: DefensibilityLevel,
    pub inverse_check: InverseCheck,
    pub model_action: ProposedAction,
    pub human_action: Option<ProposedAction>,
}

/// Builds a full cohort report. Gap metrics are computed only over cases
/// with a human action present.
pub fn build_cohort_report(cohort_id: &str, cases: &[CohortCase]) -> Result<CohortReport, MetricError> {
    if cases.is_empty() {
        return Err(MetricError::EmptyCohort);
    }
    let n = cases.len();
    let mut counts = (0usize, 0usize, 0usize);
    for c in cases {
        match c.level {
            DefensibilityLevel::L1 => counts.0 += 1,
            DefensibilityLevel::L2 => counts.1 += 1,
            DefensibilityLevel::L3 => counts.2 += 1,
        }
    }
    let inverse_yes = cases.iter().filter(|c| c.inverse_check.fired()).count();
    let di = (counts.0 + counts.1) as f64 / n as f64;
    let ai = inverse_yes as f64 / n as f64;

    let labelled: Vec<(DefensibilityLevel, ProposedAction, ProposedAction)> = cases
        .iter()
        .filter_map(|c| c.human_action.map(|h| (c.level, c.model_action, h)))
        .collect();
    let pairs: Vec<(ProposedAction, ProposedAction)> =
        labelled.iter().map(|(_, m, h)| (*m, *h)).collect();
    let f1 = if pairs.is_empty() {
        None
    } else {
        Some(compute_f1(&pairs)?)
    };
    Ok(CohortReport {
        cohort_id: cohort_id.to_string(),
        n,
        di,
        ai,
        level_counts: counts,
        inverse_yes,
        f1,
        gap: f1.map(|f| di - f),
        defensible_fn_rate: defensible_fn_rate(&labelled).ok(),
        accurate_but_indefensible_rate: accurate_but_indefensible_rate(&labelled).ok(),
        governance_state: None,
    })
}

/// Classifies a cohort into one of the three fleet governance states using
/// the gate thresholds, so that EarnedAutonomy coincides with gate-pass.
pub fn classify_governance_state(
    report: &CohortReport,
    di_min: f64,
    ai_max: f64,
    min_decisions: usize,
) -> Result<GovernanceState, MetricError> {
    if report.n < min_decisions {
        return Err(MetricError::CohortTooSmall {
            n: report.n,
            min: min_decisions,
        });
    }
    Ok(if report.di < di_min {
        GovernanceState::PolicyGaps
    } else if report.ai <= ai_max {
        GovernanceState::EarnedAutonomy
    } else {
        GovernanceState::NormativeComplexity
    })
}

/// Signed percentage-point deltas between two cohorts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub from: String,
    pub to: String,
    pub delta_di_pp: f64,
    pub delta_ai_pp: f64,
    pub delta_level_counts: (i64, i64, i64),
}

pub fn compare_cohorts(a: &CohortReport, b: &CohortReport) -> DeltaReport {
    DeltaReport {
        from: a.cohort_id.clone(),
        to: b.cohort_id.clone(),
        delta_di_pp: (b.di - a.di) * 100.0,
        delta_ai_pp: (b.ai - a.ai) * 100.0,
        delta_level_counts: (
            b.level_counts.0 as i64 - a.level_counts.0 as i64,
            b.level_counts.1 as i64 - a.level_counts.1 as i64,
            b.level_counts.2 as i64 - a.level_counts.2 as i64,
        ),
    }
}
