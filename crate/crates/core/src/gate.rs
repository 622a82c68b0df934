//! Governance gate: threshold evaluation per cohort and scenario
//! sensitivity sweeps over a fleet.

use crate::metrics::CohortReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GateError {
    #[error("ZERO_BASELINE: baseline indefensible rate is zero")]
    ZeroBaseline,
}

/// Gate thresholds for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub di_min: f64,
    pub ai_max: f64,
    pub min_decisions: usize,
    #[serde(default)]
    pub scenario_name: String,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            di_min: 0.90,
            ai_max: 0.15,
            min_decisions: 25,
            scenario_name: "Standard".to_string(),
        }
    }
}

/// First failing check, evaluated in order SIZE, DI, AI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingConstraint {
    Size,
    Di,
    Ai,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub pass: bool,
    pub binding_constraint: BindingConstraint,
}

/// Pure threshold check: pass iff n >= min_decisions, di >= di_min and
/// ai <= ai_max.
pub fn evaluate_gate(report: &CohortReport, cfg: &GateConfig) -> GateOutcome {
    let binding = if report.n < cfg.min_decisions {
        BindingConstraint::Size
    } else if report.di < cfg.di_min {
        BindingConstraint::Di
    } else if report.ai > cfg.ai_max {
        BindingConstraint::Ai
    } else {
        BindingConstraint::None
    };
    GateOutcome {
        pass: binding == BindingConstraint::None,
        binding_constraint: binding,
    }
}

/// Which risk-reduction formula a number was computed with. The selector is
/// part of the output so reported values are never ambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskFormula {
    /// 1 - gated / baseline.
    RateRatio,
    /// (baseline - gated * coverage) / baseline.
    ExposureWeighted,
}

pub fn risk_reduction(
    baseline_indef_rate: f64,
    gated_indef_rate: f64,
    decision_coverage: f64,
    formula: RiskFormula,
) -> Result<f64, GateError> {
    if baseline_indef_rate <= 0.0 {
        return Err(GateError::ZeroBaseline);
    }
    Ok(match formula {
        RiskFormula::RateRatio => 1.0 - gated_indef_rate / baseline_indef_rate,
        RiskFormula::ExposureWeighted => {
            (baseline_indef_rate - gated_indef_rate * decision_coverage) / baseline_indef_rate
        }
    })
}

/// One row of the scenario sensitivity table. Fleet DI/AI and the
/// indefensible rate are decision-weighted over passing cohorts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub di_min: f64,
    pub ai_max: f64,
    pub min_decisions: usize,
    pub communities_passing: usize,
    pub communities_total: usize,
    pub community_coverage: f64,
    /// Passing decisions / all decisions, exactly.
    pub decision_coverage: f64,
    pub fleet_di: Option<f64>,
    pub fleet_ai: Option<f64>,
    /// L3 decisions in passing cohorts / passing decisions.
    pub indefensible_rate: Option<f64>,
    pub baseline_indefensible_rate: f64,
    pub risk_reduction_rate_ratio: Option<f64>,
    pub risk_reduction_exposure_weighted: Option<f64>,
}

/// Sweeps the gate over a fleet for each scenario config.
pub fn scenario_sweep(fleet: &[CohortReport], scenarios: &[GateConfig]) -> Vec<ScenarioRow> {
    let total_decisions: usize = fleet.iter().map(|c| c.n).sum();
    let total_l3: usize = fleet.iter().map(|c| c.level_counts.2).sum();
    let baseline = if total_decisions > 0 {
        total_l3 as f64 / total_decisions as f64
    } else {
        0.0
    };

    scenarios
        .iter()
        .map(|cfg| {
            let passing: Vec<&CohortReport> = fleet
                .iter()
                .filter(|c| evaluate_gate(c, cfg).pass)
                .collect();
            let pass_n: usize = passing.iter().map(|c| c.n).sum();
            let pass_defensible: usize = passing
                .iter()
                .map(|c| c.level_counts.0 + c.level_counts.1)
                .sum();
            let pass_yes: usize = passing.iter().map(|c| c.inverse_yes).sum();
            let pass_l3: usize = passing.iter().map(|c| c.level_counts.2).sum();
            let decision_coverage = if total_decisions > 0 {
                pass_n as f64 / total_decisions as f64
            } else {
                0.0
            };
            let indef = if pass_n > 0 {
                Some(pass_l3 as f64 / pass_n as f64)
            } else {
                None
            };
            ScenarioRow {
                scenario: cfg.scenario_name.clone(),
                di_min: cfg.di_min,
                ai_max: cfg.ai_max,
                min_decisions: cfg.min_decisions,
                communities_passing: passing.len(),
                communities_total: fleet.len(),
                community_coverage: if fleet.is_empty() {
                    0.0
                } else {
                    passing.len() as f64 / fleet.len() as f64
                },
                decision_coverage,
                fleet_di: (pass_n > 0).then(|| pass_defensible as f64 / pass_n as f64),
                fleet_ai: (pass_n > 0).then(|| pass_yes as f64 / pass_n as f64),
                indefensible_rate: indef,
                baseline_indefensible_rate: baseline,
                risk_reduction_rate_ratio: indef.and_then(|g| {
                    risk_reduction(baseline, g, decision_coverage, RiskFormula::RateRatio).ok()
                }),
                risk_reduction_exposure_weighted: indef.and_then(|g| {
                    risk_reduction(baseline, g, decision_coverage, RiskFormula::ExposureWeighted)
                        .ok()
                }),
            }
        })
        .collect()
}
