use defensibility_core::gate::{
    evaluate_gate, risk_reduction, scenario_sweep, BindingConstraint, GateConfig, GateError,
    RiskFormula, ScenarioRow,
};
use defensibility_core::metrics::CohortReport;

fn report(id: &str, n: usize, l3: usize, yes: usize) -> CohortReport {
    let di = (n - l3) as f64 / n as f64;
    CohortReport {
        cohort_id: id.to_string(),
        n,
        di,
        ai: yes as f64 / n as f64,
        level_counts: (n - l3, 0, l3),
        inverse_yes: yes,
        f1: None,
        gap: None,
        defensible_fn_rate: None,
        accurate_but_indefensible_rate: None,
        governance_state: None,
    }
}

#[test]
fn gate_pass_on_earned_autonomy_means() {
    let r = report("a", 1000, 32, 70); // DI 0.968, AI 0.07
    let out = evaluate_gate(&r, &GateConfig::default());
    assert!(out.pass);
    assert_eq!(out.binding_constraint, BindingConstraint::None);
}

#[test]
fn gate_fails_on_ai_binding() {
    // DI 0.923, AI 0.183 at n = 26902
    let mut r = report("random-sample", 26902, 0, 0);
    r.di = 0.923;
    r.ai = 0.183;
    let out = evaluate_gate(&r, &GateConfig::default());
    assert!(!out.pass);
    assert_eq!(out.binding_constraint, BindingConstraint::Ai);
}

#[test]
fn gate_fails_on_size_before_other_checks() {
    let mut r = report("tiny", 10, 0, 0);
    r.di = 0.95;
    r.ai = 0.10;
    let out = evaluate_gate(&r, &GateConfig::default());
    assert!(!out.pass);
    assert_eq!(out.binding_constraint, BindingConstraint::Size);
    // SIZE binds even when DI would also fail
    r.di = 0.5;
    assert_eq!(
        evaluate_gate(&r, &GateConfig::default()).binding_constraint,
        BindingConstraint::Size
    );
}

#[test]
fn gate_thresholds_are_inclusive() {
    let mut r = report("edge", 25, 0, 0);
    r.di = 0.90;
    r.ai = 0.15;
    assert!(evaluate_gate(&r, &GateConfig::default()).pass);
}

#[test]
fn risk_reduction_hand_computed() {
    let a = risk_reduction(0.0566, 0.0276, 0.78, RiskFormula::RateRatio).unwrap();
    assert!((a - (1.0 - 0.0276 / 0.0566)).abs() < 1e-12);
    assert!((a - 0.512).abs() < 5e-3);
    let b = risk_reduction(0.0566, 0.0276, 0.78, RiskFormula::ExposureWeighted).unwrap();
    assert!((b - (0.0566 - 0.0276 * 0.78) / 0.0566).abs() < 1e-12);
}

#[test]
fn risk_reduction_boundaries() {
    assert_eq!(
        risk_reduction(0.05, 0.05, 1.0, RiskFormula::RateRatio).unwrap(),
        0.0
    );
    assert_eq!(
        risk_reduction(0.05, 0.0, 0.5, RiskFormula::RateRatio).unwrap(),
        1.0
    );
    assert_eq!(
        risk_reduction(0.05, 0.0, 0.5, RiskFormula::ExposureWeighted).unwrap(),
        1.0
    );
    assert_eq!(
        risk_reduction(0.0, 0.0, 1.0, RiskFormula::RateRatio),
        Err(GateError::ZeroBaseline)
    );
}

fn scenario(name: &str, di_min: f64, ai_max: f64) -> GateConfig {
    GateConfig {
        di_min,
        ai_max,
        min_decisions: 25,
        scenario_name: name.to_string(),
    }
}

#[test]
fn sweep_decision_coverage_exact() {
    let fleet = vec![report("a", 75, 2, 5), report("b", 25, 10, 20)];
    let rows = scenario_sweep(&fleet, &[scenario("Standard", 0.90, 0.15)]);
    let r = &rows[0];
    assert_eq!(r.communities_passing, 1);
    assert!((r.decision_coverage - 0.75).abs() < 1e-15);
    assert!((r.fleet_di.unwrap() - 73.0 / 75.0).abs() < 1e-15);
    assert!((r.fleet_ai.unwrap() - 5.0 / 75.0).abs() < 1e-15);
    assert!((r.indefensible_rate.unwrap() - 2.0 / 75.0).abs() < 1e-15);
    assert!((r.baseline_indefensible_rate - 12.0 / 100.0).abs() < 1e-15);
}

#[test]
fn sweep_vacuous_gate_covers_everything() {
    let fleet = vec![report("a", 60, 3, 6), report("b", 40, 4, 8)];
    let rows = scenario_sweep(&fleet, &[scenario("Permissive", 0.0, 1.0)]);
    let r = &rows[0];
    assert_eq!(r.community_coverage, 1.0);
    assert_eq!(r.decision_coverage, 1.0);
    assert!((r.indefensible_rate.unwrap() - r.baseline_indefensible_rate).abs() < 1e-15);
    // gated == baseline -> zero risk reduction under the rate-ratio formula
    assert!(r.risk_reduction_rate_ratio.unwrap().abs() < 1e-12);
}

#[test]
fn sweep_moderate_equals_standard_when_no_cohort_in_band() {
    // no cohort has DI in [0.85, 0.90): degeneracy between the two configs
    let fleet = vec![
        report("high-1", 100, 4, 10),  // DI 0.96
        report("high-2", 200, 10, 24), // DI 0.95
        report("low-1", 100, 30, 40),  // DI 0.70
    ];
    let rows = scenario_sweep(
        &fleet,
        &[
            scenario("Moderate", 0.85, 0.15),
            scenario("Standard", 0.90, 0.15),
        ],
    );
    let strip = |r: &ScenarioRow| {
        (
            r.communities_passing,
            r.decision_coverage.to_bits(),
            r.fleet_di.map(f64::to_bits),
            r.fleet_ai.map(f64::to_bits),
            r.indefensible_rate.map(f64::to_bits),
        )
    };
    assert_eq!(strip(&rows[0]), strip(&rows[1]));
}

#[test]
fn sweep_no_passing_cohorts_yields_empty_aggregates() {
    let fleet = vec![report("a", 100, 40, 50)];
    let rows = scenario_sweep(&fleet, &[scenario("Strict", 0.99, 0.01)]);
    assert_eq!(rows[0].communities_passing, 0);
    assert_eq!(rows[0].fleet_di, None);
    assert_eq!(rows[0].indefensible_rate, None);
    assert_eq!(rows[0].risk_reduction_rate_ratio, None);
}
