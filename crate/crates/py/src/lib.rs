//! Python bindings for the defensibility audit engine.
//!
//! The surface mirrors the core crate's main operations: record validation,
//! PDS extraction, scalar collapse and weight fitting, calibration error,
//! cohort metrics, gate evaluation, stability estimation, lexical grounding
//! and the seeded fleet simulator. Records and rule sets cross the boundary
//! as JSON strings in the same formats the CLI reads and writes.

use defensibility_core::calibration::{
    compute_ece, fit_weights, CalibrationModel, EntropyComponent,
};
use defensibility_core::gate;
use defensibility_core::metrics::{build_cohort_report, CohortCase};
use defensibility_core::parser::resolve_trace;
use defensibility_core::pds::{assemble_pds, ComponentStatus, PdsFlags, PdsVector};
use defensibility_core::record::{self, AuditRecord, RuleSet};
use defensibility_core::simulator::{generate_fleet, FleetShape, Hypothesis, SimConfig};
use defensibility_core::stability;
use defensibility_core::verifier;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_component(name: &str) -> PyResult<EntropyComponent> {
    match name {
        "h_w" => Ok(EntropyComponent::HW),
        "h_kappa" => Ok(EntropyComponent::HKappa),
        other => Err(PyValueError::new_err(format!(
            "component must be h_w or h_kappa, got {other}"
        ))),
    }
}

fn parse_record(record_json: &str) -> PyResult<AuditRecord> {
    serde_json::from_str(record_json).map_err(value_err)
}

fn parse_rule_set(rules_json: &str) -> PyResult<RuleSet> {
    serde_json::from_str(rules_json).map_err(value_err)
}

/// Fitted collapse weights: S = exp(alpha*lambda - beta*H - gamma*sigma).
#[pyclass(name = "CalibrationModel", skip_from_py_object)]
#[derive(Clone)]
struct PyCalibrationModel {
    inner: CalibrationModel,
}

#[pymethods]
impl PyCalibrationModel {
    /// Equal-weight fallback model for the given entropy slot.
    #[staticmethod]
    fn equal_weights(component: &str) -> PyResult<Self> {
        Ok(PyCalibrationModel {
            inner: CalibrationModel::equal_weights(parse_component(component)?),
        })
    }

    /// Load a weights file written by `save` or the CLI.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = defensibility_core::calibration::load_weights(path.as_ref())
            .map_err(value_err)?;
        Ok(PyCalibrationModel { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        defensibility_core::calibration::save_weights(&self.inner, path.as_ref())
            .map_err(value_err)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn component(&self) -> String {
        self.inner.component.to_string()
    }

    #[getter]
    fn loss(&self) -> f64 {
        self.inner.loss
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples
    }

    /// Collapse raw components (lambda_xi, entropy in bits, sigma_rho) to S.
    fn collapse(&self, lambda_xi: f64, h: f64, sigma_rho: f64) -> f64 {
        defensibility_core::calibration::collapse_raw(
            lambda_xi,
            h,
            sigma_rho,
            self.inner.alpha,
            self.inner.beta,
            self.inner.gamma,
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "CalibrationModel(alpha={:.4}, beta={:.4}, gamma={:.4}, component={})",
            self.inner.alpha, self.inner.beta, self.inner.gamma, self.inner.component
        )
    }
}

/// Schema violations for one record JSON line; empty means valid.
#[pyfunction]
fn validate_record(record_json: &str) -> PyResult<Vec<String>> {
    let r = parse_record(record_json)?;
    Ok(record::validate_record(&r)
        .iter()
        .map(|v| v.to_string())
        .collect())
}

fn pds_dict<'py>(py: Python<'py>, v: &PdsVector, flags: &PdsFlags) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("lambda_xi", v.lambda_xi)?;
    d.set_item("h_kappa", v.h_kappa)?;
    d.set_item("h_w", v.h_w)?;
    d.set_item("sigma_rho", v.sigma_rho)?;
    d.set_item("xi_star", v.map_level.map(|l| l.index()))?;
    let f = PyDict::new(py);
    let status = |s: &ComponentStatus| match s {
        ComponentStatus::Ok => "ok".to_string(),
        ComponentStatus::Failed(msg) => msg.clone(),
    };
    f.set_item("lambda_xi", status(&flags.lambda_xi))?;
    f.set_item("h_kappa", status(&flags.h_kappa))?;
    f.set_item("h_w", status(&flags.h_w))?;
    f.set_item("sigma_rho", status(&flags.sigma_rho))?;
    d.set_item("flags", f)?;
    Ok(d)
}

/// Extract the PDS components and resolved trace fields from one record.
#[pyfunction]
fn extract_pds<'py>(py: Python<'py>, record_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let r = parse_record(record_json)?;
    let pds = assemble_pds(&r);
    let d = pds_dict(py, &pds, &pds.flags)?;
    d.set_item("id", &r.id)?;
    d.set_item("cohort", &r.community_id)?;
    if let Ok(trace) = resolve_trace(&r) {
        d.set_item("level", trace.level.index())?;
        d.set_item("inverse_check", trace.inverse_check.fired())?;
        d.set_item("policy_citation", trace.policy_citation)?;
    }
    Ok(d)
}

/// Fit collapse weights by maximum likelihood on (lambda, h, sigma, label)
/// samples. Returns a CalibrationModel.
#[pyfunction]
fn fit_collapse_weights(
    samples: Vec<(f64, f64, f64, bool)>,
    component: &str,
) -> PyResult<PyCalibrationModel> {
    let component = parse_component(component)?;
    let ok = ComponentStatus::Ok;
    let vectors: Vec<(PdsVector, bool)> = samples
        .into_iter()
        .map(|(lambda, h, sigma, y)| {
            (
                PdsVector {
                    lambda_xi: Some(lambda),
                    map_level: None,
                    h_kappa: Some(h),
                    h_w: Some(h),
                    sigma_rho: Some(sigma),
                    flags: PdsFlags {
                        lambda_xi: ok.clone(),
                        h_kappa: ok.clone(),
                        h_w: ok.clone(),
                        sigma_rho: ok.clone(),
                    },
                },
                y,
            )
        })
        .collect();
    let fit = fit_weights(&vectors, component).map_err(value_err)?;
    Ok(PyCalibrationModel { inner: fit.model })
}

/// Expected calibration error over (score, label) pairs with equal-frequency
/// bins.
#[pyfunction]
fn expected_calibration_error(scores: Vec<(f64, bool)>, bins: usize) -> PyResult<f64> {
    compute_ece(&scores, bins).map_err(value_err)
}

/// Cohort DI/AI/F1 report from per-case tuples
/// (level 1..3, inverse_check_fired, model_removes, human_removes_or_none).
#[pyfunction]
fn cohort_metrics<'py>(
    py: Python<'py>,
    cohort_id: &str,
    cases: Vec<(u8, bool, bool, Option<bool>)>,
) -> PyResult<Bound<'py, PyDict>> {
    use defensibility_core::record::{DefensibilityLevel, InverseCheck, ProposedAction};
    let action = |removes: bool| {
        if removes {
            ProposedAction::Remove
        } else {
            ProposedAction::Approve
        }
    };
    let cases: Vec<CohortCase> = cases
        .into_iter()
        .map(|(level, inverse, model, human)| {
            let level = DefensibilityLevel::ALL
                .get(level.saturating_sub(1) as usize)
                .copied()
                .ok_or_else(|| PyValueError::new_err(format!("level must be 1..3, got {level}")))?;
            Ok(CohortCase {
                level,
                inverse_check: if inverse {
                    InverseCheck::Yes
                } else {
                    InverseCheck::No
                },
                model_action: action(model),
                human_action: human.map(action),
            })
        })
        .collect::<PyResult<_>>()?;
    let report = build_cohort_report(cohort_id, &cases).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("cohort_id", report.cohort_id)?;
    d.set_item("n", report.n)?;
    d.set_item("di", report.di)?;
    d.set_item("ai", report.ai)?;
    d.set_item("f1", report.f1)?;
    d.set_item("gap", report.gap)?;
    d.set_item("defensible_fn_rate", report.defensible_fn_rate)?;
    d.set_item(
        "accurate_but_indefensible_rate",
        report.accurate_but_indefensible_rate,
    )?;
    Ok(d)
}

/// Gate check on cohort aggregates; returns (pass, binding_constraint).
#[pyfunction]
#[pyo3(signature = (di, ai, n, di_min=0.90, ai_max=0.15, min_decisions=25))]
fn evaluate_gate(
    di: f64,
    ai: f64,
    n: usize,
    di_min: f64,
    ai_max: f64,
    min_decisions: usize,
) -> (bool, String) {
    use defensibility_core::metrics::CohortReport;
    let report = CohortReport {
        cohort_id: String::new(),
        n,
        di,
        ai,
        level_counts: (0, 0, 0),
        inverse_yes: 0,
        f1: None,
        gap: None,
        defensible_fn_rate: None,
        accurate_but_indefensible_rate: None,
        governance_state: None,
    };
    let cfg = gate::GateConfig {
        di_min,
        ai_max,
        min_decisions,
        scenario_name: String::new(),
    };
    let out = gate::evaluate_gate(&report, &cfg);
    (out.pass, format!("{:?}", out.binding_constraint))
}

/// Risk reduction from gating; formula is "rate_ratio" or
/// "exposure_weighted".
#[pyfunction]
fn risk_reduction(baseline: f64, gated: f64, coverage: f64, formula: &str) -> PyResult<f64> {
    let formula = match formula {
        "rate_ratio" => gate::RiskFormula::RateRatio,
        "exposure_weighted" => gate::RiskFormula::ExposureWeighted,
        other => {
            return Err(PyValueError::new_err(format!(
                "formula must be rate_ratio or exposure_weighted, got {other}"
            )))
        }
    };
    gate::risk_reduction(baseline, gated, coverage, formula).map_err(value_err)
}

/// Sample standard deviation of replicate S values (K-1 denominator).
#[pyfunction]
fn sigma_pds(values: Vec<f64>) -> PyResult<f64> {
    stability::sigma_pds(&values).map_err(value_err)
}

/// Stability class name for a dominant-level fraction.
#[pyfunction]
fn classify_stability(dominant_fraction: f64) -> String {
    format!("{:?}", stability::classify_stability(dominant_fraction))
}

/// Spearman rank correlation (average ranks for ties).
#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    stability::spearman(&x, &y).map_err(value_err)
}

/// Citation-containment overlap against a rule-set JSON object; returns
/// (best_rule_id, overlap in [0, 1]).
#[pyfunction]
fn overlap_score(citation: &str, rules_json: &str) -> PyResult<(String, f64)> {
    let rules = parse_rule_set(rules_json)?;
    verifier::overlap_score(citation, &rules).map_err(value_err)
}

/// Two-layer verdict name from the calibrated score and lexical overlap.
#[pyfunction]
#[pyo3(signature = (s, overlap, s_min=0.10, overlap_min=0.5))]
fn two_layer_verdict(s: f64, overlap: f64, s_min: f64, overlap_min: f64) -> String {
    format!("{:?}", verifier::two_layer_verdict(s, overlap, s_min, overlap_min))
}

/// Generate a synthetic fleet; returns (records, truths, rule_sets) as
/// lists of JSON strings in the CLI's file formats.
#[pyfunction]
#[pyo3(signature = (seed=7, temperature=0.3, replicates=1, cohorts=20, cases_per_cohort=40, hypothesis="governance"))]
fn simulate_fleet(
    seed: u64,
    temperature: f64,
    replicates: usize,
    cohorts: usize,
    cases_per_cohort: usize,
    hypothesis: &str,
) -> PyResult<(Vec<String>, Vec<String>, Vec<String>)> {
    let hypothesis = match hypothesis {
        "governance" => Hypothesis::Governance,
        "sampling_noise" => Hypothesis::SamplingNoise,
        other => {
            return Err(PyValueError::new_err(format!(
                "hypothesis must be governance or sampling_noise, got {other}"
            )))
        }
    };
    let cfg = SimConfig {
        seed,
        temperature,
        replicates,
        hypothesis,
        fleet: FleetShape {
            cohorts,
            cases_per_cohort,
            ..FleetShape::default()
        },
        ..SimConfig::default()
    };
    let fleet = generate_fleet(&cfg);
    let dump = |items: Vec<String>| items;
    Ok((
        dump(
            fleet
                .records
                .iter()
                .map(|r| serde_json::to_string(r).expect("serializable record"))
                .collect(),
        ),
        dump(
            fleet
                .truths
                .iter()
                .map(|t| serde_json::to_string(t).expect("serializable truth"))
                .collect(),
        ),
        dump(
            fleet
                .rule_sets
                .iter()
                .map(|rs| serde_json::to_string(rs).expect("serializable rule set"))
                .collect(),
        ),
    ))
}

#[pymodule]
fn defensibility_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCalibrationModel>()?;
    m.add_function(wrap_pyfunction!(validate_record, m)?)?;
    m.add_function(wrap_pyfunction!(extract_pds, m)?)?;
    m.add_function(wrap_pyfunction!(fit_collapse_weights, m)?)?;
    m.add_function(wrap_pyfunction!(expected_calibration_error, m)?)?;
    m.add_function(wrap_pyfunction!(cohort_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_gate, m)?)?;
    m.add_function(wrap_pyfunction!(risk_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_pds, m)?)?;
    m.add_function(wrap_pyfunction!(classify_stability, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_score, m)?)?;
    m.add_function(wrap_pyfunction!(two_layer_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_fleet, m)?)?;
    Ok(())
}
