//! Command-line pipeline: dataset validation, PDS extraction, weight
//! calibration, cohort metrics, governance gating, stability analysis,
//! grounding verification, fleet simulation and report emission.
//!
//! Exit codes: 0 success, 1 data errors, 2 usage errors. Record-level
//! failures are skipped and counted; schema and IO failures are fatal.

use clap::{Args, Parser, Subcommand, ValueEnum};
use defensibility_core::calibration::{
    compute_ece, fit_weights, load_weights, reliability_bins, scalar_collapse, CalibrationError,
    CalibrationModel, EntropyComponent,
};
use defensibility_core::dataset::{
    read_items, read_records, read_rule_sets, read_truths, write_items, write_json_pretty,
    write_records, write_rule_sets, write_truths, PdsRow,
};
use defensibility_core::gate::{scenario_sweep, GateConfig, ScenarioRow};
use defensibility_core::metrics::{
    build_cohort_report, classify_governance_state, CohortCase, CohortReport,
};
use defensibility_core::parser::resolve_trace;
use defensibility_core::pds::{assemble_pds, ComponentStatus, PdsFlags, PdsVector};
use defensibility_core::record::{validate_record, AuditRecord};
use defensibility_core::simulator::{generate_fleet, SimConfig};
use defensibility_core::stability::{
    stability_profile, temperature_sweep, Replicate, ReplicateSet, StabilityGroup,
    StabilityProfile, SweepInput,
};
use defensibility_core::verifier::{
    classify_archetype, overlap_score, two_layer_verdict, VerdictReport, VerifierConfig,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "defensibility", version, about = "Batch audit engine for moderation reasoning traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComponentArg {
    #[value(name = "h_w")]
    HW,
    #[value(name = "h_kappa")]
    HKappa,
}

impl From<ComponentArg> for EntropyComponent {
    fn from(c: ComponentArg) -> Self {
        match c {
            ComponentArg::HW => EntropyComponent::HW,
            ComponentArg::HKappa => EntropyComponent::HKappa,
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Fitted weights file; falls back to equal weights when absent
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Entropy slot used when no weights file is given
    #[arg(long, value_enum, default_value = "h_w")]
    component: ComponentArg,
}

impl ModelArgs {
    fn model(&self) -> Result<CalibrationModel, CalibrationError> {
        match &self.weights {
            Some(p) => load_weights(p),
            None => Ok(CalibrationModel::equal_weights(self.component.into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and report valid-audit counts
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract per-record PDS components into the columnar format
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit collapse weights on labelled records and save them
    Calibrate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "h_w")]
        component: ComponentArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Held-out calibration evaluation: ECE and reliability bins
    Ece {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of equal-frequency bins
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-cohort DI/AI/gap reports with governance states
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scenario sweep over cohort reports
    Gate {
        #[arg(long)]
        input: PathBuf,
        /// JSON array of scenario configs; overrides the threshold flags
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long, default_value_t = 0.90)]
        di_min: f64,
        #[arg(long, default_value_t = 0.15)]
        ai_max: f64,
        #[arg(long, default_value_t = 25)]
        min_decisions: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicate-set stability profiles and the temperature sweep table
    Stability {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-layer grounding verdicts against a rule-set file
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic fleet with ground truth and rule sets
    Simulate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        temperature: f64,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render cohort and scenario tables as a plain-text report
    Report {
        /// Cohort reports (output of `evaluate`)
        #[arg(long)]
        input: PathBuf,
        /// Scenario table (output of `gate`)
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Anything that should terminate the run with exit code 1.
#[derive(Debug)]
struct DataError(String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<E: std::error::Error> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

type Run = Result<(), DataError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest { input, out } => cmd_ingest(&input, out.as_deref()),
        Command::Extract { input, model, out } => cmd_extract(&input, &model, &out),
        Command::Calibrate {
            input,
            component,
            out,
        } => cmd_calibrate(&input, component.into(), &out),
        Command::Ece {
            input,
            model,
            bins,
            out,
        } => cmd_ece(&input, &model, bins, out.as_deref()),
        Command::Evaluate { input, out } => cmd_evaluate(&input, &out),
        Command::Gate {
            input,
            scenarios,
            di_min,
            ai_max,
            min_decisions,
            out,
        } => cmd_gate(&input, scenarios.as_deref(), di_min, ai_max, min_decisions, &out),
        Command::Stability { input, model, out } => cmd_stability(&input, &model, &out),
        Command::Verify {
            input,
            rules,
            model,
            out,
        } => cmd_verify(&input, &rules, &model, &out),
        Command::Simulate {
            seed,
            temperature,
            replicates,
            out,
        } => cmd_simulate(seed, temperature, replicates, &out),
        Command::Report {
            input,
            scenarios,
            out,
        } => cmd_report(&input, scenarios.as_deref(), out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

// ------------------------------------------------------------------ ingest

#[derive(Serialize)]
struct IngestReport {
    total_records: usize,
    valid_audits: usize,
    schema_violations: usize,
    unresolved_traces: usize,
    component_attrition: BTreeMap<String, usize>,
    /// Fraction of records whose trace resolves completely (probability)
    detection_rate: Option<f64>,
}

fn cmd_ingest(input: &Path, out: Option<&Path>) -> Run {
    let records = read_records(input)?;
    let mut report = IngestReport {
        total_records: records.len(),
        valid_audits: 0,
        schema_violations: 0,
        unresolved_traces: 0,
        component_attrition: BTreeMap::new(),
        detection_rate: None,
    };
    let mut resolved = 0usize;
    for r in &records {
        let violations = validate_record(r);
        if !violations.is_empty() {
            report.schema_violations += 1;
            for v in &violations {
                eprintln!("skip {}: {v}", r.id);
            }
            continue;
        }
        match resolve_trace(r) {
            Ok(_) => resolved += 1,
            Err(e) => {
                report.unresolved_traces += 1;
                eprintln!("skip {}: {e}", r.id);
                continue;
            }
        }
        let pds = assemble_pds(r);
        let flags = [
            ("lambda_xi", &pds.flags.lambda_xi),
            ("h_kappa", &pds.flags.h_kappa),
            ("h_w", &pds.flags.h_w),
            ("sigma_rho", &pds.flags.sigma_rho),
        ];
        let mut all_ok = true;
        for (name, st) in flags {
            if !st.is_ok() {
                all_ok = false;
                *report.component_attrition.entry(name.to_string()).or_insert(0) += 1;
            }
        }
        if all_ok {
            report.valid_audits += 1;
        }
    }
    if !records.is_empty() {
        report.detection_rate = Some(resolved as f64 / records.len() as f64);
    }
    println!(
        "{} records, {} valid audits, {} schema violations, {} unresolved traces",
        report.total_records, report.valid_audits, report.schema_violations, report.unresolved_traces
    );
    if let Some(path) = out {
        write_json_pretty(&report, path)?;
    }
    if report.total_records > 0 && report.valid_audits == 0 {
        return Err(DataError("no valid audits in dataset".to_string()).into());
    }
    Ok(())
}

// ----------------------------------------------------------------- extract

fn record_to_row(r: &AuditRecord, model: &CalibrationModel) -> Option<PdsRow> {
    let trace = match resolve_trace(r) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("skip {}: {e}", r.id);
            return None;
        }
    };
    let pds = assemble_pds(r);
    Some(PdsRow {
        id: r.id.clone(),
        cohort: r.community_id.clone(),
        lambda_xi: pds.lambda_xi,
        h_kappa: pds.h_kappa,
        h_w: pds.h_w,
        sigma_rho: pds.sigma_rho,
        xi_star: pds.map_level,
        level: trace.level,
        inverse_check: trace.inverse_check,
        s: scalar_collapse(&pds, model).ok(),
        label: r.human_action.map(|h| h == r.proposed_action),
    })
}

fn cmd_extract(input: &Path, margs: &ModelArgs, out: &Path) -> Run {
    let records = read_records(input)?;
    let model = margs.model()?;
    let rows: Vec<PdsRow> = records.iter().filter_map(|r| record_to_row(r, &model)).collect();
    let skipped = records.len() - rows.len();
    write_items(&rows, out)?;
    println!("extracted {} rows ({} skipped)", rows.len(), skipped);
    Ok(())
}

// --------------------------------------------------------------- calibrate

fn row_to_vector(row: &PdsRow) -> PdsVector {
    let status = |present: bool, name: &str| {
        if present {
            ComponentStatus::Ok
        } else {
            ComponentStatus::Failed(format!("MISSING_COMPONENT: {name}"))
        }
    };
    PdsVector {
        lambda_xi: row.lambda_xi,
        map_level: row.xi_star,
        h_kappa: row.h_kappa,
        h_w: row.h_w,
        sigma_rho: row.sigma_rho,
        flags: PdsFlags {
            lambda_xi: status(row.lambda_xi.is_some(), "lambda_xi"),
            h_kappa: status(row.h_kappa.is_some(), "h_kappa"),
            h_w: status(row.h_w.is_some(), "h_w"),
            sigma_rho: status(row.sigma_rho.is_some(), "sigma_rho"),
        },
    }
}

/// Labelled samples from either an audit dataset (label = human action
/// agrees with the model action) or a columnar PDS file with labels.
fn load_samples(input: &Path, model: &CalibrationModel) -> Result<Vec<(PdsVector, bool)>, DataError> {
    if let Ok(records) = read_records(input) {
        let mut samples = Vec::new();
        let mut unlabelled = 0usize;
        for r in &records {
            match r.human_action {
                Some(h) => samples.push((assemble_pds(r), h == r.proposed_action)),
                None => unlabelled += 1,
            }
        }
        if unlabelled > 0 {
            eprintln!("skipped {unlabelled} records without a human action");
        }
        return Ok(samples);
    }
    let rows: Vec<PdsRow> = read_items(input)?;
    let mut samples = Vec::new();
    let mut unlabelled = 0usize;
    for row in &rows {
        match row.label {
            Some(y) => samples.push((row_to_vector(row), y)),
            None => unlabelled += 1,
        }
    }
    if unlabelled > 0 {
        eprintln!("skipped {unlabelled} rows without a label");
    }
    let _ = model;
    Ok(samples)
}

fn cmd_calibrate(input: &Path, component: EntropyComponent, out: &Path) -> Run {
    let samples = load_samples(input, &CalibrationModel::equal_weights(component))?;
    let fit = fit_weights(&samples, component)?;
    defensibility_core::calibration::save_weights(&fit.model, out)?;
    println!(
        "alpha={:.4} beta={:.4} gamma={:.4} loss={:.6} n={} excluded={} converged={}",
        fit.model.alpha,
        fit.model.beta,
        fit.model.gamma,
        fit.model.loss,
        fit.model.n_samples,
        fit.excluded,
        fit.converged
    );
    Ok(())
}

// --------------------------------------------------------------------- ece

#[derive(Serialize)]
struct EceReport {
    /// Expected calibration error (probability scale)
    ece: f64,
    bins: Vec<defensibility_core::calibration::ReliabilityBin>,
    n_samples: usize,
    excluded: usize,
}

fn cmd_ece(input: &Path, margs: &ModelArgs, bins: usize, out: Option<&Path>) -> Run {
    let model = margs.model()?;
    let samples = load_samples(input, &model)?;
    let mut scores = Vec::new();
    let mut excluded = 0usize;
    for (v, y) in &samples {
        match scalar_collapse(v, &model) {
            Ok(s) => scores.push((s, *y)),
            Err(_) => excluded += 1,
        }
    }
    let ece = compute_ece(&scores, bins)?;
    let report = EceReport {
        ece,
        bins: reliability_bins(&scores, bins)?,
        n_samples: scores.len(),
        excluded,
    };
    println!("ECE={ece:.6} over {} samples in {bins} bins ({excluded} excluded)", scores.len());
    if let Some(path) = out {
        write_json_pretty(&report, path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- evaluate

fn cohorts_from_records(records: &[AuditRecord]) -> BTreeMap<String, Vec<CohortCase>> {
    let mut by_cohort: BTreeMap<String, Vec<CohortCase>> = BTreeMap::new();
    for r in records {
        match resolve_trace(r) {
            Ok(t) => by_cohort.entry(r.community_id.clone()).or_default().push(CohortCase {
                level: t.level,
                inverse_check: t.inverse_check,
                model_action: r.proposed_action,
                human_action: r.human_action,
            }),
            Err(e) => eprintln!("skip {}: {e}", r.id),
        }
    }
    by_cohort
}

fn cmd_evaluate(input: &Path, out: &Path) -> Run {
    let records = read_records(input)?;
    let by_cohort = cohorts_from_records(&records);
    let gate = GateConfig::default();
    let mut reports = Vec::new();
    for (id, cases) in &by_cohort {
        let mut report = build_cohort_report(id, cases)?;
        report.governance_state =
            classify_governance_state(&report, gate.di_min, gate.ai_max, gate.min_decisions).ok();
        reports.push(report);
    }
    if reports.is_empty() {
        return Err(DataError("no resolvable records".to_string()).into());
    }
    write_json_pretty(&reports, out)?;
    println!("evaluated {} cohorts over {} records", reports.len(), records.len());
    Ok(())
}

// -------------------------------------------------------------------- gate

fn read_cohort_reports(path: &Path) -> Result<Vec<CohortReport>, DataError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_gate(
    input: &Path,
    scenarios: Option<&Path>,
    di_min: f64,
    ai_max: f64,
    min_decisions: usize,
    out: &Path,
) -> Run {
    let fleet = read_cohort_reports(input)?;
    let configs: Vec<GateConfig> = match scenarios {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
        None => vec![GateConfig {
            di_min,
            ai_max,
            min_decisions,
            scenario_name: "Standard".to_string(),
        }],
    };
    let rows = scenario_sweep(&fleet, &configs);
    write_json_pretty(&rows, out)?;
    for row in &rows {
        println!(
            "{}: {}/{} cohorts pass, decision coverage {:.3}",
            row.scenario, row.communities_passing, fleet.len(), row.decision_coverage
        );
    }
    Ok(())
}

// --------------------------------------------------------------- stability

#[derive(Serialize)]
struct StabilityReport {
    profiles: Vec<StabilityProfile>,
    /// Temperature sweep rows; present when a ground-truth sidecar with
    /// group labels sits next to the input (same stem, .truth.jsonl)
    sweep: Option<Vec<defensibility_core::stability::SweepRow>>,
}

fn truth_sidecar(input: &Path) -> Option<PathBuf> {
    let stem = input.file_stem()?.to_str()?;
    let candidate = input.with_file_name(format!("{stem}.truth.jsonl"));
    candidate.exists().then_some(candidate)
}

fn cmd_stability(input: &Path, margs: &ModelArgs, out: &Path) -> Run {
    let records = read_records(input)?;
    let model = margs.model()?;
    // replicates of one case share an id prefix before '#'
    let mut sets: BTreeMap<(String, u64), ReplicateSet> = BTreeMap::new();
    for r in &records {
        let case_id = r.id.split('#').next().unwrap_or(&r.id).to_string();
        let trace = match resolve_trace(r) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("skip {}: {e}", r.id);
                continue;
            }
        };
        let pds = assemble_pds(r);
        let s = match scalar_collapse(&pds, &model) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("skip {}: {e}", r.id);
                continue;
            }
        };
        let entry = sets
            .entry((case_id.clone(), r.temperature.to_bits()))
            .or_insert_with(|| ReplicateSet {
                case_id,
                temperature: r.temperature,
                replicates: Vec::new(),
            });
        entry.replicates.push(Replicate {
            s,
            level: trace.level,
            inverse_check: trace.inverse_check,
            h_kappa: pds.h_kappa,
        });
    }
    let mut profiles = Vec::new();
    for set in sets.values() {
        match stability_profile(set) {
            Ok(p) => profiles.push(p),
            Err(e) => eprintln!("skip case {}: {e}", set.case_id),
        }
    }
    if profiles.is_empty() {
        return Err(DataError("no case has enough replicates".to_string()).into());
    }

    let sweep = match truth_sidecar(input) {
        Some(path) => {
            let groups: BTreeMap<String, StabilityGroup> = read_truths(&path)?
                .into_iter()
                .map(|t| (t.case_id, t.group))
                .collect();
            let mut by_temp: BTreeMap<u64, Vec<(StabilityGroup, ReplicateSet)>> = BTreeMap::new();
            for set in sets.into_values() {
                if let Some(&g) = groups.get(&set.case_id) {
                    by_temp.entry(set.temperature.to_bits()).or_default().push((g, set));
                }
            }
            let sweep_input: SweepInput = by_temp
                .into_values()
                .map(|cases| (cases[0].1.temperature, cases))
                .collect();
            if sweep_input.is_empty() {
                None
            } else {
                Some(temperature_sweep(&sweep_input)?)
            }
        }
        None => None,
    };
    let n = profiles.len();
    write_json_pretty(&StabilityReport { profiles, sweep }, out)?;
    println!("profiled {n} cases");
    Ok(())
}

// ------------------------------------------------------------------ verify

fn cmd_verify(input: &Path, rules: &Path, margs: &ModelArgs, out: &Path) -> Run {
    let records = read_records(input)?;
    let rule_sets = read_rule_sets(rules)?;
    let model = margs.model()?;
    let vcfg = VerifierConfig::default();
    let mut reports = Vec::new();
    for r in &records {
        let trace = match resolve_trace(r) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("skip {}: {e}", r.id);
                continue;
            }
        };
        let Some(rule_set) = rule_sets.iter().find(|rs| rs.community_id == r.community_id)
        else {
            eprintln!("skip {}: no rule set for community {}", r.id, r.community_id);
            continue;
        };
        let pds = assemble_pds(r);
        let s = match scalar_collapse(&pds, &model) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("skip {}: {e}", r.id);
                continue;
            }
        };
        let (matched_rule_id, overlap) = match overlap_score(&trace.policy_citation, rule_set) {
            Ok(x) => x,
            Err(e) => {
                eprintln!("skip {}: {e}", r.id);
                continue;
            }
        };
        reports.push(VerdictReport {
            record_id: r.id.clone(),
            verdict: two_layer_verdict(s, overlap, vcfg.s_min, vcfg.overlap_min),
            archetype: classify_archetype(pds.h_kappa.unwrap_or(f64::NAN), s, overlap, &vcfg),
            overlap,
            matched_rule_id,
            s,
            h_kappa: pds.h_kappa,
        });
    }
    if reports.is_empty() {
        return Err(DataError("no verifiable records".to_string()).into());
    }
    let flagged = reports
        .iter()
        .filter(|r| r.verdict != defensibility_core::verifier::Verdict::Clean)
        .count();
    write_items(&reports, out)?;
    println!("verified {} records, {} flagged", reports.len(), flagged);
    Ok(())
}

// ---------------------------------------------------------------- simulate

fn cmd_simulate(seed: u64, temperature: f64, replicates: usize, out: &Path) -> Run {
    let cfg = SimConfig {
        seed,
        temperature,
        replicates,
        ..SimConfig::default()
    };
    let fleet = generate_fleet(&cfg);
    write_records(&fleet.records, out)?;
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| DataError("output path has no file stem".to_string()))?
        .to_string();
    let truth_path = out.with_file_name(format!("{stem}.truth.jsonl"));
    let rules_path = out.with_file_name(format!("{stem}.rules.jsonl"));
    write_truths(&fleet.truths, &truth_path)?;
    write_rule_sets(&fleet.rule_sets, &rules_path)?;
    println!(
        "wrote {} records, {} truth rows, {} rule sets",
        fleet.records.len(),
        fleet.truths.len(),
        fleet.rule_sets.len()
    );
    Ok(())
}

// ------------------------------------------------------------------ report

fn render_report(cohorts: &[CohortReport], scenarios: Option<&[ScenarioRow]>) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    writeln!(s, "COHORT METRICS (DI/AI as probabilities, gap in pp)").unwrap();
    writeln!(
        s,
        "{:<20} {:>6} {:>7} {:>7} {:>8} {:>8} {:<20}",
        "cohort", "n", "DI", "AI", "F1", "gap_pp", "state"
    )
    .unwrap();
    for c in cohorts {
        let f1 = c.f1.map_or("-".to_string(), |v| format!("{v:.3}"));
        let gap = c.gap.map_or("-".to_string(), |v| format!("{:+.1}", v * 100.0));
        let state = c
            .governance_state
            .map_or("-".to_string(), |g| format!("{g:?}"));
        writeln!(
            s,
            "{:<20} {:>6} {:>7.3} {:>7.3} {:>8} {:>8} {:<20}",
            c.cohort_id, c.n, c.di, c.ai, f1, gap, state
        )
        .unwrap();
    }
    if let Some(rows) = scenarios {
        writeln!(s).unwrap();
        writeln!(s, "SCENARIO SWEEP (coverage and rates as probabilities)").unwrap();
        writeln!(
            s,
            "{:<14} {:>5} {:>9} {:>9} {:>8} {:>8} {:>9} {:>9}",
            "scenario", "pass", "comm_cov", "dec_cov", "DI", "AI", "indef", "risk_red"
        )
        .unwrap();
        for r in rows {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
            writeln!(
                s,
                "{:<14} {:>5} {:>9.3} {:>9.3} {:>8} {:>8} {:>9} {:>9}",
                r.scenario,
                r.communities_passing,
                r.community_coverage,
                r.decision_coverage,
                fmt(r.fleet_di),
                fmt(r.fleet_ai),
                fmt(r.indefensible_rate),
                fmt(r.risk_reduction_rate_ratio),
            )
            .unwrap();
        }
    }
    s
}

fn cmd_report(input: &Path, scenarios: Option<&Path>, out: Option<&Path>) -> Run {
    let cohorts = read_cohort_reports(input)?;
    let rows: Option<Vec<ScenarioRow>> = match scenarios {
        Some(path) => Some(serde_json::from_str(&std::fs::read_to_string(path)?)?),
        None => None,
    };
    let text = render_report(&cohorts, rows.as_deref());
    match out {
        Some(path) => {
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, &text).map_err(DataError::from)?;
            std::fs::rename(&tmp, path).map_err(DataError::from)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
