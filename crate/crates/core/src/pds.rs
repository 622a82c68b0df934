//! Probabilistic defensibility signal extraction.
//!
//! Four components read from stored token logprobs in a single pass:
//! lambda_xi (log-confidence of the MAP level), H[kappa] (mean citation span
//! entropy, bits), H[w] (precedent-weight entropy, bits), sigma_rho (logistic
//! of the Yes/No log-odds at the inverse check). Logprobs are natural log;
//! entropies are converted to bits at computation time.

use crate::parser::{self, CategoricalField, TraceError};
use crate::record::{AuditRecord, Candidate, DefensibilityLevel, PrecedentWeight, TokenEvent};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdsError {
    #[error("NO_LEVEL_CANDIDATE: none of {{1,2,3}} in top candidates")]
    NoLevelCandidate,
    #[error("NO_WEIGHT_CANDIDATE: none of {{High,Medium,Low}} in top candidates")]
    NoWeightCandidate,
    #[error("MISSING_POLARITY({0})")]
    MissingPolarity(String),
    #[error("EMPTY_SPAN")]
    EmptySpan,
    #[error("MISSING_CANDIDATES({0})")]
    MissingCandidates(usize),
    #[error("trace error: {0}")]
    Trace(#[from] TraceError),
}

/// Extraction status of one PDS component. Absent components carry the error
/// that caused the attrition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentStatus {
    Ok,
    Failed(String),
}

impl ComponentStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, ComponentStatus::Ok)
    }
    fn from_err(e: &PdsError) -> Self {
        ComponentStatus::Failed(e.to_string())
    }
}

/// Per-component extraction flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdsFlags {
    pub lambda_xi: ComponentStatus,
    pub h_kappa: ComponentStatus,
    pub h_w: ComponentStatus,
    pub sigma_rho: ComponentStatus,
}

/// The PDS vector with raw (unoriented) component values. Orientation
/// (negating the entropy and inverse-check slots) happens at collapse time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdsVector {
    /// Natural-log probability of the MAP level; <= 0.
    pub lambda_xi: Option<f64>,
    /// MAP defensibility level (argmax over renormalized level candidates).
    pub map_level: Option<DefensibilityLevel>,
    /// Mean citation-span entropy, bits; >= 0.
    pub h_kappa: Option<f64>,
    /// Precedent-weight entropy, bits; in [0, log2 3].
    pub h_w: Option<f64>,
    /// Logistic of the Yes/No log-odds; strictly in (0, 1).
    pub sigma_rho: Option<f64>,
    pub flags: PdsFlags,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Case-insensitive mutual-prefix match on the candidate text trimmed of
/// leading whitespace. Tokenizers may split values ("Y" + "es") or glue
/// punctuation, so either side may be the prefix.
fn matches_target(candidate: &str, target: &str) -> bool {
    let c = candidate.trim_start().to_lowercase();
    let t = target.to_lowercase();
    !c.is_empty() && (t.starts_with(&c) || c.starts_with(&t))
}

/// Sums raw probability mass over candidates matching each target; returns
/// per-target mass (unnormalized).
fn matched_mass(candidates: &[Candidate], targets: &[&str]) -> Vec<f64> {
    let mut mass = vec![0.0; targets.len()];
    for c in candidates {
        for (i, t) in targets.iter().enumerate() {
            if matches_target(&c.token, t) {
                mass[i] += c.logprob.exp();
                break;
            }
        }
    }
    mass
}

/// MAP level and its log-probability, renormalized over the {1,2,3}
/// candidates present at the defensibility_level token. Exact ties break to
/// the lowest level for determinism.
pub fn extract_lambda_xi(token: &TokenEvent) -> Result<(f64, DefensibilityLevel), PdsError> {
    let mass = matched_mass(&token.top_candidates, &["1", "2", "3"]);
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(PdsError::NoLevelCandidate);
    }
    let mut best = 0usize;
    for i in 1..3 {
        if mass[i] > mass[best] {
            best = i;
        }
    }
    let p = mass[best] / total;
    Ok((p.ln(), DefensibilityLevel::ALL[best]))
}

/// Shannon entropy in bits of the token's candidate distribution after
/// renormalizing the stored top-k logprobs.
fn token_entropy_bits(token: &TokenEvent, position: usize) -> Result<f64, PdsError> {
    if token.top_candidates.is_empty() {
        return Err(PdsError::MissingCandidates(position));
    }
    let probs: Vec<f64> = token.top_candidates.iter().map(|c| c.logprob.exp()).collect();
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(PdsError::MissingCandidates(position));
    }
    let mut h = 0.0;
    for p in probs {
        let p = p / total;
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    Ok(h)
}

/// Mean per-token conditional entropy (bits) over the citation token range.
pub fn compute_h_kappa(record: &AuditRecord, token_range: (usize, usize)) -> Result<f64, PdsError> {
    let (start, end) = token_range;
    if start >= end || end > record.tokens.len() {
        return Err(PdsError::EmptySpan);
    }
    let mut sum = 0.0;
    for (i, tok) in record.tokens[start..end].iter().enumerate() {
        sum += token_entropy_bits(tok, start + i)?;
    }
    Ok(sum / (end - start) as f64)
}

/// Entropy in bits over {High, Medium, Low} at the precedent_weight token,
/// renormalized over matched candidates.
pub fn compute_h_w(token: &TokenEvent) -> Result<f64, PdsError> {
    let targets: Vec<&str> = PrecedentWeight::ALL.iter().map(|w| w.label()).collect();
    let mass = matched_mass(&token.top_candidates, &targets);
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(PdsError::NoWeightCandidate);
    }
    let mut h = 0.0;
    for m in mass {
        let p = m / total;
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    Ok(h)
}

/// Logistic of rho = log p(Yes) - log p(No) at the inverse-check token. The
/// difference is renormalization-invariant, so raw stored logprobs are used.
/// Multiple candidates matching one polarity aggregate by probability sum.
pub fn compute_sigma_rho(token: &TokenEvent) -> Result<f64, PdsError> {
    let mass = matched_mass(&token.top_candidates, &["Yes", "No"]);
    if mass[0] <= 0.0 {
        return Err(PdsError::MissingPolarity("Yes".to_string()));
    }
    if mass[1] <= 0.0 {
        return Err(PdsError::MissingPolarity("No".to_string()));
    }
    let rho = mass[0].ln() - mass[1].ln();
    Ok(logistic(rho))
}

/// Runs all four extractors over a record, flagging each component
/// independently. Never fails wholesale; consumers filter on flags.
pub fn assemble_pds(record: &AuditRecord) -> PdsVector {
    let mut v = PdsVector {
        lambda_xi: None,
        map_level: None,
        h_kappa: None,
        h_w: None,
        sigma_rho: None,
        flags: PdsFlags {
            lambda_xi: ComponentStatus::Ok,
            h_kappa: ComponentStatus::Ok,
            h_w: ComponentStatus::Ok,
            sigma_rho: ComponentStatus::Ok,
        },
    };
    let parsed = match parser::parse_trace(&record.trace_text) {
        Ok(p) => p,
        Err(e) => {
            let st = ComponentStatus::Failed(e.to_string());
            v.flags = PdsFlags {
                lambda_xi: st.clone(),
                h_kappa: st.clone(),
                h_w: st.clone(),
                sigma_rho: st,
            };
            return v;
        }
    };

    // lambda_xi
    let res = parser::locate_field_token(record, &parsed, CategoricalField::DefensibilityLevel)
        .map_err(PdsError::from)
        .and_then(|idx| extract_lambda_xi(&record.tokens[idx]));
    match res {
        Ok((l, xi)) => {
            v.lambda_xi = Some(l);
            v.map_level = Some(xi);
        }
        Err(e) => v.flags.lambda_xi = ComponentStatus::from_err(&e),
    }

    // h_kappa: an empty citation value is absence of signal, not entropy 0
    let res = match &parsed.policy_citation {
        Some(hit) if hit.char_start < hit.char_end => {
            parser::map_span_to_tokens(record, (hit.char_start, hit.char_end))
                .map_err(PdsError::from)
                .and_then(|range| compute_h_kappa(record, range))
        }
        Some(_) => Err(PdsError::EmptySpan),
        None => Err(PdsError::Trace(TraceError::MissingField(
            "policy_citation".to_string(),
        ))),
    };
    match res {
        Ok(h) => v.h_kappa = Some(h),
        Err(e) => v.flags.h_kappa = ComponentStatus::from_err(&e),
    }

    // h_w
    let res = parser::locate_field_token(record, &parsed, CategoricalField::PrecedentWeight)
        .map_err(PdsError::from)
        .and_then(|idx| compute_h_w(&record.tokens[idx]));
    match res {
        Ok(h) => v.h_w = Some(h),
        Err(e) => v.flags.h_w = ComponentStatus::from_err(&e),
    }

    // sigma_rho
    let res = parser::locate_field_token(record, &parsed, CategoricalField::InverseCheck)
        .map_err(PdsError::from)
        .and_then(|idx| compute_sigma_rho(&record.tokens[idx]));
    match res {
        Ok(s) => v.sigma_rho = Some(s),
        Err(e) => v.flags.sigma_rho = ComponentStatus::from_err(&e),
    }

    v
}
