//! Two-layer adversarial defense: lexical grounding of the cited rule
//! against the rule set, combined with a calibrated-S threshold, plus
//! archetype classification of flagged cases.

use crate::record::RuleSet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifierError {
    #[error("EMPTY_CITATION")]
    EmptyCitation,
}

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string())
        .collect()
}

/// Citation-containment overlap: max over all rule and precedent blocks of
/// |unique tokens(citation) ∩ unique tokens(block)| / |unique tokens(citation)|.
/// Returns the best block id with the score. Ties break to the first block
/// in (platform, community, precedent) order.
pub fn overlap_score(citation: &str, rule_set: &RuleSet) -> Result<(String, f64), VerifierError> {
    let cit: BTreeSet<String> = normalize_tokens(citation).into_iter().collect();
    if cit.is_empty() {
        return Err(VerifierError::EmptyCitation);
    }
    let mut best_id = String::new();
    let mut best = -1.0f64;
    for block in rule_set.blocks() {
        let blk: BTreeSet<String> = normalize_tokens(&block.body).into_iter().collect();
        let shared = cit.intersection(&blk).count();
        let score = shared as f64 / cit.len() as f64;
        if score > best {
            best = score;
            best_id = block.id.clone();
        }
    }
    if best < 0.0 {
        // no blocks at all: nothing to ground against
        return Ok((String::new(), 0.0));
    }
    Ok((best_id, best))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Clean,
    FlagPds,
    FlagGrounding,
    FlagBoth,
}

/// Default thresholds separating the two published archetype centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierConfig {
    pub s_min: f64,
    pub overlap_min: f64,
    /// Upper edge of the clean-baseline H[kappa] band (bits), typically the
    /// p95 of a clean cohort.
    pub h_kappa_band_max: f64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            s_min: 0.10,
            overlap_min: 0.5,
            h_kappa_band_max: 0.5,
        }
    }
}

/// Combines the calibrated-S layer with the lexical grounding layer.
pub fn two_layer_verdict(s: f64, overlap: f64, s_min: f64, overlap_min: f64) -> Verdict {
    match (s < s_min, overlap < overlap_min) {
        (false, false) => Verdict::Clean,
        (true, false) => Verdict::FlagPds,
        (false, true) => Verdict::FlagGrounding,
        (true, true) => Verdict::FlagBoth,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Archetype {
    LowEntropyFabrication,
    PolicyPenumbra,
    Unclassified,
}

/// Classifies a flagged case into the two structurally distinct attack
/// archetypes: low-entropy fabrication (no grounding, collapsed S) vs policy
/// penumbra (real citation, in-band citation entropy).
pub fn classify_archetype(h_kappa: f64, s: f64, overlap: f64, cfg: &VerifierConfig) -> Archetype {
    if overlap < cfg.overlap_min && s < cfg.s_min {
        Archetype::LowEntropyFabrication
    } else if overlap >= cfg.overlap_min && h_kappa <= cfg.h_kappa_band_max {
        Archetype::PolicyPenumbra
    } else {
        Archetype::Unclassified
    }
}

/// Per-case verifier output for report emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub record_id: String,
    pub verdict: Verdict,
    pub archetype: Archetype,
    pub overlap: f64,
    pub matched_rule_id: String,
    pub s: f64,
    pub h_kappa: Option<f64>,
}

/// 95th percentile by the nearest-rank method; used to derive the
/// clean-baseline H[kappa] band from a clean cohort.
pub fn percentile_95(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN percentile input"));
    let rank = ((0.95 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}
