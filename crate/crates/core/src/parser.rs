//! Character-offset trace parsing.
//!
//! The trace schema is a flat object with five known string fields emitted in
//! generation order: logic_chain, policy_citation, precedent_weight,
//! inverse_check, defensibility_level. A lightweight scanner locates each
//! field individually so that span semantics (last-occurrence key search,
//! first unescaped closing quote) stay exact even on near-malformed traces.
//! All offsets are character indices into the trace text.

use crate::record::{
    AuditRecord, AuditTrace, DefensibilityLevel, InverseCheck, PrecedentWeight,
};
use serde::Serialize;
use thiserror::Error;

pub const FIELD_ORDER: [&str; 5] = [
    "logic_chain",
    "policy_citation",
    "precedent_weight",
    "inverse_check",
    "defensibility_level",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("MALFORMED_TRACE: trace text is not a single object")]
    MalformedTrace,
    #[error("MISSING_FIELD({0})")]
    MissingField(String),
    #[error("SPAN_NOT_FOUND: policy_citation key absent or value unterminated")]
    SpanNotFound,
    #[error("UNCOVERED_SPAN: token stream does not cover chars [{0}, {1})")]
    UncoveredSpan(usize, usize),
    #[error("FIELD_TOKEN_NOT_FOUND: no non-whitespace token covers the {0} value")]
    FieldTokenNotFound(String),
}

/// A located field value: raw interior text (escapes retained) plus its
/// character span, quotes excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldHit {
    pub raw: String,
    pub char_start: usize,
    pub char_end: usize,
}

/// Categorical field of the trace whose token position feeds a PDS component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoricalField {
    PrecedentWeight,
    InverseCheck,
    DefensibilityLevel,
}

impl CategoricalField {
    pub fn key(self) -> &'static str {
        match self {
            CategoricalField::PrecedentWeight => "precedent_weight",
            CategoricalField::InverseCheck => "inverse_check",
            CategoricalField::DefensibilityLevel => "defensibility_level",
        }
    }
}

/// Scanner output: whatever fields were found, plus diagnostics. Field order
/// violations are diagnostics, not failures; values survive extraction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedTrace {
    pub logic_chain: Option<FieldHit>,
    pub policy_citation: Option<FieldHit>,
    pub precedent_weight: Option<(PrecedentWeight, FieldHit)>,
    pub inverse_check: Option<(InverseCheck, FieldHit)>,
    pub level: Option<(DefensibilityLevel, FieldHit)>,
    pub missing: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl ParsedTrace {
    pub fn is_complete(&self) -> bool {
        self.logic_chain.is_some()
            && self.policy_citation.is_some()
            && self.precedent_weight.is_some()
            && self.inverse_check.is_some()
            && self.level.is_some()
    }

    fn hit(&self, field: CategoricalField) -> Option<&FieldHit> {
        match field {
            CategoricalField::PrecedentWeight => self.precedent_weight.as_ref().map(|(_, h)| h),
            CategoricalField::InverseCheck => self.inverse_check.as_ref().map(|(_, h)| h),
            CategoricalField::DefensibilityLevel => self.level.as_ref().map(|(_, h)| h),
        }
    }
}

/// Locates the value of `key` in `chars`: last occurrence of the quoted key,
/// skip to the colon, then the opening quote, then scan to the first
/// unescaped closing quote. Returns the interior span, quotes excluded.
fn find_value(chars: &[char], key: &str) -> Option<(usize, usize)> {
    let pattern: Vec<char> = format!("\"{key}\"").chars().collect();
    let plen = pattern.len();
    if chars.len() < plen {
        return None;
    }
    // last-occurrence search
    let mut key_pos = None;
    for start in (0..=chars.len() - plen).rev() {
        if chars[start..start + plen] == pattern[..] {
            key_pos = Some(start);
            break;
        }
    }
    let mut i = key_pos? + plen;
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    if i >= chars.len() || chars[i] != ':' {
        return None;
    }
    i += 1;
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    if i >= chars.len() || chars[i] != '"' {
        return None;
    }
    let start = i + 1;
    let mut j = start;
    while j < chars.len() {
        match chars[j] {
            '\\' => j += 2,
            '"' => return Some((start, j)),
            _ => j += 1,
        }
    }
    None // unterminated
}

/// Scans the five known fields out of the trace text. Missing fields are
/// recorded in `missing`; out-of-order fields raise a diagnostic but the
/// values are still extracted.
pub fn parse_trace(trace_text: &str) -> Result<ParsedTrace, TraceError> {
    let trimmed = trace_text.trim();
    if !(trimmed.starts_with('{') && trimmed.ends_with('}')) {
        return Err(TraceError::MalformedTrace);
    }
    let chars: Vec<char> = trace_text.chars().collect();
    let mut out = ParsedTrace::default();

    let mut positions: Vec<(&str, usize)> = Vec::new();
    for key in FIELD_ORDER {
        match find_value(&chars, key) {
            None => out.missing.push(key.to_string()),
            Some((s, e)) => {
                let raw: String = chars[s..e].iter().collect();
                let hit = FieldHit {
                    raw: raw.clone(),
                    char_start: s,
                    char_end: e,
                };
                positions.push((key, s));
                match key {
                    "logic_chain" => out.logic_chain = Some(hit),
                    "policy_citation" => out.policy_citation = Some(hit),
                    "precedent_weight" => {
                        let parsed = match raw.trim() {
                            "High" => Some(PrecedentWeight::High),
                            "Medium" => Some(PrecedentWeight::Medium),
                            "Low" => Some(PrecedentWeight::Low),
                            _ => None,
                        };
                        match parsed {
                            Some(w) => out.precedent_weight = Some((w, hit)),
                            None => {
                                out.missing.push(key.to_string());
                                out.diagnostics.push(format!(
                                    "precedent_weight value `{}` outside {{High, Medium, Low}}",
                                    raw.trim()
                                ));
                            }
                        }
                    }
                    "inverse_check" => {
                        let parsed = match raw.trim() {
                            "Yes" => Some(InverseCheck::Yes),
                            "No" => Some(InverseCheck::No),
                            _ => None,
                        };
                        match parsed {
                            Some(c) => out.inverse_check = Some((c, hit)),
                            None => {
                                out.missing.push(key.to_string());
                                out.diagnostics.push(format!(
                                    "inverse_check value `{}` outside {{Yes, No}}",
                                    raw.trim()
                                ));
                            }
                        }
                    }
                    "defensibility_level" => match DefensibilityLevel::from_digit(&raw) {
                        Some(l) => out.level = Some((l, hit)),
                        None => {
                            out.missing.push(key.to_string());
                            out.diagnostics.push(format!(
                                "defensibility_level value `{}` outside {{1, 2, 3}}",
                                raw.trim()
                            ));
                        }
                    },
                    _ => unreachable!(),
                }
            }
        }
    }

    for w in positions.windows(2) {
        if w[0].1 > w[1].1 {
            out.diagnostics.push(format!(
                "field ordering violation: {} located after {}",
                w[0].0, w[1].0
            ));
        }
    }
    if let (Some(cit), Some(lc)) = (&out.policy_citation, &out.logic_chain) {
        if cit.char_start < lc.char_start {
            out.diagnostics.push(
                "policy_citation span precedes logic_chain span (possible decoy key)".to_string(),
            );
        }
    }
    Ok(out)
}

/// Character span of the policy_citation value interior, by last-occurrence
/// key search and unescaped-quote scan.
pub fn find_citation_span(trace_text: &str) -> Result<(usize, usize), TraceError> {
    let chars: Vec<char> = trace_text.chars().collect();
    find_value(&chars, "policy_citation").ok_or(TraceError::SpanNotFound)
}

/// Minimal contiguous token range whose character coverage includes the span;
/// boundary tokens that only partially overlap are included. An empty span
/// maps to an empty range at the corresponding position.
pub fn map_span_to_tokens(
    record: &AuditRecord,
    span: (usize, usize),
) -> Result<(usize, usize), TraceError> {
    let (s, e) = span;
    let covered_end = record.tokens.last().map(|t| t.char_end).unwrap_or(0);
    if e > covered_end {
        return Err(TraceError::UncoveredSpan(s, e));
    }
    let start_idx = record
        .tokens
        .iter()
        .position(|t| t.char_end > s)
        .unwrap_or(record.tokens.len());
    if s == e {
        return Ok((start_idx, start_idx));
    }
    let end_idx = record
        .tokens
        .iter()
        .position(|t| t.char_end >= e)
        .ok_or(TraceError::UncoveredSpan(s, e))?;
    Ok((start_idx, end_idx + 1))
}

/// Index of the first non-whitespace token of the field's value. That
/// token's top_candidates are the distribution source for the component.
pub fn locate_field_token(
    record: &AuditRecord,
    parsed: &ParsedTrace,
    field: CategoricalField,
) -> Result<usize, TraceError> {
    let hit = parsed
        .hit(field)
        .ok_or_else(|| TraceError::MissingField(field.key().to_string()))?;
    let (start, end) = map_span_to_tokens(record, (hit.char_start, hit.char_end))?;
    record.tokens[start..end]
        .iter()
        .position(|t| !t.text.trim().is_empty())
        .map(|off| start + off)
        .ok_or_else(|| TraceError::FieldTokenNotFound(field.key().to_string()))
}

/// Parses and fully locates a trace, producing the resolved `AuditTrace`.
/// Fails with the first missing field when the trace is incomplete.
pub fn resolve_trace(record: &AuditRecord) -> Result<AuditTrace, TraceError> {
    let parsed = parse_trace(&record.trace_text)?;
    if let Some(name) = parsed.missing.first() {
        return Err(TraceError::MissingField(name.clone()));
    }
    let citation = parsed.policy_citation.clone().unwrap();
    let citation_span = (citation.char_start, citation.char_end);
    let citation_token_range = map_span_to_tokens(record, citation_span)?;
    let (weight, _) = parsed.precedent_weight.clone().unwrap();
    let (inverse, _) = parsed.inverse_check.clone().unwrap();
    let (level, _) = parsed.level.clone().unwrap();
    let weight_token = locate_field_token(record, &parsed, CategoricalField::PrecedentWeight)?;
    let inverse_token = locate_field_token(record, &parsed, CategoricalField::InverseCheck)?;
    let level_token = locate_field_token(record, &parsed, CategoricalField::DefensibilityLevel)?;
    Ok(AuditTrace {
        logic_chain: parsed.logic_chain.unwrap().raw,
        policy_citation: citation.raw,
        citation_char_span: citation_span,
        citation_token_range,
        precedent_weight: weight,
        weight_token,
        inverse_check: inverse,
        inverse_token,
        level,
        level_token,
        diagnostics: parsed.diagnostics,
    })
}

/// Fraction of valid records whose citation span was detected. On well-formed
/// corpora this must be 1.0.
pub fn detection_rate(records: &[AuditRecord]) -> Option<f64> {
    let valid: Vec<&AuditRecord> = records
        .iter()
        .filter(|r| crate::record::validate_record(r).is_empty())
        .collect();
    if valid.is_empty() {
        return None;
    }
    let detected = valid
        .iter()
        .filter(|r| find_citation_span(&r.trace_text).is_ok())
        .count();
    Some(detected as f64 / valid.len() as f64)
}
