//! Canonical data model for audited moderation decisions.
//!
//! Records arrive as JSONL (one object per line) and are immutable after
//! construction; all downstream computation treats them as read-only.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Moderation action proposed by the content model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProposedAction {
    Remove,
    Approve,
}

impl fmt::Display for ProposedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProposedAction::Remove => write!(f, "REMOVE"),
            ProposedAction::Approve => write!(f, "APPROVE"),
        }
    }
}

/// Audited defensibility level. L1/L2 count as defensible, L3 does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DefensibilityLevel {
    L1,
    L2,
    L3,
}

impl DefensibilityLevel {
    pub fn is_defensible(self) -> bool {
        !matches!(self, DefensibilityLevel::L3)
    }

    /// 1-based level index as it appears in trace text.
    pub fn index(self) -> u8 {
        match self {
            DefensibilityLevel::L1 => 1,
            DefensibilityLevel::L2 => 2,
            DefensibilityLevel::L3 => 3,
        }
    }

    pub fn from_digit(s: &str) -> Option<Self> {
        match s.trim() {
            "1" => Some(DefensibilityLevel::L1),
            "2" => Some(DefensibilityLevel::L2),
            "3" => Some(DefensibilityLevel::L3),
            _ => None,
        }
    }

    pub const ALL: [DefensibilityLevel; 3] = [
        DefensibilityLevel::L1,
        DefensibilityLevel::L2,
        DefensibilityLevel::L3,
    ];
}

impl fmt::Display for DefensibilityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.index())
    }
}

/// Precedent weight categorical emitted in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PrecedentWeight {
    High,
    Medium,
    Low,
}

impl PrecedentWeight {
    pub fn label(self) -> &'static str {
        match self {
            PrecedentWeight::High => "High",
            PrecedentWeight::Medium => "Medium",
            PrecedentWeight::Low => "Low",
        }
    }

    pub const ALL: [PrecedentWeight; 3] = [
        PrecedentWeight::High,
        PrecedentWeight::Medium,
        PrecedentWeight::Low,
    ];
}

/// Inverse-check polarity emitted in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InverseCheck {
    Yes,
    No,
}

impl InverseCheck {
    pub fn label(self) -> &'static str {
        match self {
            InverseCheck::Yes => "Yes",
            InverseCheck::No => "No",
        }
    }
    pub fn fired(self) -> bool {
        matches!(self, InverseCheck::Yes)
    }
}

/// One vocabulary candidate at a token position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub logprob: f64,
}

/// One generated token with its top-k candidate distribution and character
/// span inside the trace text. Offsets are character (not byte) indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEvent {
    pub text: String,
    pub logprob: f64,
    #[serde(default)]
    pub top_candidates: Vec<Candidate>,
    pub char_start: usize,
    pub char_end: usize,
}

/// One decision to audit: content reference, proposed action, raw trace and
/// its token logprob sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: String,
    pub community_id: String,
    pub content: String,
    pub proposed_action: ProposedAction,
    #[serde(default)]
    pub human_action: Option<ProposedAction>,
    pub trace_text: String,
    pub tokens: Vec<TokenEvent>,
    pub temperature: f64,
}

/// A named rule or precedent text block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBlock {
    pub id: String,
    pub body: String,
}

/// Rule hierarchy for one community: platform rules, community rules,
/// precedents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub community_id: String,
    #[serde(default)]
    pub platform_rules: Vec<RuleBlock>,
    #[serde(default)]
    pub community_rules: Vec<RuleBlock>,
    #[serde(default)]
    pub precedents: Vec<RuleBlock>,
}

impl RuleSet {
    /// All blocks in a stable order: platform, community, precedents.
    pub fn blocks(&self) -> impl Iterator<Item = &RuleBlock> {
        self.platform_rules
            .iter()
            .chain(self.community_rules.iter())
            .chain(self.precedents.iter())
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.community_id.is_empty() {
            v.push(Violation::new("community_id", "must be non-empty"));
        }
        for b in self.blocks() {
            if b.id.is_empty() {
                v.push(Violation::new("rule.id", "rule block identifier must be non-empty"));
            }
            if b.body.is_empty() {
                v.push(Violation::new(
                    "rule.body",
                    format!("rule block `{}` has an empty body", b.id),
                ));
            }
        }
        v
    }
}

/// Fully parsed and located trace: the five fields plus the token positions
/// each probabilistic component reads from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTrace {
    pub logic_chain: String,
    pub policy_citation: String,
    /// Character span of the citation value interior (quotes excluded).
    pub citation_char_span: (usize, usize),
    /// Half-open token index range covering the citation span.
    pub citation_token_range: (usize, usize),
    pub precedent_weight: PrecedentWeight,
    pub weight_token: usize,
    pub inverse_check: InverseCheck,
    pub inverse_token: usize,
    pub level: DefensibilityLevel,
    pub level_token: usize,
    /// Non-fatal diagnostics raised while parsing (field ordering etc.).
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// A structural invariant breach found by validation. Violations are data,
/// not failures: validation itself never errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Violation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every structural invariant of the record. Returns an empty list iff
/// the record is structurally sound; repeated calls return identical lists.
pub fn validate_record(record: &AuditRecord) -> Vec<Violation> {
    let mut v = Vec::new();
    if record.id.is_empty() {
        v.push(Violation::new("id", "must be non-empty"));
    }
    if record.community_id.is_empty() {
        v.push(Violation::new("community_id", "must be non-empty"));
    }
    if !(0.0..=2.0).contains(&record.temperature) || record.temperature.is_nan() {
        v.push(Violation::new("temperature", "must lie in [0, 2]"));
    }

    let trace_chars: Vec<char> = record.trace_text.chars().collect();
    let mut cursor = 0usize;
    for (i, tok) in record.tokens.iter().enumerate() {
        if tok.logprob > 0.0 {
            v.push(Violation::new(
                "tokens.logprob",
                format!("token {i}: logprob must be <= 0, got {}", tok.logprob),
            ));
        }
        for (j, c) in tok.top_candidates.iter().enumerate() {
            if c.logprob > 0.0 {
                v.push(Violation::new(
                    "tokens.top_candidates.logprob",
                    format!("token {i} candidate {j}: logprob must be <= 0"),
                ));
            }
        }
        if tok.top_candidates.len() > 20 {
            v.push(Violation::new(
                "tokens.top_candidates",
                format!("token {i}: at most 20 candidates allowed"),
            ));
        }
        if !tok
            .top_candidates
            .windows(2)
            .all(|w| w[0].logprob >= w[1].logprob)
        {
            v.push(Violation::new(
                "tokens.top_candidates",
                format!("token {i}: candidates must be sorted descending by logprob"),
            ));
        }
        if tok.char_start >= tok.char_end {
            v.push(Violation::new(
                "tokens.char_span",
                format!("token {i}: char_start must be < char_end"),
            ));
            continue;
        }
        if tok.char_start != cursor {
            v.push(Violation::new(
                "tokens.char_span",
                format!(
                    "token {i}: spans must be contiguous and increasing (expected start {cursor}, got {})",
                    tok.char_start
                ),
            ));
        }
        if tok.char_end > trace_chars.len() {
            v.push(Violation::new(
                "tokens.char_span",
                format!("token {i}: span exceeds trace_text length"),
            ));
        } else {
            let slice: String = trace_chars[tok.char_start.min(trace_chars.len())..tok.char_end]
                .iter()
                .collect();
            if slice != tok.text {
                v.push(Violation::new(
                    "tokens.text",
                    format!("token {i}: text does not match trace_text at its span"),
                ));
            }
        }
        cursor = tok.char_end;
    }
    v
}

/// True iff the record validated and a complete trace with all five fields
/// was parsed. Only records with `is_valid_audit == true` count toward N in
/// any downstream aggregate.
pub fn is_valid_audit(record: &AuditRecord, trace: Option<&AuditTrace>) -> bool {
    validate_record(record).is_empty() && trace.is_some()
}
