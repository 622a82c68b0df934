//! Shared fixture builders for integration tests.

use defensibility_core::record::{AuditRecord, Candidate, ProposedAction, TokenEvent};

/// One building block of a synthetic trace: literal text (a deterministic
/// token) or a sampled token with an explicit candidate distribution given
/// as (text, probability) pairs.
pub enum Seg {
    Lit(&'static str),
    Tok(&'static str, Vec<(&'static str, f64)>),
}

pub fn build_tokens(segs: &[Seg]) -> (String, Vec<TokenEvent>) {
    let mut text = String::new();
    let mut tokens = Vec::new();
    let mut cursor = 0usize;
    for seg in segs {
        let (t, candidates, logprob) = match seg {
            Seg::Lit(t) => (
                *t,
                vec![Candidate {
                    token: t.to_string(),
                    logprob: 0.0,
                }],
                0.0,
            ),
            Seg::Tok(t, dist) => {
                let mut cands: Vec<Candidate> = dist
                    .iter()
                    .map(|(s, p)| Candidate {
                        token: s.to_string(),
                        logprob: p.ln().min(0.0),
                    })
                    .collect();
                cands.sort_by(|a, b| b.logprob.partial_cmp(&a.logprob).unwrap());
                let own = dist
                    .iter()
                    .find(|(s, _)| s == t)
                    .map(|(_, p)| p.ln().min(0.0))
                    .unwrap_or(0.0);
                (*t, cands, own)
            }
        };
        let len = t.chars().count();
        tokens.push(TokenEvent {
            text: t.to_string(),
            logprob,
            top_candidates: candidates,
            char_start: cursor,
            char_end: cursor + len,
        });
        text.push_str(t);
        cursor += len;
    }
    (text, tokens)
}

pub fn record_from(segs: &[Seg]) -> AuditRecord {
    let (trace_text, tokens) = build_tokens(segs);
    AuditRecord {
        id: "r-1".to_string(),
        community_id: "c-1".to_string(),
        content: "content".to_string(),
        proposed_action: ProposedAction::Approve,
        human_action: None,
        trace_text,
        tokens,
        temperature: 0.3,
    }
}

/// A complete well-formed trace whose categorical tokens carry the given
/// distributions.
pub fn standard_record(
    weight: Vec<(&'static str, f64)>,
    inverse: Vec<(&'static str, f64)>,
    level: Vec<(&'static str, f64)>,
) -> AuditRecord {
    let wt = weight[0].0;
    let iv = inverse[0].0;
    let lv = level[0].0;
    record_from(&[
        Seg::Lit("{\"logic_chain\":\"the post violates rule one\",\"policy_citation\":\""),
        Seg::Lit("Rule 1: no spam content"),
        Seg::Lit("\",\"precedent_weight\":\""),
        Seg::Tok(wt, weight),
        Seg::Lit("\",\"inverse_check\":\""),
        Seg::Tok(iv, inverse),
        Seg::Lit("\",\"defensibility_level\":\""),
        Seg::Tok(lv, level),
        Seg::Lit("\"}"),
    ])
}
