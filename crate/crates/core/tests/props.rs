//! Property tests for the numeric invariants.

use defensibility_core::calibration::{compute_ece, softmax3};
use defensibility_core::pds::{compute_h_w, compute_sigma_rho, extract_lambda_xi};
use defensibility_core::record::{Candidate, RuleBlock, RuleSet, TokenEvent};
use defensibility_core::stability::{sigma_pds, spearman};
use defensibility_core::verifier::{overlap_score, two_layer_verdict, Verdict};
use proptest::prelude::*;

fn token_with(cands: Vec<(String, f64)>) -> TokenEvent {
    let mut top_candidates: Vec<Candidate> = cands
        .into_iter()
        .map(|(token, logprob)| Candidate { token, logprob })
        .collect();
    top_candidates.sort_by(|a, b| b.logprob.partial_cmp(&a.logprob).unwrap());
    TokenEvent {
        text: top_candidates[0].token.clone(),
        logprob: top_candidates[0].logprob,
        top_candidates,
        char_start: 0,
        char_end: 1,
    }
}

proptest! {
    #[test]
    fn sigma_rho_invariant_to_constant_shift(
        ly in -20.0f64..-1e-6,
        ln in -20.0f64..-1e-6,
        shift in -30.0f64..0.0,
    ) {
        let base = token_with(vec![("Yes".to_string(), ly), ("No".to_string(), ln)]);
        let shifted = token_with(vec![
            ("Yes".to_string(), ly + shift),
            ("No".to_string(), ln + shift),
        ]);
        let a = compute_sigma_rho(&base).unwrap();
        let b = compute_sigma_rho(&shifted).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn h_w_within_entropy_bounds(
        p in proptest::collection::vec(1e-6f64..1.0, 3),
    ) {
        let total: f64 = p.iter().sum();
        let t = token_with(vec![
            ("High".to_string(), (p[0] / total).ln()),
            ("Medium".to_string(), (p[1] / total).ln()),
            ("Low".to_string(), (p[2] / total).ln()),
        ]);
        let h = compute_h_w(&t).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= 3.0f64.log2() + 1e-9);
    }

    #[test]
    fn lambda_xi_invariant_to_monotone_shift_and_noise(
        p1 in 1e-6f64..1.0,
        p2 in 1e-6f64..1.0,
        p3 in 1e-6f64..1.0,
        noise in 1e-6f64..1.0,
        shift in -5.0f64..0.0,
    ) {
        let total = p1 + p2 + p3 + noise;
        let base = token_with(vec![
            ("1".to_string(), (p1 / total).ln()),
            ("2".to_string(), (p2 / total).ln()),
            ("3".to_string(), (p3 / total).ln()),
            ("junk".to_string(), (noise / total).ln()),
        ]);
        let shifted = token_with(vec![
            ("1".to_string(), (p1 / total).ln() + shift),
            ("2".to_string(), (p2 / total).ln() + shift),
            ("3".to_string(), (p3 / total).ln() + shift),
        ]);
        let (la, xa) = extract_lambda_xi(&base).unwrap();
        let (lb, xb) = extract_lambda_xi(&shifted).unwrap();
        prop_assert_eq!(xa, xb);
        prop_assert!((la - lb).abs() < 1e-9);
        prop_assert!(la <= 0.0);
    }

    #[test]
    fn softmax_always_on_simplex(u in proptest::array::uniform3(-50.0f64..50.0)) {
        let w = softmax3(u);
        prop_assert!((w[0] + w[1] + w[2] - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn ece_permutation_invariant(
        mut scores in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 20..80),
        seed in any::<u64>(),
    ) {
        let a = compute_ece(&scores, 10).unwrap();
        // deterministic shuffle driven by the seed
        let n = scores.len();
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            scores.swap(i, j);
        }
        let b = compute_ece(&scores, 10).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn sigma_pds_matches_two_pass_oracle(
        values in proptest::collection::vec(0.0f64..1.0, 2..50),
    ) {
        let k = values.len();
        let mean = values.iter().sum::<f64>() / k as f64;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let oracle = (ss / (k - 1) as f64).sqrt();
        let got = sigma_pds(&values).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0));
    }

    #[test]
    fn spearman_invariant_under_monotone_map(
        x in proptest::collection::vec(-100.0f64..100.0, 3..30),
        scale in 0.1f64..5.0,
    ) {
        let y: Vec<f64> = x.iter().map(|v| v * 0.5 - 3.0).collect();
        // strictly increasing map applied to x
        let fx: Vec<f64> = x.iter().map(|v| (v * scale).exp() + v).collect();
        match (spearman(&x, &y), spearman(&fx, &y)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9),
            (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
            (a, b) => prop_assert!(false, "mismatch: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn overlap_case_invariant(words in proptest::collection::vec("[a-z]{2,8}", 1..12)) {
        let body = words.join(" ");
        let rs = RuleSet {
            community_id: "c".to_string(),
            platform_rules: vec![],
            community_rules: vec![RuleBlock { id: "r".to_string(), body: body.clone() }],
            precedents: vec![],
        };
        let upper = body.to_uppercase();
        let punct = words.join(", ");
        let a = overlap_score(&body, &rs).unwrap().1;
        let b = overlap_score(&upper, &rs).unwrap().1;
        let c = overlap_score(&punct, &rs).unwrap().1;
        prop_assert_eq!(a, 1.0);
        prop_assert_eq!(b, 1.0);
        prop_assert_eq!(c, 1.0);
    }

    #[test]
    fn verdict_monotone_never_unflags(
        s in 0.0f64..1.0,
        overlap in 0.0f64..1.0,
        ds in 0.0f64..0.5,
        doverlap in 0.0f64..0.5,
    ) {
        if two_layer_verdict(s, overlap, 0.10, 0.5) == Verdict::Clean {
            prop_assert_eq!(
                two_layer_verdict((s + ds).min(1.0), (overlap + doverlap).min(1.0), 0.10, 0.5),
                Verdict::Clean
            );
        }
    }

    #[test]
    fn record_round_trip(
        id in "[a-z0-9-]{1,12}",
        temp in 0.0f64..2.0,
        lp in -10.0f64..0.0,
    ) {
        use defensibility_core::record::{AuditRecord, ProposedAction};
        let r = AuditRecord {
            id,
            community_id: "c".to_string(),
            content: "x".to_string(),
            proposed_action: ProposedAction::Remove,
            human_action: Some(ProposedAction::Approve),
            trace_text: "ab".to_string(),
            tokens: vec![TokenEvent {
                text: "ab".to_string(),
                logprob: lp,
                top_candidates: vec![Candidate { token: "ab".to_string(), logprob: lp }],
                char_start: 0,
                char_end: 2,
            }],
            temperature: temp,
        };
        let line = serde_json::to_string(&r).unwrap();
        let back: AuditRecord = serde_json::from_str(&line).unwrap();
        prop_assert_eq!(r, back);
    }
}
