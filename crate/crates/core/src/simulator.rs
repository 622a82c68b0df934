//! Synthetic audit generator.
//!
//! Emits records whose trace fields are sampled sequentially under the
//! kappa -> omega -> iota -> xi factorization, with a per-case latent
//! governance ambiguity `a` and a temperature control. Every sampled
//! distribution is recorded as the token's top_candidates, so downstream
//! extraction is exact. Token text is schematic; only the logprob geometry
//! matters to consumers.
//!
//! Replicate-to-replicate variation flows through the sampled citation
//! path: the (normalized) count of alternative tokens chosen in the kappa
//! span perturbs the later iota and xi logits. Under the governance
//! hypothesis (H_G) the perturbation amplitude scales with the case's
//! ambiguity and the later logits are not temperature-scaled; under the
//! noise hypothesis (H_N) the amplitude is case-independent and all logits
//! are divided by the sampling temperature.

use crate::record::{
    AuditRecord, Candidate, DefensibilityLevel, InverseCheck, PrecedentWeight, ProposedAction,
    RuleBlock, RuleSet, TokenEvent,
};
use crate::stability::StabilityGroup;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    #[serde(rename = "h_g")]
    Governance,
    #[serde(rename = "h_n")]
    SamplingNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AdversarialTag {
    Clean,
    ActionFlip,
    /// Hallucinated grounding with an invented citation (zero overlap).
    Fabricated,
    /// Hallucinated grounding with a real citation (policy penumbra).
    Penumbra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CitationSource {
    Rule(String),
    Fabricated,
}

/// One synthetic case: latent ambiguity, target level, citation provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub case_id: String,
    pub community_id: String,
    /// Latent governance ambiguity in [0, 1].
    pub ambiguity: f64,
    pub true_level: DefensibilityLevel,
    pub citation_source: CitationSource,
    pub proposed_action: ProposedAction,
    pub human_action: Option<ProposedAction>,
    pub adversarial: AdversarialTag,
}

/// Ground-truth sidecar entry for one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTruth {
    pub case_id: String,
    pub community_id: String,
    pub ambiguity: f64,
    pub true_level: DefensibilityLevel,
    pub group: StabilityGroup,
    pub adversarial: AdversarialTag,
}

/// Fleet geometry for generate_fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetShape {
    pub cohorts: usize,
    pub cases_per_cohort: usize,
    /// Mean ambiguity of low-ambiguity cohorts (first half).
    pub ambiguity_low: f64,
    /// Mean ambiguity of high-ambiguity cohorts (second half).
    pub ambiguity_high: f64,
    /// Fraction of cases given a fabricated (zero-overlap) citation.
    pub adversarial_fraction: f64,
    /// Fraction of cases tagged as penumbra attacks (real citation).
    pub penumbra_fraction: f64,
}

impl Default for FleetShape {
    fn default() -> Self {
        FleetShape {
            cohorts: 20,
            cases_per_cohort: 40,
            ambiguity_low: 0.15,
            ambiguity_high: 0.65,
            adversarial_fraction: 0.0,
            penumbra_fraction: 0.0,
        }
    }
}

/// Tunable generative constants. Defaults are calibrated so that the
/// Flipper/Stable sigma ratio is flat across temperature under H_G and
/// near 1 under H_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub citation_tokens: usize,
    /// Base logit gap of the two-candidate citation positions.
    pub kappa_gap: f64,
    /// Relative gap reduction at full ambiguity (keeps kappa entropy
    /// increasing in a).
    pub kappa_ambiguity: f64,
    /// Coupling amplitude floor and slope: c(a) = c0 * (floor + a) under
    /// H_G; c0 * mid under H_N.
    pub coupling_scale: f64,
    pub coupling_floor: f64,
    pub coupling_mid: f64,
    /// Inverse-check base logit (Yes minus No) per level L1/L2/L3.
    pub iota_level: [f64; 3],
    /// Ambiguity slope on the inverse-check logit.
    pub iota_ambiguity: f64,
    /// Base logit gap between adjacent defensibility levels.
    pub xi_gap: f64,
    /// Relative xi gap reduction at full ambiguity under H_G.
    pub xi_ambiguity: f64,
    /// Share of the coupling applied to the xi L3 logit.
    pub xi_coupling: f64,
    /// Precedent-weight logits per level (High, Medium, Low).
    pub omega_logits: [[f64; 3]; 3],
    /// Relative omega logit shrink at full ambiguity.
    pub omega_ambiguity: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            citation_tokens: 25,
            kappa_gap: 1.0,
            kappa_ambiguity: 0.1,
            coupling_scale: 1.0,
            coupling_floor: 0.55,
            coupling_mid: 1.0,
            iota_level: [-2.0, 0.2, 1.4],
            iota_ambiguity: 0.8,
            xi_gap: 2.2,
            xi_ambiguity: 0.55,
            xi_coupling: 0.6,
            omega_logits: [[2.0, 0.0, -1.0], [0.2, 0.6, -0.4], [1.4, 0.3, -0.8]],
            omega_ambiguity: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub temperature: f64,
    pub replicates: usize,
    pub hypothesis: Hypothesis,
    pub seed: u64,
    pub fleet: FleetShape,
    #[serde(default)]
    pub params: SimParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            temperature: 0.3,
            replicates: 1,
            hypothesis: Hypothesis::Governance,
            seed: 7,
            fleet: FleetShape::default(),
            params: SimParams::default(),
        }
    }
}

/// Everything a fleet run emits: records, ground truth, and the rule sets
/// the citations are grounded in.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetData {
    pub records: Vec<AuditRecord>,
    pub truths: Vec<CaseTruth>,
    pub rule_sets: Vec<RuleSet>,
}

/// splitmix64; documented, stable substream derivation from the master seed.
fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(b.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn case_stream(seed: u64, case_index: u64, replicate: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(seed, case_index, replicate))
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::MIN, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Accumulates trace text and the aligned token stream.
struct TraceBuilder {
    text: String,
    chars: usize,
    tokens: Vec<TokenEvent>,
}

impl TraceBuilder {
    fn new() -> Self {
        TraceBuilder {
            text: String::new(),
            chars: 0,
            tokens: Vec::new(),
        }
    }

    fn push(&mut self, text: &str, logprob: f64, mut candidates: Vec<Candidate>) {
        let start = self.chars;
        let len = text.chars().count();
        candidates.sort_by(|a, b| b.logprob.partial_cmp(&a.logprob).expect("NaN logprob"));
        self.text.push_str(text);
        self.chars += len;
        self.tokens.push(TokenEvent {
            text: text.to_string(),
            logprob,
            top_candidates: candidates,
            char_start: start,
            char_end: start + len,
        });
    }

    fn literal(&mut self, text: &str) {
        self.push(
            text,
            0.0,
            vec![Candidate {
                token: text.to_string(),
                logprob: 0.0,
            }],
        );
    }

    /// Samples one token from a categorical over (text, prob) options and
    /// records the full distribution as candidates.
    fn sample(&mut self, rng: &mut ChaCha12Rng, options: &[(String, f64)]) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = options.len() - 1;
        for (i, (_, p)) in options.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = i;
                break;
            }
        }
        let candidates: Vec<Candidate> = options
            .iter()
            .map(|(t, p)| Candidate {
                token: t.clone(),
                logprob: p.max(1e-300).ln().min(0.0),
            })
            .collect();
        let lp = options[chosen].1.max(1e-300).ln().min(0.0);
        let text = options[chosen].0.clone();
        self.push(&text, lp, candidates);
        chosen
    }
}

const TOPIC_WORDS: [&str; 12] = [
    "spam", "harassment", "advertising", "offtopic", "reposts", "spoilers", "doxxing", "brigading",
    "impersonation", "solicitation", "misinformation", "vandalism",
];

/// Deterministic schematic rule set for one community.
pub fn rule_set_for(community_id: &str, index: usize) -> RuleSet {
    let mut community_rules = Vec::new();
    for r in 0..5 {
        let topic = TOPIC_WORDS[(index * 5 + r) % TOPIC_WORDS.len()];
        community_rules.push(RuleBlock {
            id: format!("{community_id}-rule-{}", r + 1),
            body: format!(
                "Rule {}: no {topic} content is permitted in this community and repeated {topic} \
                 violations lead to removal of the offending post by the moderators",
                r + 1
            ),
        });
    }
    let platform_rules = vec![
        RuleBlock {
            id: "platform-1".to_string(),
            body: "Platform policy 1: content that threatens or harasses any person is prohibited \
                   sitewide and must be removed on sight"
                .to_string(),
        },
        RuleBlock {
            id: "platform-2".to_string(),
            body: "Platform policy 2: unsolicited commercial promotion and deceptive manipulation \
                   of the platform are prohibited sitewide"
                .to_string(),
        },
    ];
    let precedents = vec![RuleBlock {
        id: format!("{community_id}-precedent-1"),
        body: format!(
            "Precedent: borderline {} posts were previously approved when clearly labeled and \
             discussed in good faith",
            TOPIC_WORDS[index % TOPIC_WORDS.len()]
        ),
    }];
    RuleSet {
        community_id: community_id.to_string(),
        platform_rules,
        community_rules,
        precedents,
    }
}

/// Gibberish vocabulary for fabricated citations; guaranteed disjoint from
/// every rule body (rule text never contains digits glued to 'q').
fn fabricated_word(i: usize) -> String {
    format!("zq{}vex", i)
}

fn citation_words(spec: &CaseSpec, rules: &RuleSet, n: usize) -> (Vec<String>, Vec<String>) {
    match &spec.citation_source {
        CitationSource::Fabricated => {
            let words: Vec<String> = (0..n).map(fabricated_word).collect();
            let alts: Vec<String> = (0..n).map(|i| fabricated_word(i + n)).collect();
            (words, alts)
        }
        CitationSource::Rule(id) => {
            let block = rules
                .blocks()
                .find(|b| &b.id == id)
                .unwrap_or_else(|| rules.community_rules.first().expect("empty rule set"));
            let pool: Vec<String> = block
                .body
                .split_whitespace()
                .map(|w| w.to_string())
                .collect();
            let words: Vec<String> = (0..n).map(|i| pool[i % pool.len()].clone()).collect();
            // alternatives come from the same block so the citation stays
            // fully grounded whichever branch is sampled
            let alts: Vec<String> = (0..n)
                .map(|i| pool[(i + pool.len() / 2) % pool.len()].clone())
                .collect();
            (words, alts)
        }
    }
}

/// Emits one replicate audit record for a case. Deterministic given
/// (spec, config, case_index, replicate).
pub fn generate_replicate(
    spec: &CaseSpec,
    cfg: &SimConfig,
    rules: &RuleSet,
    case_index: usize,
    replicate: usize,
) -> AuditRecord {
    let p = &cfg.params;
    let t = cfg.temperature.max(1e-6);
    let a = spec.ambiguity.clamp(0.0, 1.0);
    let mut rng = case_stream(cfg.seed, case_index as u64, replicate as u64);
    let mut b = TraceBuilder::new();

    let coupling = match cfg.hypothesis {
        Hypothesis::Governance => p.coupling_scale * (p.coupling_floor + a),
        Hypothesis::SamplingNoise => p.coupling_scale * p.coupling_mid,
    };
    // H_G: later logits carry case structure directly; H_N: everything is
    // temperature-scaled.
    let late_scale = match cfg.hypothesis {
        Hypothesis::Governance => 1.0,
        Hypothesis::SamplingNoise => 1.0 / t,
    };

    b.literal("{\"logic_chain\":\"");
    b.literal(&format!(
        "audit of case {} in {} for proposed {}",
        spec.case_id, spec.community_id, spec.proposed_action
    ));
    b.literal("\",\"policy_citation\":\"");

    // kappa span: two candidates per position, gap narrowed by ambiguity
    // and divided by temperature; the sampled path drives the latent drift.
    let (words, alts) = citation_words(spec, rules, p.citation_tokens);
    // under H_G the citation branching rate is mostly a property of the
    // case, with only weak temperature sensitivity; under H_N it is
    // temperature-driven
    let kappa_scale = match cfg.hypothesis {
        Hypothesis::Governance => 1.0 / (0.5 + 0.5 * t),
        Hypothesis::SamplingNoise => 1.0 / t,
    };
    let gap = p.kappa_gap * (1.0 - p.kappa_ambiguity * a) * kappa_scale;
    let p_primary = logistic(gap);
    let mut n_alt = 0usize;
    for i in 0..p.citation_tokens {
        let sep = if i == 0 { "" } else { " " };
        let options = vec![
            (format!("{sep}{}", words[i]), p_primary),
            (format!("{sep}{}", alts[i]), 1.0 - p_primary),
        ];
        if b.sample(&mut rng, &options) == 1 {
            n_alt += 1;
        }
    }
    let p_alt = (1.0 - p_primary).clamp(1e-9, 1.0 - 1e-9);
    let n = p.citation_tokens as f64;
    let z = (n_alt as f64 - n * p_alt) / (n * p_alt * (1.0 - p_alt)).sqrt();

    // omega: level-conditioned categorical, logits shrunk by ambiguity
    b.literal("\",\"precedent_weight\":\"");
    let li = (spec.true_level.index() - 1) as usize;
    let omega_logits: Vec<f64> = p.omega_logits[li]
        .iter()
        .map(|l| l * (1.0 - p.omega_ambiguity * a) * late_scale)
        .collect();
    let probs = softmax(&omega_logits);
    let options: Vec<(String, f64)> = PrecedentWeight::ALL
        .iter()
        .zip(&probs)
        .map(|(w, pr)| (w.label().to_string(), *pr))
        .collect();
    b.sample(&mut rng, &options);

    // iota: Bernoulli(Yes) with logit increasing in ambiguity and level,
    // perturbed by the citation path drift
    b.literal("\",\"inverse_check\":\"");
    let iota_logit = (p.iota_level[li] + p.iota_ambiguity * a + coupling * z) * late_scale;
    let p_yes = logistic(iota_logit);
    let iota_choice = b.sample(
        &mut rng,
        &[
            ("Yes".to_string(), p_yes),
            ("No".to_string(), 1.0 - p_yes),
        ],
    );
    let sampled_inverse = if iota_choice == 0 {
        InverseCheck::Yes
    } else {
        InverseCheck::No
    };
    let _ = sampled_inverse;

    // xi: centered on true_level, gap narrowed by ambiguity under H_G, L3
    // logit perturbed by the drift
    b.literal("\",\"defensibility_level\":\"");
    let xi_gap = match cfg.hypothesis {
        Hypothesis::Governance => p.xi_gap * (1.0 - p.xi_ambiguity * a),
        Hypothesis::SamplingNoise => p.xi_gap,
    };
    let mut xi_logits = [0.0f64; 3];
    for (l, logit) in xi_logits.iter_mut().enumerate() {
        let dist = (l as i64 - li as i64).abs() as f64;
        *logit = -dist * xi_gap;
    }
    xi_logits[2] += coupling * p.xi_coupling * z;
    let xi_logits: Vec<f64> = xi_logits.iter().map(|l| l * late_scale).collect();
    let probs = softmax(&xi_logits);
    let options: Vec<(String, f64)> = ["1", "2", "3"]
        .iter()
        .zip(&probs)
        .map(|(d, pr)| (d.to_string(), *pr))
        .collect();
    b.sample(&mut rng, &options);

    b.literal("\"}");

    AuditRecord {
        id: if cfg.replicates > 1 {
            format!("{}#r{}", spec.case_id, replicate)
        } else {
            spec.case_id.clone()
        },
        community_id: spec.community_id.clone(),
        content: format!("synthetic content for {}", spec.case_id),
        proposed_action: spec.proposed_action,
        human_action: spec.human_action,
        trace_text: b.text,
        tokens: b.tokens,
        temperature: cfg.temperature,
    }
}

fn sample_level(rng: &mut ChaCha12Rng, a: f64) -> DefensibilityLevel {
    let p_l3 = 0.02 + 0.35 * a;
    let p_l2 = 0.10 + 0.45 * a;
    let u: f64 = rng.random();
    if u < p_l3 {
        DefensibilityLevel::L3
    } else if u < p_l3 + p_l2 {
        DefensibilityLevel::L2
    } else {
        DefensibilityLevel::L1
    }
}

/// Builds the case specs for a fleet. Cohorts in the first half of the
/// fleet draw ambiguity around `ambiguity_low`, the second half around
/// `ambiguity_high`.
pub fn fleet_case_specs(cfg: &SimConfig) -> Vec<CaseSpec> {
    let shape = &cfg.fleet;
    let mut specs = Vec::new();
    for c in 0..shape.cohorts {
        let community_id = format!("community-{c:03}");
        let mean_a = if c < shape.cohorts / 2 {
            shape.ambiguity_low
        } else {
            shape.ambiguity_high
        };
        for i in 0..shape.cases_per_cohort {
            let case_index = c * shape.cases_per_cohort + i;
            let mut rng = case_stream(cfg.seed, case_index as u64, u64::MAX);
            let a = (mean_a + 0.12 * (rng.random::<f64>() * 2.0 - 1.0)).clamp(0.0, 1.0);
            let true_level = sample_level(&mut rng, a);
            let proposed_action = if rng.random::<f64>() < 0.3 {
                ProposedAction::Remove
            } else {
                ProposedAction::Approve
            };
            let agree = rng.random::<f64>() < 0.9 - 0.35 * a;
            let human_action = Some(if agree {
                proposed_action
            } else {
                match proposed_action {
                    ProposedAction::Remove => ProposedAction::Approve,
                    ProposedAction::Approve => ProposedAction::Remove,
                }
            });
            let frac = (i as f64 + 0.5) / shape.cases_per_cohort as f64;
            let (adversarial, citation_source, true_level) =
                if frac < shape.adversarial_fraction {
                    (
                        AdversarialTag::Fabricated,
                        CitationSource::Fabricated,
                        DefensibilityLevel::L3,
                    )
                } else if frac < shape.adversarial_fraction + shape.penumbra_fraction {
                    (
                        AdversarialTag::Penumbra,
                        CitationSource::Rule(format!("{community_id}-rule-{}", i % 5 + 1)),
                        DefensibilityLevel::L2,
                    )
                } else {
                    (
                        AdversarialTag::Clean,
                        CitationSource::Rule(format!("{community_id}-rule-{}", i % 5 + 1)),
                        true_level,
                    )
                };
            specs.push(CaseSpec {
                case_id: format!("{community_id}-c{i:04}"),
                community_id: community_id.clone(),
                ambiguity: a,
                true_level,
                citation_source,
                proposed_action,
                human_action,
                adversarial,
            });
        }
    }
    specs
}

/// Generates a full fleet: `replicates` records per case plus ground truth
/// and the rule sets. Byte-reproducible given the seed.
pub fn generate_fleet(cfg: &SimConfig) -> FleetData {
    let specs = fleet_case_specs(cfg);
    let rule_sets: Vec<RuleSet> = (0..cfg.fleet.cohorts)
        .map(|c| rule_set_for(&format!("community-{c:03}"), c))
        .collect();
    let mut records = Vec::new();
    let mut truths = Vec::new();
    for (idx, spec) in specs.iter().enumerate() {
        let cohort: usize = idx / cfg.fleet.cases_per_cohort;
        let rules = &rule_sets[cohort];
        for k in 0..cfg.replicates.max(1) {
            records.push(generate_replicate(spec, cfg, rules, idx, k));
        }
        truths.push(CaseTruth {
            case_id: spec.case_id.clone(),
            community_id: spec.community_id.clone(),
            ambiguity: spec.ambiguity,
            true_level: spec.true_level,
            group: if spec.ambiguity >= 0.5 {
                StabilityGroup::Flipper
            } else {
                StabilityGroup::Stable
            },
            adversarial: spec.adversarial,
        });
    }
    FleetData {
        records,
        truths,
        rule_sets,
    }
}

/// Case specs for a contested stability cohort: half Stable (low
/// ambiguity), half Flipper (high ambiguity), matched by the sidecar group
/// threshold at a = 0.5.
pub fn contested_cohort_specs(n_cases: usize, seed: u64) -> Vec<CaseSpec> {
    let mut specs = Vec::with_capacity(n_cases);
    for i in 0..n_cases {
        let mut rng = case_stream(seed, i as u64, u64::MAX - 1);
        let flipper = i >= n_cases / 2;
        let a = if flipper {
            0.7 + 0.2 * rng.random::<f64>()
        } else {
            0.1 + 0.2 * rng.random::<f64>()
        };
        let true_level = if flipper {
            DefensibilityLevel::L2
        } else if rng.random::<f64>() < 0.8 {
            DefensibilityLevel::L1
        } else {
            DefensibilityLevel::L2
        };
        specs.push(CaseSpec {
            case_id: format!("contested-c{i:04}"),
            community_id: "contested".to_string(),
            ambiguity: a,
            true_level,
            citation_source: CitationSource::Rule("contested-rule-1".to_string()),
            proposed_action: ProposedAction::Approve,
            human_action: None,
            adversarial: AdversarialTag::Clean,
        });
    }
    specs
}

/// Synthetic calibration samples: component triples drawn independently,
/// S computed with the given true weights, labels drawn Bernoulli(S).
pub fn calibration_dataset(
    n: usize,
    weights: (f64, f64, f64),
    seed: u64,
) -> Vec<(crate::pds::PdsVector, bool)> {
    use crate::pds::{ComponentStatus, PdsFlags, PdsVector};
    let (alpha, beta, gamma) = weights;
    let mut rng = ChaCha12Rng::seed_from_u64(mix(seed, 0xCA11B, 0));
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let lambda = (0.05 + 0.95 * rng.random::<f64>()).ln();
        let h = (3.0f64).log2() * rng.random::<f64>();
        let sigma = 0.02 + 0.96 * rng.random::<f64>();
        let s = crate::calibration::collapse_raw(lambda, h, sigma, alpha, beta, gamma);
        let y = rng.random::<f64>() < s;
        out.push((
            PdsVector {
                lambda_xi: Some(lambda),
                map_level: None,
                h_kappa: Some(h),
                h_w: Some(h),
                sigma_rho: Some(sigma),
                flags: PdsFlags {
                    lambda_xi: ComponentStatus::Ok,
                    h_kappa: ComponentStatus::Ok,
                    h_w: ComponentStatus::Ok,
                    sigma_rho: ComponentStatus::Ok,
                },
            },
            y,
        ));
    }
    out
}
