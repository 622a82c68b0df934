//! Per-case reasoning stability under repeated sampling: sigma_PDS,
//! boundary instability, stability classes, Flipper/Stable group analytics
//! and the temperature-flatness ratio test.

use crate::record::{DefensibilityLevel, InverseCheck};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("TOO_FEW_REPLICATES: need >= 2, got {0}")]
    TooFewReplicates(usize),
    #[error("LENGTH_MISMATCH: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("ZERO_VARIANCE: rank correlation undefined on constant input")]
    ZeroVariance,
    #[error("EMPTY_GROUP({0})")]
    EmptyGroup(String),
    #[error("ZERO_DENOMINATOR: stable-group mean sigma is zero")]
    ZeroDenominator,
}

/// One replicate audit of a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub s: f64,
    pub level: DefensibilityLevel,
    pub inverse_check: InverseCheck,
    #[serde(default)]
    pub h_kappa: Option<f64>,
}

/// K replicate audits of one case at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSet {
    pub case_id: String,
    pub temperature: f64,
    pub replicates: Vec<Replicate>,
}

impl ReplicateSet {
    pub fn k(&self) -> usize {
        self.replicates.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    RockSolid,
    MostlyStable,
    Moderate,
    HighlyUnstable,
}

/// Pre-evaluation grouping for the temperature sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityGroup {
    Flipper,
    Stable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityProfile {
    pub case_id: String,
    pub sigma_pds: f64,
    pub p_l3: f64,
    pub dominant_level: DefensibilityLevel,
    pub dominant_fraction: f64,
    pub boundary_unstable: bool,
    pub stability_class: StabilityClass,
}

/// Sample standard deviation with K-1 denominator, two-pass.
pub fn sigma_pds(values: &[f64]) -> Result<f64, StabilityError> {
    let k = values.len();
    if k < 2 {
        return Err(StabilityError::TooFewReplicates(k));
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((ss / (k - 1) as f64).sqrt())
}

/// Class boundaries are closed at the lower edge: [0.95, 1] RockSolid,
/// [0.80, 0.95) MostlyStable, [0.60, 0.80) Moderate, below HighlyUnstable.
pub fn classify_stability(dominant_fraction: f64) -> StabilityClass {
    if dominant_fraction >= 0.95 {
        StabilityClass::RockSolid
    } else if dominant_fraction >= 0.80 {
        StabilityClass::MostlyStable
    } else if dominant_fraction >= 0.60 {
        StabilityClass::Moderate
    } else {
        StabilityClass::HighlyUnstable
    }
}

/// Full stability profile of a replicate set. A case is boundary-unstable
/// when its replicate L3 probability lies strictly inside (0.10, 0.90).
pub fn stability_profile(rs: &ReplicateSet) -> Result<StabilityProfile, StabilityError> {
    let k = rs.k();
    if k < 2 {
        return Err(StabilityError::TooFewReplicates(k));
    }
    let s_values: Vec<f64> = rs.replicates.iter().map(|r| r.s).collect();
    let sigma = sigma_pds(&s_values)?;

    let mut counts = [0usize; 3];
    for r in &rs.replicates {
        counts[(r.level.index() - 1) as usize] += 1;
    }
    // dominant level by majority, tie-break to the lowest level
    let mut dom = 0usize;
    for i in 1..3 {
        if counts[i] > counts[dom] {
            dom = i;
        }
    }
    let p_l3 = counts[2] as f64 / k as f64;
    let dominant_fraction = counts[dom] as f64 / k as f64;
    Ok(StabilityProfile {
        case_id: rs.case_id.clone(),
        sigma_pds: sigma,
        p_l3,
        dominant_level: DefensibilityLevel::ALL[dom],
        dominant_fraction,
        boundary_unstable: p_l3 > 0.10 && p_l3 < 0.90,
        stability_class: classify_stability(dominant_fraction),
    })
}

/// Average ranks (1-based); ties receive the mean of their rank positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN in rank input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-ranked data.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StabilityError> {
    if x.len() != y.len() {
        return Err(StabilityError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StabilityError::LengthMismatch(x.len(), y.len()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..x.len() {
        let a = rx[i] - mx;
        let b = ry[i] - my;
        num += a * b;
        dx += a * a;
        dy += b * b;
    }
    if dx == 0.0 || dy == 0.0 {
        return Err(StabilityError::ZeroVariance);
    }
    Ok(num / (dx * dy).sqrt())
}

/// Ratio of mean sigma_PDS: Flippers over Stable.
pub fn group_ratio(flippers: &[f64], stable: &[f64]) -> Result<f64, StabilityError> {
    if flippers.is_empty() {
        return Err(StabilityError::EmptyGroup("FLIPPER".to_string()));
    }
    if stable.is_empty() {
        return Err(StabilityError::EmptyGroup("STABLE".to_string()));
    }
    let mf = flippers.iter().sum::<f64>() / flippers.len() as f64;
    let ms = stable.iter().sum::<f64>() / stable.len() as f64;
    if ms == 0.0 {
        return Err(StabilityError::ZeroDenominator);
    }
    Ok(mf / ms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatioTrend {
    Flat,
    Converging,
    Varying,
}

/// Summary of the Flipper/Stable ratio across a temperature sweep. Flat
/// ratios are inconsistent with sampling-noise dominance, under which the
/// ratio would converge to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessSummary {
    pub range: f64,
    pub trend: RatioTrend,
}

/// Classifies the ratio trend. FLAT when max - min <= `bound` (default
/// 0.25); otherwise CONVERGING when the final ratio is strictly closer to 1
/// than the first, else VARYING. Input is (temperature, ratio), sorted by
/// temperature internally.
pub fn ratio_flatness_test(ratios: &[(f64, f64)], bound: f64) -> Option<FlatnessSummary> {
    if ratios.len() < 2 {
        return None;
    }
    let mut sorted = ratios.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN temperature"));
    let values: Vec<f64> = sorted.iter().map(|(_, r)| *r).collect();
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    let range = max - min;
    let trend = if range <= bound {
        RatioTrend::Flat
    } else if (values[values.len() - 1] - 1.0).abs() < (values[0] - 1.0).abs() {
        RatioTrend::Converging
    } else {
        RatioTrend::Varying
    };
    Some(FlatnessSummary { range, trend })
}

/// One row of the temperature-sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub temperature: f64,
    pub mean_sigma_all: f64,
    pub mean_sigma_stable: Option<f64>,
    pub mean_sigma_flippers: Option<f64>,
    pub sigma_ratio: Option<f64>,
    pub boundary_flip_rate_flippers: Option<f64>,
    pub boundary_flip_rate_stable: Option<f64>,
    /// Spearman rank correlation of per-case mean H[kappa] with the
    /// lowest-temperature run.
    pub h_kappa_rank_corr_base: Option<f64>,
    pub aggregate_di: f64,
}

/// Input to the sweep: per temperature, each case's replicate set and its
/// pre-evaluation group label.
pub type SweepInput = Vec<(f64, Vec<(StabilityGroup, ReplicateSet)>)>;

fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn case_mean_h_kappa(rs: &ReplicateSet) -> Option<f64> {
    let hs: Vec<f64> = rs.replicates.iter().filter_map(|r| r.h_kappa).collect();
    mean(&hs)
}

/// Builds the temperature-sweep table: per-group mean sigma, ratio, boundary
/// flip rates, H[kappa] rank correlation with the lowest-temperature run and
/// aggregate DI per temperature. Cases are matched across temperatures by
/// case_id for the rank correlation.
pub fn temperature_sweep(input: &SweepInput) -> Result<Vec<SweepRow>, StabilityError> {
    let mut temps: Vec<usize> = (0..input.len()).collect();
    temps.sort_by(|&a, &b| input[a].0.partial_cmp(&input[b].0).expect("NaN temperature"));

    // per-case mean H[kappa] at the lowest temperature, keyed by case id
    let base_h: Vec<(String, f64)> = input[temps[0]]
        .1
        .iter()
        .filter_map(|(_, rs)| case_mean_h_kappa(rs).map(|h| (rs.case_id.clone(), h)))
        .collect();

    let mut rows = Vec::new();
    for &ti in &temps {
        let (temp, cases) = &input[ti];
        let mut all = Vec::new();
        let mut stable = Vec::new();
        let mut flippers = Vec::new();
        let mut unstable_stable = 0usize;
        let mut n_stable = 0usize;
        let mut unstable_flip = 0usize;
        let mut n_flip = 0usize;
        let mut defensible = 0usize;
        let mut total = 0usize;
        let mut hx = Vec::new();
        let mut hy = Vec::new();
        for (group, rs) in cases {
            let profile = stability_profile(rs)?;
            all.push(profile.sigma_pds);
            match group {
                StabilityGroup::Stable => {
                    stable.push(profile.sigma_pds);
                    n_stable += 1;
                    if profile.boundary_unstable {
                        unstable_stable += 1;
                    }
                }
                StabilityGroup::Flipper => {
                    flippers.push(profile.sigma_pds);
                    n_flip += 1;
                    if profile.boundary_unstable {
                        unstable_flip += 1;
                    }
                }
            }
            for r in &rs.replicates {
                total += 1;
                if r.level.is_defensible() {
                    defensible += 1;
                }
            }
            if let Some(h) = case_mean_h_kappa(rs) {
                if let Some((_, hb)) = base_h.iter().find(|(id, _)| *id == rs.case_id) {
                    hx.push(*hb);
                    hy.push(h);
                }
            }
        }
        rows.push(SweepRow {
            temperature: *temp,
            mean_sigma_all: mean(&all).unwrap_or(0.0),
            mean_sigma_stable: mean(&stable),
            mean_sigma_flippers: mean(&flippers),
            sigma_ratio: group_ratio(&flippers, &stable).ok(),
            boundary_flip_rate_flippers: (n_flip > 0).then(|| unstable_flip as f64 / n_flip as f64),
            boundary_flip_rate_stable: (n_stable > 0)
                .then(|| unstable_stable as f64 / n_stable as f64),
            h_kappa_rank_corr_base: spearman(&hx, &hy).ok(),
            aggregate_di: if total > 0 {
                defensible as f64 / total as f64
            } else {
                0.0
            },
        });
    }
    Ok(rows)
}
