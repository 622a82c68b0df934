use defensibility_core::record::{DefensibilityLevel, InverseCheck};
use defensibility_core::stability::{
    classify_stability, group_ratio, ratio_flatness_test, sigma_pds, spearman, stability_profile,
    RatioTrend, Replicate, ReplicateSet, StabilityClass, StabilityError,
};

use DefensibilityLevel::{L1, L2, L3};

fn replicate(s: f64, level: DefensibilityLevel) -> Replicate {
    Replicate {
        s,
        level,
        inverse_check: InverseCheck::No,
        h_kappa: None,
    }
}

fn set(levels: &[DefensibilityLevel]) -> ReplicateSet {
    ReplicateSet {
        case_id: "k".to_string(),
        temperature: 0.3,
        replicates: levels.iter().map(|&l| replicate(0.5, l)).collect(),
    }
}

#[test]
fn sigma_hand_computed() {
    assert!(sigma_pds(&[0.8, 0.8, 0.8]).unwrap() < 1e-12);
    assert!((sigma_pds(&[0.0, 1.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((sigma_pds(&[0.2, 0.4, 0.6, 0.8]).unwrap() - (0.2f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!((sigma_pds(&[0.2, 0.4, 0.6, 0.8]).unwrap() - 0.2582).abs() < 5e-5);
    assert_eq!(sigma_pds(&[0.5]), Err(StabilityError::TooFewReplicates(1)));
}

#[test]
fn class_boundaries_closed_at_lower_edge() {
    assert_eq!(classify_stability(1.0), StabilityClass::RockSolid);
    assert_eq!(classify_stability(0.95), StabilityClass::RockSolid);
    assert_eq!(classify_stability(0.9499), StabilityClass::MostlyStable);
    assert_eq!(classify_stability(0.80), StabilityClass::MostlyStable);
    assert_eq!(classify_stability(0.7999), StabilityClass::Moderate);
    assert_eq!(classify_stability(0.60), StabilityClass::Moderate);
    assert_eq!(classify_stability(0.5999), StabilityClass::HighlyUnstable);
}

#[test]
fn profile_dominant_majority_rock_solid() {
    let mut levels = vec![L1; 96];
    levels.extend(vec![L2; 4]);
    let p = stability_profile(&set(&levels)).unwrap();
    assert_eq!(p.dominant_level, L1);
    assert_eq!(p.stability_class, StabilityClass::RockSolid);
    assert_eq!(p.p_l3, 0.0);
    assert!(!p.boundary_unstable);
}

#[test]
fn profile_boundary_unstable_interval() {
    let mut levels = vec![L3; 50];
    levels.extend(vec![L1; 50]);
    let p = stability_profile(&set(&levels)).unwrap();
    assert!(p.boundary_unstable);

    // endpoints excluded: p_l3 = 0.10 exactly is stable
    let mut levels = vec![L3; 10];
    levels.extend(vec![L1; 90]);
    assert!(!stability_profile(&set(&levels)).unwrap().boundary_unstable);
    let mut levels = vec![L3; 90];
    levels.extend(vec![L1; 10]);
    assert!(!stability_profile(&set(&levels)).unwrap().boundary_unstable);
}

#[test]
fn profile_unanimous_never_boundary_unstable() {
    for l in [L1, L2, L3] {
        let p = stability_profile(&set(&vec![l; 40])).unwrap();
        assert!(!p.boundary_unstable);
        assert_eq!(p.dominant_fraction, 1.0);
    }
}

#[test]
fn profile_dominant_tie_breaks_to_lowest() {
    let p = stability_profile(&set(&[L2, L2, L3, L3])).unwrap();
    assert_eq!(p.dominant_level, L2);
}

#[test]
fn spearman_exact_orders() {
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
}

#[test]
fn spearman_tie_handling_hand_ranked() {
    let rho = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 3.0, 4.0]).unwrap();
    assert!((rho - 1.0).abs() < 1e-12);
}

#[test]
fn spearman_errors() {
    assert_eq!(
        spearman(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
        Err(StabilityError::LengthMismatch(2, 3))
    );
    assert_eq!(
        spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
        Err(StabilityError::ZeroVariance)
    );
}

#[test]
fn group_ratio_published_value() {
    // means 0.2263 / 0.1391 -> 1.627
    let r = group_ratio(&[0.2263], &[0.1391]).unwrap();
    assert!((r - 1.627).abs() < 1e-3);
    assert_eq!(group_ratio(&[0.2, 0.4], &[0.2, 0.4]).unwrap(), 1.0);
}

#[test]
fn group_ratio_errors() {
    assert!(matches!(
        group_ratio(&[], &[0.1]),
        Err(StabilityError::EmptyGroup(_))
    ));
    assert!(matches!(
        group_ratio(&[0.1], &[]),
        Err(StabilityError::EmptyGroup(_))
    ));
    assert_eq!(
        group_ratio(&[0.1], &[0.0, 0.0]),
        Err(StabilityError::ZeroDenominator)
    );
}

#[test]
fn flatness_published_ratio_row_is_flat() {
    let ratios = [(0.1, 1.63), (0.3, 1.64), (0.7, 1.57), (1.0, 1.52)];
    let s = ratio_flatness_test(&ratios, 0.25).unwrap();
    assert_eq!(s.trend, RatioTrend::Flat);
    assert!((s.range - 0.12).abs() < 1e-12);
}

#[test]
fn flatness_converging_to_one() {
    let ratios = [(0.1, 1.6), (0.3, 1.3), (0.7, 1.1), (1.0, 1.0)];
    let s = ratio_flatness_test(&ratios, 0.25).unwrap();
    assert_eq!(s.trend, RatioTrend::Converging);
}

#[test]
fn flatness_varying_away_from_one() {
    let ratios = [(0.1, 1.1), (1.0, 1.9)];
    let s = ratio_flatness_test(&ratios, 0.25).unwrap();
    assert_eq!(s.trend, RatioTrend::Varying);
}

#[test]
fn flatness_degenerate_inputs() {
    let s = ratio_flatness_test(&[(0.1, 1.5), (1.0, 1.5)], 0.25).unwrap();
    assert_eq!(s.trend, RatioTrend::Flat);
    assert_eq!(s.range, 0.0);
    assert!(ratio_flatness_test(&[(0.1, 1.5)], 0.25).is_none());
}

#[test]
fn flatness_sorts_by_temperature() {
    // same data shuffled by temperature must classify identically
    let sorted = [(0.1, 1.6), (0.3, 1.3), (0.7, 1.1), (1.0, 1.05)];
    let shuffled = [(0.7, 1.1), (0.1, 1.6), (1.0, 1.05), (0.3, 1.3)];
    assert_eq!(
        ratio_flatness_test(&sorted, 0.25),
        ratio_flatness_test(&shuffled, 0.25)
    );
}
