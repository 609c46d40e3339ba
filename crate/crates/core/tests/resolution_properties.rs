mod common;

use conflux_core::prioritization::{rank_profiles, rank_residents, Criterion};
use conflux_core::resolution::{resolve, resolve_adaptive, resolve_average, round_setpoint, Rounding};
use conflux_core::scenarios;
use conflux_core::{
    AttrValue, ConflictCase, ConflictType, Interval, Participant, RankingOptions, ResidentProfile, ResidentWeight,
    Strategy, StrategyConfig,
};
use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};
use proptest::strategy::Strategy as _;

fn profile(id: String) -> impl proptest::strategy::Strategy<Value = ResidentProfile> {
    (1u32..100, 0u8..=10, 0u8..=10, 0u8..=10)
        .prop_map(move |(age, vi, hi, ill)| ResidentProfile::new(id.clone(), age, vi, hi, ill).unwrap())
}

fn household() -> impl proptest::strategy::Strategy<Value = Vec<ResidentProfile>> {
    (2usize..=6).prop_flat_map(|n| (0..n).map(|i| profile(format!("R{i}"))).collect::<Vec<_>>())
}

fn conflict_type() -> impl proptest::strategy::Strategy<Value = ConflictType> {
    prop::sample::select(vec![
        ConflictType::Temperature,
        ConflictType::Illumination,
        ConflictType::Audio,
        ConflictType::Other("door".into()),
    ])
}

fn case_for(profiles: &[ResidentProfile], prefs: &[f64]) -> ConflictCase {
    let start = common::at(3, 600);
    let end = common::at(3, 660);
    ConflictCase {
        id: "c0000".into(),
        conflict_type: ConflictType::Temperature,
        service_id: "ac".into(),
        location: "hall".into(),
        attribute: "temperature".into(),
        overlap: Interval::new(start, end).unwrap(),
        participants: profiles
            .iter()
            .zip(prefs)
            .map(|(p, &v)| Participant {
                resident_id: p.resident_id.clone(),
                preferred: AttrValue::Number(v),
                start,
                end,
            })
            .collect(),
    }
}

proptest! {
    #[test]
    fn ranking_weights_form_a_distribution(h in household(), ct in conflict_type()) {
        let refs: Vec<_> = h.iter().collect();
        let (weights, _) = rank_profiles(&ct, &refs, &RankingOptions::default()).unwrap();
        prop_assert!((weights.iter().map(|w| w.normalized_weight).sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(weights.iter().all(|w| w.normalized_weight > 0.0));
        let ranks: Vec<usize> = weights.iter().map(|w| w.rank).collect();
        prop_assert_eq!(ranks, (1..=h.len()).collect::<Vec<_>>());
        prop_assert!(weights.windows(2).all(|w| w[0].normalized_weight >= w[1].normalized_weight - 1e-12));
    }

    #[test]
    fn ranking_ignores_participant_order(h in household(), ct in conflict_type()) {
        let refs: Vec<_> = h.iter().collect();
        let rev: Vec<_> = h.iter().rev().collect();
        let opts = RankingOptions::default();
        let (a, _) = rank_profiles(&ct, &refs, &opts).unwrap();
        let (b, _) = rank_profiles(&ct, &rev, &opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.resident_id, &y.resident_id);
            prop_assert!((x.normalized_weight - y.normalized_weight).abs() < 1e-12);
        }
    }

    #[test]
    fn worsening_a_condition_never_lowers_weight(h in household(), ct in conflict_type(), crit in 0usize..4) {
        let criterion = Criterion::ALL[crit];
        let mut worse = h.clone();
        let p = &mut worse[0];
        match criterion {
            Criterion::Age => p.age += 10,
            Criterion::VisualImpairment => p.visual_impairment = (p.visual_impairment + 3).min(10),
            Criterion::HearingImpairment => p.hearing_impairment = (p.hearing_impairment + 3).min(10),
            Criterion::Illness => p.illness = (p.illness + 3).min(10),
        }
        let opts = RankingOptions::default();
        let weight_of = |hh: &[ResidentProfile]| {
            let refs: Vec<_> = hh.iter().collect();
            let (w, _) = rank_profiles(&ct, &refs, &opts).unwrap();
            w.iter().find(|w| w.resident_id == hh[0].resident_id).unwrap().normalized_weight
        };
        prop_assert!(weight_of(&worse) >= weight_of(&h) - 1e-12);
    }

    #[test]
    fn adaptive_setpoint_stays_within_preferences(
        h in household(),
        prefs in prop::collection::vec(16.0f64..30.0, 6),
        granularity in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        let case = case_for(&h, &prefs[..h.len()]);
        let mut map = conflux_core::ProfileMap::new();
        for p in &h {
            map.insert(p.resident_id.clone(), p.clone());
        }
        let ranking = rank_residents(&case, &map, &RankingOptions::default()).unwrap();
        let cfg = StrategyConfig { granularity, ..StrategyConfig::default() };
        let d = resolve(&case, Strategy::Adaptive, Some(&ranking), &cfg).unwrap();
        let v = d.setpoint.as_number().unwrap();
        let raw = d.raw.unwrap();
        let used = &prefs[..h.len()];
        let lo = used.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = used.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= v && v <= hi);
        prop_assert!(lo <= raw && raw <= hi);
        prop_assert!((v - raw).abs() <= granularity + 1e-9);
    }

    #[test]
    fn equal_weights_reduce_to_average(prefs in prop::collection::vec(0.0f64..1000.0, 2..6)) {
        let profiles: Vec<_> = (0..prefs.len())
            .map(|i| ResidentProfile::new(format!("R{i}"), 40, 1, 1, 1).unwrap())
            .collect();
        let case = case_for(&profiles, &prefs);
        let share = 1.0 / prefs.len() as f64;
        let weights: Vec<ResidentWeight> = profiles
            .iter()
            .enumerate()
            .map(|(i, p)| ResidentWeight {
                resident_id: p.resident_id.clone(),
                raw_weight: share,
                normalized_weight: share,
                rank: i + 1,
            })
            .collect();
        let cfg = StrategyConfig { rounding: Rounding::None, ..StrategyConfig::default() };
        let adaptive = resolve_adaptive(&case, &weights, &cfg).unwrap().setpoint.as_number().unwrap();
        let average = resolve_average(&case).unwrap().setpoint.as_number().unwrap();
        prop_assert!((adaptive - average).abs() < 1e-9);
    }

    #[test]
    fn directional_rounding_moves_toward_top(raw in 16.0f64..30.0, top in 16.0f64..30.0, step in prop::sample::select(vec![0.5, 1.0, 5.0])) {
        let lo = raw.min(top);
        let hi = raw.max(top);
        let v = round_setpoint(raw, top, (lo, hi), &StrategyConfig { granularity: step, ..StrategyConfig::default() });
        prop_assert!((v - raw).abs() <= step + 1e-9);
        if top > raw {
            prop_assert!(v >= raw - 1e-9);
        } else if top < raw {
            prop_assert!(v <= raw + 1e-9);
        }
        prop_assert!(lo <= v && v <= hi);
    }
}

#[test]
fn built_in_scenarios_rank_the_vulnerable_resident_first() {
    for (scenario, winner) in [(scenarios::temperature(), "R1"), (scenarios::illumination(), "R2")] {
        let cases = conflux_core::detection::detect_conflicts(&scenario.log, &scenario.profiles).unwrap();
        assert_eq!(cases.len(), 1, "{}", scenario.name);
        let ranking = rank_residents(&cases[0], &scenario.profiles, &RankingOptions::default()).unwrap();
        assert_eq!(ranking.weights[0].resident_id.as_str(), winner, "{}", scenario.name);
    }
}

#[test]
fn baselines_on_the_temperature_scenario() {
    let s = scenarios::temperature();
    let case = &conflux_core::detection::detect_conflicts(&s.log, &s.profiles).unwrap()[0];
    let cfg = StrategyConfig {
        static_order: Some(vec!["R2".into(), "R1".into()]),
        ..StrategyConfig::default()
    };
    let value = |st| resolve(case, st, None, &cfg).unwrap().setpoint;
    assert_eq!(value(Strategy::Average), AttrValue::Number(22.0));
    assert_eq!(value(Strategy::UseFirst), AttrValue::Number(25.0));
    assert_eq!(value(Strategy::StaticPriority), AttrValue::Number(19.0));
    assert!(resolve(case, Strategy::Adaptive, None, &cfg).is_err());
}
