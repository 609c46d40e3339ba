//! Fixture generators for the benchmarks.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use conflux_core::evaluation::{DistributionSpec, ExperimentConfig, Fixture};
use conflux_core::{
    AttrValue, PairwiseMatrix, ProfileMap, ResidentId, ResidentProfile, ServiceEvent, ServiceEventLog, Strategy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LOCATIONS: [&str; 4] = ["living_room", "bedroom", "kitchen", "study"];
const SETPOINTS: [f64; 6] = [19.0, 20.0, 22.0, 23.0, 25.0, 26.0];

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn snap(v: f64) -> f64 {
    let k = if v >= 1.0 { v } else { 1.0 / v }.round().clamp(1.0, 9.0);
    if v >= 1.0 {
        k
    } else {
        1.0 / k
    }
}

/// A Saaty-scale matrix near a random consistent one.
pub fn scale_matrix(seed: u64, n: usize) -> PairwiseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..9.0)).collect();
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let noise: f64 = rng.random_range(-0.3..0.3);
            upper.push(snap(w[i] / w[j] * noise.exp()));
        }
    }
    PairwiseMatrix::from_scale(labels(n), &upper).expect("scale values are valid")
}

pub fn household(seed: u64, n: usize) -> ProfileMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let p = ResidentProfile::new(
                format!("R{i}"),
                rng.random_range(18..95),
                rng.random_range(0..=10),
                rng.random_range(0..=10),
                rng.random_range(0..=10),
            )
            .expect("sampled profile is valid");
            (ResidentId::from(format!("R{i}")), p)
        })
        .collect()
}

fn start_of_day() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2011, 6, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

/// `events` AC sessions spread over a week, a few residents and rooms.
pub fn event_log(seed: u64, events: usize, residents: usize) -> ServiceEventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = start_of_day();
    let span = 7 * 24 * 60;
    let evs = (0..events)
        .map(|_| {
            let start = t0 + Duration::minutes(rng.random_range(0..span));
            let end = start + Duration::minutes(rng.random_range(5..180));
            ServiceEvent {
                service_id: "ac".into(),
                service_name: "Air conditioner".into(),
                attrs: BTreeMap::from([(
                    "temperature".to_owned(),
                    AttrValue::Number(SETPOINTS[rng.random_range(0..SETPOINTS.len())]),
                )]),
                start,
                end,
                location: LOCATIONS[rng.random_range(0..LOCATIONS.len())].to_owned(),
                user: format!("R{}", rng.random_range(0..residents)).into(),
                dangling: false,
            }
        })
        .collect();
    ServiceEventLog::new(evs).expect("generated events are valid")
}

/// Two-strategy experiment against a normal truth.
pub fn experiment(seed: u64, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        label: "normal".into(),
        seed,
        batch_sizes: vec![trials / 5, 2 * trials / 5, 3 * trials / 5, 4 * trials / 5, trials],
        strategies: vec![Strategy::Adaptive, Strategy::Average],
        fixtures: vec![Fixture {
            name: "bench".into(),
            setpoints: BTreeMap::from([(Strategy::Adaptive, 23.32), (Strategy::Average, 22.0)]),
            truth: DistributionSpec::Normal {
                mean: 24.0,
                stddev: 1.0,
            },
        }],
    }
}
