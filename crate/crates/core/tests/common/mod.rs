#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use conflux_core::{AttrValue, PairwiseMatrix, ProfileMap, ResidentId, ResidentProfile, ServiceEvent};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/casas")
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// Principal eigenvector by power iteration, normalised to sum 1, and the
/// Rayleigh-style eigenvalue estimate.
pub fn power_iteration(m: &PairwiseMatrix) -> (Vec<f64>, f64) {
    let n = m.n();
    let mut x = vec![1.0 / n as f64; n];
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let y: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m.get(i, j) * x[j]).sum()).collect();
        let s: f64 = y.iter().sum();
        lambda = s / x.iter().sum::<f64>();
        let next: Vec<f64> = y.iter().map(|v| v / s).collect();
        let delta = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if delta < 1e-14 {
            break;
        }
    }
    (x, lambda)
}

const SCALE: [f64; 17] = [
    1.0 / 9.0,
    1.0 / 8.0,
    1.0 / 7.0,
    1.0 / 6.0,
    1.0 / 5.0,
    1.0 / 4.0,
    1.0 / 3.0,
    1.0 / 2.0,
    1.0,
    2.0,
    3.0,
    4.0,
    5.0,
    6.0,
    7.0,
    8.0,
    9.0,
];

/// Nearest value on the 1-9 scale in log space.
pub fn snap_to_scale(v: f64) -> f64 {
    *SCALE
        .iter()
        .min_by(|a, b| (a.ln() - v.ln()).abs().total_cmp(&(b.ln() - v.ln()).abs()))
        .expect("non-empty scale")
}

/// Scale-valued matrix built from hidden weights with multiplicative noise
/// on each judgement; often, but not always, consistent enough to pass.
pub fn random_scale_matrix(rng: &mut ChaCha8Rng, n: usize) -> PairwiseMatrix {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..9.0)).collect();
    let mut upper = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let noise: f64 = rng.random_range(-0.5..0.5);
            upper.push(snap_to_scale((w[i] / w[j]) * noise.exp()));
        }
    }
    PairwiseMatrix::from_scale(labels(n), &upper).expect("scale values are valid")
}

pub fn at(day: u32, minutes: i64) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2011, 6, day)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
        + Duration::minutes(minutes)
}

pub fn event(
    service: &str,
    location: &str,
    user: &str,
    temp: f64,
    start: NaiveDateTime,
    end: NaiveDateTime,
) -> ServiceEvent {
    ServiceEvent {
        service_id: service.into(),
        service_name: service.to_uppercase(),
        attrs: BTreeMap::from([("temperature".to_owned(), AttrValue::Number(temp))]),
        start,
        end,
        location: location.into(),
        user: user.into(),
        dangling: false,
    }
}

pub fn uniform_profiles(ids: &[&str]) -> ProfileMap {
    ids.iter()
        .map(|&id| (ResidentId::from(id), ResidentProfile::new(id, 40, 1, 1, 1).unwrap()))
        .collect()
}

/// Expected conflict identity: service, location, attribute, shared
/// interval and the participating residents.
pub type CaseKey = (String, String, String, (NaiveDateTime, NaiveDateTime), BTreeSet<String>);

pub struct PlantedFixture {
    pub events: Vec<ServiceEvent>,
    pub expected: BTreeSet<CaseKey>,
    pub near_misses: usize,
}

pub const RESIDENTS: [&str; 6] = ["R1", "R2", "R3", "R4", "R5", "R6"];

/// `total` events: `groups` planted conflicts of two or three residents,
/// `near_misses` pairs each breaking exactly one conflict condition, and
/// single filler events. Every unit sits in its own three-hour slot.
pub fn planted_fixture(seed: u64, total: usize, groups: usize, near_misses: usize) -> PlantedFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut expected = BTreeSet::new();
    let mut slot = 0i64;
    let services = [("ac", "living_room"), ("ac", "bedroom"), ("heater", "kitchen")];
    let mut next_slot = || {
        slot += 1;
        at(1, slot * 180)
    };

    for g in 0..groups {
        let size = 2 + g % 2;
        let (service, location) = services[g % services.len()];
        let base = next_slot();
        let mut users: Vec<&str> = RESIDENTS.to_vec();
        users.shuffle(&mut rng);
        let mut members = BTreeSet::new();
        let mut shared = (base, base + Duration::days(1));
        for (k, user) in users.iter().take(size).enumerate() {
            // Every member covers [base + 40, base + 50).
            let start = base + Duration::minutes(rng.random_range(0..40));
            let end = base + Duration::minutes(50 + rng.random_range(0..60));
            events.push(event(
                service,
                location,
                user,
                18.0 + k as f64 * 2.0 + rng.random_range(0..2) as f64 * 0.5,
                start,
                end,
            ));
            members.insert(user.to_string());
            shared = (shared.0.max(start), shared.1.min(end));
        }
        expected.insert((
            service.to_owned(),
            location.to_owned(),
            "temperature".to_owned(),
            shared,
            members,
        ));
    }

    for k in 0..near_misses {
        let (service, location) = services[k % services.len()];
        let base = next_slot();
        let mut users: Vec<&str> = RESIDENTS.to_vec();
        users.shuffle(&mut rng);
        let a = event(service, location, users[0], 25.0, base, base + Duration::minutes(60));
        let mut b = event(
            service,
            location,
            users[1],
            19.0,
            base + Duration::minutes(30),
            base + Duration::minutes(90),
        );
        match k % 4 {
            0 => b.location = format!("{location}_annex"),
            1 => {
                b.start = a.end;
                b.end = a.end + Duration::minutes(30);
            }
            2 => b.user = a.user.clone(),
            _ => b.attrs = a.attrs.clone(),
        }
        events.push(a);
        events.push(b);
    }

    while events.len() < total {
        let (service, location) = services[rng.random_range(0..services.len())];
        let base = next_slot();
        let user = RESIDENTS[rng.random_range(0..RESIDENTS.len())];
        events.push(event(
            service,
            location,
            user,
            21.0,
            base,
            base + Duration::minutes(rng.random_range(5..120)),
        ));
    }
    events.shuffle(&mut rng);
    PlantedFixture {
        events,
        expected,
        near_misses,
    }
}
