//! Built-in two-resident household fixtures.
//!
//! `temperature` has an ill resident (R1) wanting 25 °C while R2 wants
//! 19 °C; on an earlier day R2 was ill and kept the AC at 23 °C.
//! `illumination` has a visually impaired resident (R2) wanting 800 lumens
//! against R1's 200.

use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};

use crate::domain::{AttrValue, ProfileMap, ResidentId, ResidentProfile, ServiceEvent, ServiceEventLog};
use crate::prioritization::Criterion;
use crate::profiles::ContextEpisode;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub profiles: ProfileMap,
    pub log: ServiceEventLog,
    pub history: Vec<ServiceEvent>,
    pub episodes: Vec<ContextEpisode>,
}

fn at(day: u32, h: u32, m: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2011, 6, day)
        .and_then(|d| d.and_hms_opt(h, m, 0))
        .expect("valid fixture time")
}

#[allow(clippy::too_many_arguments)]
fn event(
    service: &str,
    name: &str,
    location: &str,
    attr: &str,
    value: f64,
    user: &str,
    start: NaiveDateTime,
    end: NaiveDateTime,
) -> ServiceEvent {
    ServiceEvent {
        service_id: service.into(),
        service_name: name.into(),
        attrs: BTreeMap::from([(attr.to_owned(), AttrValue::Number(value))]),
        start,
        end,
        location: location.into(),
        user: user.into(),
        dangling: false,
    }
}

fn profiles(list: &[ResidentProfile]) -> ProfileMap {
    list.iter().map(|p| (p.resident_id.clone(), p.clone())).collect()
}

pub fn temperature() -> Scenario {
    let r1 = ResidentProfile::new("R1", 30, 3, 2, 5).expect("valid profile");
    let r2 = ResidentProfile::new("R2", 50, 2, 4, 0).expect("valid profile");
    let ac = |value, user, start, end| {
        event(
            "ac",
            "Air conditioner",
            "living_room",
            "temperature",
            value,
            user,
            start,
            end,
        )
    };
    let log = ServiceEventLog::new(vec![
        ac(25.0, "R1", at(15, 20, 0), at(15, 20, 30)),
        ac(19.0, "R2", at(15, 20, 10), at(15, 20, 40)),
    ])
    .expect("valid fixture log");
    let history = vec![
        ac(23.0, "R2", at(3, 21, 0), at(3, 23, 0)),
        ac(23.0, "R2", at(4, 19, 0), at(4, 22, 0)),
        ac(20.0, "R2", at(10, 20, 0), at(10, 22, 0)),
    ];
    let episodes = vec![ContextEpisode {
        resident: ResidentId::from("R2"),
        criterion: Criterion::Illness,
        start: at(2, 0, 0),
        end: at(6, 0, 0),
    }];
    Scenario {
        name: "temperature",
        profiles: profiles(&[r1, r2]),
        log,
        history,
        episodes,
    }
}

pub fn illumination() -> Scenario {
    let r1 = ResidentProfile::new("R1", 45, 0, 1, 1).expect("valid profile");
    let r2 = ResidentProfile::new("R2", 40, 8, 1, 1).expect("valid profile");
    let lamp = |value, user, start, end| {
        event(
            "lamp",
            "Ceiling light",
            "living_room",
            "illumination",
            value,
            user,
            start,
            end,
        )
    };
    let log = ServiceEventLog::new(vec![
        lamp(200.0, "R1", at(15, 19, 0), at(15, 21, 0)),
        lamp(800.0, "R2", at(15, 19, 30), at(15, 20, 30)),
    ])
    .expect("valid fixture log");
    Scenario {
        name: "illumination",
        profiles: profiles(&[r1, r2]),
        log,
        history: Vec::new(),
        episodes: Vec::new(),
    }
}
