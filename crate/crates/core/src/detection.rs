//! Conflict detection over a service event log.
//!
//! Two events conflict when they share a location, overlap in time, come
//! from different users, and disagree on at least one non-functional
//! attribute. Events are grouped into maximal sets of pairwise-overlapping
//! events per `(service, location)` with an endpoint sweep, so a three-way
//! contention yields one case rather than three.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    ConflictCase, ConflictType, Interval, Participant, ProfileMap, ResidentId, ServiceEvent, ServiceEventLog, ServiceId,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectionError {
    #[error("event user `{0}` has no resident profile")]
    UnknownResident(ResidentId),
}

impl DetectionError {
    pub fn code(&self) -> &'static str {
        match self {
            DetectionError::UnknownResident(_) => "detection::UnknownResident",
        }
    }
}

/// Intersection of two half-open intervals, if it has positive length.
pub fn temporal_overlap(a: &Interval, b: &Interval) -> Option<Interval> {
    let start = a.start.max(b.start);
    let end = a.end.min(b.end);
    (start < end).then_some(Interval { start, end })
}

/// A maximal set of pairwise-overlapping events on one service at one
/// location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapGroup {
    pub service_id: ServiceId,
    pub location: String,
    /// Indices into the log's event slice, ascending.
    pub events: Vec<usize>,
    pub shared_interval: Interval,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    // Ends sort before starts at the same instant: touching intervals do
    // not overlap.
    End,
    Start,
}

/// Maximal overlap cliques with at least two members, per
/// `(service, location)` partition.
pub fn overlap_groups(log: &ServiceEventLog) -> Vec<OverlapGroup> {
    let events = log.events();
    let mut partitions: BTreeMap<(&ServiceId, &str), Vec<usize>> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        partitions
            .entry((&e.service_id, e.location.as_str()))
            .or_default()
            .push(i);
    }

    let mut groups = Vec::new();
    for ((service_id, location), members) in partitions {
        let mut sweep: Vec<(NaiveDateTime, Edge, usize)> = Vec::with_capacity(members.len() * 2);
        for &i in &members {
            sweep.push((events[i].start, Edge::Start, i));
            sweep.push((events[i].end, Edge::End, i));
        }
        sweep.sort();

        let mut active: BTreeSet<usize> = BTreeSet::new();
        let mut grew = false;
        for (_, edge, i) in sweep {
            match edge {
                Edge::Start => {
                    active.insert(i);
                    grew = true;
                }
                Edge::End => {
                    if grew && active.len() >= 2 {
                        let members: Vec<usize> = active.iter().copied().collect();
                        let shared_interval = members
                            .iter()
                            .map(|&m| events[m].interval())
                            .reduce(|a, b| temporal_overlap(&a, &b).expect("clique members overlap"))
                            .expect("non-empty clique");
                        groups.push(OverlapGroup {
                            service_id: service_id.clone(),
                            location: location.to_owned(),
                            events: members,
                            shared_interval,
                        });
                    }
                    grew = false;
                    active.remove(&i);
                }
            }
        }
    }
    groups
}

/// Maps an attribute name onto a conflict type.
pub fn classify_attribute(attribute: &str) -> ConflictType {
    match attribute.trim().to_ascii_lowercase().as_str() {
        "temperature" | "temp" | "setpoint_temperature" => ConflictType::Temperature,
        "illumination" | "luminosity" | "brightness" | "light_level" => ConflictType::Illumination,
        "volume" | "audio" | "audio_volume" | "sound_level" => ConflictType::Audio,
        _ => ConflictType::Other(attribute.to_owned()),
    }
}

pub fn classify_conflict(case: &ConflictCase) -> ConflictType {
    classify_attribute(&case.attribute)
}

/// Finds every conflict in the log.
///
/// Within a group, a resident with several events contributes only their
/// most recently started one. One case is emitted per attribute that at
/// least two residents set to different values; residents who share a
/// value stay in the case as co-contenders. Cases are sorted by overlap
/// start and numbered `c0000`, `c0001`, ...
pub fn detect_conflicts(log: &ServiceEventLog, profiles: &ProfileMap) -> Result<Vec<ConflictCase>, DetectionError> {
    if let Some(e) = log.events().iter().find(|e| !profiles.contains_key(&e.user)) {
        return Err(DetectionError::UnknownResident(e.user.clone()));
    }
    let events = log.events();
    let mut seen: BTreeSet<(String, Vec<usize>)> = BTreeSet::new();
    let mut cases = Vec::new();

    for group in overlap_groups(log) {
        let mut latest: BTreeMap<&ResidentId, usize> = BTreeMap::new();
        for &i in &group.events {
            let e = &events[i];
            latest
                .entry(&e.user)
                .and_modify(|cur| {
                    if (e.start, e.end, i) > (events[*cur].start, events[*cur].end, *cur) {
                        *cur = i;
                    }
                })
                .or_insert(i);
        }
        if latest.len() < 2 {
            continue;
        }
        let chosen: Vec<usize> = latest.values().copied().collect();
        let attributes: BTreeSet<&String> = chosen.iter().flat_map(|&i| events[i].attrs.keys()).collect();

        for attribute in attributes {
            let holders: Vec<usize> = chosen
                .iter()
                .copied()
                .filter(|&i| events[i].attrs.contains_key(attribute))
                .collect();
            if holders.len() < 2 {
                continue;
            }
            let first = &events[holders[0]].attrs[attribute];
            if holders.iter().all(|&i| &events[i].attrs[attribute] == first) {
                continue;
            }
            let mut key_events = holders.clone();
            key_events.sort_unstable();
            if !seen.insert((attribute.clone(), key_events)) {
                continue;
            }
            cases.push(build_case(events, &group, attribute, &holders));
        }
    }

    cases.sort_by(|a, b| {
        (a.overlap.start, &a.service_id, &a.location, &a.attribute, a.overlap.end)
            .cmp(&(b.overlap.start, &b.service_id, &b.location, &b.attribute, b.overlap.end))
            .then_with(|| {
                let ids = |c: &ConflictCase| c.participants.iter().map(|p| p.resident_id.clone()).collect::<Vec<_>>();
                ids(a).cmp(&ids(b))
            })
    });
    for (i, case) in cases.iter_mut().enumerate() {
        case.id = format!("c{i:04}");
    }
    Ok(cases)
}

fn build_case(events: &[ServiceEvent], group: &OverlapGroup, attribute: &str, holders: &[usize]) -> ConflictCase {
    let overlap = holders
        .iter()
        .map(|&i| events[i].interval())
        .reduce(|a, b| temporal_overlap(&a, &b).expect("group members overlap"))
        .expect("at least two holders");
    let mut participants: Vec<Participant> = holders
        .iter()
        .map(|&i| {
            let e = &events[i];
            Participant {
                resident_id: e.user.clone(),
                preferred: e.attrs[attribute].clone(),
                start: e.start,
                end: e.end,
            }
        })
        .collect();
    participants.sort_by(|a, b| a.resident_id.cmp(&b.resident_id));
    ConflictCase {
        id: String::new(),
        conflict_type: classify_attribute(attribute),
        service_id: group.service_id.clone(),
        location: group.location.clone(),
        attribute: attribute.to_owned(),
        overlap,
        participants,
    }
}
