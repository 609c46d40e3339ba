//! Shared vocabulary: services, service events, resident profiles, conflict
//! cases and resolution decisions.
//!
//! Every type here is an immutable value once constructed. Constructors
//! enforce the invariants; fields stay public for pattern matching and serde.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prioritization::{Criterion, RankingDiagnostics, ResidentWeight};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("invalid interval: start {start} is not before end {end}")]
    InvalidInterval { start: NaiveDateTime, end: NaiveDateTime },
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("{field} = {value} is outside 0..=10")]
    SeverityOutOfRange { field: &'static str, value: u32 },
    #[error("attribute `{0}` has no declared unit")]
    MissingUnit(String),
    #[error("duplicate service id `{0}`")]
    DuplicateService(String),
    #[error("invalid conflict case: {0}")]
    InvalidCase(String),
}

impl DomainError {
    pub fn code(&self) -> &'static str {
        match self {
            DomainError::InvalidInterval { .. } => "domain::InvalidInterval",
            DomainError::MissingField(_) => "domain::MissingField",
            DomainError::SeverityOutOfRange { .. } => "domain::SeverityOutOfRange",
            DomainError::MissingUnit(_) => "domain::MissingUnit",
            DomainError::DuplicateService(_) => "domain::DuplicateService",
            DomainError::InvalidCase(_) => "domain::InvalidCase",
        }
    }
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(
    /// Resident identifier, e.g. `R1`.
    ResidentId
);
string_id!(
    /// Unique service identifier within a registry.
    ServiceId
);

/// A non-functional attribute value: numeric readings (temperature, lumens,
/// volume) or opaque text (a TV channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Number(f64),
    Text(String),
}

impl AttrValue {
    /// Numbers win whenever the token parses as a finite float.
    pub fn parse(token: &str) -> AttrValue {
        match token.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => AttrValue::Number(v),
            _ => AttrValue::Text(token.trim().to_owned()),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttrValue::Number(v) => Some(*v),
            AttrValue::Text(_) => None,
        }
    }

    /// Total order: numbers before text, numbers by `total_cmp`.
    pub fn total_cmp(&self, other: &AttrValue) -> Ordering {
        match (self, other) {
            (AttrValue::Number(a), AttrValue::Number(b)) => a.total_cmp(b),
            (AttrValue::Number(_), AttrValue::Text(_)) => Ordering::Less,
            (AttrValue::Text(_), AttrValue::Number(_)) => Ordering::Greater,
            (AttrValue::Text(a), AttrValue::Text(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Number(v) => write!(f, "{v}"),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

/// Unit and rounding granularity declared for a non-functional attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub unit: String,
    #[serde(default = "default_granularity")]
    pub granularity: f64,
}

fn default_granularity() -> f64 {
    1.0
}

/// An IoT service: identity plus functional and non-functional attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub id: ServiceId,
    pub name: String,
    pub functional: BTreeSet<String>,
    pub nonfunctional: BTreeMap<String, AttributeSpec>,
}

impl Service {
    pub fn new(
        id: impl Into<ServiceId>,
        name: impl Into<String>,
        functional: BTreeSet<String>,
        nonfunctional: BTreeMap<String, AttributeSpec>,
    ) -> Result<Self, DomainError> {
        let id = id.into();
        if id.0.is_empty() {
            return Err(DomainError::MissingField("service_id"));
        }
        if let Some((name, _)) = nonfunctional.iter().find(|(_, s)| s.unit.trim().is_empty()) {
            return Err(DomainError::MissingUnit(name.clone()));
        }
        Ok(Service {
            id,
            name: name.into(),
            functional,
            nonfunctional,
        })
    }
}

/// Services keyed by id; rejects duplicate ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServiceCatalog {
    services: BTreeMap<ServiceId, Service>,
}

impl ServiceCatalog {
    pub fn insert(&mut self, service: Service) -> Result<(), DomainError> {
        if self.services.contains_key(&service.id) {
            return Err(DomainError::DuplicateService(service.id.0));
        }
        self.services.insert(service.id.clone(), service);
        Ok(())
    }

    pub fn get(&self, id: &ServiceId) -> Option<&Service> {
        self.services.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Service> {
        self.services.values()
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }
}

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

impl Interval {
    pub fn new(start: NaiveDateTime, end: NaiveDateTime) -> Result<Self, DomainError> {
        if start >= end {
            return Err(DomainError::InvalidInterval { start, end });
        }
        Ok(Interval { start, end })
    }

    pub fn contains(&self, t: NaiveDateTime) -> bool {
        self.start <= t && t < self.end
    }

    pub fn duration(&self) -> chrono::Duration {
        self.end - self.start
    }
}

/// One timed, located, user-attributed invocation of a service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceEvent {
    pub service_id: ServiceId,
    pub service_name: String,
    /// Requested or observed non-functional attribute values.
    pub attrs: BTreeMap<String, AttrValue>,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub location: String,
    pub user: ResidentId,
    /// Set when the closing OFF was never seen and the event was closed at
    /// stream end.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dangling: bool,
}

impl ServiceEvent {
    pub fn interval(&self) -> Interval {
        Interval {
            start: self.start,
            end: self.end,
        }
    }

    fn total_cmp(&self, other: &ServiceEvent) -> Ordering {
        self.start
            .cmp(&other.start)
            .then_with(|| self.service_id.cmp(&other.service_id))
            .then_with(|| self.user.cmp(&other.user))
            .then_with(|| self.end.cmp(&other.end))
            .then_with(|| self.location.cmp(&other.location))
            .then_with(|| self.service_name.cmp(&other.service_name))
            .then_with(|| {
                let mut a = self.attrs.iter();
                let mut b = other.attrs.iter();
                loop {
                    match (a.next(), b.next()) {
                        (None, None) => return Ordering::Equal,
                        (None, Some(_)) => return Ordering::Less,
                        (Some(_), None) => return Ordering::Greater,
                        (Some((ka, va)), Some((kb, vb))) => {
                            let ord = ka.cmp(kb).then_with(|| va.total_cmp(vb));
                            if ord != Ordering::Equal {
                                return ord;
                            }
                        }
                    }
                }
            })
            .then_with(|| self.dangling.cmp(&other.dangling))
    }
}

/// Checks every [`ServiceEvent`] invariant.
pub fn validate_event(event: &ServiceEvent) -> Result<(), DomainError> {
    if event.service_id.0.trim().is_empty() {
        return Err(DomainError::MissingField("service_id"));
    }
    if event.location.trim().is_empty() {
        return Err(DomainError::MissingField("location"));
    }
    if event.user.0.trim().is_empty() {
        return Err(DomainError::MissingField("user"));
    }
    if event.start >= event.end {
        return Err(DomainError::InvalidInterval {
            start: event.start,
            end: event.end,
        });
    }
    Ok(())
}

/// Service event sequence, sorted by start time with ties broken by
/// `(service_id, user)` and then by the remaining fields so the order is total.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServiceEventLog {
    events: Vec<ServiceEvent>,
}

impl ServiceEventLog {
    pub fn new(mut events: Vec<ServiceEvent>) -> Result<Self, DomainError> {
        for e in &events {
            validate_event(e)?;
        }
        events.sort_by(ServiceEvent::total_cmp);
        Ok(ServiceEventLog { events })
    }

    pub fn events(&self) -> &[ServiceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn users(&self) -> BTreeSet<ResidentId> {
        self.events.iter().map(|e| e.user.clone()).collect()
    }

    pub fn into_events(self) -> Vec<ServiceEvent> {
        self.events
    }
}

/// Contextual factors of a resident. Severities use a 0..=10 scale where 0
/// means absent and higher means more severe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidentProfile {
    pub resident_id: ResidentId,
    pub age: u32,
    pub visual_impairment: u8,
    pub hearing_impairment: u8,
    pub illness: u8,
}

pub const MAX_SEVERITY: u8 = 10;

/// Profiles keyed by resident id.
pub type ProfileMap = BTreeMap<ResidentId, ResidentProfile>;

impl ResidentProfile {
    pub fn new(
        resident_id: impl Into<ResidentId>,
        age: u32,
        visual_impairment: u8,
        hearing_impairment: u8,
        illness: u8,
    ) -> Result<Self, DomainError> {
        let profile = ResidentProfile {
            resident_id: resident_id.into(),
            age,
            visual_impairment,
            hearing_impairment,
            illness,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.resident_id.0.trim().is_empty() {
            return Err(DomainError::MissingField("resident_id"));
        }
        for (field, value) in [
            ("visual_impairment", self.visual_impairment),
            ("hearing_impairment", self.hearing_impairment),
            ("illness", self.illness),
        ] {
            if value > MAX_SEVERITY {
                return Err(DomainError::SeverityOutOfRange {
                    field,
                    value: value as u32,
                });
            }
        }
        Ok(())
    }

    /// Raw value on one criterion: age in years, severities as-is.
    pub fn criterion_value(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Age => self.age as f64,
            Criterion::VisualImpairment => self.visual_impairment as f64,
            Criterion::HearingImpairment => self.hearing_impairment as f64,
            Criterion::Illness => self.illness as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictType {
    Temperature,
    Illumination,
    Audio,
    Other(String),
}

impl fmt::Display for ConflictType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConflictType::Temperature => f.write_str("temperature"),
            ConflictType::Illumination => f.write_str("illumination"),
            ConflictType::Audio => f.write_str("audio"),
            ConflictType::Other(attr) => write!(f, "other({attr})"),
        }
    }
}

/// One contender in a conflict: who, what they asked for, and when their
/// event ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub resident_id: ResidentId,
    pub preferred: AttrValue,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictCase {
    pub id: String,
    pub conflict_type: ConflictType,
    pub service_id: ServiceId,
    pub location: String,
    pub attribute: String,
    pub overlap: Interval,
    /// Sorted by resident id.
    pub participants: Vec<Participant>,
}

impl ConflictCase {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.participants.len() < 2 {
            return Err(DomainError::InvalidCase("fewer than two participants".into()));
        }
        let ids: BTreeSet<_> = self.participants.iter().map(|p| &p.resident_id).collect();
        if ids.len() != self.participants.len() {
            return Err(DomainError::InvalidCase("duplicate resident".into()));
        }
        let first = &self.participants[0].preferred;
        if self.participants.iter().all(|p| &p.preferred == first) {
            return Err(DomainError::InvalidCase("all preferences identical".into()));
        }
        if self.overlap.start >= self.overlap.end {
            return Err(DomainError::InvalidCase("empty overlap".into()));
        }
        Ok(())
    }

    pub fn participant(&self, id: &ResidentId) -> Option<&Participant> {
        self.participants.iter().find(|p| &p.resident_id == id)
    }

    /// Numeric preferences in participant order, or `None` if any is text.
    pub fn numeric_preferences(&self) -> Option<Vec<f64>> {
        self.participants.iter().map(|p| p.preferred.as_number()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Adaptive,
    Average,
    UseFirst,
    #[serde(rename = "static")]
    StaticPriority,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Adaptive,
        Strategy::Average,
        Strategy::UseFirst,
        Strategy::StaticPriority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Adaptive => "adaptive",
            Strategy::Average => "average",
            Strategy::UseFirst => "use-first",
            Strategy::StaticPriority => "static",
        }
    }

    pub fn is_baseline(self) -> bool {
        self != Strategy::Adaptive
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s || (s == "static-priority" && *st == Strategy::StaticPriority))
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Outcome of resolving one conflict case under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionDecision {
    pub case_id: String,
    pub strategy: Strategy,
    pub attribute: String,
    pub setpoint: AttrValue,
    /// Blend before rounding, for the blending strategies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<f64>,
    /// Empty for strategies that do not rank residents.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ranking: Vec<ResidentWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<RankingDiagnostics>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2011, 6, 15)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap()
    }

    fn event(start: NaiveDateTime, end: NaiveDateTime, user: &str) -> ServiceEvent {
        ServiceEvent {
            service_id: "ac".into(),
            service_name: "AC".into(),
            attrs: BTreeMap::from([("temperature".to_owned(), AttrValue::Number(25.0))]),
            start,
            end,
            location: "living_room".into(),
            user: user.into(),
            dangling: false,
        }
    }

    #[test]
    fn validate_accepts_well_formed_event() {
        assert_eq!(validate_event(&event(at(20, 0), at(20, 30), "R1")), Ok(()));
    }

    #[test]
    fn validate_rejects_degenerate_interval() {
        let err = validate_event(&event(at(20, 0), at(20, 0), "R1")).unwrap_err();
        assert!(matches!(err, DomainError::InvalidInterval { .. }));
    }

    #[test]
    fn validate_rejects_empty_user() {
        let err = validate_event(&event(at(20, 0), at(20, 30), "")).unwrap_err();
        assert_eq!(err, DomainError::MissingField("user"));
    }

    #[test]
    fn validate_rejects_empty_location() {
        let mut e = event(at(20, 0), at(20, 30), "R1");
        e.location.clear();
        assert_eq!(validate_event(&e), Err(DomainError::MissingField("location")));
    }

    #[test]
    fn log_breaks_start_ties_by_service_then_user() {
        let mut b = event(at(8, 0), at(9, 0), "R2");
        let a = event(at(8, 0), at(9, 0), "R1");
        let mut c = event(at(8, 0), at(9, 0), "R1");
        c.service_id = "aa".into();
        b.attrs.clear();
        let log = ServiceEventLog::new(vec![b.clone(), a.clone(), c.clone()]).unwrap();
        assert_eq!(log.events(), &[c, a, b]);
    }

    #[test]
    fn profile_severity_bound() {
        assert!(ResidentProfile::new("R1", 30, 3, 2, 5).is_ok());
        assert!(matches!(
            ResidentProfile::new("R1", 30, 11, 2, 5),
            Err(DomainError::SeverityOutOfRange {
                field: "visual_impairment",
                value: 11
            })
        ));
    }

    #[test]
    fn service_requires_units() {
        let q = BTreeMap::from([(
            "temperature".to_owned(),
            AttributeSpec {
                unit: " ".into(),
                granularity: 1.0,
            },
        )]);
        assert_eq!(
            Service::new("ac", "AC", BTreeSet::new(), q),
            Err(DomainError::MissingUnit("temperature".into()))
        );
    }

    #[test]
    fn catalog_rejects_duplicate_ids() {
        let s = Service::new("ac", "AC", BTreeSet::new(), BTreeMap::new()).unwrap();
        let mut catalog = ServiceCatalog::default();
        catalog.insert(s.clone()).unwrap();
        assert!(matches!(catalog.insert(s), Err(DomainError::DuplicateService(_))));
    }

    #[test]
    fn attr_value_parse() {
        assert_eq!(AttrValue::parse("24.5"), AttrValue::Number(24.5));
        assert_eq!(AttrValue::parse("ON"), AttrValue::Text("ON".into()));
        assert_eq!(AttrValue::parse("NaN"), AttrValue::Text("NaN".into()));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>(), Ok(s));
        }
    }
}
