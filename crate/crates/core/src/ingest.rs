//! CASAS-style sensor log ingestion.
//!
//! Raw logs carry one reading per line: `DATE TIME SENSOR VALUE [annotation...]`.
//! ON/OFF readings on a sensor delimit a service event; numeric readings on
//! sensors mapped to the same service fill in the event's attribute values.
//! Several single-resident homes are merged into one multi-resident log.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    AttrValue, AttributeSpec, DomainError, ResidentId, Service, ServiceCatalog, ServiceEvent, ServiceEventLog,
    ServiceId,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed record `{text}` (need DATE TIME SENSOR VALUE)")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: unparseable date/time `{text}`")]
    BadTimestamp { line: usize, text: String },
    #[error("streams share no calendar dates inside the window")]
    EmptyIntersection,
    #[error("sensor registry: {0}")]
    Registry(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::MalformedLine { .. } => "ingest::MalformedLine",
            IngestError::BadTimestamp { .. } => "ingest::BadTimestamp",
            IngestError::EmptyIntersection => "ingest::EmptyIntersection",
            IngestError::Registry(_) => "ingest::Registry",
            IngestError::Io(_) => "ingest::Io",
            IngestError::Domain(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorReading {
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub sensor_id: String,
    pub value: String,
}

impl SensorReading {
    pub fn timestamp(&self) -> NaiveDateTime {
        self.date.and_time(self.time)
    }

    /// Four-token form, fractional seconds printed only when non-zero.
    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {}",
            self.date.format("%Y-%m-%d"),
            self.time.format("%H:%M:%S%.f"),
            self.sensor_id,
            self.value
        )
    }
}

impl fmt::Display for SensorReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Parses one log line; tokens after the fourth (activity annotations) are
/// dropped.
pub fn parse_casas_line(line: &str) -> Result<SensorReading, IngestError> {
    parse_numbered(line, 0)
}

fn parse_numbered(line: &str, line_no: usize) -> Result<SensorReading, IngestError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() < 4 {
        return Err(IngestError::MalformedLine {
            line: line_no,
            text: line.to_owned(),
        });
    }
    let bad_ts = || IngestError::BadTimestamp {
        line: line_no,
        text: format!("{} {}", tokens[0], tokens[1]),
    };
    let date = NaiveDate::parse_from_str(tokens[0], "%Y-%m-%d").map_err(|_| bad_ts())?;
    let time = tokens[1].parse::<NaiveTime>().map_err(|_| bad_ts())?;
    Ok(SensorReading {
        date,
        time,
        sensor_id: tokens[2].to_owned(),
        value: tokens[3].to_owned(),
    })
}

/// Parses a whole log, skipping blank lines and `#` comments.
pub fn parse_casas_log<R: BufRead>(input: R) -> Result<Vec<SensorReading>, IngestError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(parse_numbered(trimmed, idx + 1)?);
    }
    Ok(out)
}

/// The readings of one source home, attributed to one synthetic resident.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeStream {
    pub home_label: String,
    pub resident_id: ResidentId,
    readings: Vec<SensorReading>,
}

impl HomeStream {
    /// Sorts readings by timestamp; equal timestamps keep file order.
    pub fn new(
        home_label: impl Into<String>,
        resident_id: impl Into<ResidentId>,
        mut readings: Vec<SensorReading>,
    ) -> Self {
        readings.sort_by_key(SensorReading::timestamp);
        HomeStream {
            home_label: home_label.into(),
            resident_id: resident_id.into(),
            readings,
        }
    }

    pub fn readings(&self) -> &[SensorReading] {
        &self.readings
    }

    /// First and last calendar date, if any readings exist.
    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        Some((self.readings.first()?.date, self.readings.last()?.date))
    }
}

/// Maps sensor ids (by prefix, optionally per home) onto services.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorMapping {
    pub prefix: String,
    #[serde(default)]
    pub home: Option<String>,
    pub service_id: ServiceId,
    pub service_name: String,
    pub location: String,
    /// Attribute filled by numeric readings of this sensor.
    #[serde(default)]
    pub attribute: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SensorRegistry {
    #[serde(default)]
    pub attributes: BTreeMap<String, AttributeSpec>,
    #[serde(default)]
    pub sensors: Vec<SensorMapping>,
}

impl SensorRegistry {
    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        let reg: SensorRegistry = toml::from_str(text).map_err(|e| IngestError::Registry(e.to_string()))?;
        reg.validate()?;
        Ok(reg)
    }

    /// Every mapped attribute has a declared unit; mappings are complete.
    pub fn validate(&self) -> Result<(), IngestError> {
        for m in &self.sensors {
            if m.prefix.is_empty() || m.service_id.0.is_empty() || m.location.is_empty() {
                return Err(IngestError::Registry(format!(
                    "mapping for `{}` needs prefix, service_id and location",
                    m.prefix
                )));
            }
            if let Some(attr) = &m.attribute {
                if !self.attributes.contains_key(attr) {
                    return Err(IngestError::Registry(format!(
                        "attribute `{attr}` has no declared unit"
                    )));
                }
            }
        }
        for (name, spec) in &self.attributes {
            if spec.unit.trim().is_empty() || !spec.granularity.is_finite() || spec.granularity <= 0.0 {
                return Err(IngestError::Registry(format!(
                    "attribute `{name}` needs a unit and a positive granularity"
                )));
            }
        }
        self.catalog()?;
        Ok(())
    }

    /// Most specific mapping for a sensor in a home: home-specific entries
    /// beat generic ones, then the longest prefix wins.
    pub fn lookup(&self, home: &str, sensor_id: &str) -> Option<&SensorMapping> {
        self.sensors
            .iter()
            .filter(|m| sensor_id.starts_with(&m.prefix))
            .filter(|m| m.home.as_deref().is_none_or(|h| h == home))
            .max_by_key(|m| (m.home.is_some(), m.prefix.len()))
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.get(name)
    }

    /// Granularity for an attribute, defaulting to 1.
    pub fn granularity(&self, name: &str) -> f64 {
        self.attribute(name).map_or(1.0, |a| a.granularity)
    }

    /// Services implied by the mappings.
    pub fn catalog(&self) -> Result<ServiceCatalog, IngestError> {
        let mut grouped: BTreeMap<&ServiceId, (String, BTreeMap<String, AttributeSpec>)> = BTreeMap::new();
        for m in &self.sensors {
            let entry = grouped
                .entry(&m.service_id)
                .or_insert_with(|| (m.service_name.clone(), BTreeMap::new()));
            if let Some(attr) = &m.attribute {
                if let Some(spec) = self.attributes.get(attr) {
                    entry.1.insert(attr.clone(), spec.clone());
                }
            }
        }
        let mut catalog = ServiceCatalog::default();
        for (id, (name, q)) in grouped {
            let functional = ["turn_on", "turn_off"].iter().map(|s| s.to_string()).collect();
            catalog.insert(Service::new(id.clone(), name, functional, q)?)?;
        }
        Ok(catalog)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettleConfig {
    /// Readings closer together than this collapse to the later one.
    pub window_secs: i64,
}

impl Default for SettleConfig {
    fn default() -> Self {
        SettleConfig { window_secs: 60 }
    }
}

/// Collapses bursts: a reading followed by another within the window is
/// superseded. Input must be time-ordered.
pub fn settle(readings: &[(NaiveDateTime, f64)], cfg: &SettleConfig) -> Vec<(NaiveDateTime, f64)> {
    let window = chrono::Duration::seconds(cfg.window_secs);
    readings
        .iter()
        .enumerate()
        .filter(|(i, (t, _))| readings.get(i + 1).is_none_or(|(next, _)| *next - *t >= window))
        .map(|(_, r)| *r)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildOutcome {
    pub events: Vec<ServiceEvent>,
    /// OFF readings with no open ON; skipped.
    pub unmatched_off: usize,
    /// ON readings never closed; closed at stream end and flagged.
    pub dangling: usize,
    /// Dangling ONs at the very last instant of the stream (zero length).
    pub dropped: usize,
    /// Readings whose sensor has no registry mapping.
    pub unmapped: usize,
}

enum Status {
    On,
    Off,
}

fn status(value: &str) -> Option<Status> {
    match value.to_ascii_uppercase().as_str() {
        "ON" | "OPEN" => Some(Status::On),
        "OFF" | "CLOSE" | "CLOSED" => Some(Status::Off),
        _ => None,
    }
}

/// Pairs ON/OFF readings into service events for one home.
///
/// Each attribute's value is the first settled numeric reading inside
/// `[start, end)` from any sensor mapped to the same service.
pub fn build_service_events(stream: &HomeStream, registry: &SensorRegistry, settle_cfg: &SettleConfig) -> BuildOutcome {
    struct Open<'a> {
        start: NaiveDateTime,
        mapping: &'a SensorMapping,
    }
    let mut outcome = BuildOutcome::default();
    let mut open: BTreeMap<&str, Open> = BTreeMap::new();
    let mut spans: Vec<(NaiveDateTime, NaiveDateTime, &SensorMapping, bool)> = Vec::new();
    let mut numeric: BTreeMap<(&ServiceId, &str), Vec<(NaiveDateTime, f64)>> = BTreeMap::new();

    for r in stream.readings() {
        let Some(mapping) = registry.lookup(&stream.home_label, &r.sensor_id) else {
            outcome.unmapped += 1;
            continue;
        };
        let ts = r.timestamp();
        match (status(&r.value), AttrValue::parse(&r.value)) {
            (Some(Status::On), _) => {
                open.entry(&r.sensor_id).or_insert(Open { start: ts, mapping });
            }
            (Some(Status::Off), _) => match open.remove(r.sensor_id.as_str()) {
                Some(o) if o.start < ts => spans.push((o.start, ts, o.mapping, false)),
                Some(_) => {}
                None => outcome.unmatched_off += 1,
            },
            (None, AttrValue::Number(v)) => {
                if let Some(attr) = &mapping.attribute {
                    numeric
                        .entry((&mapping.service_id, attr.as_str()))
                        .or_default()
                        .push((ts, v));
                }
            }
            (None, AttrValue::Text(_)) => {}
        }
    }

    if let Some(stream_end) = stream.readings().last().map(SensorReading::timestamp) {
        for o in open.into_values() {
            if o.start < stream_end {
                spans.push((o.start, stream_end, o.mapping, true));
                outcome.dangling += 1;
            } else {
                outcome.dropped += 1;
            }
        }
    }

    for (start, end, mapping, dangling) in spans {
        let mut attrs = BTreeMap::new();
        for ((service, attr), series) in numeric.range((&mapping.service_id, "")..) {
            if *service != &mapping.service_id {
                break;
            }
            let inside: Vec<_> = series
                .iter()
                .copied()
                .filter(|(t, _)| start <= *t && *t < end)
                .collect();
            if let Some(&(_, v)) = settle(&inside, settle_cfg).first() {
                attrs.insert((*attr).to_owned(), AttrValue::Number(v));
            }
        }
        outcome.events.push(ServiceEvent {
            service_id: mapping.service_id.clone(),
            service_name: mapping.service_name.clone(),
            attrs,
            start,
            end,
            location: mapping.location.clone(),
            user: stream.resident_id.clone(),
            dangling,
        });
    }
    outcome.events.sort_by_key(|e| (e.start, e.end));
    outcome
}

/// Inclusive calendar-date window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl DateWindow {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.from <= d && d <= self.to
    }

    pub fn intersect(&self, other: &DateWindow) -> Option<DateWindow> {
        let from = self.from.max(other.from);
        let to = self.to.min(other.to);
        (from <= to).then_some(DateWindow { from, to })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub home_label: String,
    pub resident_id: ResidentId,
    pub events_in_window: usize,
    pub unmatched_off: usize,
    pub dangling: usize,
    pub unmapped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub log: ServiceEventLog,
    pub window: DateWindow,
    pub streams: Vec<StreamSummary>,
}

/// Builds events per home, keeps those starting on a date common to every
/// stream (and inside `window`, when given), and sorts them into one log.
pub fn merge_homes(
    streams: &[HomeStream],
    registry: &SensorRegistry,
    window: Option<DateWindow>,
    settle_cfg: &SettleConfig,
) -> Result<MergeOutcome, IngestError> {
    let mut common: Option<DateWindow> = window;
    for s in streams {
        let (from, to) = s.date_range().ok_or(IngestError::EmptyIntersection)?;
        let range = DateWindow { from, to };
        common = Some(match common {
            None => range,
            Some(w) => w.intersect(&range).ok_or(IngestError::EmptyIntersection)?,
        });
    }
    let window = common.ok_or(IngestError::EmptyIntersection)?;

    let built: Vec<BuildOutcome> = streams
        .par_iter()
        .map(|s| build_service_events(s, registry, settle_cfg))
        .collect();

    let mut events = Vec::new();
    let mut summaries = Vec::with_capacity(streams.len());
    for (stream, outcome) in streams.iter().zip(built) {
        let before = events.len();
        events.extend(outcome.events.into_iter().filter(|e| window.contains(e.start.date())));
        summaries.push(StreamSummary {
            home_label: stream.home_label.clone(),
            resident_id: stream.resident_id.clone(),
            events_in_window: events.len() - before,
            unmatched_off: outcome.unmatched_off,
            dangling: outcome.dangling,
            unmapped: outcome.unmapped,
        });
    }
    Ok(MergeOutcome {
        log: ServiceEventLog::new(events)?,
        window,
        streams: summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const REGISTRY: &str = r#"
[attributes.temperature]
unit = "celsius"
granularity = 1

[[sensors]]
prefix = "LS"
service_id = "ac"
service_name = "AC"
location = "living_room"

[[sensors]]
prefix = "T"
service_id = "ac"
service_name = "AC"
location = "living_room"
attribute = "temperature"
"#;

    fn registry() -> SensorRegistry {
        SensorRegistry::from_toml(REGISTRY).unwrap()
    }

    fn stream(lines: &[&str]) -> HomeStream {
        let readings = lines.iter().map(|l| parse_casas_line(l).unwrap()).collect();
        HomeStream::new("HH102", "R1", readings)
    }

    fn at(h: u32, m: u32, s: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2011, 6, 15)
            .unwrap()
            .and_hms_opt(h, m, s)
            .unwrap()
    }

    #[test]
    fn parses_status_line_with_fraction() {
        let r = parse_casas_line("2011-06-15 08:00:00.000000 LS001 ON").unwrap();
        assert_eq!(r.date, NaiveDate::from_ymd_opt(2011, 6, 15).unwrap());
        assert_eq!(r.time, NaiveTime::from_hms_opt(8, 0, 0).unwrap());
        assert_eq!(r.sensor_id, "LS001");
        assert_eq!(r.value, "ON");
    }

    #[test]
    fn parses_numeric_line_and_drops_annotation() {
        let r = parse_casas_line("2011-06-15 08:00:00 T001 24.5 Cook_begin").unwrap();
        assert_eq!(r.sensor_id, "T001");
        assert_eq!(r.value, "24.5");
        assert_eq!(r.to_line(), "2011-06-15 08:00:00 T001 24.5");
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            parse_casas_line("garbage"),
            Err(IngestError::MalformedLine { .. })
        ));
        assert!(matches!(
            parse_casas_line("2011-13-15 08:00:00 T001 24.5"),
            Err(IngestError::BadTimestamp { .. })
        ));
    }

    #[test]
    fn log_parser_reports_line_numbers() {
        let text = "2011-06-15 08:00:00 T001 24.5\n\n# comment\nbad line\n";
        match parse_casas_log(text.as_bytes()) {
            Err(IngestError::MalformedLine { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn on_numeric_off_becomes_event() {
        let s = stream(&[
            "2011-06-15 20:00:00 LS001 ON",
            "2011-06-15 20:05:00 T001 25",
            "2011-06-15 20:30:00 LS001 OFF",
        ]);
        let out = build_service_events(&s, &registry(), &SettleConfig::default());
        assert_eq!(out.events.len(), 1);
        let e = &out.events[0];
        assert_eq!((e.start, e.end), (at(20, 0, 0), at(20, 30, 0)));
        assert_eq!(e.attrs["temperature"], AttrValue::Number(25.0));
        assert_eq!(e.user.as_str(), "R1");
        assert!(!e.dangling);
    }

    #[test]
    fn dangling_on_closed_at_stream_end() {
        let s = stream(&["2011-06-15 20:00:00 LS001 ON", "2011-06-15 23:59:00 T001 21"]);
        let out = build_service_events(&s, &registry(), &SettleConfig::default());
        assert_eq!(out.dangling, 1);
        assert_eq!(out.events[0].end, at(23, 59, 0));
        assert!(out.events[0].dangling);
    }

    #[test]
    fn unmatched_off_counted() {
        let s = stream(&[
            "2011-06-15 20:00:00 LS001 OFF",
            "2011-06-15 20:10:00 LS001 ON",
            "2011-06-15 20:20:00 LS001 OFF",
        ]);
        let out = build_service_events(&s, &registry(), &SettleConfig::default());
        assert_eq!(out.unmatched_off, 1);
        assert_eq!(out.events.len(), 1);
    }

    #[test]
    fn settling_keeps_last_of_burst() {
        let s = stream(&[
            "2011-06-15 20:00:00 LS001 ON",
            "2011-06-15 20:01:00 T001 19",
            "2011-06-15 20:01:40 T001 25",
            "2011-06-15 20:10:00 T001 25",
            "2011-06-15 20:30:00 LS001 OFF",
        ]);
        let out = build_service_events(&s, &registry(), &SettleConfig::default());
        assert_eq!(out.events[0].attrs["temperature"], AttrValue::Number(25.0));
    }

    #[test]
    fn settle_collapses_bursts() {
        let pts = [
            (at(8, 0, 0), 1.0),
            (at(8, 0, 30), 2.0),
            (at(8, 5, 0), 3.0),
            (at(8, 5, 59), 4.0),
        ];
        assert_eq!(
            settle(&pts, &SettleConfig::default()),
            vec![(at(8, 0, 30), 2.0), (at(8, 5, 59), 4.0)]
        );
        assert!(settle(&[], &SettleConfig::default()).is_empty());
    }

    #[test]
    fn registry_prefers_home_specific_longest_prefix() {
        let text = r#"
[[sensors]]
prefix = "L"
service_id = "light-generic"
service_name = "Light"
location = "hall"

[[sensors]]
prefix = "LS00"
home = "HH104"
service_id = "light-kitchen"
service_name = "Light"
location = "kitchen"
"#;
        let reg = SensorRegistry::from_toml(text).unwrap();
        assert_eq!(reg.lookup("HH104", "LS001").unwrap().location, "kitchen");
        assert_eq!(reg.lookup("HH102", "LS001").unwrap().location, "hall");
        assert!(reg.lookup("HH102", "M001").is_none());
    }

    #[test]
    fn registry_requires_units() {
        let text = r#"
[[sensors]]
prefix = "T"
service_id = "ac"
service_name = "AC"
location = "hall"
attribute = "temperature"
"#;
        assert!(matches!(SensorRegistry::from_toml(text), Err(IngestError::Registry(_))));
    }

    #[test]
    fn single_stream_merge_is_identity() {
        let s = stream(&[
            "2011-06-15 20:00:00 LS001 ON",
            "2011-06-15 20:05:00 T001 25",
            "2011-06-15 20:30:00 LS001 OFF",
        ]);
        let built = build_service_events(&s, &registry(), &SettleConfig::default());
        let merged = merge_homes(&[s], &registry(), None, &SettleConfig::default()).unwrap();
        assert_eq!(merged.log.events(), built.events.as_slice());
    }

    #[test]
    fn disjoint_streams_do_not_merge() {
        let a = stream(&["2011-06-15 20:00:00 LS001 ON", "2011-06-15 20:30:00 LS001 OFF"]);
        let b = HomeStream::new(
            "HH104",
            "R2",
            vec![parse_casas_line("2011-07-01 20:00:00 LS001 ON").unwrap()],
        );
        assert!(matches!(
            merge_homes(&[a, b], &registry(), None, &SettleConfig::default()),
            Err(IngestError::EmptyIntersection)
        ));
    }
}
