//! Normalized event CSV: `start,end,service_id,service_name,location,user,attribute,value`.
//!
//! One row per (event, attribute). An event without attributes is written as
//! a single row with empty `attribute` and `value`. Adjacent rows sharing the
//! first six columns are folded back into one event on read.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AttrValue, DomainError, ServiceEvent, ServiceEventLog};

pub const HEADER: [&str; 8] = [
    "start",
    "end",
    "service_id",
    "service_name",
    "location",
    "user",
    "attribute",
    "value",
];

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.f";

#[derive(Debug, Error)]
pub enum EventCsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },
    #[error("row {row}: bad timestamp `{value}`")]
    BadTimestamp { row: usize, value: String },
    #[error("row {row}: attribute `{attribute}` repeated within one event")]
    DuplicateAttribute { row: usize, attribute: String },
    #[error("row {row}: {source}")]
    Invalid {
        row: usize,
        #[source]
        source: DomainError,
    },
}

impl EventCsvError {
    pub fn code(&self) -> &'static str {
        match self {
            EventCsvError::Csv(_) => "eventcsv::Csv",
            EventCsvError::BadHeader { .. } => "eventcsv::BadHeader",
            EventCsvError::BadTimestamp { .. } => "eventcsv::BadTimestamp",
            EventCsvError::DuplicateAttribute { .. } => "eventcsv::DuplicateAttribute",
            EventCsvError::Invalid { .. } => "eventcsv::Invalid",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    start: String,
    end: String,
    service_id: String,
    service_name: String,
    location: String,
    user: String,
    attribute: String,
    value: String,
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Accepts `YYYY-MM-DDTHH:MM:SS[.frac]` and the same with a space separator.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    s.parse::<NaiveDateTime>()
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f").ok())
}

pub fn write_events<W: Write>(out: W, log: &ServiceEventLog) -> Result<(), EventCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for e in log.events() {
        let base = [
            format_timestamp(&e.start),
            format_timestamp(&e.end),
            e.service_id.0.clone(),
            e.service_name.clone(),
            e.location.clone(),
            e.user.0.clone(),
        ];
        if e.attrs.is_empty() {
            let mut rec = base.to_vec();
            rec.extend([String::new(), String::new()]);
            w.write_record(&rec)?;
        }
        for (attr, value) in &e.attrs {
            let mut rec = base.to_vec();
            rec.extend([attr.clone(), value.to_string()]);
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_events<R: Read>(input: R) -> Result<ServiceEventLog, EventCsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(EventCsvError::BadHeader {
            expected: HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut events: Vec<ServiceEvent> = Vec::new();
    let mut prev_key: Option<[String; 6]> = None;
    for (idx, rec) in r.deserialize::<Row>().enumerate() {
        let row_no = idx + 2;
        let row = rec?;
        let ts = |v: &str| {
            parse_timestamp(v).ok_or_else(|| EventCsvError::BadTimestamp {
                row: row_no,
                value: v.to_owned(),
            })
        };
        let start = ts(&row.start)?;
        let end = ts(&row.end)?;
        let key = [
            row.start.clone(),
            row.end.clone(),
            row.service_id.clone(),
            row.service_name.clone(),
            row.location.clone(),
            row.user.clone(),
        ];
        if prev_key.as_ref() != Some(&key) {
            events.push(ServiceEvent {
                service_id: row.service_id.into(),
                service_name: row.service_name,
                attrs: BTreeMap::new(),
                start,
                end,
                location: row.location,
                user: row.user.into(),
                dangling: false,
            });
            prev_key = Some(key);
        }
        let current = events.last_mut().expect("pushed above");
        if !row.attribute.is_empty() {
            if current.attrs.contains_key(&row.attribute) {
                return Err(EventCsvError::DuplicateAttribute {
                    row: row_no,
                    attribute: row.attribute,
                });
            }
            current.attrs.insert(row.attribute, AttrValue::parse(&row.value));
        }
        crate::domain::validate_event(current).map_err(|source| EventCsvError::Invalid { row: row_no, source })?;
    }
    ServiceEventLog::new(events).map_err(|source| EventCsvError::Invalid { row: 0, source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(h: u32, m: u32, s: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2011, 6, 15)
            .unwrap()
            .and_hms_opt(h, m, s)
            .unwrap()
    }

    #[test]
    fn writes_one_row_per_attribute() {
        let e = ServiceEvent {
            service_id: "light-1".into(),
            service_name: "Light".into(),
            attrs: BTreeMap::from([
                ("color".into(), AttrValue::Text("warm".into())),
                ("illumination".into(), AttrValue::Number(200.0)),
            ]),
            start: at(20, 0, 0),
            end: at(20, 30, 0),
            location: "bedroom".into(),
            user: "R1".into(),
            dangling: false,
        };
        let log = ServiceEventLog::new(vec![e]).unwrap();
        let mut buf = Vec::new();
        write_events(&mut buf, &log).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "start,end,service_id,service_name,location,user,attribute,value\n\
             2011-06-15T20:00:00,2011-06-15T20:30:00,light-1,Light,bedroom,R1,color,warm\n\
             2011-06-15T20:00:00,2011-06-15T20:30:00,light-1,Light,bedroom,R1,illumination,200\n"
        );
        assert_eq!(read_events(text.as_bytes()).unwrap(), log);
    }

    #[test]
    fn attribute_free_event_survives() {
        let text = "start,end,service_id,service_name,location,user,attribute,value\n\
                    2011-06-15 08:00:00.5,2011-06-15T08:10:00,m1,Motion,hall,R2,,\n";
        let log = read_events(text.as_bytes()).unwrap();
        assert_eq!(log.len(), 1);
        assert!(log.events()[0].attrs.is_empty());
        assert_eq!(format_timestamp(&log.events()[0].start), "2011-06-15T08:00:00.500");
    }

    #[test]
    fn rejects_wrong_header() {
        let err = read_events("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EventCsvError::BadHeader { .. }));
    }

    #[test]
    fn rejects_inverted_interval() {
        let text = "start,end,service_id,service_name,location,user,attribute,value\n\
                    2011-06-15T09:00:00,2011-06-15T08:00:00,ac,AC,hall,R2,temperature,20\n";
        let err = read_events(text.as_bytes()).unwrap_err();
        assert!(matches!(err, EventCsvError::Invalid { row: 2, .. }));
    }

    #[test]
    fn rejects_bad_timestamp() {
        let text = "start,end,service_id,service_name,location,user,attribute,value\n\
                    yesterday,2011-06-15T08:00:00,ac,AC,hall,R2,temperature,20\n";
        assert!(matches!(
            read_events(text.as_bytes()).unwrap_err(),
            EventCsvError::BadTimestamp { row: 2, .. }
        ));
    }
}
