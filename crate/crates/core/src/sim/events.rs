use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::sim::network::parse_field;

pub const EVENT_LOG_HEADER: &str = "corridor-events v1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NmacEvent {
    /// Lower aircraft id of the pair.
    pub ownship: u32,
    pub intruder: u32,
    pub time_s: f64,
    pub horizontal_ft: f64,
    pub vertical_ft: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    Departure { id: u32, origin: usize, destination: usize },
    Arrival { id: u32, flight_s: f64 },
    Cancel { id: u32 },
    Nmac(NmacEvent),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time_s: f64,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.time_s;
        match &self.kind {
            EventKind::Departure {
                id,
                origin,
                destination,
            } => write!(f, "{t} departure {id} {origin} {destination}"),
            EventKind::Arrival { id, flight_s } => write!(f, "{t} arrival {id} {flight_s}"),
            EventKind::Cancel { id } => write!(f, "{t} cancel {id}"),
            EventKind::Nmac(e) => write!(
                f,
                "{t} nmac {} {} {} {}",
                e.ownship, e.intruder, e.horizontal_ft, e.vertical_ft
            ),
        }
    }
}

impl Event {
    pub fn parse(line_no: usize, line: &str) -> Result<Self> {
        let mut t = line.split_whitespace();
        let time_s = parse_field(line_no, t.next(), "time")?;
        let kind = match t.next() {
            Some("departure") => EventKind::Departure {
                id: parse_field(line_no, t.next(), "id")?,
                origin: parse_field(line_no, t.next(), "origin")?,
                destination: parse_field(line_no, t.next(), "destination")?,
            },
            Some("arrival") => EventKind::Arrival {
                id: parse_field(line_no, t.next(), "id")?,
                flight_s: parse_field(line_no, t.next(), "flight time")?,
            },
            Some("cancel") => EventKind::Cancel {
                id: parse_field(line_no, t.next(), "id")?,
            },
            Some("nmac") => EventKind::Nmac(NmacEvent {
                time_s,
                ownship: parse_field(line_no, t.next(), "ownship")?,
                intruder: parse_field(line_no, t.next(), "intruder")?,
                horizontal_ft: parse_field(line_no, t.next(), "horizontal distance")?,
                vertical_ft: parse_field(line_no, t.next(), "vertical separation")?,
            }),
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown event kind {other:?}"),
                })
            }
        };
        Ok(Event { time_s, kind })
    }
}

/// Renders events as a versioned, line-delimited log.
pub fn write_event_log(events: &[Event]) -> String {
    let mut out = String::with_capacity(32 * events.len() + 32);
    out.push_str(EVENT_LOG_HEADER);
    out.push('\n');
    for e in events {
        let _ = writeln!(out, "{e}");
    }
    out
}

pub fn parse_event_log(text: &str) -> Result<Vec<Event>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == EVENT_LOG_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header '{EVENT_LOG_HEADER}'"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Event::parse(i + 1, l))
        .collect()
}
