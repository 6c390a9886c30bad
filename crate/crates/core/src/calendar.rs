//! Persistent event store: schedule, move, cancel and query.
//!
//! The store file holds one event per line:
//!
//! ```text
//! id|name|YYYY-MM-DD|HH:MM|duration_min|place|participant,participant
//! ```
//!
//! `|`, `,` and `\` inside fields are escaped with a backslash. Writes replace
//! the file atomically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Serialize, Serializer};

pub const DEFAULT_DURATION: i64 = 60;
/// Longest event, in minutes.
pub const MAX_DURATION: i64 = 24 * 60;

#[derive(Debug, thiserror::Error)]
pub enum CalendarError {
    #[error("unknown event id {0}")]
    UnknownId(String),
    #[error("invalid event: {0}")]
    Invalid(String),
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CalendarEvent {
    pub id: String,
    pub name: String,
    #[serde(serialize_with = "ser_date")]
    pub date: NaiveDate,
    #[serde(serialize_with = "ser_time")]
    pub time: NaiveTime,
    /// Minutes.
    pub duration: i64,
    pub place: Option<String>,
    pub participants: Vec<String>,
}

fn ser_date<S: Serializer>(d: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&d.format("%Y-%m-%d").to_string())
}

fn ser_time<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.format("%H:%M").to_string())
}

impl CalendarEvent {
    pub fn starts(&self) -> NaiveDateTime {
        self.date.and_time(self.time)
    }

    pub fn ends(&self) -> NaiveDateTime {
        self.starts() + chrono::Duration::minutes(self.duration)
    }

    pub fn overlaps(&self, other: &CalendarEvent) -> bool {
        self.starts() < other.ends() && other.starts() < self.ends()
    }
}

impl fmt::Display for CalendarEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} ({} min)",
            self.id,
            self.date.format("%Y-%m-%d"),
            self.time.format("%H:%M"),
            self.name,
            self.duration
        )?;
        if let Some(p) = &self.place {
            write!(f, " at {p}")?;
        }
        if !self.participants.is_empty() {
            write!(f, " with {}", self.participants.join(", "))?;
        }
        Ok(())
    }
}

/// Fields of an event to be scheduled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewEvent {
    pub name: String,
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub duration: i64,
    pub place: Option<String>,
    pub participants: Vec<String>,
}

impl NewEvent {
    pub fn new(name: &str, date: NaiveDate, time: NaiveTime) -> Self {
        NewEvent {
            name: name.to_string(),
            date,
            time,
            duration: DEFAULT_DURATION,
            place: None,
            participants: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapWarning {
    pub id: String,
    pub other: String,
}

impl fmt::Display for OverlapWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} overlaps {}", self.id, self.other)
    }
}

#[derive(Debug, Clone, Default)]
pub struct EventStore {
    events: BTreeMap<String, CalendarEvent>,
    by_date: BTreeMap<NaiveDate, BTreeSet<String>>,
    next_id: u64,
    path: Option<PathBuf>,
}

impl PartialEq for EventStore {
    fn eq(&self, other: &Self) -> bool {
        self.events == other.events
    }
}

impl EventStore {
    /// An in-memory store.
    pub fn new() -> Self {
        EventStore {
            next_id: 1,
            ..EventStore::default()
        }
    }

    /// Opens the store file at `path`, creating an empty store if it does
    /// not exist. Every change is written back.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CalendarError> {
        let path = path.as_ref().to_path_buf();
        let mut store = match std::fs::read_to_string(&path) {
            Ok(text) => Self::parse(&text, &path.display().to_string())?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => EventStore::new(),
            Err(e) => return Err(e.into()),
        };
        store.path = Some(path);
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CalendarError> {
        let mut store = EventStore::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| CalendarError::Format {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let fields = split_escaped(line, '|');
            let [id, name, date, time, dur, place, parts] = fields.as_slice() else {
                return Err(err(format!("expected 7 fields, found {}", fields.len())));
            };
            let event = CalendarEvent {
                id: unescape(id),
                name: unescape(name),
                date: NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| err(format!("date: {e}")))?,
                time: NaiveTime::parse_from_str(time, "%H:%M").map_err(|e| err(format!("time: {e}")))?,
                duration: dur.parse().map_err(|e| err(format!("duration: {e}")))?,
                place: (!place.is_empty()).then(|| unescape(place)),
                participants: if parts.is_empty() {
                    Vec::new()
                } else {
                    split_escaped(parts, ',').iter().map(|p| unescape(p)).collect()
                },
            };
            if !(1..=MAX_DURATION).contains(&event.duration) {
                return Err(err("duration must be 1..=1440 minutes".into()));
            }
            if store.events.contains_key(&event.id) {
                return Err(err(format!("duplicate id {}", event.id)));
            }
            if let Some(n) = event.id.strip_prefix("ev-").and_then(|n| n.parse::<u64>().ok()) {
                store.next_id = store.next_id.max(n + 1);
            }
            store.insert(event);
        }
        Ok(store)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in self.events.values() {
            let parts: Vec<String> = e.participants.iter().map(|p| escape(p)).collect();
            out.push_str(&format!(
                "{}|{}|{}|{}|{}|{}|{}\n",
                escape(&e.id),
                escape(&e.name),
                e.date.format("%Y-%m-%d"),
                e.time.format("%H:%M"),
                e.duration,
                e.place.as_deref().map(escape).unwrap_or_default(),
                parts.join(",")
            ));
        }
        out
    }

    fn save(&self) -> Result<(), CalendarError> {
        let Some(path) = &self.path else { return Ok(()) };
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_text().as_bytes())?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    fn insert(&mut self, e: CalendarEvent) {
        self.by_date.entry(e.date).or_default().insert(e.id.clone());
        self.events.insert(e.id.clone(), e);
    }

    fn remove(&mut self, id: &str) -> Option<CalendarEvent> {
        let e = self.events.remove(id)?;
        if let Some(ids) = self.by_date.get_mut(&e.date) {
            ids.remove(id);
            if ids.is_empty() {
                self.by_date.remove(&e.date);
            }
        }
        Some(e)
    }

    pub fn get(&self, id: &str) -> Option<&CalendarEvent> {
        self.events.get(id)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    fn overlaps_with(&self, e: &CalendarEvent) -> Vec<OverlapWarning> {
        // events run at most a day, so neighbours on adjacent dates suffice
        let lo = e.date.pred_opt().unwrap_or(e.date);
        let hi = e.date.succ_opt().unwrap_or(e.date);
        self.by_date
            .range(lo..=hi)
            .flat_map(|(_, ids)| ids.iter())
            .filter(|id| **id != e.id)
            .filter_map(|id| self.events.get(id))
            .filter(|o| o.overlaps(e))
            .map(|o| OverlapWarning {
                id: e.id.clone(),
                other: o.id.clone(),
            })
            .collect()
    }

    /// Adds an event. Overlaps are reported, not refused.
    pub fn schedule(&mut self, new: NewEvent) -> Result<(CalendarEvent, Vec<OverlapWarning>), CalendarError> {
        if !(1..=MAX_DURATION).contains(&new.duration) {
            return Err(CalendarError::Invalid("duration must be 1..=1440 minutes".into()));
        }
        if new.name.trim().is_empty() {
            return Err(CalendarError::Invalid("event needs a name".into()));
        }
        let event = CalendarEvent {
            id: format!("ev-{:04}", self.next_id),
            name: new.name,
            date: new.date,
            time: new.time,
            duration: new.duration,
            place: new.place,
            participants: new.participants,
        };
        self.next_id += 1;
        let warnings = self.overlaps_with(&event);
        self.insert(event.clone());
        self.save()?;
        Ok((event, warnings))
    }

    /// Changes the date and time of an event.
    pub fn move_event(&mut self, id: &str, date: NaiveDate, time: NaiveTime) -> Result<CalendarEvent, CalendarError> {
        let mut e = self.remove(id).ok_or_else(|| CalendarError::UnknownId(id.to_string()))?;
        e.date = date;
        e.time = time;
        self.insert(e.clone());
        self.save()?;
        Ok(e)
    }

    pub fn cancel(&mut self, id: &str) -> Result<CalendarEvent, CalendarError> {
        let e = self.remove(id).ok_or_else(|| CalendarError::UnknownId(id.to_string()))?;
        self.save()?;
        Ok(e)
    }

    /// Events dated within `[from, to]`, sorted by date and time.
    pub fn query(&self, from: NaiveDate, to: NaiveDate) -> Vec<CalendarEvent> {
        if from > to {
            return Vec::new();
        }
        let mut out: Vec<CalendarEvent> = self
            .by_date
            .range(from..=to)
            .flat_map(|(_, ids)| ids.iter().filter_map(|id| self.events.get(id)).cloned())
            .collect();
        out.sort_by(|a, b| (a.date, a.time, &a.id).cmp(&(b.date, b.time, &b.id)));
        out
    }

    pub fn all(&self) -> Vec<CalendarEvent> {
        self.query(NaiveDate::MIN, NaiveDate::MAX)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if matches!(c, '|' | ',' | '\\') {
            out.push('\\');
        }
        out.push(if c == '\n' { ' ' } else { c });
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Splits on `sep` outside backslash escapes, leaving escapes in place.
fn split_escaped(s: &str, sep: char) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            out.last_mut().unwrap().push(c);
            if let Some(n) = chars.next() {
                out.last_mut().unwrap().push(n);
            }
        } else if c == sep {
            out.push(String::new());
        } else {
            out.last_mut().unwrap().push(c);
        }
    }
    out
}
