//! Application knowledge: how slot frames become calendar operations.
//!
//! Rules load from an `app.kb` file:
//!
//! ```text
//! (rename event_duration duration)   ; domain slot -> application parameter
//! (format time "%H:%M")
//! (window 9 17)                      ; business hours for meridiem defaults
//! (require schedule (event_date event_time))
//! (default duration 60)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{NaiveDate, NaiveTime};
use serde::Serialize;

use crate::avm::{Avm, Value};
use crate::calendar::{CalendarError, CalendarEvent, EventStore, NewEvent, OverlapWarning};
use crate::domain::{normalize_date, DomainError, KbError, Ontology, PartOfDay, SlotFrame};
use crate::sexp::{self, Sexp};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid hour: {0}")]
    InvalidHour(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("no event matches {0}")]
    NoSuchEvent(String),
    #[error("request is not executable: {0}")]
    NotExecutable(String),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppRules {
    pub rename: Vec<(String, String)>,
    pub formats: BTreeMap<String, String>,
    window: (u32, u32),
    pub required: BTreeMap<String, Vec<String>>,
    pub default_duration: i64,
}

/// Slots the dialog knows how to ask for.
pub const ELICITABLE: [&str; 5] = ["event_date", "event_time", "new_date", "new_time", "event_ref"];

fn kb_err(line: usize, message: impl Into<String>) -> KbError {
    KbError::Invalid {
        line,
        message: message.into(),
    }
}

impl AppRules {
    pub fn load(source: &str) -> Result<AppRules, KbError> {
        let mut rules = AppRules {
            rename: Vec::new(),
            formats: BTreeMap::new(),
            window: (9, 17),
            required: BTreeMap::new(),
            default_duration: crate::calendar::DEFAULT_DURATION,
        };
        for form in sexp::read_all(source)? {
            let line = form.line();
            let Sexp::List(items, _) = &form else {
                return Err(kb_err(line, "expected a `( ... )` fact"));
            };
            let head = items.first().and_then(Sexp::as_symbol).unwrap_or("");
            match (head, &items[1.min(items.len())..]) {
                ("rename", [from, to]) => match (from.as_symbol(), to.as_symbol()) {
                    (Some(f), Some(t)) => rules.rename.push((f.to_string(), t.to_string())),
                    _ => return Err(kb_err(line, "rename takes two slot names")),
                },
                ("format", [what, fmt]) => match (what.as_symbol(), fmt.as_symbol()) {
                    (Some(w), Some(f)) => {
                        rules.formats.insert(w.to_string(), f.to_string());
                    }
                    _ => return Err(kb_err(line, "format takes a kind and a pattern")),
                },
                ("window", [Sexp::Num(lo, _), Sexp::Num(hi, _)]) => {
                    rules.set_window(*lo, *hi).map_err(|m| kb_err(line, m))?;
                }
                ("require", [action, Sexp::List(slots, _)]) => {
                    let action = action.as_symbol().ok_or_else(|| kb_err(line, "require needs an action"))?;
                    let slots: Vec<String> = slots
                        .iter()
                        .map(|s| s.as_symbol().map(String::from).ok_or_else(|| kb_err(line, "slot names only")))
                        .collect::<Result<_, _>>()?;
                    if let Some(s) = slots.iter().find(|s| !ELICITABLE.contains(&s.as_str())) {
                        return Err(kb_err(line, format!("the dialog cannot ask for `{s}`")));
                    }
                    rules.required.insert(action.to_string(), slots);
                }
                ("default", [what, Sexp::Num(n, _)]) if what.as_symbol() == Some("duration") && *n > 0 => {
                    rules.default_duration = *n;
                }
                _ => return Err(kb_err(line, format!("unknown or malformed rule `{head}`"))),
            }
        }
        let mut targets = BTreeSet::new();
        for (_, to) in &rules.rename {
            if !targets.insert(to) {
                return Err(kb_err(0, format!("two slots renamed to {to}")));
            }
        }
        Ok(rules)
    }

    pub fn window(&self) -> (u32, u32) {
        self.window
    }

    /// Sets the business window; requires `0 <= lo < hi <= 23`.
    pub fn set_window(&mut self, lo: i64, hi: i64) -> Result<(), String> {
        if !(0 <= lo && lo < hi && hi <= 23) {
            return Err(format!("window {lo}..{hi} must satisfy 0 <= lo < hi <= 23"));
        }
        self.window = (lo as u32, hi as u32);
        Ok(())
    }

    /// Application name of a domain slot.
    pub fn app_name<'a>(&'a self, slot: &'a str) -> &'a str {
        self.rename
            .iter()
            .find(|(f, _)| f == slot)
            .map(|(_, t)| t.as_str())
            .unwrap_or(slot)
    }

    fn format(&self, kind: &str, fallback: &'static str) -> &str {
        self.formats.get(kind).map(String::as_str).unwrap_or(fallback)
    }

    pub fn format_time(&self, t: NaiveTime) -> String {
        t.format(self.format("time", "%H:%M")).to_string()
    }

    pub fn format_date(&self, d: NaiveDate) -> String {
        d.format(self.format("date", "%Y-%m-%d")).to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeResolution {
    /// A civil time; `defaulted` when the business window picked the meridiem.
    Time { time: NaiveTime, defaulted: bool },
    /// Both or neither reading of the hour fall within business hours.
    Ambiguous { hour: u32, minute: u32 },
}

/// Reads the `hour` list of a time message: `(5 am_or_pm)`, `(5 pm)` or `(17)`.
fn hour_parts(t: &Avm) -> Result<(i64, Option<&str>), AppError> {
    let bad = || AppError::InvalidHour(t.to_string());
    match t.get("hour").ok_or_else(bad)? {
        Value::List(items) => match items.as_slice() {
            [Value::Num(h)] => Ok((*h, None)),
            [Value::Num(h), Value::Atom(m)] => Ok((*h, Some(m.as_str()))),
            _ => Err(bad()),
        },
        Value::Num(h) => Ok((*h, None)),
        _ => Err(bad()),
    }
}

/// Resolves a time message to a civil time.
///
/// A part of day fixes the meridiem. Otherwise, of the two readings of an
/// `am_or_pm` hour, the one inside the business window wins; if both or
/// neither are inside, the time is ambiguous.
pub fn resolve_time(rules: &AppRules, t: &Avm, part_of_day: Option<&PartOfDay>) -> Result<TimeResolution, AppError> {
    let (h, marker) = hour_parts(t)?;
    let minute = t.get("minute").and_then(Value::as_num).unwrap_or(0);
    if !(0..60).contains(&minute) {
        return Err(AppError::InvalidHour(format!("minute {minute}")));
    }
    let minute = minute as u32;
    let time = |hour: i64, defaulted: bool| {
        NaiveTime::from_hms_opt(hour as u32, minute, 0)
            .map(|time| TimeResolution::Time { time, defaulted })
            .ok_or_else(|| AppError::InvalidHour(format!("{hour}:{minute:02}")))
    };
    match marker {
        None if (0..=23).contains(&h) => time(h, false),
        None => Err(AppError::InvalidHour(h.to_string())),
        Some(_) if !(1..=12).contains(&h) => Err(AppError::InvalidHour(format!("{h} with a meridiem"))),
        Some("am") => time(h % 12, false),
        Some("pm") => time(h % 12 + 12, false),
        Some("am_or_pm") => {
            if let Some(pod) = part_of_day {
                let hour = if pod.meridiem == "pm" && h < 12 { h + 12 } else { h };
                return time(hour, false);
            }
            let (lo, hi) = rules.window();
            let inside: Vec<i64> = [h % 12, h % 12 + 12]
                .into_iter()
                .filter(|c| (lo as i64..=hi as i64).contains(c))
                .collect();
            match inside.as_slice() {
                [one] => time(*one, true),
                _ => Ok(TimeResolution::Ambiguous { hour: h as u32, minute }),
            }
        }
        Some(m) => Err(AppError::InvalidHour(format!("unknown meridiem {m}"))),
    }
}

/// The frame with application defaults applied: resolved hours are written
/// back as 24-hour values (`[ hour [ 17 ] ]`). `None` if nothing changed.
pub fn apply_defaults(rules: &AppRules, ont: &Ontology, frame: &SlotFrame) -> Result<Option<SlotFrame>, AppError> {
    let pod = frame.part_of_day.as_deref().and_then(|p| ont.part_of_day(p));
    let mut out = frame.clone();
    let mut changed = false;
    for slot in [&mut out.event_time, &mut out.new_time] {
        let Some(t) = slot else { continue };
        if let TimeResolution::Time { time, .. } = resolve_time(rules, t, pod)? {
            let (_, marker) = hour_parts(t)?;
            if marker.is_some() {
                use chrono::Timelike;
                t.insert("hour", Value::List(vec![Value::Num(time.hour() as i64)]));
                changed = true;
            }
        }
    }
    Ok(changed.then_some(out))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Param {
    Text(String),
    Date(String),
    Time(String),
    Minutes(i64),
    List(Vec<String>),
    Event(String),
}

/// Why a request cannot run yet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Pending {
    Missing(String),
    AmbiguousMeridiem(String),
    EventChoice(Vec<String>),
}

impl fmt::Display for Pending {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pending::Missing(s) => write!(f, "{s}"),
            Pending::AmbiguousMeridiem(s) => write!(f, "ambiguous-meridiem({s})"),
            Pending::EventChoice(ids) => write!(f, "event-choice({})", ids.join(" ")),
        }
    }
}

/// A frame translated into application vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppRequest {
    pub action: String,
    /// Keyed by application parameter name.
    pub params: BTreeMap<String, Param>,
    pub pending: Vec<Pending>,
    /// Slots whose value came from an application default.
    pub defaulted: Vec<String>,
    #[serde(skip)]
    typed: Typed,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Typed {
    date: Option<NaiveDate>,
    time: Option<NaiveTime>,
    new_date: Option<NaiveDate>,
    new_time: Option<NaiveTime>,
    event: Option<String>,
}

impl AppRequest {
    pub fn is_executable(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn param(&self, rules: &AppRules, slot: &str) -> Option<&Param> {
        self.params.get(rules.app_name(slot))
    }

    fn text(&self, rules: &AppRules, slot: &str) -> Option<String> {
        match self.param(rules, slot)? {
            Param::Text(s) => Some(s.clone()),
            _ => None,
        }
    }
}

fn strip_det(name: &str) -> &str {
    for det in ["a ", "an ", "the ", "my ", "our ", "this "] {
        if let Some(rest) = name.strip_prefix(det) {
            return rest;
        }
    }
    name
}

/// Events the frame could refer to: name match, then any date, time or
/// participants the frame gives.
pub fn candidate_events(
    rules: &AppRules,
    ont: &Ontology,
    frame: &SlotFrame,
    today: NaiveDate,
    events: &[CalendarEvent],
) -> Result<Vec<String>, AppError> {
    let key = frame.event_name.as_deref().map(strip_det).unwrap_or("");
    let date = frame.event_date.as_ref().map(|d| normalize_date(ont, d, today)).transpose()?;
    let pod = frame.part_of_day.as_deref().and_then(|p| ont.part_of_day(p));
    let times: Option<Vec<NaiveTime>> = match &frame.event_time {
        None => None,
        Some(t) => Some(match resolve_time(rules, t, pod)? {
            TimeResolution::Time { time, .. } => vec![time],
            TimeResolution::Ambiguous { hour, minute } => [hour % 12, hour % 12 + 12]
                .iter()
                .filter_map(|h| NaiveTime::from_hms_opt(*h, minute, 0))
                .collect(),
        }),
    };
    Ok(events
        .iter()
        .filter(|e| key.is_empty() || strip_det(&e.name).contains(key))
        .filter(|e| date.is_none_or(|d| e.date == d))
        .filter(|e| times.as_ref().is_none_or(|ts| ts.contains(&e.time)))
        .filter(|e| frame.participants.iter().all(|p| e.participants.contains(p)))
        .map(|e| e.id.clone())
        .collect())
}

/// Translates a frame into an application request against `store`.
pub fn to_app_request(
    rules: &AppRules,
    ont: &Ontology,
    frame: &SlotFrame,
    today: NaiveDate,
    store: &EventStore,
) -> Result<AppRequest, AppError> {
    let mut req = AppRequest {
        action: frame.action_name.clone(),
        params: BTreeMap::new(),
        pending: Vec::new(),
        defaulted: Vec::new(),
        typed: Typed::default(),
    };
    let pod = frame.part_of_day.as_deref().and_then(|p| ont.part_of_day(p));
    let mut ambiguous = Vec::new();
    let mut put = |slot: &str, p: Param| {
        req.params.insert(rules.app_name(slot).to_string(), p);
    };
    if let Some(n) = &frame.event_name {
        put("event_name", Param::Text(n.clone()));
    }
    if let Some(p) = &frame.event_place {
        put("event_place", Param::Text(p.clone()));
    }
    if !frame.participants.is_empty() {
        put("participants", Param::List(frame.participants.clone()));
    }
    if let Some(m) = frame.event_duration {
        put("event_duration", Param::Minutes(m));
    }
    for (slot, value, typed_is_new) in [("event_date", &frame.event_date, false), ("new_date", &frame.new_date, true)] {
        if let Some(d) = value {
            let date = normalize_date(ont, d, today)?;
            put(slot, Param::Date(rules.format_date(date)));
            if typed_is_new {
                req.typed.new_date = Some(date);
            } else {
                req.typed.date = Some(date);
            }
        }
    }
    for (slot, value, typed_is_new) in [("event_time", &frame.event_time, false), ("new_time", &frame.new_time, true)] {
        let Some(t) = value else { continue };
        match resolve_time(rules, t, pod)? {
            TimeResolution::Time { time, defaulted } => {
                put(slot, Param::Time(rules.format_time(time)));
                if defaulted {
                    req.defaulted.push(slot.to_string());
                }
                if typed_is_new {
                    req.typed.new_time = Some(time);
                } else {
                    req.typed.time = Some(time);
                }
            }
            TimeResolution::Ambiguous { .. } => ambiguous.push(slot.to_string()),
        }
    }
    let filled = frame.filled();
    for slot in rules.required.get(&frame.action_name).into_iter().flatten() {
        if slot == "event_ref" {
            let ids = candidate_events(rules, ont, frame, today, &store.all())?;
            match ids.as_slice() {
                [] => {
                    return Err(AppError::NoSuchEvent(
                        frame.event_name.clone().unwrap_or_else(|| "the description".into()),
                    ))
                }
                [one] => {
                    req.params.insert(rules.app_name("event_ref").to_string(), Param::Event(one.clone()));
                    req.typed.event = Some(one.clone());
                }
                many => req.pending.push(Pending::EventChoice(many.to_vec())),
            }
        } else if !filled.contains(&slot.as_str()) {
            req.pending.push(Pending::Missing(slot.clone()));
        }
    }
    req.pending.extend(ambiguous.into_iter().map(Pending::AmbiguousMeridiem));
    Ok(req)
}

/// What executing a request did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub action: String,
    pub event: CalendarEvent,
    pub warnings: Vec<OverlapWarning>,
}

/// Runs an executable request against the calendar.
pub fn execute(rules: &AppRules, req: &AppRequest, store: &mut EventStore) -> Result<Outcome, AppError> {
    if !req.is_executable() {
        let p: Vec<String> = req.pending.iter().map(ToString::to_string).collect();
        return Err(AppError::NotExecutable(p.join(", ")));
    }
    let missing = |what: &str| AppError::NotExecutable(format!("no {what}"));
    match req.action.as_str() {
        "schedule" => {
            let mut ev = NewEvent::new(
                &req.text(rules, "event_name").unwrap_or_else(|| "a meeting".into()),
                req.typed.date.ok_or_else(|| missing("date"))?,
                req.typed.time.ok_or_else(|| missing("time"))?,
            );
            ev.place = req.text(rules, "event_place");
            if let Some(Param::List(p)) = req.param(rules, "participants") {
                ev.participants = p.clone();
            }
            ev.duration = match req.param(rules, "event_duration") {
                Some(Param::Minutes(m)) => *m,
                _ => rules.default_duration,
            };
            let (event, warnings) = store.schedule(ev)?;
            Ok(Outcome {
                action: req.action.clone(),
                event,
                warnings,
            })
        }
        "move" => {
            let id = req.typed.event.as_deref().ok_or_else(|| missing("event"))?;
            let cur = store.get(id).ok_or_else(|| CalendarError::UnknownId(id.to_string()))?;
            let date = req.typed.new_date.unwrap_or(cur.date);
            let time = req.typed.new_time.unwrap_or(cur.time);
            let event = store.move_event(id, date, time)?;
            Ok(Outcome {
                action: req.action.clone(),
                event,
                warnings: Vec::new(),
            })
        }
        "cancel" => {
            let id = req.typed.event.as_deref().ok_or_else(|| missing("event"))?;
            let event = store.cancel(id)?;
            Ok(Outcome {
                action: req.action.clone(),
                event,
                warnings: Vec::new(),
            })
        }
        other => Err(AppError::NotExecutable(format!("unknown action {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;

    fn rules() -> AppRules {
        AppRules::load(data::APP_KB).unwrap()
    }

    fn ont() -> Ontology {
        Ontology::load(data::CALENDAR_KB).unwrap()
    }

    fn avm(s: &str) -> Avm {
        s.parse().unwrap()
    }

    fn hm(h: u32, m: u32) -> NaiveTime {
        NaiveTime::from_hms_opt(h, m, 0).unwrap()
    }

    #[test]
    fn meridiem_defaults() {
        let r = rules();
        let o = ont();
        assert_eq!(r.window(), (9, 17));
        let five = avm("[ [hour [5 am_or_pm]] [minute 0] ]");
        assert_eq!(
            resolve_time(&r, &five, None).unwrap(),
            TimeResolution::Time { time: hm(17, 0), defaulted: true }
        );
        let eight = avm("[ [hour [8 am_or_pm]] ]");
        assert_eq!(resolve_time(&r, &eight, None).unwrap(), TimeResolution::Ambiguous { hour: 8, minute: 0 });
        assert_eq!(
            resolve_time(&r, &eight, o.part_of_day("evening")).unwrap(),
            TimeResolution::Time { time: hm(20, 0), defaulted: false }
        );
        assert_eq!(
            resolve_time(&r, &avm("[ [hour [5 pm]] [minute 30] ]"), None).unwrap(),
            TimeResolution::Time { time: hm(17, 30), defaulted: false }
        );
        assert_eq!(
            resolve_time(&r, &avm("[ [hour [12 am]] ]"), None).unwrap(),
            TimeResolution::Time { time: hm(0, 0), defaulted: false }
        );
        assert!(resolve_time(&r, &avm("[ [hour [13 am_or_pm]] ]"), None).is_err());
        assert!(resolve_time(&r, &avm("[ [hour [24]] ]"), None).is_err());
        assert!(resolve_time(&r, &avm("[ [minute 5] ]"), None).is_err());
    }

    #[test]
    fn window_is_in_the_satisfying_set() {
        // every integer window consistent with 5 -> 17 and 8 -> ask
        let mut satisfying = Vec::new();
        for lo in 0..=23i64 {
            for hi in lo + 1..=23 {
                let mut r = rules();
                r.set_window(lo, hi).unwrap();
                let five = resolve_time(&r, &avm("[ [hour [5 am_or_pm]] ]"), None).unwrap();
                let eight = resolve_time(&r, &avm("[ [hour [8 am_or_pm]] ]"), None).unwrap();
                if five == (TimeResolution::Time { time: hm(17, 0), defaulted: true })
                    && matches!(eight, TimeResolution::Ambiguous { .. })
                {
                    satisfying.push((lo as u32, hi as u32));
                }
            }
        }
        let expected: Vec<(u32, u32)> = (0..=23u32)
            .flat_map(|lo| (lo + 1..=23).map(move |hi| (lo, hi)))
            .filter(|&(lo, hi)| ((6..=8).contains(&lo) && hi >= 20) || ((9..=17).contains(&lo) && (17..=19).contains(&hi)))
            .collect();
        assert_eq!(satisfying, expected);
        assert!(satisfying.contains(&rules().window()));
    }

    #[test]
    fn part_of_day_overrides_window() {
        let r = rules();
        let o = ont();
        for h in 1..=12 {
            for pod in ["morning", "afternoon", "evening"] {
                let t = Avm::new().with("hour", Value::List(vec![Value::Num(h), Value::atom("am_or_pm")]));
                let TimeResolution::Time { time, defaulted } = resolve_time(&r, &t, o.part_of_day(pod)).unwrap() else {
                    panic!("{h} {pod}");
                };
                use chrono::Timelike;
                assert!(!defaulted);
                assert_eq!(time.hour() % 12, h as u32 % 12);
            }
        }
    }

    #[test]
    fn default_frame_shows_24_hour_value() {
        let frame = SlotFrame {
            event_time: Some(avm("[ [minute 0] [hour [5 am_or_pm]] ]")),
            ..SlotFrame::new("schedule")
        };
        let after = apply_defaults(&rules(), &ont(), &frame).unwrap().unwrap();
        assert_eq!(after.event_time, Some(avm("[ [minute 0] [hour [17]] ]")));
        let explicit = SlotFrame {
            event_time: Some(avm("[ [minute 0] [hour [17]] ]")),
            ..SlotFrame::new("schedule")
        };
        assert_eq!(apply_defaults(&rules(), &ont(), &explicit).unwrap(), None);
    }

    #[test]
    fn requests() {
        let r = rules();
        let o = ont();
        let today = NaiveDate::from_ymd_opt(1994, 6, 1).unwrap();
        let mut store = EventStore::new();
        let frame = SlotFrame {
            event_name: Some("a meeting".into()),
            participants: vec!["bob".into()],
            ..SlotFrame::new("schedule")
        };
        let req = to_app_request(&r, &o, &frame, today, &store).unwrap();
        assert_eq!(
            req.pending,
            vec![Pending::Missing("event_date".into()), Pending::Missing("event_time".into())]
        );

        let worked = SlotFrame {
            event_name: Some("a conference".into()),
            event_place: Some("my office".into()),
            event_time: Some(avm("[ [minute 0] [hour [5 am_or_pm]] ]")),
            event_date: Some(avm("[ [month august] [day 30] ]")),
            ..SlotFrame::new("schedule")
        };
        let req = to_app_request(&r, &o, &worked, today, &store).unwrap();
        assert!(req.is_executable());
        assert_eq!(req.params["date"], Param::Date("1994-08-30".into()));
        assert_eq!(req.params["time"], Param::Time("17:00".into()));
        assert_eq!(req.params["place"], Param::Text("my office".into()));
        assert_eq!(req.params["name"], Param::Text("a conference".into()));
        assert_eq!(req.defaulted, vec!["event_time".to_string()]);
        let out = execute(&r, &req, &mut store).unwrap();
        assert_eq!(out.event.time, hm(17, 0));

        let cancel = SlotFrame {
            event_name: Some("the conference".into()),
            ..SlotFrame::new("cancel")
        };
        let req = to_app_request(&r, &o, &cancel, today, &store).unwrap();
        assert!(req.is_executable());
        execute(&r, &req, &mut store).unwrap();
        assert!(store.is_empty());
        assert!(matches!(
            to_app_request(&r, &o, &cancel, today, &store),
            Err(AppError::NoSuchEvent(_))
        ));
    }

    #[test]
    fn ambiguous_references_are_pending() {
        let r = rules();
        let o = ont();
        let today = NaiveDate::from_ymd_opt(1994, 6, 1).unwrap();
        let mut store = EventStore::new();
        let d = NaiveDate::from_ymd_opt(1994, 8, 30).unwrap();
        store.schedule(NewEvent::new("a meeting", d, hm(9, 0))).unwrap();
        store.schedule(NewEvent::new("a meeting", d, hm(15, 0))).unwrap();
        let frame = SlotFrame {
            event_name: Some("the meeting".into()),
            new_time: Some(avm("[ [hour [4 pm]] ]")),
            ..SlotFrame::new("move")
        };
        let req = to_app_request(&r, &o, &frame, today, &store).unwrap();
        assert_eq!(req.pending, vec![Pending::EventChoice(vec!["ev-0001".into(), "ev-0002".into()])]);
        let narrowed = SlotFrame {
            event_time: Some(avm("[ [hour [3 am_or_pm]] ]")),
            ..frame
        };
        let req = to_app_request(&r, &o, &narrowed, today, &store).unwrap();
        assert!(req.is_executable());
        let out = execute(&r, &req, &mut store).unwrap();
        assert_eq!((out.event.id.as_str(), out.event.time), ("ev-0002", hm(16, 0)));
    }

    #[test]
    fn bad_rules_rejected() {
        assert!(AppRules::load("(window 17 9)").is_err());
        assert!(AppRules::load("(window 0 24)").is_err());
        assert!(AppRules::load("(rename a x) (rename b x)").is_err());
        assert!(AppRules::load("(bogus)").is_err());
        assert!(AppRules::load("(require schedule (event_place))").is_err());
    }
}
