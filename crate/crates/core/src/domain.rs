//! Calendar-domain knowledge: ontology, attachment filters, and the
//! interpreter from message AVMs to slot frames.
//!
//! Facts load from a `calendar.kb` file in the grammar's s-expression dialect:
//!
//! ```text
//! (sort place entity)              ; place is a kind of entity
//! (month august 8 31 september)    ; name, index, days, successor
//! (weekday friday 5)
//! (forbid place person)            ; places do not modify people
//! (selects schedule (event))       ; objects the verb sense accepts
//! (action arrange schedule)        ; action synonyms
//! (part_of_day evening pm 17 21)
//! (default_event meet "a meeting")
//! ```
//!
//! Lookups consult the fact tables in file order and the first match wins.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate};
use serde::Serialize;

use crate::avm::{Avm, Value};
use crate::sexp::{self, Sexp, SyntaxError};

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

fn invalid(line: usize, message: impl Into<String>) -> KbError {
    KbError::Invalid {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("not a request")]
    NotARequest,
    #[error("invalid date: {0}")]
    InvalidDate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Month {
    pub name: String,
    pub index: u32,
    pub days: u32,
    pub successor: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartOfDay {
    pub name: String,
    pub meridiem: String,
    pub start: u32,
    pub end: u32,
}

/// Finite sort hierarchy with a single root.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sorts {
    parent: BTreeMap<String, String>,
    root: Option<String>,
}

impl Sorts {
    pub fn contains(&self, s: &str) -> bool {
        self.root.as_deref() == Some(s) || self.parent.contains_key(s)
    }

    /// Reflexive-transitive `sub ⊑ sup`.
    pub fn is_a(&self, sub: &str, sup: &str) -> bool {
        let mut cur = sub;
        loop {
            if cur == sup {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    pub fn root(&self) -> Option<&str> {
        self.root.as_deref()
    }
}

/// `modifier` may not modify `head`, up to the sort hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterRule {
    pub modifier: String,
    pub head: String,
}

/// The linguistic filters the parser consults when it attaches a modifier or
/// fills a verb's object.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FilterSet {
    pub rules: Vec<FilterRule>,
    pub selects: BTreeMap<String, Vec<String>>,
    pub sorts: Sorts,
}

/// Result of a filter check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Allow,
    Veto,
}

/// Veto iff some rule forbids the pair up to the hierarchy. Unknown sorts are
/// allowed.
pub fn check_filter(filters: &FilterSet, modifier: &str, head: &str) -> Verdict {
    let s = &filters.sorts;
    let vetoed = filters
        .rules
        .iter()
        .any(|r| s.is_a(modifier, &r.modifier) && s.is_a(head, &r.head));
    if vetoed {
        Verdict::Veto
    } else {
        Verdict::Allow
    }
}

/// Sort of a message: its `type` head, else its `den`, else its action type.
pub fn sort_of(msg: &Avm) -> Option<&str> {
    ["type", "den", "a_type"]
        .iter()
        .find_map(|k| msg.get(k).and_then(Value::head_symbol))
}

impl FilterSet {
    pub fn allows_attachment(&self, modifier: &Avm, head: &Avm) -> bool {
        match (sort_of(modifier), sort_of(head)) {
            (Some(m), Some(h)) => check_filter(self, m, h) == Verdict::Allow,
            _ => true,
        }
    }

    /// Whether a constituent fits the object sorts selected by `governor`.
    pub fn allows_selection(&self, governor: &Value, arg: &Avm) -> bool {
        let (Some(g), Some(s)) = (governor.as_atom(), sort_of(arg)) else {
            return true;
        };
        match self.selects.get(g) {
            Some(accepted) if self.sorts.contains(s) => accepted.iter().any(|a| self.sorts.is_a(s, a)),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ontology {
    pub months: Vec<Month>,
    pub weekdays: Vec<(String, u32)>,
    pub sorts: Sorts,
    pub actions: Vec<(String, String)>,
    pub parts_of_day: Vec<PartOfDay>,
    pub default_events: Vec<(String, String)>,
    pub filters: FilterSet,
}

fn sym(s: &Sexp, what: &str) -> Result<String, KbError> {
    s.as_symbol()
        .map(String::from)
        .ok_or_else(|| invalid(s.line(), format!("expected {what}")))
}

fn num(s: &Sexp, what: &str) -> Result<u32, KbError> {
    match s {
        Sexp::Num(n, _) if *n >= 0 => Ok(*n as u32),
        _ => Err(invalid(s.line(), format!("expected {what}"))),
    }
}

impl Ontology {
    pub fn load(source: &str) -> Result<Ontology, KbError> {
        let mut ont = Ontology::default();
        let mut sort_lines = Vec::new();
        for form in sexp::read_all(source)? {
            let line = form.line();
            let Sexp::List(items, _) = &form else {
                return Err(invalid(line, "expected a `( ... )` fact"));
            };
            let head = items.first().and_then(Sexp::as_symbol).unwrap_or("");
            let args = &items[1.min(items.len())..];
            match (head, args) {
                ("sort", [root]) => {
                    let root = sym(root, "sort name")?;
                    if ont.sorts.root.replace(root).is_some() {
                        return Err(invalid(line, "more than one root sort"));
                    }
                }
                ("sort", [child, parent]) => {
                    let child = sym(child, "sort name")?;
                    if ont.sorts.parent.insert(child.clone(), sym(parent, "parent sort")?).is_some() {
                        return Err(invalid(line, format!("sort {child} declared twice")));
                    }
                    sort_lines.push((child, line));
                }
                ("month", [name, idx, days, succ]) => ont.months.push(Month {
                    name: sym(name, "month name")?,
                    index: num(idx, "month index")?,
                    days: num(days, "day count")?,
                    successor: sym(succ, "successor month")?,
                }),
                ("weekday", [name, idx]) => ont.weekdays.push((sym(name, "weekday")?, num(idx, "weekday index")?)),
                ("forbid", [m, h]) => ont.filters.rules.push(FilterRule {
                    modifier: sym(m, "modifier sort")?,
                    head: sym(h, "head sort")?,
                }),
                ("selects", [g, Sexp::List(sorts, _)]) => {
                    let sorts = sorts.iter().map(|s| sym(s, "sort")).collect::<Result<_, _>>()?;
                    ont.filters.selects.entry(sym(g, "governor")?).or_insert(sorts);
                }
                ("action", [word, canonical]) => ont.actions.push((sym(word, "action")?, sym(canonical, "action")?)),
                ("part_of_day", [name, mer, start, end]) => ont.parts_of_day.push(PartOfDay {
                    name: sym(name, "part of day")?,
                    meridiem: sym(mer, "am or pm")?,
                    start: num(start, "hour")?,
                    end: num(end, "hour")?,
                }),
                ("default_event", [verb, event]) => {
                    ont.default_events.push((sym(verb, "verb")?, sym(event, "event name")?))
                }
                _ => return Err(invalid(line, format!("unknown or malformed fact `{head}`"))),
            }
        }
        ont.validate(&sort_lines)?;
        ont.filters.sorts = ont.sorts.clone();
        Ok(ont)
    }

    fn validate(&self, sort_lines: &[(String, usize)]) -> Result<(), KbError> {
        if let Some(root) = self.sorts.root() {
            for (s, line) in sort_lines {
                let mut cur = s.as_str();
                let mut steps = 0;
                while cur != root {
                    match self.sorts.parent.get(cur) {
                        Some(p) if steps <= self.sorts.parent.len() => cur = p,
                        _ => return Err(invalid(*line, format!("sort {s} is not reachable from {root}"))),
                    }
                    steps += 1;
                }
            }
        } else if !sort_lines.is_empty() {
            return Err(invalid(sort_lines[0].1, "sort hierarchy has no root"));
        }
        for r in &self.filters.rules {
            for s in [&r.modifier, &r.head] {
                if !self.sorts.contains(s) {
                    return Err(invalid(0, format!("filter mentions unknown sort {s}")));
                }
            }
        }
        if !self.months.is_empty() {
            if self.months.len() != 12 {
                return Err(invalid(0, "month table must have 12 entries"));
            }
            let mut seen = BTreeSet::new();
            let mut cur = self.months[0].name.as_str();
            for _ in 0..12 {
                if !seen.insert(cur.to_string()) {
                    break;
                }
                cur = &self
                    .month(cur)
                    .ok_or_else(|| invalid(0, format!("unknown successor month {cur}")))?
                    .successor;
            }
            if seen.len() != 12 || cur != self.months[0].name {
                return Err(invalid(0, "month successors must form one cycle of 12"));
            }
        }
        Ok(())
    }

    pub fn month(&self, name: &str) -> Option<&Month> {
        self.months.iter().find(|m| m.name == name)
    }

    pub fn month_by_index(&self, index: u32) -> Option<&Month> {
        self.months.iter().find(|m| m.index == index)
    }

    pub fn weekday(&self, name: &str) -> Option<u32> {
        self.weekdays.iter().find(|(n, _)| n == name).map(|(_, i)| *i)
    }

    /// Canonical action for a verb sense, e.g. `arrange` → `schedule`.
    pub fn action(&self, word: &str) -> Option<&str> {
        self.actions.iter().find(|(w, _)| w == word).map(|(_, c)| c.as_str())
    }

    pub fn part_of_day(&self, name: &str) -> Option<&PartOfDay> {
        self.parts_of_day.iter().find(|p| p.name == name)
    }

    pub fn default_event(&self, verb: &str) -> Option<&str> {
        self.default_events.iter().find(|(v, _)| v == verb).map(|(_, e)| e.as_str())
    }
}

/// Domain-level interpretation of a request.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SlotFrame {
    pub action_name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_date: Option<Avm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_time: Option<Avm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_place: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub participants: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub part_of_day: Option<String>,
    /// Minutes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_duration: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_date: Option<Avm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_time: Option<Avm>,
}

impl SlotFrame {
    pub fn new(action: &str) -> Self {
        SlotFrame {
            action_name: action.to_string(),
            ..SlotFrame::default()
        }
    }

    pub fn to_avm(&self) -> Avm {
        let mut a = Avm::new().with("action_name", self.action_name.as_str());
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                a.insert(k, v);
            }
        };
        put("event_name", self.event_name.as_deref().map(Value::atom));
        put("event_date", self.event_date.clone().map(Value::Avm));
        put("event_time", self.event_time.clone().map(Value::Avm));
        put("event_place", self.event_place.as_deref().map(Value::atom));
        put(
            "participants",
            (!self.participants.is_empty())
                .then(|| Value::List(self.participants.iter().map(|p| Value::atom(p.as_str())).collect())),
        );
        put("part_of_day", self.part_of_day.as_deref().map(Value::atom));
        put("event_duration", self.event_duration.map(Value::Num));
        put("new_date", self.new_date.clone().map(Value::Avm));
        put("new_time", self.new_time.clone().map(Value::Avm));
        a
    }

    /// Names of the slots that hold a value, besides the action.
    pub fn filled(&self) -> Vec<&'static str> {
        let a = self.to_avm();
        [
            "event_name",
            "event_date",
            "event_time",
            "event_place",
            "participants",
            "part_of_day",
            "event_duration",
            "new_date",
            "new_time",
        ]
        .into_iter()
        .filter(|k| a.get(k).is_some())
        .collect()
    }
}

fn words(v: &Value) -> String {
    match v {
        Value::Atom(a) => a.replace('_', " "),
        other => other.to_string(),
    }
}

/// Surface name of a nominal message: its determiner plus its denotation,
/// e.g. "a conference", "my office".
pub fn nominal_name(np: &Avm) -> Option<String> {
    let den = np.get("den")?;
    let det = mods_of(np).iter().find_map(|m| m.get("det").and_then(Value::as_atom));
    Some(match det {
        Some(d) => format!("{d} {}", words(den)),
        None => words(den),
    })
}

fn mods_of(msg: &Avm) -> Vec<&Avm> {
    mods_under(msg, "mods")
}

fn mods_under<'a>(msg: &'a Avm, key: &str) -> Vec<&'a Avm> {
    msg.get(key)
        .and_then(Value::as_list)
        .map(|l| l.iter().filter_map(Value::as_avm).collect())
        .unwrap_or_default()
}

fn set_once<T>(slot: &mut Option<T>, value: T, name: &str) -> Result<(), DomainError> {
    if slot.is_some() {
        return Err(DomainError::Malformed(format!("{name} given twice")));
    }
    *slot = Some(value);
    Ok(())
}

/// Routes one prepositional modifier into the frame by its type.
pub fn route_pp(frame: &mut SlotFrame, pp: &Avm) -> Result<(), DomainError> {
    let kind = pp.get("type").and_then(Value::head_symbol).unwrap_or("");
    let prep = pp.get("prep").and_then(Value::as_atom).unwrap_or("");
    let den = pp.get("den");
    let den_avm = || {
        den.and_then(Value::as_avm)
            .cloned()
            .ok_or_else(|| DomainError::Malformed(format!("{kind} modifier without a value")))
    };
    match (kind, prep) {
        ("time", "to") => set_once(&mut frame.new_time, den_avm()?, "new_time"),
        ("time", _) => set_once(&mut frame.event_time, den_avm()?, "event_time"),
        ("date", "to") => set_once(&mut frame.new_date, den_avm()?, "new_date"),
        ("date", _) => set_once(&mut frame.event_date, den_avm()?, "event_date"),
        ("place", _) => {
            let name = nominal_name(pp).ok_or_else(|| DomainError::Malformed("place without den".into()))?;
            set_once(&mut frame.event_place, name, "event_place")
        }
        ("person", _) => {
            let name = nominal_name(pp).ok_or_else(|| DomainError::Malformed("person without den".into()))?;
            frame.participants.push(name);
            Ok(())
        }
        ("part_of_day", _) => {
            let d = den.and_then(Value::as_atom).ok_or_else(|| DomainError::Malformed("bare part of day".into()))?;
            set_once(&mut frame.part_of_day, d.to_string(), "part_of_day")
        }
        ("duration", _) => {
            let m = den
                .and_then(Value::as_avm)
                .and_then(|d| d.get("minutes"))
                .and_then(Value::as_num)
                .ok_or_else(|| DomainError::Malformed("duration without minutes".into()))?;
            set_once(&mut frame.event_duration, m, "event_duration")
        }
        _ => Err(DomainError::Malformed(format!("cannot place a `{kind}` modifier"))),
    }
}

/// Maps a root message to a slot frame.
///
/// Commands carry `sem_cat command`; indirect requests ("I want you to ...",
/// "I'd like to ...") carry `den want(...)` and wrap the requested action.
pub fn interpret(ont: &Ontology, msg: &Avm) -> Result<SlotFrame, DomainError> {
    let (a_type, obj, mods) = if msg.get("sem_cat").and_then(Value::as_atom) == Some("command") {
        (msg.get("a_type"), msg.get("a_obj"), mods_under(msg, "a_mods"))
    } else if msg.get("den").and_then(Value::head_symbol) == Some("want") {
        let action = msg
            .get("action")
            .and_then(Value::as_avm)
            .ok_or_else(|| DomainError::Malformed("request without an action".into()))?;
        (action.get("den"), action.get("action_object"), mods_of(action))
    } else {
        return Err(DomainError::NotARequest);
    };
    let a_type = a_type
        .and_then(Value::as_atom)
        .ok_or_else(|| DomainError::Malformed("no action type".into()))?;
    let action = ont
        .action(a_type)
        .ok_or_else(|| DomainError::UnknownAction(a_type.to_string()))?;
    let mut frame = SlotFrame::new(action);
    let obj = obj
        .and_then(Value::as_avm)
        .ok_or_else(|| DomainError::Malformed("no action object".into()))?;
    match obj.get("type").and_then(Value::head_symbol) {
        Some("person") => {
            frame.participants.push(nominal_name(obj).unwrap_or_default());
            let ev = ont
                .default_event(a_type)
                .ok_or_else(|| DomainError::Malformed(format!("{a_type} does not take a person")))?;
            frame.event_name = Some(ev.to_string());
        }
        Some("event") => frame.event_name = nominal_name(obj),
        other => return Err(DomainError::Malformed(format!("object of sort {other:?}"))),
    }
    for m in mods_of(obj).into_iter().chain(mods) {
        if let Some(pp) = m.get("pp_msg").and_then(Value::as_avm) {
            route_pp(&mut frame, pp)?;
        }
    }
    Ok(frame)
}

fn civil(y: i32, m: u32, d: u32) -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(y, m, d)
}

/// Resolves a date message against today's date.
///
/// A month and day without a year resolve to the next occurrence on or after
/// today. Weekdays resolve to the next such day after today.
pub fn normalize_date(ont: &Ontology, date: &Avm, today: NaiveDate) -> Result<NaiveDate, DomainError> {
    let bad = |m: String| DomainError::InvalidDate(m);
    if let Some(rel) = date.get("rel").and_then(Value::as_atom) {
        if rel == "today" {
            return Ok(today);
        }
        if rel == "tomorrow" {
            return Ok(today + Duration::days(1));
        }
    }
    if let Some(wd) = date.get("weekday").and_then(Value::as_atom) {
        let idx = ont.weekday(wd).ok_or_else(|| bad(format!("unknown weekday {wd}")))?;
        let cur = today.weekday().number_from_monday();
        let mut ahead = (idx + 7 - cur) % 7;
        // "friday" and "next friday" both name the first friday after today
        if ahead == 0 {
            ahead = 7;
        }
        return Ok(today + Duration::days(ahead as i64));
    }
    let month_name = date
        .get("month")
        .and_then(Value::as_atom)
        .ok_or_else(|| bad(date.to_string()))?;
    let month = ont.month(month_name).ok_or_else(|| bad(format!("unknown month {month_name}")))?;
    let day = date
        .get("day")
        .and_then(Value::as_num)
        .ok_or_else(|| bad(date.to_string()))?;
    if day < 1 || day as u32 > month.days {
        return Err(bad(format!("{month_name} has {} days", month.days)));
    }
    if let Some(y) = date.get("year").and_then(Value::as_num) {
        return civil(y as i32, month.index, day as u32).ok_or_else(|| bad(date.to_string()));
    }
    // Years are not said in this domain; take the next occurrence. Leap days
    // may be four years out.
    (today.year()..today.year() + 8)
        .filter_map(|y| civil(y, month.index, day as u32))
        .find(|d| *d >= today)
        .ok_or_else(|| bad(date.to_string()))
}
