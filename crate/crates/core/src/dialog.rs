//! Session-level discourse management.
//!
//! A [`Session`] keeps the discourse context the parser consults and the
//! partially filled frame awaiting an answer. [`handle_utterance`] runs one
//! user turn: parse, pick a reading, merge slots, then either ask for what is
//! still missing or execute against the calendar.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::Serialize;

use crate::app::{self, AppError, AppRequest, AppRules, Outcome, Pending};
use crate::avm::{Avm, Term, Value};
use crate::calendar::EventStore;
use crate::context::DiscourseContext;
use crate::data;
use crate::domain::{self, DomainError, KbError, Ontology, SlotFrame};
use crate::grammar::{Grammar, GrammarError};
use crate::parser::{self, Reading};

pub const REFORMULATE: &str = "Sorry, I did not understand that. Could you rephrase it?";

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("grammar: {0}")]
    Grammar(#[from] GrammarError),
    #[error("knowledge base: {0}")]
    Kb(#[from] KbError),
}

/// The immutable language and knowledge resources shared by all sessions.
#[derive(Debug, Clone)]
pub struct Engine {
    pub grammar: Grammar,
    pub ontology: Ontology,
    pub rules: AppRules,
    /// When false, attachment filters and selectional restrictions are off.
    pub use_filters: bool,
}

impl Engine {
    pub fn load(grammar: &str, kb: &str, app_kb: &str) -> Result<Engine, LoadError> {
        Ok(Engine {
            grammar: Grammar::load(grammar)?,
            ontology: Ontology::load(kb)?,
            rules: AppRules::load(app_kb)?,
            use_filters: true,
        })
    }

    /// The shipped calendar grammar and knowledge bases.
    pub fn standard() -> Engine {
        Engine::load(data::CALENDAR_CG, data::CALENDAR_KB, data::APP_KB).expect("shipped data is valid")
    }

    pub fn parse(&self, ctx: &DiscourseContext, text: &str) -> Vec<Reading> {
        let filters = self.use_filters.then_some(&self.ontology.filters);
        parser::parse(&self.grammar, filters, ctx, &parser::tokenize(text))
    }

    pub fn interpret(&self, msg: &Avm) -> Result<SlotFrame, DomainError> {
        domain::interpret(&self.ontology, msg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    WhDateTime,
    WhTime,
    WhDate,
    MeridiemChoice,
    EventRefChoice,
}

impl QuestionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::WhDateTime => "wh_date_time",
            QuestionKind::WhTime => "wh_time",
            QuestionKind::WhDate => "wh_date",
            QuestionKind::MeridiemChoice => "meridiem_choice",
            QuestionKind::EventRefChoice => "event_ref_choice",
        }
    }

    /// Fixed reply text. Event choices list their candidates separately.
    pub fn text(self) -> &'static str {
        match self {
            QuestionKind::WhDateTime => "At what time and date?",
            QuestionKind::WhTime => "At what time?",
            QuestionKind::WhDate => "On what date?",
            QuestionKind::MeridiemChoice => "Morning or afternoon?",
            QuestionKind::EventRefChoice => "Which one do you mean?",
        }
    }

    /// The system's own utterance as a construction name, e.g. `sent(ques, wh_time)`.
    pub fn construction(self) -> Term {
        Term::new("sent", vec![Value::atom("ques"), Value::atom(self.as_str())])
    }
}

impl fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The question to ask for the first outstanding requirement.
pub fn next_question(pending: &[Pending]) -> Option<QuestionKind> {
    let missing = |slots: [&str; 2]| {
        pending
            .iter()
            .any(|p| matches!(p, Pending::Missing(s) if slots.contains(&s.as_str())))
    };
    let date = missing(["event_date", "new_date"]);
    let time = missing(["event_time", "new_time"]);
    Some(match (date, time) {
        (true, true) => QuestionKind::WhDateTime,
        (false, true) => QuestionKind::WhTime,
        (true, false) => QuestionKind::WhDate,
        (false, false) => match pending.first()? {
            Pending::EventChoice(_) => QuestionKind::EventRefChoice,
            Pending::AmbiguousMeridiem(_) => QuestionKind::MeridiemChoice,
            Pending::Missing(_) => return None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PendingQuestion {
    pub kind: QuestionKind,
    pub frame: SlotFrame,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub ctx: DiscourseContext,
    pub pending: Option<PendingQuestion>,
    pub today: NaiveDate,
}

impl Session {
    pub fn new(today: NaiveDate) -> Session {
        Session {
            ctx: DiscourseContext::live(),
            pending: None,
            today,
        }
    }

    fn ask(&mut self, kind: QuestionKind, frame: SlotFrame) {
        self.ctx.p_utter = Some(kind.construction());
        self.pending = Some(PendingQuestion { kind, frame });
    }

    fn settle(&mut self, said: &Value) {
        self.pending = None;
        self.ctx.p_utter = said.as_term().cloned();
    }
}

/// The result of one user turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DialogTurn {
    pub user: String,
    pub reply: String,
    pub pending: Option<QuestionKind>,
    /// The frame under construction, or the one just executed.
    pub frame: Option<SlotFrame>,
    pub slots_gained: Vec<String>,
    pub outcome: Option<Outcome>,
    pub events_changed: Vec<String>,
    /// Readings considered and why one was chosen.
    pub trace: Vec<String>,
}

impl DialogTurn {
    fn new(user: &str) -> DialogTurn {
        DialogTurn {
            user: user.to_string(),
            reply: String::new(),
            pending: None,
            frame: None,
            slots_gained: Vec::new(),
            outcome: None,
            events_changed: Vec::new(),
            trace: Vec::new(),
        }
    }
}

/// Slot contribution of a fragment answer, coerced by the question it answers.
///
/// Returns `None` when the fragment supplies none of what was asked.
pub fn interpret_fragment(pending: &PendingQuestion, msg: &Avm) -> Option<SlotFrame> {
    if msg.get("sem_cat").and_then(Value::as_atom) != Some("fragment") {
        return None;
    }
    let mut got = SlotFrame::new(&pending.frame.action_name);
    for part in msg.get("parts")?.as_list()? {
        domain::route_pp(&mut got, part.as_avm()?).ok()?;
    }
    let answers = match pending.kind {
        QuestionKind::WhDateTime => got.event_time.is_some() || got.event_date.is_some(),
        QuestionKind::WhTime => got.event_time.is_some(),
        QuestionKind::WhDate => got.event_date.is_some(),
        QuestionKind::MeridiemChoice => got.part_of_day.is_some() || explicit_meridiem(&pending.frame, &got),
        QuestionKind::EventRefChoice => got.event_time.is_some() || got.event_date.is_some() || !got.participants.is_empty(),
    };
    if !answers {
        return None;
    }
    // a move asks where the event goes; the event itself is already named
    if pending.frame.action_name == "move" && pending.kind != QuestionKind::EventRefChoice {
        if let Some(t) = got.event_time.take() {
            got.new_time.get_or_insert(t);
        }
        if let Some(d) = got.event_date.take() {
            got.new_date.get_or_insert(d);
        }
    }
    Some(got)
}

fn hour_number(t: &Avm) -> Option<i64> {
    t.get("hour")?.as_list()?.first()?.as_num()
}

fn ambiguous_time(frame: &SlotFrame) -> Option<&Avm> {
    [&frame.event_time, &frame.new_time]
        .into_iter()
        .flatten()
        .find(|t| t.get("hour").and_then(Value::as_list).and_then(|l| l.get(1)).and_then(Value::as_atom) == Some("am_or_pm"))
}

/// "8 pm" answering "Morning or afternoon?" about an ambiguous 8.
fn explicit_meridiem(frame: &SlotFrame, got: &SlotFrame) -> bool {
    let (Some(asked), Some(new)) = (ambiguous_time(frame), got.event_time.as_ref()) else {
        return false;
    };
    hour_number(asked) == hour_number(new) && ambiguous_time(got).is_none()
}

/// Merges an answer into the pending frame. A slot already holding a
/// different value is a conflict; the slot name is returned.
pub fn merge_frames(target: &SlotFrame, add: &SlotFrame) -> Result<SlotFrame, String> {
    fn take<T: Clone + PartialEq>(slot: &mut Option<T>, add: &Option<T>, name: &str) -> Result<(), String> {
        match (slot.as_ref(), add) {
            (_, None) => Ok(()),
            (None, Some(v)) => {
                *slot = Some(v.clone());
                Ok(())
            }
            (Some(a), Some(b)) if a == b => Ok(()),
            _ => Err(name.to_string()),
        }
    }
    let mut out = target.clone();
    take(&mut out.event_name, &add.event_name, "event_name")?;
    take(&mut out.event_date, &add.event_date, "event_date")?;
    take(&mut out.event_time, &add.event_time, "event_time")?;
    take(&mut out.event_place, &add.event_place, "event_place")?;
    take(&mut out.part_of_day, &add.part_of_day, "part_of_day")?;
    take(&mut out.event_duration, &add.event_duration, "event_duration")?;
    take(&mut out.new_date, &add.new_date, "new_date")?;
    take(&mut out.new_time, &add.new_time, "new_time")?;
    for p in &add.participants {
        if !out.participants.contains(p) {
            out.participants.push(p.clone());
        }
    }
    Ok(out)
}

fn gained(before: &SlotFrame, after: &SlotFrame) -> Vec<String> {
    let had = before.filled();
    let mut out: Vec<String> = after
        .filled()
        .into_iter()
        .filter(|s| !had.contains(s))
        .map(String::from)
        .collect();
    if had.contains(&"participants") && after.participants.len() > before.participants.len() {
        out.push("participants".into());
    }
    out
}

/// Reply confirming an executed request.
pub fn confirmation(rules: &AppRules, out: &Outcome) -> String {
    let e = &out.event;
    let at = format!("{} at {}", rules.format_date(e.date), rules.format_time(e.time));
    let when = format!("on {at}");
    let mut s = match out.action.as_str() {
        "schedule" => {
            let mut s = format!("Scheduled {}", e.name);
            if !e.participants.is_empty() {
                s += &format!(" with {}", e.participants.join(" and "));
            }
            if let Some(p) = &e.place {
                s += &format!(" in {p}");
            }
            format!("{s} {when}.")
        }
        "move" => format!("Moved {} to {at}.", e.name),
        "cancel" => format!("Cancelled {} {when}.", e.name),
        other => format!("Done: {other} {}.", e.id),
    };
    if !out.warnings.is_empty() {
        let others: Vec<&str> = out.warnings.iter().map(|w| w.other.as_str()).collect();
        s += &format!(" It overlaps {}.", others.join(", "));
    }
    s
}

fn choice_text(rules: &AppRules, store: &EventStore, ids: &[String]) -> String {
    let items: Vec<String> = ids
        .iter()
        .filter_map(|id| store.get(id))
        .map(|e| format!("{} on {} at {}", e.name, rules.format_date(e.date), rules.format_time(e.time)))
        .collect();
    format!("{} {}?", QuestionKind::EventRefChoice.text(), items.join(" or "))
}

/// Request readings ranked by how many slots they fill; the first wins.
fn rank_requests(engine: &Engine, readings: &[Reading], trace: &mut Vec<String>) -> Vec<(Reading, SlotFrame)> {
    let mut frames: Vec<(Reading, SlotFrame)> = Vec::new();
    for r in readings {
        match engine.interpret(&r.message) {
            Ok(f) => {
                trace.push(format!("reading {}: frame {}", r.construction, f.to_avm()));
                frames.push((r.clone(), f));
            }
            Err(e) => trace.push(format!("reading {}: not a request ({e})", r.construction)),
        }
    }
    // stable sort keeps the parser's deterministic order among equals
    frames.sort_by_key(|(_, f)| std::cmp::Reverse(f.filled().len() + f.participants.len()));
    if let [a, b, ..] = frames.as_slice() {
        if a.1.filled().len() + a.1.participants.len() == b.1.filled().len() + b.1.participants.len() && a.1 != b.1 {
            trace.push(format!("tie between {} and {}; took the first", a.0.construction, b.0.construction));
        }
    }
    frames
}

/// Runs one user turn.
pub fn handle_utterance(engine: &Engine, session: &mut Session, store: &mut EventStore, text: &str) -> DialogTurn {
    let mut turn = DialogTurn::new(text);
    turn.trace.push(format!(
        "context p_utter={}",
        session.ctx.p_utter.as_ref().map(ToString::to_string).unwrap_or_else(|| "none".into())
    ));
    let readings = engine.parse(&session.ctx, text);
    for r in &readings {
        turn.trace.push(format!("parse {} {}", r.construction, r.message));
    }
    let requests = rank_requests(engine, &readings, &mut turn.trace);

    if let Some((reading, frame)) = requests.into_iter().next() {
        if session.pending.is_some() {
            turn.trace.push("new request abandons the pending question".into());
        }
        turn.slots_gained = gained(&SlotFrame::new(&frame.action_name), &frame);
        advance(engine, session, store, frame, &reading.construction, &mut turn);
        return finish(session, turn);
    }

    if let Some(pending) = session.pending.clone() {
        let answer = readings.iter().find_map(|r| interpret_fragment(&pending, &r.message).map(|f| (r, f)));
        match answer {
            Some((reading, mut got)) => {
                let mut base = pending.frame.clone();
                if pending.kind == QuestionKind::MeridiemChoice && got.event_time.is_some() {
                    // the explicit time replaces the ambiguous one it answers
                    if base.new_time.is_some() {
                        base.new_time = got.event_time.take();
                    } else {
                        base.event_time = None;
                    }
                }
                match merge_frames(&base, &got) {
                    Ok(frame) => {
                        turn.trace.push(format!("answer {} to {}", reading.construction, pending.kind));
                        turn.slots_gained = gained(&pending.frame, &frame);
                        advance(engine, session, store, frame, &reading.construction, &mut turn);
                    }
                    Err(slot) => {
                        turn.trace.push(format!("answer conflicts with {slot}; asking again"));
                        turn.reply = format!("You already gave the {}. {}", slot.replace('_', " "), pending.kind.text());
                        turn.frame = Some(pending.frame.clone());
                    }
                }
            }
            None if !readings.is_empty() => {
                turn.trace.push(format!("no reading answers {}", pending.kind));
                turn.reply = pending.kind.text().to_string();
                turn.frame = Some(pending.frame.clone());
            }
            None => {
                turn.reply = REFORMULATE.to_string();
                turn.frame = Some(pending.frame.clone());
            }
        }
        return finish(session, turn);
    }

    turn.reply = REFORMULATE.to_string();
    finish(session, turn)
}

fn finish(session: &Session, mut turn: DialogTurn) -> DialogTurn {
    turn.pending = session.pending.as_ref().map(|p| p.kind);
    log::debug!("turn {:?} -> {:?}", turn.user, turn.reply);
    turn
}

/// Either asks for the next requirement or executes the frame.
fn advance(engine: &Engine, session: &mut Session, store: &mut EventStore, frame: SlotFrame, said: &Value, turn: &mut DialogTurn) {
    turn.frame = Some(frame.clone());
    let req: AppRequest = match app::to_app_request(&engine.rules, &engine.ontology, &frame, session.today, store) {
        Ok(r) => r,
        Err(AppError::NoSuchEvent(what)) => {
            turn.reply = format!("I could not find {what} in the calendar.");
            session.settle(said);
            return;
        }
        Err(e) => {
            log::info!("request rejected: {e}");
            turn.reply = format!("Sorry, I cannot do that: {e}.");
            session.settle(said);
            return;
        }
    };
    turn.trace.push(format!(
        "pending [{}]",
        req.pending.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    ));
    if let Some(kind) = next_question(&req.pending) {
        turn.reply = match req.pending.first() {
            Some(Pending::EventChoice(ids)) if kind == QuestionKind::EventRefChoice => {
                choice_text(&engine.rules, store, ids)
            }
            _ => kind.text().to_string(),
        };
        session.ask(kind, frame);
        return;
    }
    match app::execute(&engine.rules, &req, store) {
        Ok(out) => {
            turn.reply = confirmation(&engine.rules, &out);
            turn.events_changed = vec![out.event.id.clone()];
            turn.outcome = Some(out);
        }
        Err(e) => {
            log::warn!("execution failed: {e}");
            turn.reply = format!("Sorry, I cannot do that: {e}.");
        }
    }
    session.settle(said);
}

/// A scripted dialog: `U:` lines are user turns, `S:` lines the expected
/// system replies. `# today: YYYY-MM-DD` fixes the session date; other `#`
/// lines and blank lines are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    pub today: Option<NaiveDate>,
    pub turns: Vec<ScriptedTurn>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedTurn {
    pub user: String,
    pub expected: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transcript line {line}: {message}")]
pub struct TranscriptError {
    pub line: usize,
    pub message: String,
}

impl FromStr for Transcript {
    type Err = TranscriptError;

    fn from_str(s: &str) -> Result<Transcript, TranscriptError> {
        let mut t = Transcript::default();
        for (i, raw) in s.lines().enumerate() {
            let line = i + 1;
            let err = |message: &str| TranscriptError {
                line,
                message: message.to_string(),
            };
            let text = raw.trim_end();
            if let Some(rest) = text.strip_prefix('#') {
                if let Some(d) = rest.trim().strip_prefix("today:") {
                    t.today = Some(d.trim().parse().map_err(|_| err("bad date in today directive"))?);
                }
            } else if let Some(u) = text.strip_prefix("U:") {
                t.turns.push(ScriptedTurn {
                    user: u.trim().to_string(),
                    expected: None,
                    line,
                });
            } else if let Some(r) = text.strip_prefix("S:") {
                let last = t.turns.last_mut().ok_or_else(|| err("system line before any user line"))?;
                if last.expected.is_some() {
                    return Err(err("two system lines for one user line"));
                }
                last.expected = Some(r.trim().to_string());
            } else if !text.trim().is_empty() {
                return Err(err("expected `U:`, `S:` or `#`"));
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayedTurn {
    pub line: usize,
    pub user: String,
    pub expected: Option<String>,
    pub actual: String,
}

impl ReplayedTurn {
    pub fn ok(&self) -> bool {
        self.expected.as_ref().is_none_or(|e| *e == self.actual)
    }
}

/// Replays a transcript in a fresh session. Turns without an expected reply
/// are run but not compared.
pub fn replay(engine: &Engine, transcript: &Transcript, default_today: NaiveDate, store: &mut EventStore) -> Vec<ReplayedTurn> {
    let mut session = Session::new(transcript.today.unwrap_or(default_today));
    transcript
        .turns
        .iter()
        .map(|t| {
            let turn = handle_utterance(engine, &mut session, store, &t.user);
            ReplayedTurn {
                line: t.line,
                user: t.user.clone(),
                expected: t.expected.clone(),
                actual: turn.reply,
            }
        })
        .collect()
}
