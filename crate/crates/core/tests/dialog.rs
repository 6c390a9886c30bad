use chrono::{NaiveDate, NaiveTime};
use mincal_core::app::Pending;
use mincal_core::avm::Avm;
use mincal_core::calendar::{EventStore, NewEvent};
use mincal_core::data;
use mincal_core::dialog::{
    handle_utterance, interpret_fragment, next_question, replay, Engine, PendingQuestion, QuestionKind, Session,
    Transcript, REFORMULATE,
};
use mincal_core::domain::SlotFrame;

fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(1994, 6, 1).unwrap()
}

fn hm(h: u32, m: u32) -> NaiveTime {
    NaiveTime::from_hms_opt(h, m, 0).unwrap()
}

fn avm(s: &str) -> Avm {
    s.parse().unwrap()
}

#[test]
fn shipped_transcript_replays() {
    let engine = Engine::standard();
    let t: Transcript = data::SCHEDULE_TRANSCRIPT.parse().unwrap();
    assert_eq!(t.today, Some(today()));
    assert_eq!(t.turns.len(), 4);
    let mut store = EventStore::new();
    let turns = replay(&engine, &t, today(), &mut store);
    for r in &turns {
        assert!(r.ok(), "line {}: expected {:?}, got {:?}", r.line, r.expected, r.actual);
    }
    let events = store.all();
    assert_eq!(events.len(), 1);
    let e = &events[0];
    assert_eq!(e.date, NaiveDate::from_ymd_opt(1994, 8, 30).unwrap());
    assert_eq!(e.time, hm(20, 0));
    assert_eq!(e.participants, vec!["bob".to_string()]);
    assert_eq!(e.name, "a meeting");
    assert_eq!(
        turns.last().unwrap().actual,
        "Scheduled a meeting with bob on 1994-08-30 at 20:00."
    );
}

#[test]
fn context_follows_the_questions() {
    let engine = Engine::standard();
    let mut s = Session::new(today());
    let mut store = EventStore::new();
    assert!(s.ctx.p_utter.is_none());
    let t = handle_utterance(&engine, &mut s, &mut store, "Schedule a meeting with Bob!");
    assert_eq!(t.pending, Some(QuestionKind::WhDateTime));
    assert_eq!(s.ctx.p_utter.as_ref().unwrap().to_string(), "sent(ques, wh_date_time)");
    handle_utterance(&engine, &mut s, &mut store, "On August 30th.");
    assert_eq!(s.ctx.p_utter.as_ref().unwrap().to_string(), "sent(ques, wh_time)");
    let t = handle_utterance(&engine, &mut s, &mut store, "at 5 pm");
    assert_eq!(t.events_changed.len(), 1);
    assert!(s.pending.is_none());
    assert_eq!(s.ctx.p_utter.as_ref().unwrap().to_string(), "fragment(pp)");
    // the question is answered, so fragments no longer parse
    let t = handle_utterance(&engine, &mut s, &mut store, "at 6");
    assert_eq!(t.reply, REFORMULATE);
}

#[test]
fn worked_request_asks_only_for_the_date() {
    let engine = Engine::standard();
    let mut s = Session::new(today());
    let mut store = EventStore::new();
    let t = handle_utterance(&engine, &mut s, &mut store, "I want you to arrange a conference in my office at 5");
    assert_eq!(t.reply, "On what date?");
    let t = handle_utterance(&engine, &mut s, &mut store, "on august 30");
    assert_eq!(t.reply, "Scheduled a conference in my office on 1994-08-30 at 17:00.");
    assert_eq!(store.all()[0].place.as_deref(), Some("my office"));
}

#[test]
fn nonsense_leaves_state_alone() {
    let engine = Engine::standard();
    let mut s = Session::new(today());
    let mut store = EventStore::new();
    handle_utterance(&engine, &mut s, &mut store, "schedule a meeting with bob");
    let before = (s.ctx.clone(), s.pending.clone());
    let t = handle_utterance(&engine, &mut s, &mut store, "blarg");
    assert_eq!(t.reply, REFORMULATE);
    assert_eq!((s.ctx.clone(), s.pending.clone()), before);
    let fresh = handle_utterance(&engine, &mut Session::new(today()), &mut store, "blarg");
    assert_eq!(fresh.reply, REFORMULATE);
}

#[test]
fn wrong_kind_of_answer_reasks() {
    let engine = Engine::standard();
    let mut s = Session::new(today());
    let mut store = EventStore::new();
    handle_utterance(&engine, &mut s, &mut store, "I want you to arrange a conference in my office at 5");
    let t = handle_utterance(&engine, &mut s, &mut store, "at 8");
    assert_eq!(t.reply, "On what date?");
    assert_eq!(s.pending.as_ref().unwrap().kind, QuestionKind::WhDate);
}

#[test]
fn fragment_coercion() {
    let engine = Engine::standard();
    let frame = SlotFrame {
        event_name: Some("a meeting".into()),
        participants: vec!["bob".into()],
        ..SlotFrame::new("schedule")
    };
    let ask = |kind| PendingQuestion { kind, frame: frame.clone() };
    let msg = |kind: QuestionKind, text: &str| {
        let mut ctx = mincal_core::context::DiscourseContext::after_question(kind.as_str());
        ctx.attends = Some("user".into());
        let r = engine.parse(&ctx, text);
        assert_eq!(r.len(), 1, "{text}");
        r[0].message.clone()
    };
    let got = interpret_fragment(&ask(QuestionKind::WhTime), &msg(QuestionKind::WhTime, "At 8.")).unwrap();
    assert_eq!(got.event_time, Some(avm("[ [hour [8 am_or_pm]] [minute 0] ]")));
    let got = interpret_fragment(
        &ask(QuestionKind::MeridiemChoice),
        &msg(QuestionKind::MeridiemChoice, "In the evening."),
    )
    .unwrap();
    assert_eq!(got.part_of_day.as_deref(), Some("evening"));
    assert!(interpret_fragment(&ask(QuestionKind::WhDate), &msg(QuestionKind::WhDate, "at 8")).is_none());
}

#[test]
fn question_choice() {
    let m = |s: &str| Pending::Missing(s.into());
    assert_eq!(next_question(&[m("event_date"), m("event_time")]), Some(QuestionKind::WhDateTime));
    assert_eq!(next_question(&[m("event_time")]), Some(QuestionKind::WhTime));
    assert_eq!(next_question(&[m("event_date")]), Some(QuestionKind::WhDate));
    assert_eq!(
        next_question(&[Pending::AmbiguousMeridiem("event_time".into())]),
        Some(QuestionKind::MeridiemChoice)
    );
    assert_eq!(next_question(&[]), None);
    assert_eq!(QuestionKind::WhDateTime.text(), "At what time and date?");
    assert_eq!(QuestionKind::WhTime.text(), "At what time?");
    assert_eq!(QuestionKind::MeridiemChoice.text(), "Morning or afternoon?");
}

#[test]
fn explicit_meridiem_answers_the_choice() {
    let engine = Engine::standard();
    let mut s = Session::new(today());
    let mut store = EventStore::new();
    handle_utterance(&engine, &mut s, &mut store, "schedule a meeting with bob on august 30 at 8");
    assert_eq!(s.pending.as_ref().unwrap().kind, QuestionKind::MeridiemChoice);
    let t = handle_utterance(&engine, &mut s, &mut store, "8 am");
    assert_eq!(t.events_changed.len(), 1, "{:?}", t.trace);
    assert_eq!(store.all()[0].time, hm(8, 0));
}

#[test]
fn new_command_abandons_pending_frame() {
    let engine = Engine::standard();
    let mut s = Session::new(today());
    let mut store = EventStore::new();
    handle_utterance(&engine, &mut s, &mut store, "schedule a meeting with bob");
    let t = handle_utterance(&engine, &mut s, &mut store, "schedule a lunch with alice tomorrow at noon");
    assert_eq!(t.events_changed.len(), 1, "{:?}", t.trace);
    let e = &store.all()[0];
    assert_eq!(e.participants, vec!["alice".to_string()]);
    assert_eq!(e.date, NaiveDate::from_ymd_opt(1994, 6, 2).unwrap());
}

#[test]
fn move_and_cancel_by_description() {
    let engine = Engine::standard();
    let mut store = EventStore::new();
    let d = NaiveDate::from_ymd_opt(1994, 8, 30).unwrap();
    let mut a = NewEvent::new("a meeting", d, hm(9, 0));
    a.participants = vec!["bob".into()];
    store.schedule(a).unwrap();
    store.schedule(NewEvent::new("a meeting", d, hm(15, 0))).unwrap();
    let mut s = Session::new(today());
    let t = handle_utterance(&engine, &mut s, &mut store, "move the meeting to 4 pm");
    assert_eq!(t.pending, Some(QuestionKind::EventRefChoice));
    assert!(t.reply.starts_with("Which one do you mean?"), "{}", t.reply);
    let t = handle_utterance(&engine, &mut s, &mut store, "at 3");
    assert_eq!(t.reply, "Moved a meeting to 1994-08-30 at 16:00.", "{:?}", t.trace);
    let t = handle_utterance(&engine, &mut s, &mut store, "cancel the meeting with bob");
    assert_eq!(t.reply, "Cancelled a meeting on 1994-08-30 at 09:00.", "{:?}", t.trace);
    assert_eq!(store.len(), 1);
    let t = handle_utterance(&engine, &mut s, &mut store, "cancel the conference");
    assert_eq!(t.reply, "I could not find the conference in the calendar.");
}

#[test]
fn sessions_are_isolated() {
    let engine = Engine::standard();
    let t: Transcript = data::SCHEDULE_TRANSCRIPT.parse().unwrap();
    let mut store = EventStore::new();
    let (mut a, mut b) = (Session::new(today()), Session::new(today()));
    for turn in &t.turns {
        let ra = handle_utterance(&engine, &mut a, &mut store, &turn.user);
        let rb = handle_utterance(&engine, &mut b, &mut store, &turn.user);
        if let Some(e) = &turn.expected {
            assert_eq!(&ra.reply, e);
            assert_eq!(&rb.reply, e);
        }
    }
    assert_eq!(store.len(), 2);
}

#[test]
fn transcript_format_errors() {
    assert!("S: hi".parse::<Transcript>().is_err());
    assert!("U: a\nS: b\nS: c".parse::<Transcript>().is_err());
    assert!("hello".parse::<Transcript>().is_err());
    assert!("# today: yesterday".parse::<Transcript>().is_err());
    let empty: Transcript = "".parse().unwrap();
    assert!(replay(&Engine::standard(), &empty, today(), &mut EventStore::new()).is_empty());
}
