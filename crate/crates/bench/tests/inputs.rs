use chrono::NaiveDate;
use mincal_bench::{fragments, DIALOG, SENTENCES};
use mincal_core::calendar::EventStore;
use mincal_core::context::DiscourseContext;
use mincal_core::dialog::{handle_utterance, Engine, Session};

#[test]
fn sentences_and_fragments_parse() {
    let e = Engine::standard();
    for s in SENTENCES {
        assert!(!e.parse(&DiscourseContext::live(), s).is_empty(), "{s}");
    }
    for (ctx, s) in fragments() {
        assert!(!e.parse(&ctx, s).is_empty(), "{s}");
    }
}

#[test]
fn dialog_schedules_one_event() {
    let e = Engine::standard();
    let mut session = Session::new(NaiveDate::from_ymd_opt(1994, 6, 1).unwrap());
    let mut store = EventStore::new();
    for turn in DIALOG {
        handle_utterance(&e, &mut session, &mut store, turn);
    }
    assert_eq!(store.all().len(), 1);
}
