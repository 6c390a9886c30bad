//! Data files shipped with the crate.
use crate::context::DiscourseContext;


/// The calendar construction grammar.
pub const CALENDAR_CG: &str = include_str!("../data/calendar.cg");
/// Calendar domain ontology and filters.
pub const CALENDAR_KB: &str = include_str!("../data/calendar.kb");
/// Application rules for the built-in calendar.
pub const APP_KB: &str = include_str!("../data/app.kb");

pub const SCHEDULE_TRANSCRIPT: &str = include_str!("../data/transcripts/schedule_with_bob.txt");

/// Utterances with the discourse context they are parsed in.
pub const CORPUS: &str = include_str!("../data/corpus.tsv");

/// Parses [`CORPUS`]-style text: `context<TAB>utterance` lines, where context
/// is `live`, `idle` or the kind of question just asked.
pub fn corpus(text: &str) -> Vec<(DiscourseContext, String)> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t'))
        .map(|(ctx, utt)| {
            let ctx = match ctx {
                "live" => DiscourseContext::live(),
                "idle" => DiscourseContext {
                    attends: None,
                    ..DiscourseContext::live()
                },
                kind => DiscourseContext::after_question(kind),
            };
            (ctx, utt.to_string())
        })
        .collect()
}
