//! Inputs shared by the benchmarks.

use mincal_core::context::DiscourseContext;
use mincal_core::dialog::QuestionKind;

/// Sentences of increasing length, each with at least one reading in a
/// fresh session.
pub const SENTENCES: &[&str] = &[
    "schedule a meeting",
    "schedule a meeting with bob",
    "cancel the meeting with bob on friday",
    "i want to meet my manager in the cafeteria",
    "I want you to arrange a conference in my office at 5",
    "schedule a meeting with bob in the cafeteria tomorrow at 3 pm",
];

/// Replies given while a question is pending.
pub fn fragments() -> Vec<(DiscourseContext, &'static str)> {
    vec![
        (DiscourseContext::after_question(QuestionKind::WhDate.as_str()), "on august 30th"),
        (DiscourseContext::after_question(QuestionKind::WhTime.as_str()), "at 8"),
        (DiscourseContext::after_question(QuestionKind::MeridiemChoice.as_str()), "in the evening"),
    ]
}

/// The scheduling dialog, one user turn per entry.
pub const DIALOG: &[&str] = &["Schedule a meeting with Bob!", "On August 30th.", "At 8.", "In the evening."];
