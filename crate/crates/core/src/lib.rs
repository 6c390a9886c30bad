//! Construction-grammar understanding for a calendar assistant.
//!
//! Utterances are parsed against a grammar of form/meaning pairs under a
//! discourse context ([`parser`]), interpreted into slot frames with a domain
//! ontology ([`domain`]), mapped onto calendar operations by application rules
//! ([`app`]) and driven turn by turn by the dialog manager ([`dialog`]).

pub mod app;
pub mod avm;
pub mod calendar;
pub mod context;
pub mod data;
pub mod dialog;
pub mod domain;
pub mod generate;
pub mod grammar;
pub mod parser;
pub mod sexp;

pub use app::{AppRequest, AppRules, Pending, TimeResolution};
pub use avm::{Avm, Term, Value};
pub use calendar::{CalendarEvent, EventStore, NewEvent};
pub use context::DiscourseContext;
pub use dialog::{handle_utterance, DialogTurn, Engine, QuestionKind, Session, Transcript};
pub use domain::{Ontology, SlotFrame};
pub use grammar::Grammar;
pub use parser::{parse, tokenize, Reading};
