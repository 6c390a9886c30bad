//! Discourse context consulted by construction context constraints.

use serde::Serialize;

use crate::avm::{Avm, Term, Value};

/// The discourse state a parse runs under.
///
/// Context constraints address it as an AVM (see [`DiscourseContext::to_avm`]):
/// `<hr attends>`, `<p_utter cons_n>`, `<lang_code>`, `<lang_channel>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscourseContext {
    /// The hearer; the system in this application.
    pub hr: String,
    /// The speaker; the user.
    pub sr: String,
    /// Whom the hearer is paying attention to. `Some(sr)` while a session is live.
    pub attends: Option<String>,
    /// Construction name of the previous utterance, e.g. `sent(ques, wh_time)`.
    #[serde(serialize_with = "ser_term")]
    pub p_utter: Option<Term>,
    pub lang_code: String,
    pub lang_channel: String,
}

fn ser_term<S: serde::Serializer>(t: &Option<Term>, s: S) -> Result<S::Ok, S::Error> {
    match t {
        Some(t) => s.serialize_some(&t.to_string()),
        None => s.serialize_none(),
    }
}

impl Default for DiscourseContext {
    fn default() -> Self {
        DiscourseContext::live()
    }
}

impl DiscourseContext {
    /// A fresh session: the hearer attends to the speaker, nothing said yet,
    /// English text.
    pub fn live() -> Self {
        DiscourseContext {
            hr: "system".into(),
            sr: "user".into(),
            attends: Some("user".into()),
            p_utter: None,
            lang_code: "english".into(),
            lang_channel: "text".into(),
        }
    }

    /// Context right after the system asked a question of the given kind.
    pub fn after_question(kind: &str) -> Self {
        DiscourseContext {
            p_utter: Some(Term::new("sent", vec![Value::atom("ques"), Value::atom(kind)])),
            ..DiscourseContext::live()
        }
    }

    pub fn to_avm(&self) -> Avm {
        let mut hr = Avm::new().with("id", self.hr.as_str());
        if let Some(a) = &self.attends {
            hr.insert("attends", a.as_str());
        }
        let mut ctx = Avm::new()
            .with("hr", hr)
            .with("sr", Avm::new().with("id", self.sr.as_str()))
            .with("lang_code", self.lang_code.as_str())
            .with("lang_channel", self.lang_channel.as_str());
        if let Some(p) = &self.p_utter {
            ctx.insert("p_utter", Avm::new().with("cons_n", p.clone()));
        }
        ctx
    }
}
