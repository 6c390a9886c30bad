//! HTTP session API over the dialog engine. See `API.md` for the wire format.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use mincal_core::calendar::{CalendarEvent, EventStore};
use mincal_core::dialog::{handle_utterance, Engine, QuestionKind, Session};
use mincal_core::domain::SlotFrame;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

/// Shared server state. Sessions live in memory only; the calendar is the
/// store the server was started with.
#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    store: Arc<Mutex<EventStore>>,
    sessions: Arc<Mutex<HashMap<Uuid, Arc<tokio::sync::Mutex<Session>>>>>,
    today: Option<NaiveDate>,
}

impl AppState {
    /// `today` fixes the session date; `None` uses the local clock.
    pub fn new(engine: Engine, store: EventStore, today: Option<NaiveDate>) -> AppState {
        AppState {
            engine: Arc::new(engine),
            store: Arc::new(Mutex::new(store)),
            sessions: Arc::new(Mutex::new(HashMap::new())),
            today,
        }
    }

    fn today(&self) -> NaiveDate {
        self.today.unwrap_or_else(|| chrono::Local::now().date_naive())
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

#[derive(Debug, Default, Deserialize)]
pub struct NewSession {
    /// `YYYY-MM-DD`; overrides the server's notion of today for this session.
    #[serde(default)]
    pub today: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SessionCreated {
    pub session_id: String,
}

#[derive(Debug, Deserialize)]
pub struct Utterance {
    pub text: String,
}

#[derive(Debug, Serialize)]
pub struct ReplyBody {
    pub reply: String,
    pub pending: Option<QuestionKind>,
    pub frame: Option<SlotFrame>,
    pub events_changed: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct Range {
    pub from: Option<String>,
    pub to: Option<String>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/utterances", post(post_utterance))
        .route("/calendar/events", get(get_events))
        .with_state(state)
}

async fn create_session(State(st): State<AppState>, body: Option<Json<NewSession>>) -> Response {
    let today = match body.and_then(|Json(b)| b.today) {
        None => st.today(),
        Some(d) => match d.parse::<NaiveDate>() {
            Ok(d) => d,
            Err(_) => return error(StatusCode::BAD_REQUEST, format!("bad date `{d}`, expected YYYY-MM-DD")),
        },
    };
    let id = Uuid::new_v4();
    let session = Arc::new(tokio::sync::Mutex::new(Session::new(today)));
    st.sessions.lock().expect("session table").insert(id, session);
    log::info!("session {id} opened");
    (
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: id.to_string(),
        }),
    )
        .into_response()
}

async fn post_utterance(State(st): State<AppState>, Path(id): Path<String>, Json(body): Json<Utterance>) -> Response {
    let session = Uuid::parse_str(&id)
        .ok()
        .and_then(|id| st.sessions.lock().expect("session table").get(&id).cloned());
    let Some(session) = session else {
        return error(StatusCode::NOT_FOUND, format!("no session {id}"));
    };
    if body.text.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "empty utterance");
    }
    // holding the session lock keeps one session's turns in arrival order
    let mut session = session.lock().await;
    let turn = {
        let mut store = st.store.lock().expect("calendar");
        handle_utterance(&st.engine, &mut session, &mut store, &body.text)
    };
    Json(ReplyBody {
        reply: turn.reply,
        pending: turn.pending,
        frame: turn.frame,
        events_changed: turn.events_changed,
    })
    .into_response()
}

async fn get_events(State(st): State<AppState>, Query(range): Query<Range>) -> Response {
    let date = |s: &Option<String>, default: NaiveDate| match s {
        None => Ok(default),
        Some(s) => s.parse::<NaiveDate>().map_err(|_| format!("bad date `{s}`, expected YYYY-MM-DD")),
    };
    let (from, to) = match (date(&range.from, NaiveDate::MIN), date(&range.to, NaiveDate::MAX)) {
        (Ok(f), Ok(t)) if f <= t => (f, t),
        (Err(e), _) | (_, Err(e)) => return error(StatusCode::BAD_REQUEST, e),
        _ => return error(StatusCode::BAD_REQUEST, "`from` is after `to`"),
    };
    let events: Vec<CalendarEvent> = st.store.lock().expect("calendar").query(from, to);
    Json(events).into_response()
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
