use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::NaiveDate;
use mincal_core::calendar::EventStore;
use mincal_core::data;
use mincal_core::dialog::{replay, Engine, Transcript};
use mincal_service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(1994, 6, 1).unwrap()
}

fn app() -> Router {
    router(AppState::new(Engine::standard(), EventStore::new(), Some(today())))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), 1 << 20).await.unwrap();
    let v = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, v)
}

async fn new_session(app: &Router) -> String {
    let (status, v) = call(app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    v["session_id"].as_str().unwrap().to_string()
}

async fn say(app: &Router, id: &str, text: &str) -> (StatusCode, Value) {
    call(app, "POST", &format!("/sessions/{id}/utterances"), Some(json!({ "text": text }))).await
}

#[tokio::test]
async fn health() {
    let (status, v) = call(&app(), "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, Value::String("ok".into()));
}

#[tokio::test]
async fn sessions_are_distinct() {
    let app = app();
    assert_ne!(new_session(&app).await, new_session(&app).await);
}

#[tokio::test]
async fn first_turn_asks_for_time_and_date() {
    let app = app();
    let id = new_session(&app).await;
    let (status, v) = say(&app, &id, "Schedule a meeting with Bob!").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["reply"], "At what time and date?");
    assert_eq!(v["pending"], "wh_date_time");
    assert_eq!(v["frame"]["participants"], json!(["bob"]));
    assert_eq!(v["events_changed"], json!([]));
}

#[tokio::test]
async fn scripted_dialog_books_the_meeting() {
    let app = app();
    let id = new_session(&app).await;
    let t: Transcript = data::SCHEDULE_TRANSCRIPT.parse().unwrap();
    let expected = replay(&Engine::standard(), &t, today(), &mut EventStore::new());
    let mut last = Value::Null;
    for (turn, cli) in t.turns.iter().zip(&expected) {
        let (status, v) = say(&app, &id, &turn.user).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(v["reply"], cli.actual.as_str());
        last = v;
    }
    assert_eq!(last["pending"], Value::Null);
    assert_eq!(last["events_changed"].as_array().unwrap().len(), 1);

    let (status, events) = call(&app, "GET", "/calendar/events?from=1994-08-30&to=1994-08-30", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(events.as_array().unwrap().len(), 1);
    assert_eq!(events[0]["date"], "1994-08-30");
    assert_eq!(events[0]["time"], "20:00");
    assert_eq!(events[0]["participants"], json!(["bob"]));
    let (_, none) = call(&app, "GET", "/calendar/events?from=1994-09-01&to=1994-12-31", None).await;
    assert_eq!(none, json!([]));
}

#[tokio::test]
async fn interleaved_sessions_stay_separate() {
    let app = app();
    let (a, b) = (new_session(&app).await, new_session(&app).await);
    let t: Transcript = data::SCHEDULE_TRANSCRIPT.parse().unwrap();
    for turn in &t.turns {
        let (_, ra) = say(&app, &a, &turn.user).await;
        let (_, rb) = say(&app, &b, &turn.user).await;
        if let Some(e) = &turn.expected {
            assert_eq!(ra["reply"], e.as_str());
            assert_eq!(rb["reply"], e.as_str());
        }
    }
    let (_, events) = call(&app, "GET", "/calendar/events", None).await;
    assert_eq!(events.as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn concurrent_sessions() {
    let app = app();
    let t: Transcript = data::SCHEDULE_TRANSCRIPT.parse().unwrap();
    let mut handles = Vec::new();
    for _ in 0..4 {
        let app = app.clone();
        let t = t.clone();
        handles.push(tokio::spawn(async move {
            let id = new_session(&app).await;
            let mut replies = Vec::new();
            for turn in &t.turns {
                replies.push(say(&app, &id, &turn.user).await.1["reply"].clone());
            }
            replies
        }));
    }
    let mut all = Vec::new();
    for h in handles {
        all.push(h.await.unwrap());
    }
    // the bookings collide, so only the questions are identical across sessions
    let questions = |r: &Vec<Value>| r[..r.len() - 1].to_vec();
    assert!(all.windows(2).all(|w| questions(&w[0]) == questions(&w[1])));
    assert!(all.iter().all(|r| r.last().unwrap().as_str().unwrap().starts_with("Scheduled a meeting with bob")));
    let (_, events) = call(&app, "GET", "/calendar/events", None).await;
    assert_eq!(events.as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn request_errors() {
    let app = app();
    let (status, v) = say(&app, "00000000-0000-0000-0000-000000000000", "hi").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(v["error"].is_string());
    assert_eq!(say(&app, "not-a-uuid", "hi").await.0, StatusCode::NOT_FOUND);
    let id = new_session(&app).await;
    assert_eq!(say(&app, &id, "   ").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(
        call(&app, "GET", "/calendar/events?from=yesterday", None).await.0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        call(&app, "GET", "/calendar/events?from=1994-09-01&to=1994-08-01", None).await.0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        call(&app, "POST", "/sessions", Some(json!({ "today": "soon" }))).await.0,
        StatusCode::BAD_REQUEST
    );
    let (status, v) = call(&app, "POST", "/sessions", Some(json!({ "today": "1994-06-01" }))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert!(v["session_id"].is_string());
}

#[tokio::test]
async fn empty_calendar() {
    let (status, v) = call(&app(), "GET", "/calendar/events", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!([]));
}

#[tokio::test]
async fn no_parse_keeps_session_usable() {
    let app = app();
    let id = new_session(&app).await;
    let (_, v) = say(&app, &id, "blarg").await;
    assert_eq!(v["reply"], mincal_core::dialog::REFORMULATE);
    let (_, v) = say(&app, &id, "Schedule a meeting with Bob!").await;
    assert_eq!(v["reply"], "At what time and date?");
}
