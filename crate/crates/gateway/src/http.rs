use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;

use crate::error::GatewayError;
use crate::service::{Service, SosKind, VitalsInput};

type Shared = State<Arc<Service>>;
type Reply = Result<Json<Value>, GatewayError>;

#[derive(Deserialize)]
struct ChatBody {
    user_id: String,
    text: String,
    #[serde(default)]
    session_id: Option<String>,
}

#[derive(Deserialize)]
struct VitalsBody {
    user_id: String,
    #[serde(flatten)]
    sample: VitalsInput,
}

#[derive(Deserialize)]
struct SosBody {
    user_id: String,
    kind: SosKind,
}

#[derive(Deserialize)]
struct PrescriptionBody {
    user_id: String,
    text: String,
}

#[derive(Deserialize)]
struct UserQuery {
    user_id: String,
}

#[derive(Deserialize)]
struct ReportQuery {
    user_id: String,
    #[serde(default)]
    date: Option<NaiveDate>,
}

#[derive(Deserialize)]
struct FilterQuery {
    #[serde(default)]
    user_id: Option<String>,
}

#[derive(Deserialize)]
struct LogQuery {
    #[serde(default)]
    from: usize,
}

fn body<T>(r: Result<Json<T>, JsonRejection>) -> Result<T, GatewayError> {
    r.map(|Json(v)| v).map_err(|e| GatewayError::BadRequest(e.body_text()))
}

fn query<T>(r: Result<Query<T>, QueryRejection>) -> Result<T, GatewayError> {
    r.map(|Query(v)| v).map_err(|e| GatewayError::BadRequest(e.body_text()))
}

/// Runs a service call on the blocking pool; sessions may wait on the model.
async fn blocking<T: serde::Serialize + Send + 'static>(
    svc: Arc<Service>,
    f: impl FnOnce(&Service) -> Result<T, GatewayError> + Send + 'static,
) -> Reply {
    let out = tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| GatewayError::Internal(e.to_string()))??;
    serde_json::to_value(out).map(Json).map_err(|e| GatewayError::Internal(e.to_string()))
}

async fn chat(State(svc): Shared, b: Result<Json<ChatBody>, JsonRejection>) -> Reply {
    let b = body(b)?;
    blocking(svc, move |s| s.chat(&b.user_id, &b.text, b.session_id.as_deref())).await
}

async fn vitals(State(svc): Shared, b: Result<Json<VitalsBody>, JsonRejection>) -> Reply {
    let b = body(b)?;
    blocking(svc, move |s| s.vitals(&b.user_id, b.sample)).await
}

async fn sos(State(svc): Shared, b: Result<Json<SosBody>, JsonRejection>) -> Reply {
    let b = body(b)?;
    blocking(svc, move |s| s.sos(&b.user_id, b.kind)).await
}

async fn prescription(State(svc): Shared, b: Result<Json<PrescriptionBody>, JsonRejection>) -> Reply {
    let b = body(b)?;
    blocking(svc, move |s| s.prescription(&b.user_id, &b.text)).await
}

async fn reminders(State(svc): Shared, q: Result<Query<UserQuery>, QueryRejection>) -> Reply {
    let q = query(q)?;
    blocking(svc, move |s| s.reminders(&q.user_id)).await
}

async fn report(State(svc): Shared, q: Result<Query<ReportQuery>, QueryRejection>) -> Reply {
    let q = query(q)?;
    blocking(svc, move |s| s.report(&q.user_id, q.date)).await
}

async fn sessions(State(svc): Shared, q: Result<Query<FilterQuery>, QueryRejection>) -> Reply {
    let q = query(q)?;
    blocking(svc, move |s| Ok(s.sessions(q.user_id.as_deref()))).await
}

async fn session_log(
    State(svc): Shared,
    Path(id): Path<String>,
    q: Result<Query<LogQuery>, QueryRejection>,
) -> Reply {
    let q = query(q)?;
    blocking(svc, move |s| s.session_log(&id, q.from)).await
}

async fn messages(State(svc): Shared) -> Reply {
    blocking(svc, |s| Ok(s.messages())).await
}

async fn notifications(State(svc): Shared, q: Result<Query<FilterQuery>, QueryRejection>) -> Reply {
    let q = query(q)?;
    blocking(svc, move |s| Ok(s.notifications(q.user_id.as_deref()))).await
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

pub fn router(svc: Arc<Service>) -> Router {
    Router::new()
        .route("/chat", post(chat))
        .route("/vitals", post(vitals))
        .route("/sos", post(sos))
        .route("/prescription", post(prescription))
        .route("/reminders", get(reminders))
        .route("/report", get(report))
        .route("/sessions", get(sessions))
        .route("/sessions/{id}/log", get(session_log))
        .route("/messages", get(messages))
        .route("/notifications", get(notifications))
        .route("/health", get(health))
        .with_state(svc)
}

pub async fn bind(host: &str, port: u16) -> anyhow::Result<TcpListener> {
    TcpListener::bind((host, port))
        .await
        .with_context(|| format!("cannot listen on {host}:{port}"))
}

/// Serves until ctrl-c, ticking the reminder scheduler every `tick`.
pub async fn serve(svc: Arc<Service>, listener: TcpListener, tick: Duration) -> anyhow::Result<()> {
    let ticker = svc.clone();
    let scheduler = tokio::spawn(async move {
        let mut interval = tokio::time::interval(tick.max(Duration::from_secs(1)));
        loop {
            interval.tick().await;
            let svc = ticker.clone();
            match tokio::task::spawn_blocking(move || svc.tick()).await {
                Ok(fired) if !fired.is_empty() => tracing::info!(count = fired.len(), "reminders fired"),
                Ok(_) => {}
                Err(e) => tracing::error!(error = %e, "scheduler tick panicked"),
            }
        }
    });
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let served = axum::serve(listener, router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    scheduler.abort();
    served.context("server error")
}
