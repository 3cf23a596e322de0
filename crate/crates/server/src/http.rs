//! HTTP+JSON routes over [`SessionService`].

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::broadcast::error::RecvError;

use crate::service::{IrKind, ServiceError, SessionService};

type Svc = Arc<SessionService>;

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let e = self.0;
        let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut body = json!({"error": e.code(), "message": e.to_string()});
        if let Some(stage) = e.stage() {
            body["stage"] = stage.into();
        }
        if let Some(report) = e.report() {
            body["report"] = serde_json::to_value(report).unwrap_or_default();
        }
        (status, Json(body)).into_response()
    }
}

fn bad_request(message: impl Into<String>) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({"error": "bad_request", "message": message.into()}))).into_response()
}

/// Runs a blocking service call off the async workers.
async fn blocking<T, F>(svc: &Svc, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&SessionService) -> Result<T, ServiceError> + Send + 'static,
{
    let svc = svc.clone();
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .expect("service call panicked")
        .map_err(ApiError)
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct CreateBody {
    app_name: Option<String>,
}

#[derive(Deserialize)]
struct MessageBody {
    text: String,
}

async fn create(State(svc): State<Svc>, body: Bytes) -> Response {
    let parsed: CreateBody = if body.iter().all(u8::is_ascii_whitespace) {
        CreateBody::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(b) => b,
            Err(e) => return bad_request(e.to_string()),
        }
    };
    match blocking(&svc, move |s| s.create(parsed.app_name.as_deref())).await {
        Ok(summary) => (StatusCode::CREATED, Json(summary)).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn list(State(svc): State<Svc>) -> Result<Response, ApiError> {
    let ids = blocking(&svc, |s| s.list()).await?;
    Ok(Json(json!({"sessions": ids})).into_response())
}

async fn summary(State(svc): State<Svc>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(blocking(&svc, move |s| s.summary(&id)).await?).into_response())
}

async fn message(State(svc): State<Svc>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let text = match serde_json::from_slice::<MessageBody>(&body) {
        Ok(b) => b.text,
        Err(e) => return Ok(bad_request(e.to_string())),
    };
    Ok(Json(blocking(&svc, move |s| s.post_message(&id, &text)).await?).into_response())
}

fn ir_kind(path: &str) -> Result<IrKind, ApiError> {
    IrKind::parse(path).ok_or_else(|| ApiError(ServiceError::Missing(format!("no IR at '{path}'"))))
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn get_ir(State(svc): State<Svc>, Path((id, kind)): Path<(String, String)>) -> Result<Response, ApiError> {
    let kind = ir_kind(&kind)?;
    Ok(json_text(blocking(&svc, move |s| s.get_ir(&id, &kind)).await?))
}

async fn get_skeleton(State(svc): State<Svc>, Path((id, view)): Path<(String, String)>) -> Result<Response, ApiError> {
    Ok(json_text(blocking(&svc, move |s| s.get_ir(&id, &IrKind::Skeleton(view))).await?))
}

async fn put(svc: Svc, id: String, kind: IrKind, body: Bytes) -> Result<Response, ApiError> {
    let Ok(text) = String::from_utf8(body.to_vec()) else {
        return Ok(bad_request("body is not UTF-8"));
    };
    Ok(Json(blocking(&svc, move |s| s.put_ir(&id, &kind, &text)).await?).into_response())
}

async fn put_ir(
    State(svc): State<Svc>,
    Path((id, kind)): Path<(String, String)>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let kind = ir_kind(&kind)?;
    put(svc, id, kind, body).await
}

async fn put_skeleton(
    State(svc): State<Svc>,
    Path((id, view)): Path<(String, String)>,
    body: Bytes,
) -> Result<Response, ApiError> {
    put(svc, id, IrKind::Skeleton(view), body).await
}

async fn generate(State(svc): State<Svc>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(blocking(&svc, move |s| s.generate(&id)).await?).into_response())
}

async fn export(State(svc): State<Svc>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let (bytes, app) = blocking(&svc, move |s| {
        let app = s.get(&id)?.app_name;
        Ok((s.export(&id)?, app))
    })
    .await?;
    let disposition = format!("attachment; filename=\"{}.zip\"", app.replace('"', ""));
    Ok((
        [(header::CONTENT_TYPE, "application/zip".to_string()), (header::CONTENT_DISPOSITION, disposition)],
        bytes,
    )
        .into_response())
}

async fn report(State(svc): State<Svc>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(blocking(&svc, move |s| s.report(&id)).await?).into_response())
}

async fn events(
    State(svc): State<Svc>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = blocking(&svc, move |s| s.subscribe(&id)).await?;
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(step) => {
                    let event = Event::default().event("step").json_data(&step).unwrap_or_default();
                    return Some((Ok(event), rx));
                }
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(summary))
        .route("/sessions/{id}/messages", post(message))
        .route("/sessions/{id}/ir/{kind}", get(get_ir).put(put_ir))
        .route("/sessions/{id}/ir/skeletons/{view}", get(get_skeleton).put(put_skeleton))
        .route("/sessions/{id}/generate", post(generate))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/report", get(report))
        .route("/sessions/{id}/events", get(events))
        .with_state(service)
}

/// Serves until the listener fails or the process ends.
pub async fn serve(listener: tokio::net::TcpListener, service: Arc<SessionService>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
