use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

use crate::session::SessionHandle;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("user {0} has no active SOS")]
    NoActiveSos(String),
    #[error("prescription is empty")]
    EmptyPrescription,
    #[error("no session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` is not waiting for an answer")]
    NotAwaiting(String),
    #[error("session `{}` failed: {}", .0.session_id, .0.error.as_deref().unwrap_or("unknown error"))]
    SessionFailed(Box<SessionHandle>),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::UnknownUser(_) => "unknown_user",
            GatewayError::NoActiveSos(_) => "no_active_sos",
            GatewayError::EmptyPrescription => "empty_prescription",
            GatewayError::UnknownSession(_) => "unknown_session",
            GatewayError::NotAwaiting(_) => "not_awaiting",
            GatewayError::SessionFailed(_) => "session_failed",
            GatewayError::BadRequest(_) => "bad_request",
            GatewayError::Internal(_) => "internal",
        }
    }

    fn status(&self) -> StatusCode {
        match self {
            GatewayError::UnknownUser(_) | GatewayError::UnknownSession(_) => StatusCode::NOT_FOUND,
            GatewayError::NoActiveSos(_) | GatewayError::NotAwaiting(_) => StatusCode::CONFLICT,
            GatewayError::EmptyPrescription | GatewayError::BadRequest(_) => StatusCode::UNPROCESSABLE_ENTITY,
            GatewayError::SessionFailed(_) => StatusCode::BAD_GATEWAY,
            GatewayError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.code(), "message": self.to_string()});
        if let GatewayError::SessionFailed(handle) = &self {
            body["session"] = serde_json::to_value(handle).unwrap_or_default();
        }
        (self.status(), Json(body)).into_response()
    }
}
