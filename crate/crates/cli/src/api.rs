//! Error body shared by every HTTP endpoint.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use codehinter_core::assist::AssistError;
use codehinter_core::{PatchError, RunnerError, SessionError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            code: code.into(),
            message: message.into(),
            details: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new("bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new("internal", message)
    }

    pub fn status(&self) -> StatusCode {
        match self.code.as_str() {
            "bad_request" | "config_invalid" | "index_out_of_range" | "unknown_formula" | "empty_proposal" => {
                StatusCode::BAD_REQUEST
            }
            "reveal_gated" => StatusCode::FORBIDDEN,
            "not_found" | "unknown_proposal" | "unknown_file" => StatusCode::NOT_FOUND,
            "illegal_transition" | "snapshot_drift" | "stale_proposal" | "no_failing_tests" => StatusCode::CONFLICT,
            "source_too_large" => StatusCode::PAYLOAD_TOO_LARGE,
            "provider_unavailable" | "adapter_failure" | "trace_invalid" | "schema_mismatch" | "subject_mismatch" => {
                StatusCode::BAD_GATEWAY
            }
            "timeout" => StatusCode::GATEWAY_TIMEOUT,
            "io_error" | "corrupt_log" | "internal" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

fn details(e: &SessionError) -> Option<Value> {
    match e {
        SessionError::IllegalTransition { state, event } => Some(json!({ "state": state, "event": event })),
        SessionError::RevealGated { runs, helper_uses } => Some(json!({ "runs": runs, "helper_uses": helper_uses })),
        SessionError::CorruptLog { line, .. } => Some(json!({ "line": line })),
        _ => None,
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError {
            code: e.code().to_string(),
            message: e.to_string(),
            details: details(&e),
        }
    }
}

impl From<AssistError> for ApiError {
    fn from(e: AssistError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

impl From<RunnerError> for ApiError {
    fn from(e: RunnerError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

impl From<PatchError> for ApiError {
    fn from(e: PatchError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}
