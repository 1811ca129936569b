//! The service's wire-level error shape.
//!
//! Every non-2xx response carries `{"error": <machine code>, "message":
//! <human text>}`. Ledger-level failures map onto a small set of codes so
//! clients can branch without parsing prose.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lcaas_core::{ChainError, LedgerError};
use serde::Serialize;

/// A response-ready error: status code plus the JSON body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, error, message: message.into() }
    }

    pub fn invalid_digest(detail: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_digest", detail.to_string())
    }

    pub fn empty_body() -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "empty_body", "request body must not be empty")
    }

    pub fn too_large(max_bytes: usize) -> Self {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "too_large",
            format!("request body exceeds the configured maximum of {max_bytes} bytes"),
        )
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", what.to_string())
    }
}

impl From<LedgerError> for ApiError {
    fn from(e: LedgerError) -> Self {
        match e {
            // An empty open chain only surfaces through the manual seal
            // endpoint; everything else chain-shaped is an internal bug.
            LedgerError::Chain(ChainError::Empty { .. }) => {
                ApiError::new(StatusCode::CONFLICT, "empty_chain", e.to_string())
            }
            LedgerError::Store(_) => ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "ledger_unavailable",
                e.to_string(),
            ),
            LedgerError::Chain(_) | LedgerError::Anchor(_) | LedgerError::ReceiptConflict(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status;
        (status, Json(self)).into_response()
    }
}
