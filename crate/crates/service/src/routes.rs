//! The HTTP surface: ingestion, sealing, and the audit read side.
//!
//! Writes (`/digests`, `/logs`, `/seal`) take the ledger's write lock, so
//! they serialize; every acknowledged response corresponds to exactly one
//! durably appended block. The verification endpoint deliberately ignores
//! in-memory state and re-reads the files, so its verdict covers what is
//! actually on disk.

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{Request, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lcaas_core::{
    audit_digest, compute_hash, verify_circled, AnchorReceipt, AnchorTicket, Block, ChainReport,
    DigestAudit, Hash, Submission,
};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::state::AppState;

/// Builds the full API router over `state`.
pub fn router(state: AppState) -> Router {
    let max_body = state.max_body_bytes;
    Router::new()
        .route("/api/v1/digests", post(submit_digest))
        .route("/api/v1/logs", post(submit_log))
        .route("/api/v1/seal", post(seal))
        .route("/api/v1/verify/digest/{digest}", get(verify_digest))
        .route("/api/v1/chains/{id}", get(get_chain))
        .route("/api/v1/superchain", get(get_super_chain))
        .route("/api/v1/receipts/{ticket_id}", get(get_receipt))
        .layer(middleware::from_fn(log_request))
        .layer(DefaultBodyLimit::max(max_body))
        .with_state(state)
}

/// One JSON line per request on standard output.
async fn log_request(request: Request<axum::body::Body>, next: Next) -> Response {
    let method = request.method().clone();
    let path = request.uri().path().to_string();
    let started = std::time::Instant::now();
    let response = next.run(request).await;
    let line = serde_json::json!({
        "ts_ms": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0),
        "method": method.as_str(),
        "path": path,
        "status": response.status().as_u16(),
        "duration_us": started.elapsed().as_micros() as u64,
    });
    println!("{line}");
    response
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DigestRequest {
    digest: String,
}

/// Wire shape of an accepted submission.
#[derive(Debug, Serialize)]
pub struct SubmissionResponse {
    pub digest: Hash,
    pub chain_id: u64,
    pub block_index: u64,
    /// `sealed` when this submission filled the chain and triggered
    /// rotation, `open` otherwise.
    pub chain_state: ChainState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sb_index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor_ticket: Option<AnchorTicket>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainState {
    Open,
    Sealed,
}

impl From<Submission> for SubmissionResponse {
    fn from(s: Submission) -> Self {
        SubmissionResponse {
            digest: s.digest,
            chain_id: s.chain_id,
            block_index: s.block_index,
            chain_state: if s.sealed { ChainState::Sealed } else { ChainState::Open },
            sb_index: s.sb_index,
            anchor_ticket: s.ticket,
        }
    }
}

async fn ingest(state: &AppState, digest: Hash) -> Result<Json<SubmissionResponse>, ApiError> {
    let mut ledger = state.ledger.write().await;
    let now = state.clock.now_ms();
    let submission = ledger.submit_digest(digest, now, state.anchor_with())?;
    Ok(Json(submission.into()))
}

async fn submit_digest(
    State(state): State<AppState>,
    Json(request): Json<DigestRequest>,
) -> Result<Json<SubmissionResponse>, ApiError> {
    let digest = Hash::from_hex(&request.digest).map_err(ApiError::invalid_digest)?;
    ingest(&state, digest).await
}

async fn submit_log(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<SubmissionResponse>, ApiError> {
    let bytes = match body {
        Ok(bytes) => bytes,
        Err(rejection) => {
            let status = rejection.into_response().status();
            return Err(if status == StatusCode::PAYLOAD_TOO_LARGE {
                ApiError::too_large(state.max_body_bytes)
            } else {
                ApiError::new(StatusCode::BAD_REQUEST, "bad_body", "could not read request body")
            });
        }
    };
    if bytes.is_empty() {
        return Err(ApiError::empty_body());
    }
    // Digest-only storage: the raw body is hashed and dropped.
    ingest(&state, compute_hash(&bytes)).await
}

async fn seal(State(state): State<AppState>) -> Result<Json<lcaas_core::SealOutcome>, ApiError> {
    let mut ledger = state.ledger.write().await;
    let now = state.clock.now_ms();
    let outcome = ledger.seal_open_chain(now, state.anchor_with())?;
    Ok(Json(outcome))
}

async fn verify_digest(
    State(state): State<AppState>,
    Path(digest): Path<String>,
) -> Result<Response, ApiError> {
    let digest = Hash::from_hex(&digest).map_err(ApiError::invalid_digest)?;
    // Hold the read lock across the disk re-read so no writer interleaves.
    let ledger = state.ledger.read().await;
    let report: DigestAudit = audit_digest(ledger.root(), &digest);
    if report.audit.readable && !report.found {
        return Err(ApiError::not_found(format!("digest {digest} is not stored here")));
    }
    Ok(Json(report).into_response())
}

/// A chain (circled or super) with its live verification verdict.
#[derive(Debug, Serialize)]
pub struct ChainResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_n: Option<u64>,
    pub sealed: bool,
    pub blocks: Vec<Block>,
    pub verification: ChainReport,
}

async fn get_chain(
    State(state): State<AppState>,
    Path(id): Path<u64>,
) -> Result<Json<ChainResponse>, ApiError> {
    let ledger = state.ledger.read().await;
    let chain = ledger
        .chains()
        .get(id as usize)
        .ok_or_else(|| ApiError::not_found(format!("no circled chain with id {id}")))?;
    Ok(Json(ChainResponse {
        chain_id: Some(chain.chain_id),
        capacity_n: Some(chain.capacity_n),
        sealed: chain.sealed,
        blocks: chain.blocks.clone(),
        verification: verify_circled(chain),
    }))
}

async fn get_super_chain(State(state): State<AppState>) -> Json<ChainResponse> {
    let ledger = state.ledger.read().await;
    let super_chain = ledger.super_chain();
    Json(ChainResponse {
        chain_id: None,
        capacity_n: None,
        sealed: false,
        blocks: super_chain.blocks.clone(),
        verification: lcaas_core::verify_super_chain(super_chain),
    })
}

#[derive(Debug, Serialize)]
pub struct ReceiptResponse {
    pub ticket: AnchorTicket,
    pub sb_index: u64,
    pub status: ReceiptStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receipt: Option<AnchorReceipt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superseded_by: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiptStatus {
    Pending,
    Confirmed,
    /// A later ticket was submitted for the same super block; this one
    /// will never confirm here.
    Superseded,
}

async fn get_receipt(
    State(state): State<AppState>,
    Path(ticket_id): Path<String>,
) -> Result<Json<ReceiptResponse>, ApiError> {
    // The lookup may confirm and persist a receipt, so take the write lock.
    let mut ledger = state.ledger.write().await;
    let entry = ledger
        .receipts()
        .get(&ticket_id)
        .ok_or_else(|| ApiError::not_found(format!("no anchoring ticket {ticket_id}")))?
        .clone();

    let mut receipt = entry.receipt.clone();
    if receipt.is_none() && entry.superseded_by.is_none() {
        // This ticket is the live one for its super block; poll it (and
        // persist the receipt if it just confirmed).
        if let Some(backend) = state.anchor.as_deref() {
            let polled = ledger.poll_sb(backend, entry.sb_index, state.clock.now_ms())?;
            receipt = polled.filter(|r| r.ticket_id == ticket_id);
        }
    }

    let status = if receipt.is_some() {
        ReceiptStatus::Confirmed
    } else if entry.superseded_by.is_some() {
        ReceiptStatus::Superseded
    } else {
        ReceiptStatus::Pending
    };
    Ok(Json(ReceiptResponse {
        ticket: entry.ticket,
        sb_index: entry.sb_index,
        status,
        receipt,
        superseded_by: entry.superseded_by,
    }))
}
