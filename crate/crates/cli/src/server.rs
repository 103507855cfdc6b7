//! HTTP routes. Handlers only decode, call the session driver and encode.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use codehinter_core::assist::{LocatedLine, PrintPlan, QuizAnswer, QuizCard, QuizOption};
use codehinter_core::session::{usage_report, PatchSource};
use codehinter_core::{Formula, PatchProposal, Phase, ProjectConfig, SessionState, TestReport};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::api::ApiError;
use crate::project::load_project;
use crate::service::Service;

type Shared = Arc<Service>;
type ApiResult<T> = Result<Json<T>, ApiError>;

/// A quiz card as the student sees it: no answer key, no validation runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicQuiz {
    pub question: String,
    pub options: Vec<QuizOption>,
    pub snapshot_hash: String,
}

impl From<&QuizCard> for PublicQuiz {
    fn from(card: &QuizCard) -> Self {
        PublicQuiz {
            question: card.question.clone(),
            options: card.options.clone(),
            snapshot_hash: card.snapshot_hash.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub phase: Phase,
    pub report: Option<TestReport>,
    pub runs: usize,
    pub helper_uses: usize,
    pub solution_available: bool,
    pub quiz: Option<PublicQuiz>,
    pub quiz_answer: Option<QuizAnswer>,
    pub print_plan: Option<PrintPlan>,
    pub revealed: Option<PatchProposal>,
    pub last_seq: u64,
}

impl SessionView {
    pub fn new(id: &str, state: &SessionState) -> Self {
        SessionView {
            session_id: id.to_string(),
            phase: state.phase,
            report: state.report.clone(),
            runs: state.runs,
            helper_uses: state.helper_uses,
            solution_available: state.runs > 0 && state.helper_uses > 0,
            quiz: state.active_quiz.as_ref().map(PublicQuiz::from),
            quiz_answer: state.quiz_answer.clone(),
            print_plan: state.active_plan.clone(),
            revealed: state.revealed.clone(),
            last_seq: state.last_seq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocateResponse {
    pub formula: Formula,
    pub lines: Vec<LocatedLine>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CreateBody {
    Wrapped { config: ProjectConfig },
    Project { project: PathBuf },
    Bare(ProjectConfig),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerBody {
    choice: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchBody {
    #[serde(default)]
    proposal_id: Option<String>,
    #[serde(default)]
    proposal: Option<PatchProposal>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VisualizerBody {
    #[serde(default)]
    file: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChatBody {
    text: String,
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn parse_or_default<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse(body)
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

async fn healthz() -> impl IntoResponse {
    Json(json!({ "status": "ok", "version": crate::VERSION }))
}

async fn list_sessions(State(svc): State<Shared>) -> ApiResult<serde_json::Value> {
    let ids = blocking(move || Ok(svc.store().list()?)).await?;
    Ok(Json(json!({ "sessions": ids })))
}

async fn create_session(State(svc): State<Shared>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let config = match parse::<CreateBody>(&body)? {
        CreateBody::Wrapped { config } | CreateBody::Bare(config) => config,
        CreateBody::Project { project } => {
            load_project(&project).map_err(|e| ApiError::new(e.code(), e.to_string()))?
        }
    };
    let id = blocking(move || svc.create(config)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))))
}

async fn get_session(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<SessionView> {
    blocking(move || svc.with(&id, |d| Ok(SessionView::new(&id, d.state()))))
        .await
        .map(Json)
}

async fn e2e(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<TestReport> {
    blocking(move || svc.with(&id, |d| d.run_e2e())).await.map(Json)
}

async fn locate(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<LocateResponse> {
    blocking(move || {
        svc.with(&id, |d| {
            let lines = d.locate()?;
            Ok(LocateResponse {
                formula: d.formula,
                lines,
            })
        })
    })
    .await
    .map(Json)
}

async fn quiz(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<PublicQuiz> {
    blocking(move || svc.with(&id, |d| d.quiz().map(|c| PublicQuiz::from(&c))))
        .await
        .map(Json)
}

async fn answer(State(svc): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<QuizAnswer> {
    let body: AnswerBody = parse(&body)?;
    blocking(move || svc.with(&id, |d| d.answer(body.choice))).await.map(Json)
}

async fn prints(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<PrintPlan> {
    blocking(move || svc.with(&id, |d| d.suggest_prints())).await.map(Json)
}

async fn prints_run(
    State(svc): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<codehinter_core::assist::DebugOutput> {
    blocking(move || svc.with(&id, |d| d.run_prints())).await.map(Json)
}

async fn patch(State(svc): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<serde_json::Value> {
    let source = match parse::<PatchBody>(&body)? {
        PatchBody {
            proposal_id: Some(pid),
            proposal: None,
        } => PatchSource::Id(pid),
        PatchBody {
            proposal_id: None,
            proposal: Some(p),
        } => PatchSource::Inline(p),
        _ => return Err(ApiError::bad_request("give exactly one of `proposal_id` and `proposal`")),
    };
    let diff = blocking(move || svc.with(&id, |d| d.apply_patch(&source))).await?;
    Ok(Json(json!({ "diff": diff })))
}

async fn solution(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<PatchProposal> {
    blocking(move || svc.with(&id, |d| d.reveal())).await.map(Json)
}

async fn peek_pseudocode(
    State(svc): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<codehinter_core::assist::Pseudocode> {
    blocking(move || svc.with(&id, |d| d.peek_pseudocode())).await.map(Json)
}

async fn use_pseudocode(
    State(svc): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<codehinter_core::assist::Pseudocode> {
    blocking(move || svc.with(&id, |d| d.pseudocode())).await.map(Json)
}

async fn peek_visualizer(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<serde_json::Value> {
    let file = q.get("file").cloned();
    let url = blocking(move || svc.with(&id, |d| d.peek_visualizer(file.as_deref()))).await?;
    Ok(Json(json!({ "url": url })))
}

async fn use_visualizer(State(svc): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<serde_json::Value> {
    let body: VisualizerBody = parse_or_default(&body)?;
    let url = blocking(move || svc.with(&id, |d| d.visualizer(body.file.as_deref()))).await?;
    Ok(Json(json!({ "url": url })))
}

async fn events(
    State(svc): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<Vec<codehinter_core::SessionEvent>> {
    blocking(move || svc.with(&id, |d| Ok(d.session.events().to_vec())))
        .await
        .map(Json)
}

async fn usage(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<codehinter_core::UsageReport> {
    blocking(move || svc.with(&id, |d| Ok(usage_report(d.session.events()))))
        .await
        .map(Json)
}

async fn chat(State(svc): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<serde_json::Value> {
    let body: ChatBody = parse(&body)?;
    let reply = blocking(move || svc.with(&id, |d| d.chat(&body.text))).await?;
    Ok(Json(json!({ "reply": reply })))
}

async fn fallback() -> ApiError {
    ApiError::new("not_found", "no such endpoint")
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/e2e", post(e2e))
        .route("/sessions/{id}/helpers/locate", post(locate))
        .route("/sessions/{id}/helpers/quiz", post(quiz))
        .route("/sessions/{id}/quiz/answer", post(answer))
        .route("/sessions/{id}/helpers/prints", post(prints))
        .route("/sessions/{id}/helpers/prints/run", post(prints_run))
        .route("/sessions/{id}/helpers/pseudocode", post(use_pseudocode))
        .route("/sessions/{id}/helpers/visualizer", post(use_visualizer))
        .route("/sessions/{id}/patch", post(patch))
        .route("/sessions/{id}/solution", post(solution))
        .route("/sessions/{id}/pseudocode", get(peek_pseudocode))
        .route("/sessions/{id}/visualizer-url", get(peek_visualizer))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/report/usage", get(usage))
        .route("/sessions/{id}/chat", post(chat))
        .fallback(fallback)
        .with_state(service)
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, service: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
