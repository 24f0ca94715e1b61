//! HTTP/JSON front end over an [`AnnotationStore`].
//!
//! Every write goes through one mutex, which gives the event log a total
//! order. Errors are returned as `{"code": ..., "message": ...}`.

use std::sync::{Arc, Mutex};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use ohc_topics::annotation::{AnnotationError, AnnotationStore};
use ohc_topics::{LabelSet, Topic};

pub type SharedStore = Arc<Mutex<AnnotationStore>>;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ApiError {
    pub code: String,
    pub message: String,
}

struct Failure(StatusCode, ApiError);

impl Failure {
    fn bad_request(message: impl Into<String>) -> Self {
        Failure(
            StatusCode::BAD_REQUEST,
            ApiError {
                code: "bad_request".into(),
                message: message.into(),
            },
        )
    }
}

impl From<AnnotationError> for Failure {
    fn from(e: AnnotationError) -> Self {
        let status = match &e {
            AnnotationError::NotPassed(_) | AnnotationError::NotAssigned { .. } => {
                StatusCode::FORBIDDEN
            }
            AnnotationError::UnknownPost(_)
            | AnnotationError::UnknownSentence(_)
            | AnnotationError::UnknownBatch(_) => StatusCode::NOT_FOUND,
            AnnotationError::LabelsRequired | AnnotationError::InvalidLabels => {
                StatusCode::BAD_REQUEST
            }
            AnnotationError::Exhausted
            | AnnotationError::MissingCoderRecords(_)
            | AnnotationError::IncompleteTraining { .. } => StatusCode::CONFLICT,
            AnnotationError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Failure(
            status,
            ApiError {
                code: e.code().into(),
                message: e.to_string(),
            },
        )
    }
}

impl From<JsonRejection> for Failure {
    fn from(e: JsonRejection) -> Self {
        Failure::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for Failure {
    fn from(e: QueryRejection) -> Self {
        Failure::bad_request(e.body_text())
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, Failure>;

fn lock(store: &SharedStore) -> std::sync::MutexGuard<'_, AnnotationStore> {
    // a panic while holding the lock leaves the state as of the last
    // applied event, which is still consistent
    store
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn parse_labels(codes: &[String]) -> Result<LabelSet, Failure> {
    let mut set = LabelSet::empty();
    for code in codes {
        let topic: Topic = code
            .parse()
            .map_err(|_| Failure::from(AnnotationError::InvalidLabels))?;
        set.insert_topic(topic);
    }
    Ok(set)
}

#[derive(Serialize)]
struct TopicInfo {
    code: &'static str,
    name: &'static str,
    description: &'static str,
}

async fn schema() -> Json<Vec<TopicInfo>> {
    Json(
        Topic::ALL
            .iter()
            .map(|t| TopicInfo {
                code: t.code(),
                name: t.name(),
                description: t.description(),
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct CoderQuery {
    coder: String,
}

async fn next_batch(
    State(store): State<SharedStore>,
    query: Result<Query<CoderQuery>, QueryRejection>,
) -> ApiResult<ohc_topics::annotation::Batch> {
    let Query(q) = query?;
    Ok(Json(lock(&store).assign_batch(&q.coder)?))
}

#[derive(Serialize)]
struct SentenceView {
    sentence_id: String,
    index: usize,
    text: String,
}

#[derive(Serialize)]
struct PostView {
    post_id: String,
    thread_id: String,
    created_at: String,
    sentences: Vec<SentenceView>,
}

async fn get_post(State(store): State<SharedStore>, Path(id): Path<String>) -> ApiResult<PostView> {
    let store = lock(&store);
    let corpus = store.corpus();
    let post = corpus
        .post(&id)
        .ok_or_else(|| Failure::from(AnnotationError::UnknownPost(id.clone())))?;
    Ok(Json(PostView {
        post_id: post.post_id.clone(),
        thread_id: post.thread_id.clone(),
        created_at: post.created_at.to_rfc3339(),
        sentences: corpus
            .sentences_of(&id)
            .iter()
            .map(|s| SentenceView {
                sentence_id: s.sentence_id.clone(),
                index: s.index,
                text: s.text.clone(),
            })
            .collect(),
    }))
}

#[derive(Deserialize)]
struct SubmitBody {
    coder: String,
    sentence: String,
    labels: Vec<String>,
}

async fn submit(
    State(store): State<SharedStore>,
    body: Result<Json<SubmitBody>, JsonRejection>,
) -> ApiResult<ohc_topics::annotation::Ack> {
    let Json(body) = body?;
    let labels = parse_labels(&body.labels)?;
    Ok(Json(lock(&store).submit_annotation(
        &body.coder,
        &body.sentence,
        labels,
    )?))
}

async fn coder_status(
    State(store): State<SharedStore>,
    Path(id): Path<String>,
) -> ApiResult<ohc_topics::annotation::CoderStatus> {
    Ok(Json(lock(&store).coder_status(&id)?))
}

async fn queue(State(store): State<SharedStore>) -> Json<Vec<ohc_topics::annotation::QueueItem>> {
    Json(lock(&store).adjudication_queue())
}

#[derive(Deserialize)]
struct AdjudicateBody {
    sentence: String,
    labels: Vec<String>,
    adjudicator: String,
}

async fn adjudicate(
    State(store): State<SharedStore>,
    body: Result<Json<AdjudicateBody>, JsonRejection>,
) -> ApiResult<ohc_topics::annotation::Adjudication> {
    let Json(body) = body?;
    let labels = parse_labels(&body.labels)?;
    Ok(Json(lock(&store).adjudicate(
        &body.sentence,
        labels,
        &body.adjudicator,
    )?))
}

#[derive(Deserialize)]
struct AgreementQuery {
    batch: Option<usize>,
}

#[derive(Serialize)]
struct PairAgreement {
    pair: String,
    kappa: ohc_topics::eval::KappaReport,
}

/// One batch's live agreement with `?batch=ID`, otherwise kappa for
/// every coder pair pooled over their shared batches.
async fn agreement(
    State(store): State<SharedStore>,
    query: Result<Query<AgreementQuery>, QueryRejection>,
) -> Result<Response, Failure> {
    let Query(q) = query?;
    let store = lock(&store);
    Ok(match q.batch {
        Some(id) => Json(store.agreement(id)?).into_response(),
        None => {
            let pairs: Vec<PairAgreement> = store
                .pairwise_agreement()?
                .into_iter()
                .map(|(pair, kappa)| PairAgreement { pair, kappa })
                .collect();
            Json(pairs).into_response()
        }
    })
}

pub fn router(store: AnnotationStore) -> Router {
    router_shared(Arc::new(Mutex::new(store)))
}

pub fn router_shared(store: SharedStore) -> Router {
    Router::new()
        .route("/schema", get(schema))
        .route("/batches/next", get(next_batch))
        .route("/posts/{id}", get(get_post))
        .route("/annotations", post(submit))
        .route("/coders/{id}/status", get(coder_status))
        .route("/adjudication/queue", get(queue))
        .route("/adjudication", post(adjudicate))
        .route("/agreement", get(agreement))
        .with_state(store)
}

/// Serves until Ctrl-C.
pub async fn serve(store: AnnotationStore, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!(
        "annotation service listening on http://{}",
        listener.local_addr()?
    );
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
