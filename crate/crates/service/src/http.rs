//! JSON-over-HTTP front end. Blocking store and model work runs on the
//! blocking pool; training and analysis run on the per-project job workers.

use std::net::SocketAddr;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tribeforge::signals::SignalConfig;
use tribeforge::textmodel::TrainConfig;
use tribeforge::tribecraft::SearchWeights;

use crate::service::{DecisionRequest, Service};
use crate::ServiceError;

/// Every route, as `(method, path)`.
pub const ENDPOINTS: &[(&str, &str)] = &[
    ("GET", "/health"),
    ("GET", "/corpora"),
    ("GET", "/projects"),
    ("POST", "/projects"),
    ("GET", "/projects/{id}"),
    ("PUT", "/projects/{id}/tribes/{tribe}/keywords"),
    ("GET", "/projects/{id}/tribes/{tribe}/candidates"),
    ("GET", "/projects/{id}/decisions"),
    ("POST", "/projects/{id}/decisions"),
    ("GET", "/projects/{id}/hashtag-cloud/{tribe}"),
    ("GET", "/projects/{id}/leader-network/{tribe}"),
    ("POST", "/projects/{id}/train"),
    ("POST", "/projects/{id}/analyze"),
    ("GET", "/jobs"),
    ("GET", "/jobs/{job_id}"),
    ("GET", "/reports"),
    ("GET", "/reports/{report_id}"),
];

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Invalid(_) => StatusCode::BAD_REQUEST,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ServiceError::Io(format!("handler panicked: {e}"))))
}

fn body<T: DeserializeOwned>(b: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    b.map(|Json(v)| v).map_err(|e| ServiceError::Invalid(e.body_text()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateProject {
    macro_category_id: String,
    #[serde(default)]
    corpus_ref: Option<String>,
    #[serde(default)]
    request_key: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KeywordsBody {
    keywords: Vec<String>,
    #[serde(default)]
    #[allow(dead_code)]
    request_key: Option<String>,
}

#[derive(Serialize)]
struct KeywordsReply {
    tribe_id: String,
    keywords: Vec<String>,
}

#[derive(Deserialize)]
struct CandidateQuery {
    limit: Option<usize>,
    bio: Option<f64>,
    tweets: Option<f64>,
    followers: Option<f64>,
    friends: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainBody {
    config: TrainConfig,
    #[serde(default)]
    force: bool,
    #[serde(default)]
    request_key: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeBody {
    #[serde(default)]
    corpus_ref: Option<String>,
    #[serde(default)]
    filter_keywords: Option<Vec<String>>,
    #[serde(default)]
    signals: SignalConfig,
    #[serde(default)]
    request_key: Option<String>,
}

#[derive(Deserialize)]
struct JobsQuery {
    project: Option<String>,
}

#[derive(Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

pub const DEFAULT_CANDIDATE_LIMIT: usize = 20;

pub fn router(service: Service) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route(
            "/corpora",
            get(|State(s): State<Service>| async move { blocking(move || s.corpora()).await.map(Json) }),
        )
        .route(
            "/projects",
            get(|State(s): State<Service>| async move { Json(blocking(move || Ok(s.projects())).await.unwrap_or_default()) })
                .post(
                    |State(s): State<Service>, b: Result<Json<CreateProject>, JsonRejection>| async move {
                        let b = body(b)?;
                        let view = blocking(move || {
                            s.create_project(&b.macro_category_id, b.corpus_ref.as_deref(), b.request_key.as_deref())
                        })
                        .await?;
                        Ok::<_, ServiceError>((StatusCode::CREATED, Json(view)))
                    },
                ),
        )
        .route(
            "/projects/{id}",
            get(|State(s): State<Service>, Path(id): Path<String>| async move {
                blocking(move || s.project(&id)).await.map(Json)
            }),
        )
        .route(
            "/projects/{id}/tribes/{tribe}/keywords",
            put(
                |State(s): State<Service>,
                 Path((id, tribe)): Path<(String, String)>,
                 b: Result<Json<KeywordsBody>, JsonRejection>| async move {
                    let b = body(b)?;
                    let keywords = {
                        let tribe = tribe.clone();
                        blocking(move || s.set_keywords(&id, &tribe, &b.keywords)).await?
                    };
                    ApiResult::Ok(Json(KeywordsReply {
                        tribe_id: tribe,
                        keywords,
                    }))
                },
            ),
        )
        .route(
            "/projects/{id}/tribes/{tribe}/candidates",
            get(
                |State(s): State<Service>, Path((id, tribe)): Path<(String, String)>, Query(q): Query<CandidateQuery>| async move {
                    let weights = match (q.bio, q.tweets, q.followers, q.friends) {
                        (None, None, None, None) => SearchWeights::default(),
                        (a, b, c, d) => SearchWeights::new(
                            a.unwrap_or(0.0),
                            b.unwrap_or(0.0),
                            c.unwrap_or(0.0),
                            d.unwrap_or(0.0),
                        )?,
                    };
                    let limit = q.limit.unwrap_or(DEFAULT_CANDIDATE_LIMIT);
                    blocking(move || s.candidates(&id, &tribe, limit, weights)).await.map(Json)
                },
            ),
        )
        .route(
            "/projects/{id}/decisions",
            get(|State(s): State<Service>, Path(id): Path<String>| async move {
                blocking(move || s.decisions(&id)).await.map(Json)
            })
            .post(
                |State(s): State<Service>, Path(id): Path<String>, b: Result<Json<DecisionRequest>, JsonRejection>| async move {
                    let b = body(b)?;
                    blocking(move || s.decide(&id, b)).await.map(Json)
                },
            ),
        )
        .route(
            "/projects/{id}/hashtag-cloud/{tribe}",
            get(|State(s): State<Service>, Path((id, tribe)): Path<(String, String)>| async move {
                blocking(move || s.hashtag_cloud(&id, &tribe)).await.map(Json)
            }),
        )
        .route(
            "/projects/{id}/leader-network/{tribe}",
            get(|State(s): State<Service>, Path((id, tribe)): Path<(String, String)>| async move {
                blocking(move || s.leader_network(&id, &tribe)).await.map(Json)
            }),
        )
        .route(
            "/projects/{id}/train",
            post(
                |State(s): State<Service>, Path(id): Path<String>, b: Result<Json<TrainBody>, JsonRejection>| async move {
                    let b = body(b)?;
                    let job = blocking(move || s.submit_training(&id, b.config, b.force, b.request_key.as_deref())).await?;
                    Ok::<_, ServiceError>((StatusCode::ACCEPTED, Json(job)))
                },
            ),
        )
        .route(
            "/projects/{id}/analyze",
            post(
                |State(s): State<Service>, Path(id): Path<String>, b: Result<Json<AnalyzeBody>, JsonRejection>| async move {
                    let b = body(b)?;
                    let job = blocking(move || {
                        s.submit_analysis(
                            &id,
                            b.corpus_ref.as_deref(),
                            b.filter_keywords,
                            b.signals,
                            b.request_key.as_deref(),
                        )
                    })
                    .await?;
                    Ok::<_, ServiceError>((StatusCode::ACCEPTED, Json(job)))
                },
            ),
        )
        .route(
            "/jobs",
            get(|State(s): State<Service>, Query(q): Query<JobsQuery>| async move {
                Json(s.jobs(q.project.as_deref()))
            }),
        )
        .route(
            "/jobs/{job_id}",
            get(|State(s): State<Service>, Path(job_id): Path<String>| async move { s.job(&job_id).map(Json) }),
        )
        .route(
            "/reports",
            get(|State(s): State<Service>| async move { blocking(move || s.reports()).await.map(Json) }),
        )
        .route(
            "/reports/{report_id}",
            get(
                |State(s): State<Service>, Path(id): Path<String>, Query(q): Query<ReportQuery>| async move {
                    let format = q.format.unwrap_or_else(|| "text".into());
                    let content_type = if format == "records" {
                        "application/x-ndjson"
                    } else {
                        "text/plain; charset=utf-8"
                    };
                    let text = blocking(move || s.report(&id, &format)).await?;
                    Ok::<_, ServiceError>(([(header::CONTENT_TYPE, content_type)], text))
                },
            ),
        )
        .with_state(service)
}

/// Serve until the process is stopped.
pub async fn serve(service: Service, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}
