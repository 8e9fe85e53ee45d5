//! JSON API over the gold store.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use solidarity_core::evaluation::{avg_pairwise_kappa, PairwiseKappa};
use solidarity_core::extraction::Instance;
use solidarity_core::prediction::{parse_predictions_jsonl, Prediction};
use solidarity_core::taxonomy::{FineLabel, HighLevel, Level, Subtype, TargetGroup};

use crate::store::{Consensus, GoldStore, StoreError, Trigger};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<RwLock<GoldStore>>,
    pub instances: Arc<BTreeMap<String, Instance>>,
    /// Directory holding `<run>.jsonl` prediction files.
    pub runs_dir: Option<PathBuf>,
    /// token → user id. When set, every write needs `Authorization: Bearer`.
    pub tokens: Option<Arc<BTreeMap<String, String>>>,
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown instance {id:?}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message, "status": self.status.as_u16() }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Duplicate { .. } => ApiError::new(StatusCode::CONFLICT, format!("{e}; resend with supersede=true")),
            other => {
                tracing::error!(error = %other, "store failure");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.to_string())
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/instances", get(list_instances))
        .route("/api/instances/{id}", get(get_instance))
        .route("/api/queue/next", get(queue_next))
        .route("/api/annotations", post(post_annotation))
        .route("/api/skips", post(post_skip))
        .route("/api/agreement", get(agreement))
        .route("/api/disagreements", get(disagreements))
        .route("/api/adjudications", get(list_adjudications).post(post_adjudication))
        .route("/api/export/gold", get(export_gold))
        .route("/api/export/annotations", get(export_annotations))
        .with_state(state)
}

/// What an annotator sees: no speaker or party.
#[derive(Debug, Serialize)]
pub struct BlindView<'a> {
    pub id: &'a str,
    pub target: TargetGroup,
    pub keyword: &'a str,
    pub text: &'a str,
    pub context_left: &'a [String],
    pub context_right: &'a [String],
    pub date: String,
    pub decade: i32,
}

fn blind(i: &Instance) -> BlindView<'_> {
    BlindView {
        id: &i.id,
        target: i.target,
        keyword: &i.keyword,
        text: &i.text,
        context_left: &i.context_left,
        context_right: &i.context_right,
        date: i.date.to_string(),
        decade: i.decade,
    }
}

fn instance_status(c: &Consensus, pending: bool) -> &'static str {
    if c.votes == 0 && c.label.is_none() {
        "unlabeled"
    } else if pending {
        "pending"
    } else if c.label.is_some() {
        "decided"
    } else {
        "tied"
    }
}

fn user_of(state: &AppState, headers: &HeaderMap) -> ApiResult<Option<String>> {
    let Some(tokens) = &state.tokens else { return Ok(None) };
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing bearer token"))?;
    tokens
        .get(token)
        .cloned()
        .map(Some)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown token"))
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

/// Runs a write on the blocking pool so the fsync does not stall handlers.
async fn write<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce(&mut GoldStore) -> Result<T, StoreError> + Send + 'static,
) -> ApiResult<T> {
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || {
        let mut guard = store.write().unwrap_or_else(|p| p.into_inner());
        f(&mut guard)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(ApiError::from)
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let rev = state.store.read().unwrap_or_else(|p| p.into_inner()).state().rev;
    Json(json!({ "ok": true, "rev": rev, "instances": state.instances.len() }))
}

#[derive(Debug, Deserialize)]
struct InstanceFilter {
    group: Option<String>,
    decade: Option<i32>,
    status: Option<String>,
    keyword: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn list_instances(State(state): State<AppState>, Query(f): Query<InstanceFilter>) -> ApiResult<Json<Value>> {
    let group = f
        .group
        .as_deref()
        .map(|g| g.parse::<TargetGroup>().map_err(|e| ApiError::bad_request(e.to_string())))
        .transpose()?;
    let guard = state.store.read().unwrap_or_else(|p| p.into_inner());
    let st = guard.state();
    let pending: std::collections::BTreeSet<String> =
        st.pending_adjudications().into_iter().map(|(id, _)| id).collect();
    let mut items = Vec::new();
    for inst in state.instances.values() {
        if group.is_some_and(|g| g != inst.target)
            || f.decade.is_some_and(|d| d != inst.decade)
            || f.keyword.as_deref().is_some_and(|k| !inst.keywords.iter().any(|x| x == k))
        {
            continue;
        }
        let c = st.consensus(&inst.id);
        let status = instance_status(&c, pending.contains(&inst.id));
        if f.status.as_deref().is_some_and(|s| s != status) {
            continue;
        }
        items.push(json!({
            "instance": blind(inst),
            "annotations": c.votes,
            "status": status,
            "consensus": c.label,
        }));
    }
    let total = items.len();
    let offset = f.offset.unwrap_or(0).min(total);
    let limit = f.limit.unwrap_or(total);
    let page: Vec<Value> = items.into_iter().skip(offset).take(limit).collect();
    Ok(Json(json!({ "total": total, "offset": offset, "items": page })))
}

#[derive(Debug, Deserialize)]
struct ViewQuery {
    view: Option<String>,
}

async fn get_instance(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let inst = state.instances.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    match q.view.as_deref() {
        None | Some("label") => Ok(Json(json!({ "instance": blind(inst) }))),
        Some("adjudication") => {
            let guard = state.store.read().unwrap_or_else(|p| p.into_inner());
            let st = guard.state();
            Ok(Json(json!({
                "instance": inst,
                "labels": st.labels(&id),
                "consensus": st.consensus(&id),
                "adjudications": st.adjudications.get(&id).cloned().unwrap_or_default(),
            })))
        }
        Some(other) => Err(ApiError::bad_request(format!("unknown view {other:?}"))),
    }
}

#[derive(Debug, Deserialize)]
struct QueueQuery {
    annotator: String,
    group: Option<String>,
}

/// Least-annotated instance the annotator has neither labeled nor skipped;
/// ties broken by instance id.
async fn queue_next(State(state): State<AppState>, Query(q): Query<QueueQuery>) -> ApiResult<Json<Value>> {
    if q.annotator.trim().is_empty() {
        return Err(ApiError::bad_request("annotator is required"));
    }
    let group = q
        .group
        .as_deref()
        .map(|g| g.parse::<TargetGroup>().map_err(|e| ApiError::bad_request(e.to_string())))
        .transpose()?;
    let guard = state.store.read().unwrap_or_else(|p| p.into_inner());
    let st = guard.state();
    let remaining = state
        .instances
        .values()
        .filter(|i| group.is_none_or(|g| g == i.target))
        .filter(|i| !st.has_labeled(&i.id, &q.annotator) && !st.has_skipped(&i.id, &q.annotator));
    let mut best: Option<(usize, &Instance)> = None;
    let mut left = 0;
    for inst in remaining {
        left += 1;
        let n = st.annotation_count(&inst.id);
        if best.is_none_or(|(m, _)| n < m) {
            best = Some((n, inst));
        }
    }
    Ok(Json(match best {
        Some((n, inst)) => json!({ "instance": blind(inst), "annotations": n, "remaining": left }),
        None => json!({ "instance": null, "annotations": 0, "remaining": 0 }),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationBody {
    instance_id: String,
    annotator_id: String,
    high: String,
    #[serde(default)]
    subtype: Option<String>,
    #[serde(default)]
    supersede: bool,
}

#[derive(Debug, Deserialize)]
struct SupersedeQuery {
    #[serde(default)]
    supersede: bool,
}

/// Strict two-step validation: a subtype is required exactly for the two
/// stance labels.
pub fn label_from_parts(high: &str, subtype: Option<&str>) -> Result<FineLabel, String> {
    let h = HighLevel::ALL
        .into_iter()
        .find(|x| x.as_str() == high.trim().to_lowercase())
        .ok_or_else(|| format!("unknown high-level label {high:?}"))?;
    let s = subtype
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            Subtype::ALL
                .into_iter()
                .find(|x| x.as_str() == s.trim().to_lowercase())
                .ok_or_else(|| format!("unknown subtype {s:?}"))
        })
        .transpose()?;
    FineLabel::from_parts(h, s).ok_or_else(|| match s {
        Some(_) => format!("{high} takes no subtype"),
        None => format!("{high} requires a subtype"),
    })
}

async fn post_annotation(
    State(state): State<AppState>,
    Query(q): Query<SupersedeQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let b: AnnotationBody = parse_body(&body)?;
    if let Some(user) = user_of(&state, &headers)? {
        if user != b.annotator_id {
            return Err(ApiError::new(StatusCode::FORBIDDEN, "token does not belong to this annotator"));
        }
    }
    if b.annotator_id.trim().is_empty() {
        return Err(ApiError::bad_request("annotator_id is required"));
    }
    let label = label_from_parts(&b.high, b.subtype.as_deref()).map_err(ApiError::bad_request)?;
    if !state.instances.contains_key(&b.instance_id) {
        return Err(ApiError::not_found(&b.instance_id));
    }
    let supersede = b.supersede || q.supersede;
    let (inst, annotator) = (b.instance_id.clone(), b.annotator_id.clone());
    let (record, consensus) = write(&state, move |s| {
        let r = s.annotate(&inst, &annotator, label, supersede)?;
        let c = s.state().consensus(&inst);
        Ok((r, c))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(json!({ "record": record, "consensus": consensus }))))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkipBody {
    instance_id: String,
    annotator_id: String,
}

async fn post_skip(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let b: SkipBody = parse_body(&body)?;
    if let Some(user) = user_of(&state, &headers)? {
        if user != b.annotator_id {
            return Err(ApiError::new(StatusCode::FORBIDDEN, "token does not belong to this annotator"));
        }
    }
    if !state.instances.contains_key(&b.instance_id) {
        return Err(ApiError::not_found(&b.instance_id));
    }
    let record = write(&state, move |s| s.skip(&b.instance_id, &b.annotator_id)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "record": record }))))
}

fn kappa_or_null(r: Result<PairwiseKappa, solidarity_core::evaluation::EvalError>) -> Value {
    match r {
        Ok(k) => serde_json::to_value(k).expect("kappa serializes"),
        Err(e) => json!({ "pairs": [], "mean": null, "reason": e.to_string() }),
    }
}

async fn agreement(State(state): State<AppState>) -> Json<Value> {
    let guard = state.store.read().unwrap_or_else(|p| p.into_inner());
    let raters = guard.state().rater_labels();
    Json(json!({
        "rev": guard.state().rev,
        "annotators": raters.keys().collect::<Vec<_>>(),
        "high": kappa_or_null(avg_pairwise_kappa(&raters, Level::High)),
        "fine": kappa_or_null(avg_pairwise_kappa(&raters, Level::Fine)),
    }))
}

#[derive(Debug, Deserialize)]
struct DisagreementQuery {
    run: Option<String>,
    decade: Option<i32>,
}

fn load_run(state: &AppState, run: &str) -> ApiResult<BTreeMap<String, Prediction>> {
    if run.is_empty() || !run.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || run.starts_with('.') {
        return Err(ApiError::bad_request(format!("invalid run id {run:?}")));
    }
    let dir = state
        .runs_dir
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no runs directory configured"))?;
    let path = dir.join(format!("{run}.jsonl"));
    let text = std::fs::read_to_string(&path)
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("unknown run {run:?}")))?;
    let preds = parse_predictions_jsonl(&text).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(preds.into_iter().map(|p| (p.instance_id.clone(), p)).collect())
}

/// Without `run`: instances whose annotators are not unanimous. With `run`:
/// instances where the run's ok prediction differs from the consensus.
async fn disagreements(State(state): State<AppState>, Query(q): Query<DisagreementQuery>) -> ApiResult<Json<Value>> {
    let preds = q.run.as_deref().map(|r| load_run(&state, r)).transpose()?;
    let guard = state.store.read().unwrap_or_else(|p| p.into_inner());
    let st = guard.state();
    let mut items = Vec::new();
    for id in st.annotations.keys() {
        let Some(inst) = state.instances.get(id) else { continue };
        if q.decade.is_some_and(|d| d != inst.decade) {
            continue;
        }
        let labels = st.labels(id);
        let consensus = st.consensus(id);
        let item = match &preds {
            None => {
                let first = labels.values().next();
                if labels.values().all(|l| Some(l) == first) {
                    continue;
                }
                let trigger = if consensus.tie { Trigger::VoteTie } else { Trigger::AnnotatorDisagreement };
                json!({ "instance_id": id, "decade": inst.decade, "trigger": trigger, "labels": labels, "consensus": consensus })
            }
            Some(preds) => {
                let Some(p) = preds.get(id) else { continue };
                let Some(model) = p.ok_label() else { continue };
                if consensus.label == Some(model) {
                    continue;
                }
                json!({
                    "instance_id": id,
                    "decade": inst.decade,
                    "trigger": Trigger::ModelDisagreement,
                    "labels": labels,
                    "consensus": consensus,
                    "model": { "label": model, "raw_high": p.raw_high, "raw_fine": p.raw_fine },
                })
            }
        };
        items.push(item);
    }
    Ok(Json(json!({ "run": q.run, "items": items })))
}

async fn list_adjudications(State(state): State<AppState>) -> Json<Value> {
    let guard = state.store.read().unwrap_or_else(|p| p.into_inner());
    let st = guard.state();
    let pending: Vec<Value> = st
        .pending_adjudications()
        .into_iter()
        .map(|(id, trigger)| json!({ "instance_id": id, "trigger": trigger, "labels": st.labels(&id) }))
        .collect();
    let resolved: Vec<Value> = st
        .adjudications
        .keys()
        .filter_map(|id| st.resolution(id))
        .map(|a| serde_json::to_value(a).expect("record serializes"))
        .collect();
    Json(json!({ "pending": pending, "resolved": resolved }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdjudicationBody {
    instance_id: String,
    #[serde(default)]
    resolution: Option<FineLabel>,
    #[serde(default)]
    trigger: Option<Trigger>,
    #[serde(default)]
    resolver: Option<String>,
    #[serde(default)]
    note: String,
}

async fn post_adjudication(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let b: AdjudicationBody = parse_body(&body)?;
    let resolver = match user_of(&state, &headers)? {
        Some(user) => user,
        None => b.resolver.clone().unwrap_or_else(|| "adjudicator".to_string()),
    };
    if !state.instances.contains_key(&b.instance_id) {
        return Err(ApiError::not_found(&b.instance_id));
    }
    if b.resolution.is_none() && b.trigger.is_none() {
        return Err(ApiError::bad_request("a flag without resolution needs a trigger"));
    }
    let record = write(&state, move |s| {
        let st = s.state();
        let trigger = b.trigger.unwrap_or_else(|| {
            if st.consensus(&b.instance_id).tie {
                Trigger::VoteTie
            } else if st.labels(&b.instance_id).values().collect::<std::collections::BTreeSet<_>>().len() > 1 {
                Trigger::AnnotatorDisagreement
            } else {
                Trigger::ModelDisagreement
            }
        });
        s.adjudicate(&b.instance_id, trigger, b.resolution, &resolver, &b.note)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(json!({ "record": record }))))
}

fn ndjson<T: Serialize>(rows: &[T]) -> Response {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("row serializes"));
        out.push('\n');
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response()
}

async fn export_gold(State(state): State<AppState>) -> Response {
    let guard = state.store.read().unwrap_or_else(|p| p.into_inner());
    ndjson(&guard.state().export_gold())
}

async fn export_annotations(State(state): State<AppState>) -> Response {
    let guard = state.store.read().unwrap_or_else(|p| p.into_inner());
    ndjson(&guard.state().gold_records())
}
