use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequestParts, Path, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::auth::{verify_password, Session};
use super::error::ApiError;
use super::{AppState, IdempotentSlot};
use crate::analysis::{export_all, export_table, ExportTable};
use crate::ids::{MemoryId, SuggestionId, UserId};
use crate::journal::Processed;
use crate::llm::is_supported_audio;
use crate::store::{KindFilter, MemoryEntry, MemoryKind, Order, Role, StoreState, Suggestion};
use crate::study::{
    compliance, is_compliant, phq8_severity, study_day, AffectPhase, Battery, Condition, Wave, AFFECT_QUESTIONS,
    DAILY_SCALE_LABELS, LIKELINESS_QUESTION, ONBOARDING_QUESTIONS, OPEN_ENDED_QUESTIONS,
};

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

pub(super) fn v1() -> Router<Shared> {
    Router::new()
        .route("/health", get(health))
        .route("/auth/login", post(login))
        .route("/auth/logout", post(logout))
        .route("/me", get(me))
        .route("/flow", get(flow))
        .route("/onboarding/questions", get(onboarding_questions))
        .route("/onboarding/seeds", post(submit_seed))
        .route("/memories", post(submit_memory))
        .route("/memories/{id}", get(get_memory))
        .route("/memories/{id}/suggestion", post(retry_suggestion))
        .route("/memories/{id}/suggestion/ack", post(ack_suggestion))
        .route("/memories/{id}/imagination", post(submit_imagination))
        .route("/surveys/affect", post(survey_affect))
        .route("/surveys/likeliness", post(survey_likeliness))
        .route("/surveys/phq8", post(survey_phq8))
        .route("/surveys/sbi", post(survey_sbi))
        .route("/surveys/perceptions", post(survey_perceptions))
        .route("/surveys/feedback", post(survey_feedback))
        .route("/instruments/{id}", get(instrument))
        .route("/dashboard", get(dashboard))
        .route("/admin/participants", get(list_participants).post(add_participant))
        .route("/admin/reminders", post(send_reminders))
        .route("/admin/export", get(export_bundle))
        .route("/admin/export/{name}", get(export_file))
}

/// Any valid session.
pub(super) struct Authed(pub Session);

impl FromRequestParts<Shared> for Authed {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(ApiError::unauthorized)?;
        state
            .sessions
            .get(token.trim(), state.clock.now())
            .map(Authed)
            .ok_or_else(ApiError::unauthorized)
    }
}

/// A participant session.
pub(super) struct Participant(pub UserId);

impl FromRequestParts<Shared> for Participant {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let Authed(s) = Authed::from_request_parts(parts, state).await?;
        match s.role {
            Role::Participant => Ok(Participant(s.user_id)),
            Role::Admin => Err(ApiError::forbidden("participant endpoint")),
        }
    }
}

pub(super) struct Admin;

impl FromRequestParts<Shared> for Admin {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let Authed(s) = Authed::from_request_parts(parts, state).await?;
        match s.role {
            Role::Admin => Ok(Admin),
            Role::Participant => Err(ApiError::forbidden("admin role required")),
        }
    }
}

async fn blocking<T, F>(state: &Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&AppState, DateTime<Utc>) -> ApiResult<T> + Send + 'static,
{
    let s = state.clone();
    tokio::task::spawn_blocking(move || {
        let now = s.clock.now();
        f(&s, now)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

#[derive(Serialize)]
struct MemoryDto {
    id: MemoryId,
    kind: MemoryKind,
    title: Option<String>,
    text: String,
    created_at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_question: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    linked_memory_id: Option<MemoryId>,
}

impl From<&MemoryEntry> for MemoryDto {
    fn from(m: &MemoryEntry) -> Self {
        Self {
            id: m.id,
            kind: m.kind,
            title: m.title.clone(),
            text: m.text.clone(),
            created_at: m.created_at,
            seed_question: m.seed_question_index,
            linked_memory_id: m.linked_memory_id,
        }
    }
}

#[derive(Serialize)]
struct SuggestionDto {
    id: SuggestionId,
    memory_id: MemoryId,
    emotion: String,
    text: String,
    cited_memory_ids: Vec<MemoryId>,
    created_at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    likeliness_to_act: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    acknowledged_at: Option<DateTime<Utc>>,
}

impl From<&Suggestion> for SuggestionDto {
    fn from(s: &Suggestion) -> Self {
        Self {
            id: s.id,
            memory_id: s.memory_id,
            emotion: s.target_emotion_text.clone(),
            text: s.suggestion_text.clone(),
            cited_memory_ids: s.cited_memory_ids.clone(),
            created_at: s.created_at,
            likeliness_to_act: s.likeliness_to_act,
            acknowledged_at: s.acknowledged_at,
        }
    }
}

fn to_value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("response types serialize")
}

fn condition_of(s: &AppState, user: &UserId) -> ApiResult<Condition> {
    Ok(s.store().read(|st| st.participant(user).map(|p| p.condition))?)
}

fn owned_memory(state: &StoreState, user: &UserId, id: MemoryId) -> ApiResult<MemoryEntry> {
    state
        .memories
        .get(&id)
        .filter(|m| &m.user_id == user)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown memory {id}")))
}

/// `{memory, suggestion?, flow}`; the suggestion key only for the experimental arm.
fn processed_body(s: &AppState, user: &UserId, p: &Processed) -> ApiResult<Value> {
    let mut body = json!({ "memory": MemoryDto::from(&p.memory) });
    if let Some(sugg) = &p.suggestion {
        if condition_of(s, user)? == Condition::Experimental {
            body["suggestion"] = to_value(SuggestionDto::from(sugg));
        }
    }
    body["flow"] = to_value(s.journal.study().flow_status(user)?);
    Ok(body)
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Deserialize)]
struct LoginRequest {
    username: String,
    password: String,
}

async fn login(State(state): State<Shared>, Json(req): Json<LoginRequest>) -> ApiResult<Json<Value>> {
    let now = state.clock.now();
    if state.throttle.is_blocked(&req.username, now) {
        return Err(ApiError::new(
            StatusCode::TOO_MANY_REQUESTS,
            "rate_limited",
            "too many failed logins; retry in a minute",
        ));
    }
    let session = blocking(&state, move |s, now| {
        let user = UserId::new(req.username.clone());
        let account = s.store().read(|st| st.accounts.get(&user).cloned());
        match account {
            Some(a) if verify_password(&a.password_hash, &req.password) => {
                s.throttle.clear(&req.username);
                Ok(s.sessions.issue(a.user_id, a.role, now, s.config.session_ttl))
            }
            _ => {
                s.throttle.record_failure(&req.username, now);
                Err(ApiError::new(
                    StatusCode::UNAUTHORIZED,
                    "invalid_credentials",
                    "unknown user or wrong password",
                ))
            }
        }
    })
    .await?;
    Ok(Json(to_value(session)))
}

async fn logout(State(state): State<Shared>, Authed(session): Authed) -> StatusCode {
    state.sessions.revoke(&session.token);
    StatusCode::NO_CONTENT
}

async fn me(State(state): State<Shared>, Authed(session): Authed) -> ApiResult<Json<Value>> {
    let mut body = json!({ "user_id": session.user_id, "role": session.role, "expires_at": session.expires_at });
    if session.role == Role::Participant {
        let tz = state.journal.study().config().timezone;
        let now = state.clock.now();
        let p = state.store().read(|st| st.participant(&session.user_id).cloned())?;
        body["condition"] = to_value(p.condition);
        body["enrolled_at"] = to_value(p.enrolled_at);
        body["study_end"] = to_value(p.study_end());
        body["study_day"] = to_value(study_day(&p, now, tz));
    }
    Ok(Json(body))
}

async fn flow(State(state): State<Shared>, Participant(user): Participant) -> ApiResult<Json<Value>> {
    Ok(Json(to_value(state.journal.study().flow_status(&user)?)))
}

async fn onboarding_questions() -> Json<Value> {
    let questions: Vec<Value> = ONBOARDING_QUESTIONS
        .iter()
        .enumerate()
        .map(|(i, q)| json!({ "index": i + 1, "text": q }))
        .collect();
    Json(json!({ "questions": questions }))
}

#[derive(Deserialize)]
struct SeedRequest {
    question: u8,
    text: String,
}

async fn submit_seed(
    State(state): State<Shared>,
    Participant(user): Participant,
    Json(req): Json<SeedRequest>,
) -> ApiResult<Response> {
    blocking(&state, move |s, now| {
        let processed = s.journal.submit_seed(&user, req.question, &req.text, now)??;
        Ok((StatusCode::CREATED, Json(processed_body(s, &user, &processed)?)).into_response())
    })
    .await
}

#[derive(Deserialize)]
struct TextRequest {
    text: String,
}

enum Submitted {
    Done(Value),
    /// Stored, then processing failed.
    Failed(MemoryId, ApiError),
    Rejected(ApiError),
}

async fn submit_memory(
    State(state): State<Shared>,
    Participant(user): Participant,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let content_type = headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("application/json")
        .split(';')
        .next()
        .unwrap_or_default()
        .trim()
        .to_ascii_lowercase();
    if content_type.starts_with("audio/") {
        if !is_supported_audio(&content_type) {
            return Err(ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "unsupported_media",
                content_type,
            ));
        }
        let transcript = blocking(&state, move |s, _| Ok(s.journal.transcribe(&body, &content_type)?)).await?;
        return Ok(Json(json!({ "transcript": transcript })).into_response());
    }
    if content_type != "application/json" {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "unsupported_media",
            content_type,
        ));
    }
    let req: TextRequest = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let key = headers
        .get("idempotency-key")
        .and_then(|v| v.to_str().ok())
        .map(str::to_string);

    let Some(key) = key else {
        return respond(run_submit(&state, user, req.text, None).await?);
    };
    let slot = state.slot(&user, &key);
    let mut guard = slot.lock().await;
    let previous = match &*guard {
        IdempotentSlot::Done(code, body) => {
            let code = StatusCode::from_u16(*code).unwrap_or(StatusCode::OK);
            return Ok((code, Json(body.clone())).into_response());
        }
        IdempotentSlot::Stored(id) => Some(*id),
        IdempotentSlot::Empty => None,
    };
    let outcome = run_submit(&state, user, req.text, previous).await?;
    *guard = match &outcome {
        Submitted::Done(body) => IdempotentSlot::Done(StatusCode::CREATED.as_u16(), body.clone()),
        Submitted::Failed(id, _) => IdempotentSlot::Stored(*id),
        Submitted::Rejected(_) => IdempotentSlot::Empty,
    };
    respond(outcome)
}

fn respond(outcome: Submitted) -> ApiResult<Response> {
    match outcome {
        Submitted::Done(body) => Ok((StatusCode::CREATED, Json(body)).into_response()),
        Submitted::Failed(_, e) | Submitted::Rejected(e) => Err(e),
    }
}

/// Stores and processes a memory, or resumes processing of `resume`.
async fn run_submit(state: &Shared, user: UserId, text: String, resume: Option<MemoryId>) -> ApiResult<Submitted> {
    blocking(state, move |s, now| {
        let result = match resume {
            Some(id) => s.journal.process_memory(id, now).map_err(|e| (id, ApiError::from(e))),
            None => match s.journal.submit_memory(&user, &text, now) {
                Err(e) => return Ok(Submitted::Rejected(e.into())),
                Ok(r) => r.map_err(|f| (f.memory_id, ApiError::from(f))),
            },
        };
        Ok(match result {
            Ok(p) => Submitted::Done(processed_body(s, &user, &p)?),
            Err((id, e)) => Submitted::Failed(id, e.with("memory_id", id.0)),
        })
    })
    .await
}

async fn get_memory(
    State(state): State<Shared>,
    Participant(user): Participant,
    Path(id): Path<u64>,
) -> ApiResult<Json<Value>> {
    let m = state.store().read(|st| owned_memory(st, &user, MemoryId(id)))?;
    Ok(Json(to_value(MemoryDto::from(&m))))
}

async fn retry_suggestion(
    State(state): State<Shared>,
    Participant(user): Participant,
    Path(id): Path<u64>,
) -> ApiResult<Json<Value>> {
    blocking(&state, move |s, now| {
        if condition_of(s, &user)? != Condition::Experimental {
            return Err(ApiError::new(
                StatusCode::FORBIDDEN,
                "wrong_arm",
                format!("user {user} is in the control arm"),
            ));
        }
        let m = s.store().read(|st| owned_memory(st, &user, MemoryId(id)))?;
        if m.kind != MemoryKind::Daily {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "not_daily",
                format!("memory {} is not a daily memory", m.id),
            ));
        }
        let p = s
            .journal
            .process_memory(m.id, now)
            .map_err(|e| ApiError::from(e).with("memory_id", id))?;
        Ok(Json(processed_body(s, &user, &p)?))
    })
    .await
}

async fn ack_suggestion(
    State(state): State<Shared>,
    Participant(user): Participant,
    Path(id): Path<u64>,
) -> ApiResult<Json<Value>> {
    blocking(&state, move |s, now| {
        s.store().read(|st| owned_memory(st, &user, MemoryId(id)))?;
        Ok(Json(to_value(s.journal.study().acknowledge_suggestion(
            &user,
            MemoryId(id),
            now,
        )?)))
    })
    .await
}

async fn submit_imagination(
    State(state): State<Shared>,
    Participant(user): Participant,
    Path(id): Path<u64>,
    Json(req): Json<TextRequest>,
) -> ApiResult<Response> {
    blocking(&state, move |s, now| {
        s.store().read(|st| owned_memory(st, &user, MemoryId(id)))?;
        let img = s
            .journal
            .study()
            .submit_imagination(&user, MemoryId(id), &req.text, now)?;
        let body = json!({
            "imagination": MemoryDto::from(&img),
            "flow": s.journal.study().flow_status(&user)?,
        });
        Ok((StatusCode::CREATED, Json(body)).into_response())
    })
    .await
}

#[derive(Deserialize)]
struct AffectRequest {
    phase: AffectPhase,
    positive: i64,
    negative: i64,
}

async fn survey_affect(
    State(state): State<Shared>,
    Participant(user): Participant,
    Json(req): Json<AffectRequest>,
) -> ApiResult<Json<Value>> {
    blocking(&state, move |s, now| {
        let sample = s
            .journal
            .study()
            .record_affect(&user, req.phase, req.positive, req.negative, now)?;
        Ok(Json(
            json!({ "receipt": sample, "flow": s.journal.study().flow_status(&user)? }),
        ))
    })
    .await
}

#[derive(Deserialize)]
struct LikelinessRequest {
    suggestion_id: u64,
    rating: i64,
}

async fn survey_likeliness(
    State(state): State<Shared>,
    Participant(user): Participant,
    Json(req): Json<LikelinessRequest>,
) -> ApiResult<Json<Value>> {
    blocking(&state, move |s, now| {
        let id = SuggestionId(req.suggestion_id);
        s.journal.study().record_likeliness(&user, id, req.rating, now)?;
        Ok(Json(
            json!({ "receipt": { "suggestion_id": id, "rating": req.rating } }),
        ))
    })
    .await
}

#[derive(Deserialize)]
struct Phq8Request {
    wave: Wave,
    items: Vec<i64>,
}

async fn survey_phq8(
    State(state): State<Shared>,
    Participant(user): Participant,
    Json(req): Json<Phq8Request>,
) -> ApiResult<Json<Value>> {
    blocking(&state, move |s, now| {
        let r = s.journal.study().record_phq8(&user, &req.items, req.wave, now)?;
        let severity = phq8_severity(r.total);
        Ok(Json(json!({ "receipt": r, "severity": severity })))
    })
    .await
}

#[derive(Deserialize)]
struct ItemsRequest {
    items: Vec<i64>,
}

async fn survey_sbi(
    State(state): State<Shared>,
    Participant(user): Participant,
    Json(req): Json<ItemsRequest>,
) -> ApiResult<Json<Value>> {
    blocking(&state, move |s, now| {
        Ok(Json(
            json!({ "receipt": s.journal.study().record_sbi(&user, &req.items, now)? }),
        ))
    })
    .await
}

#[derive(Deserialize)]
struct PerceptionRequest {
    battery: Battery,
    scores: BTreeMap<String, i64>,
}

async fn survey_perceptions(
    State(state): State<Shared>,
    Participant(user): Participant,
    Json(req): Json<PerceptionRequest>,
) -> ApiResult<Json<Value>> {
    blocking(&state, move |s, now| {
        let r = s
            .journal
            .study()
            .record_perceptions(&user, req.battery, &req.scores, now)?;
        Ok(Json(json!({ "receipt": r })))
    })
    .await
}

#[derive(Deserialize)]
struct FeedbackRequest {
    answers: BTreeMap<String, String>,
}

async fn survey_feedback(
    State(state): State<Shared>,
    Participant(user): Participant,
    Json(req): Json<FeedbackRequest>,
) -> ApiResult<Json<Value>> {
    blocking(&state, move |s, now| {
        Ok(Json(
            json!({ "receipt": s.journal.study().record_feedback(&user, req.answers, now)? }),
        ))
    })
    .await
}

async fn instrument(
    State(state): State<Shared>,
    Participant(user): Participant,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let condition = condition_of(&state, &user)?;
    let set = state.journal.study().instruments();
    let experimental_only = || -> ApiResult<()> {
        if condition == Condition::Experimental {
            Ok(())
        } else {
            Err(ApiError::new(
                StatusCode::FORBIDDEN,
                "wrong_arm",
                "instrument is for the experimental arm",
            ))
        }
    };
    let body = match id.as_str() {
        "phq8" => to_value(&set.phq8),
        "sbi" => to_value(&set.sbi),
        "perceptions_suggestions" => {
            experimental_only()?;
            to_value(&set.suggestions)
        }
        "perceptions_imaginations" => {
            experimental_only()?;
            to_value(&set.imaginations)
        }
        "daily" => {
            let mut v = json!({
                "id": "daily",
                "questions": AFFECT_QUESTIONS,
                "scale_labels": DAILY_SCALE_LABELS,
            });
            if condition == Condition::Experimental {
                v["likeliness_question"] = json!(LIKELINESS_QUESTION);
            }
            v
        }
        "feedback" => {
            let items: Vec<Value> = OPEN_ENDED_QUESTIONS
                .iter()
                .map(|(id, text)| json!({ "id": id, "text": text }))
                .collect();
            json!({ "id": "feedback", "items": items })
        }
        other => return Err(ApiError::not_found(format!("unknown instrument {other}"))),
    };
    Ok(Json(body))
}

/// Newest-first cards: a memory with its title and, for the experimental
/// arm, its suggestion and imagination.
async fn dashboard(State(state): State<Shared>, Participant(user): Participant) -> ApiResult<Json<Value>> {
    let body = state.store().read(|st| -> ApiResult<Value> {
        let experimental = st.participant(&user)?.condition == Condition::Experimental;
        let entries: Vec<Value> = st
            .list_memories(&user, KindFilter::All, Order::NewestFirst)?
            .iter()
            .filter(|m| m.kind != MemoryKind::Imagination)
            .map(|m| {
                let mut card = json!({ "memory": MemoryDto::from(m) });
                if experimental {
                    if let Some(s) = st.suggestion_for(m.id) {
                        card["suggestion"] = to_value(SuggestionDto::from(s));
                    }
                    if let Some(img) = m.imagination_id.and_then(|id| st.memories.get(&id)) {
                        card["imagination"] = to_value(MemoryDto::from(img));
                    }
                }
                card
            })
            .collect();
        Ok(json!({ "entries": entries }))
    })?;
    Ok(Json(body))
}

#[derive(Deserialize)]
struct NewParticipant {
    username: String,
    password: String,
    condition: Option<Condition>,
}

async fn add_participant(
    State(state): State<Shared>,
    _admin: Admin,
    Json(req): Json<NewParticipant>,
) -> ApiResult<Response> {
    blocking(&state, move |s, now| {
        let user = UserId::new(req.username.trim());
        if s.store().read(|st| st.accounts.contains_key(&user)) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "already_registered",
                format!("user {user} exists"),
            ));
        }
        s.register_account(&user, &req.password, Role::Participant)?;
        let study = s.journal.study();
        let p = match req.condition {
            Some(c) => study.enroll_as(&user, c, now)?,
            None => study.enroll(&user, now)?,
        };
        let body = json!({
            "user_id": p.user_id,
            "condition": p.condition,
            "enrolled_at": p.enrolled_at,
            "study_end": p.study_end(),
        });
        Ok((StatusCode::CREATED, Json(body)).into_response())
    })
    .await
}

async fn list_participants(State(state): State<Shared>, _admin: Admin) -> ApiResult<Json<Value>> {
    let now = state.clock.now();
    let tz = state.journal.study().config().timezone;
    let rows = state.store().read(|st| -> ApiResult<Vec<Value>> {
        st.participants
            .values()
            .map(|p| {
                let c = compliance(st, &p.user_id, now, tz)?;
                Ok(json!({
                    "user_id": p.user_id,
                    "condition": p.condition,
                    "enrolled_at": p.enrolled_at,
                    "study_day": study_day(p, now, tz),
                    "last_entry_at": p.last_entry_at,
                    "compliance": c,
                    "compliant": is_compliant(c),
                }))
            })
            .collect()
    })?;
    Ok(Json(json!({ "participants": rows })))
}

async fn send_reminders(State(state): State<Shared>, _admin: Admin) -> ApiResult<Json<Value>> {
    blocking(&state, |s, now| {
        let sent = s.journal.study().emit_due_reminders(now, s.outbox.as_ref())?;
        Ok(Json(json!({ "sent": sent })))
    })
    .await
}

async fn export_bundle(State(state): State<Shared>, _admin: Admin) -> ApiResult<Json<Value>> {
    let study = state.journal.study();
    let files = state
        .store()
        .read(|st| export_all(st, study.instruments(), study.config().timezone))?;
    Ok(Json(json!({ "files": files })))
}

async fn export_file(State(state): State<Shared>, _admin: Admin, Path(name): Path<String>) -> ApiResult<Response> {
    let table =
        ExportTable::from_file_name(&name).ok_or_else(|| ApiError::not_found(format!("unknown export {name}")))?;
    let study = state.journal.study();
    let csv = state
        .store()
        .read(|st| export_table(st, table, study.instruments(), study.config().timezone))?;
    Ok(([(CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
