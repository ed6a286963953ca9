mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use chrono::Duration;
use common::{leaked_keys, Api, MEMORY};
use reverie::llm::{MockProvider, ProviderError, ScriptedProvider, TemplateName};
use reverie::study::Condition;
use serde_json::json;

async fn seeded(api: &Api, name: &str, condition: Condition) -> String {
    let token = api.participant(name, condition).await;
    for q in 1..=5 {
        let r = api
            .post("/onboarding/seeds", &token, json!({ "question": q, "text": MEMORY }))
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.raw);
    }
    token
}

async fn pre_affect(api: &Api, token: &str) {
    let r = api
        .post(
            "/surveys/affect",
            token,
            json!({ "phase": "pre", "positive": 3, "negative": 2 }),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
}

#[tokio::test]
async fn login_and_rate_limit() {
    let api = Api::new();
    api.participant("ana", Condition::Control).await;
    let ok = api.login("ana", "pw").await;
    assert_eq!(ok.status, StatusCode::OK);
    assert_eq!(ok.body["token"].as_str().unwrap().len(), 64);
    assert!(ok.body["expires_at"].is_string());

    for _ in 0..5 {
        assert_eq!(api.login("ana", "nope").await.status, StatusCode::UNAUTHORIZED);
    }
    assert_eq!(api.login("ana", "nope").await.status, StatusCode::TOO_MANY_REQUESTS);
    // Correct password is throttled too until the window passes.
    assert_eq!(api.login("ana", "pw").await.status, StatusCode::TOO_MANY_REQUESTS);
    api.clock.advance(Duration::seconds(61));
    assert_eq!(api.login("ana", "pw").await.status, StatusCode::OK);
}

#[tokio::test]
async fn sessions_expire_and_logout() {
    let api = Api::new();
    let token = api.participant("ana", Condition::Control).await;
    assert_eq!(api.get("/me", &token).await.status, StatusCode::OK);
    assert_eq!(
        api.call("GET", "/dashboard", None, None).await.status,
        StatusCode::UNAUTHORIZED
    );
    assert_eq!(
        api.call("POST", "/auth/logout", Some(&token), None).await.status,
        StatusCode::NO_CONTENT
    );
    assert_eq!(api.get("/me", &token).await.status, StatusCode::UNAUTHORIZED);

    let token = api.login("ana", "pw").await.body["token"].as_str().unwrap().to_string();
    api.clock.advance(Duration::hours(12));
    assert_eq!(api.get("/me", &token).await.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn experimental_memory_returns_cited_suggestion() {
    let api = Api::new();
    let token = seeded(&api, "eve", Condition::Experimental).await;
    pre_affect(&api, &token).await;
    let r = api.post("/memories", &token, json!({ "text": MEMORY })).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.raw);
    assert_eq!(r.body["memory"]["title"].as_str().unwrap().split(' ').count(), 3);
    let cited = r.body["suggestion"]["cited_memory_ids"].as_array().unwrap();
    assert!(!cited.is_empty(), "{}", r.raw);
    assert_eq!(r.body["flow"]["state"], "needs_suggestion_ack");
}

#[tokio::test]
async fn control_memory_has_no_suggestion_field() {
    let api = Api::new();
    let token = seeded(&api, "cal", Condition::Control).await;
    pre_affect(&api, &token).await;
    let r = api.post("/memories", &token, json!({ "text": MEMORY })).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert!(r.body.get("suggestion").is_none());
    assert_eq!(r.body["flow"]["state"], "needs_post_affect");
    assert!(leaked_keys(&r.body).is_empty());
}

#[tokio::test]
async fn short_memory_is_rejected() {
    let api = Api::new();
    let token = api.participant("eve", Condition::Experimental).await;
    pre_affect(&api, &token).await;
    let r = api.post("/memories", &token, json!({ "text": "x".repeat(150) })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["error"], "too_short");
    assert_eq!(r.body["chars"], 150);
}

#[tokio::test]
async fn memory_requires_pre_affect() {
    let api = Api::new();
    let token = api.participant("eve", Condition::Experimental).await;
    let before = api.log();
    let r = api.post("/memories", &token, json!({ "text": MEMORY })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.body["state"], "needs_pre_affect");
    assert_eq!(before, api.log());
}

#[tokio::test]
async fn imagination_flow() {
    let api = Api::new();
    let token = seeded(&api, "eve", Condition::Experimental).await;
    pre_affect(&api, &token).await;
    let r = api.post("/memories", &token, json!({ "text": MEMORY })).await;
    let id = r.body["memory"]["id"].as_u64().unwrap();
    let ack = api
        .post(&format!("/memories/{id}/suggestion/ack"), &token, json!({}))
        .await;
    assert_eq!(ack.status, StatusCode::OK, "{}", ack.raw);
    assert_eq!(ack.body["state"], "needs_imagination");

    let path = format!("/memories/{id}/imagination");
    let early = api
        .post(&path, &token, json!({ "text": "I picture the bridge." }))
        .await;
    assert_eq!(early.status, StatusCode::CONFLICT);
    assert_eq!(early.body["error"], "too_early");

    api.clock.advance(Duration::seconds(30));
    let ok = api
        .post(&path, &token, json!({ "text": "I picture the bridge." }))
        .await;
    assert_eq!(ok.status, StatusCode::CREATED, "{}", ok.raw);
    assert_eq!(ok.body["imagination"]["linked_memory_id"], id);
    assert_eq!(ok.body["flow"]["state"], "needs_post_affect");

    let again = api.post(&path, &token, json!({ "text": "Again." })).await;
    assert_eq!(again.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn control_cannot_imagine() {
    let api = Api::new();
    let token = seeded(&api, "cal", Condition::Control).await;
    pre_affect(&api, &token).await;
    let r = api.post("/memories", &token, json!({ "text": MEMORY })).await;
    let id = r.body["memory"]["id"].as_u64().unwrap();
    let r = api
        .post(&format!("/memories/{id}/imagination"), &token, json!({ "text": "x" }))
        .await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    let r = api.post(&format!("/memories/{id}/suggestion"), &token, json!({})).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
}

#[tokio::test]
async fn other_users_memories_are_not_found() {
    let api = Api::new();
    let a = seeded(&api, "eve", Condition::Experimental).await;
    let b = api.participant("bob", Condition::Experimental).await;
    assert_eq!(api.get("/memories/1", &a).await.status, StatusCode::OK);
    assert_eq!(api.get("/memories/1", &b).await.status, StatusCode::NOT_FOUND);
    assert_eq!(
        api.post("/memories/1/suggestion/ack", &b, json!({})).await.status,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn surveys() {
    let api = Api::new();
    let token = api.participant("eve", Condition::Experimental).await;
    pre_affect(&api, &token).await;

    let r = api
        .post(
            "/surveys/phq8",
            &token,
            json!({ "wave": "pre_study", "items": [1, 0, 2, 1, 0, 1, 0] }),
        )
        .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["error"], "bad_item_count");
    let r = api
        .post(
            "/surveys/phq8",
            &token,
            json!({ "wave": "pre_study", "items": [1, 0, 2, 1, 0, 1, 0, 4] }),
        )
        .await;
    assert_eq!(r.body["error"], "out_of_range");
    let r = api
        .post(
            "/surveys/phq8",
            &token,
            json!({ "wave": "pre_study", "items": [1, 0, 2, 1, 0, 1, 0, 1] }),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["receipt"]["total"], 6);
    assert_eq!(r.body["severity"], "mild");
    let r = api
        .post(
            "/surveys/phq8",
            &token,
            json!({ "wave": "pre_study", "items": [0, 0, 0, 0, 0, 0, 0, 0] }),
        )
        .await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    let scores: serde_json::Map<String, serde_json::Value> =
        (1..=11).map(|i| (format!("sug_{i:02}"), json!(5))).collect();
    let body = json!({ "battery": "suggestions", "scores": scores });
    api.clock.advance(Duration::days(2));
    let token = api.login("eve", "pw").await.body["token"].as_str().unwrap().to_string();
    let r = api.post("/surveys/perceptions", &token, body.clone()).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.body["error"], "window_closed");

    api.clock.advance(Duration::days(13));
    let token = api.login("eve", "pw").await.body["token"].as_str().unwrap().to_string();
    let r = api.post("/surveys/perceptions", &token, body.clone()).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
    assert_eq!(
        r.body["receipt"]["reverse_keyed_ids"],
        json!(["sug_04", "sug_05", "sug_08", "sug_10"])
    );
    assert_eq!(
        api.post("/surveys/perceptions", &token, body).await.status,
        StatusCode::CONFLICT
    );

    let r = api
        .post(
            "/surveys/feedback",
            &token,
            json!({ "answers": { "liked": "the prompts" } }),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
}

#[tokio::test]
async fn instruments_are_served() {
    let api = Api::new();
    let exp = api.participant("eve", Condition::Experimental).await;
    let ctl = api.participant("cal", Condition::Control).await;
    let phq = api.get("/instruments/phq8", &exp).await;
    assert_eq!(phq.body["items"].as_array().unwrap().len(), 8);
    let img = api.get("/instruments/perceptions_imaginations", &exp).await;
    assert_eq!(img.body["items"].as_array().unwrap().len(), 8);
    assert_eq!(
        api.get("/instruments/perceptions_suggestions", &ctl).await.status,
        StatusCode::FORBIDDEN
    );
    assert!(api
        .get("/instruments/daily", &ctl)
        .await
        .body
        .get("likeliness_question")
        .is_none());
    assert_eq!(api.get("/instruments/nope", &exp).await.status, StatusCode::NOT_FOUND);
    let q = api.get("/onboarding/questions", &exp).await;
    assert_eq!(q.body["questions"].as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn dashboard_cards() {
    let api = Api::new();
    let token = seeded(&api, "eve", Condition::Experimental).await;
    pre_affect(&api, &token).await;
    let r = api.post("/memories", &token, json!({ "text": MEMORY })).await;
    let id = r.body["memory"]["id"].as_u64().unwrap();
    api.post(&format!("/memories/{id}/suggestion/ack"), &token, json!({}))
        .await;
    api.clock.advance(Duration::seconds(45));
    api.post(
        &format!("/memories/{id}/imagination"),
        &token,
        json!({ "text": "I imagine it." }),
    )
    .await;

    let d = api.get("/dashboard", &token).await;
    let entries = d.body["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 6);
    let first = &entries[0];
    assert_eq!(first["memory"]["id"], id);
    assert!(first["suggestion"].is_object());
    assert_eq!(first["imagination"]["text"], "I imagine it.");

    let ctl = seeded(&api, "cal", Condition::Control).await;
    pre_affect(&api, &ctl).await;
    api.post("/memories", &ctl, json!({ "text": MEMORY })).await;
    let d = api.get("/dashboard", &ctl).await;
    assert_eq!(d.body["entries"].as_array().unwrap().len(), 6);
    assert!(leaked_keys(&d.body).is_empty(), "{}", d.raw);
}

#[tokio::test]
async fn idempotent_memory_submission() {
    let api = Api::new();
    let token = seeded(&api, "eve", Condition::Experimental).await;
    pre_affect(&api, &token).await;
    let req = || {
        Request::post("/v1/memories")
            .header("authorization", format!("Bearer {token}"))
            .header("content-type", "application/json")
            .header("idempotency-key", "k-1")
            .body(Body::from(json!({ "text": MEMORY }).to_string()))
            .unwrap()
    };
    let first = api.send(req()).await;
    assert_eq!(first.status, StatusCode::CREATED);
    let log = api.log();
    let second = api.send(req()).await;
    assert_eq!(second.status, StatusCode::CREATED);
    assert_eq!(first.raw, second.raw);
    assert_eq!(log, api.log());
    let dailies = api.state.store().read(|s| {
        s.memories
            .values()
            .filter(|m| m.kind == reverie::store::MemoryKind::Daily)
            .count()
    });
    assert_eq!(dailies, 1);
}

#[tokio::test]
async fn provider_timeout_then_resume() {
    let scripted = Arc::new(ScriptedProvider::new(Arc::new(MockProvider::default())));
    let api = Api::with_provider(scripted.clone());
    let token = seeded(&api, "eve", Condition::Experimental).await;
    pre_affect(&api, &token).await;
    for _ in 0..4 {
        scripted.push(TemplateName::Emotion, Err(ProviderError::Timeout));
    }
    let req = || {
        Request::post("/v1/memories")
            .header("authorization", format!("Bearer {token}"))
            .header("content-type", "application/json")
            .header("idempotency-key", "k-2")
            .body(Body::from(json!({ "text": MEMORY }).to_string()))
            .unwrap()
    };
    let r = api.send(req()).await;
    assert_eq!(r.status, StatusCode::BAD_GATEWAY, "{}", r.raw);
    assert_eq!(r.body["error"], "provider_timeout");
    assert_eq!(r.body["retriable"], true);
    let id = r.body["memory_id"].as_u64().unwrap();

    // Retrying with the same key resumes the stored memory.
    let r = api.send(req()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.raw);
    assert_eq!(r.body["memory"]["id"], id);
    assert!(r.body["suggestion"].is_object());
}

#[tokio::test]
async fn explicit_suggestion_retry() {
    let scripted = Arc::new(ScriptedProvider::new(Arc::new(MockProvider::default())));
    let api = Api::with_provider(scripted.clone());
    let token = seeded(&api, "eve", Condition::Experimental).await;
    pre_affect(&api, &token).await;
    for _ in 0..4 {
        scripted.push(TemplateName::Suggestion, Err(ProviderError::Timeout));
    }
    let r = api.post("/memories", &token, json!({ "text": MEMORY })).await;
    assert_eq!(r.status, StatusCode::BAD_GATEWAY);
    let id = r.body["memory_id"].as_u64().unwrap();
    let ack = api
        .post(&format!("/memories/{id}/suggestion/ack"), &token, json!({}))
        .await;
    assert_eq!(ack.status, StatusCode::CONFLICT);
    let r = api.post(&format!("/memories/{id}/suggestion"), &token, json!({})).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
    assert!(r.body["suggestion"]["text"].is_string());
}

#[tokio::test]
async fn audio_is_transcribed_not_stored() {
    let api = Api::new();
    let token = api.participant("eve", Condition::Experimental).await;
    let log = api.log();
    let req = Request::post("/v1/memories")
        .header("authorization", format!("Bearer {token}"))
        .header("content-type", "audio/webm")
        .body(Body::from(vec![1u8, 2, 3, 4]))
        .unwrap();
    let r = api.send(req).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
    assert!(r.body["transcript"].as_str().unwrap().len() > 50);
    assert_eq!(log, api.log());

    let req = Request::post("/v1/memories")
        .header("authorization", format!("Bearer {token}"))
        .header("content-type", "audio/x-unknown")
        .body(Body::from(vec![1u8]))
        .unwrap();
    assert_eq!(api.send(req).await.status, StatusCode::UNSUPPORTED_MEDIA_TYPE);
}

#[tokio::test]
async fn admin_export() {
    let api = Api::new();
    let admin = api.admin().await;
    let empty = api.get("/admin/export", &admin).await;
    assert_eq!(empty.status, StatusCode::OK);
    let files = empty.body["files"].as_object().unwrap();
    assert_eq!(files.len(), 9);
    for (name, csv) in files {
        assert_eq!(
            csv.as_str().unwrap().matches("\r\n").count(),
            1,
            "{name} should be header-only"
        );
    }

    let participant = seeded(&api, "eve", Condition::Experimental).await;
    assert_eq!(
        api.get("/admin/export", &participant).await.status,
        StatusCode::FORBIDDEN
    );
    assert_eq!(api.get("/dashboard", &admin).await.status, StatusCode::FORBIDDEN);

    let a = api.get("/admin/export", &admin).await;
    let b = api.get("/admin/export", &admin).await;
    assert_eq!(a.raw, b.raw);
    let csv = api.get("/admin/export/memories.csv", &admin).await;
    assert_eq!(csv.status, StatusCode::OK);
    assert_eq!(csv.raw, a.body["files"]["memories.csv"].as_str().unwrap());
    assert_eq!(
        api.get("/admin/export/nope.csv", &admin).await.status,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn admin_manages_participants_and_reminders() {
    let api = Api::new();
    let admin = api.admin().await;
    let r = api
        .post(
            "/admin/participants",
            &admin,
            json!({ "username": "p1", "password": "pw", "condition": "control" }),
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.raw);
    assert_eq!(r.body["condition"], "control");
    let r = api
        .post(
            "/admin/participants",
            &admin,
            json!({ "username": "p2", "password": "pw" }),
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED);
    let dup = api
        .post(
            "/admin/participants",
            &admin,
            json!({ "username": "p1", "password": "pw" }),
        )
        .await;
    assert_eq!(dup.status, StatusCode::CONFLICT);
    assert_eq!(api.login("p1", "pw").await.status, StatusCode::OK);

    let list = api.get("/admin/participants", &admin).await;
    assert_eq!(list.body["participants"].as_array().unwrap().len(), 2);

    api.clock.advance(Duration::days(4));
    let admin = api.login("admin", "root").await.body["token"]
        .as_str()
        .unwrap()
        .to_string();
    let sent = api.post("/admin/reminders", &admin, json!({})).await;
    assert_eq!(sent.body["sent"].as_array().unwrap().len(), 2);
    assert_eq!(api.outbox.sent.lock().unwrap().len(), 2);
    let again = api.post("/admin/reminders", &admin, json!({})).await;
    assert!(again.body["sent"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn out_of_order_calls_conflict_without_writes() {
    let api = Api::new();
    let replays = common::out_of_order_replays(&api).await;
    assert!(replays.len() >= 20);
    for (state, step, status, unchanged) in replays {
        assert_eq!(status, 409, "{step} during {state}");
        assert!(unchanged, "{step} during {state} wrote to the log");
    }
}

#[tokio::test]
async fn control_fuzzing_never_leaks() {
    let api = Api::new();
    let report = common::fuzz_control(&api, 400, 11).await;
    assert!(report.succeeded > 50, "only {} calls succeeded", report.succeeded);
    assert!(report.leaks.is_empty(), "{:?}", report.leaks);
}
