#![allow(dead_code)]

pub mod ops;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{DateTime, TimeZone, Utc};
use http_body_util::BodyExt;
use reverie::api::{router, ApiConfig, AppState, PasswordParams};
use reverie::clock::ManualClock;
use reverie::ids::UserId;
use reverie::journal::Journal;
use reverie::llm::{Gateway, LlmProvider, MockProvider, RetryPolicy};
use reverie::pipeline::{PipelineConfig, ValenceScreen};
use reverie::store::{Role, Store, StoreKey};
use reverie::study::{Condition, MemoryOutbox, StudyConfig};
use serde_json::Value;
use tower::ServiceExt;

pub const MEMORY: &str = "Yesterday evening I walked with my brother along the river to the old stone bridge. \
    We bought roasted chestnuts from a cart, watched the rowing club glide past in the dusk, and talked \
    about the camping trip we took as kids when the tent collapsed in the rain.";

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 6, 3, 9, 0, 0).unwrap()
}

pub struct Api {
    pub state: Arc<AppState>,
    pub app: Router,
    pub clock: Arc<ManualClock>,
    pub outbox: Arc<MemoryOutbox>,
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Value,
    pub raw: String,
}

impl Api {
    pub fn new() -> Self {
        Self::with_provider(Arc::new(MockProvider::default()))
    }

    pub fn with_provider(provider: Arc<dyn LlmProvider>) -> Self {
        let store = Arc::new(Store::in_memory(&StoreKey::from_bytes([9; 32])));
        let gateway = Arc::new(Gateway::new(provider, RetryPolicy::immediate(), 4));
        let journal = Journal::new(
            store,
            StudyConfig::default(),
            gateway,
            ValenceScreen::builtin(),
            PipelineConfig::default(),
        );
        let clock = Arc::new(ManualClock::new(t0()));
        let outbox = Arc::new(MemoryOutbox::default());
        let config = ApiConfig {
            password: PasswordParams::insecure_fast(),
            ..ApiConfig::default()
        };
        let state = Arc::new(AppState::new(Arc::new(journal), clock.clone(), config, outbox.clone()));
        let app = router(state.clone(), None, None);
        Self {
            state,
            app,
            clock,
            outbox,
        }
    }

    pub async fn send(&self, req: Request<Body>) -> Reply {
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let raw = String::from_utf8_lossy(&bytes).into_owned();
        let body = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        Reply { status, body, raw }
    }

    pub async fn call(&self, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut req = Request::builder().method(method).uri(format!("/v1{path}"));
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        self.send(req).await
    }

    pub async fn get(&self, path: &str, token: &str) -> Reply {
        self.call("GET", path, Some(token), None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> Reply {
        self.call("POST", path, Some(token), Some(body)).await
    }

    pub async fn login(&self, user: &str, password: &str) -> Reply {
        self.call(
            "POST",
            "/auth/login",
            None,
            Some(serde_json::json!({ "username": user, "password": password })),
        )
        .await
    }

    /// Registers, enrolls and logs in a participant; returns the token.
    pub async fn participant(&self, name: &str, condition: Condition) -> String {
        let user = UserId::from(name);
        self.state.register_account(&user, "pw", Role::Participant).unwrap();
        self.state
            .journal
            .study()
            .enroll_as(&user, condition, self.clock.now_utc())
            .unwrap();
        let r = self.login(name, "pw").await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
        r.body["token"].as_str().unwrap().to_string()
    }

    pub async fn admin(&self) -> String {
        self.state.ensure_admin(&UserId::from("admin"), "root").unwrap();
        let r = self.login("admin", "root").await;
        r.body["token"].as_str().unwrap().to_string()
    }

    pub fn log(&self) -> Vec<u8> {
        self.state.store().log_bytes().unwrap()
    }
}

pub trait NowUtc {
    fn now_utc(&self) -> DateTime<Utc>;
}

impl NowUtc for ManualClock {
    fn now_utc(&self) -> DateTime<Utc> {
        reverie::clock::Clock::now(self)
    }
}

/// Object keys anywhere in `v` that mention suggestions or imaginations.
pub fn leaked_keys(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    walk(v, &mut out);
    out
}

fn walk(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let lk = k.to_ascii_lowercase();
                if lk.contains("suggestion") || lk.contains("imagination") {
                    out.push(k.clone());
                }
                walk(child, out);
            }
        }
        Value::Array(xs) => xs.iter().for_each(|x| walk(x, out)),
        _ => {}
    }
}

/// Drives one experimental participant through a daily cycle and, at every
/// state, replays each step that is not allowed yet. Returns
/// `(state, attempted step, status, log unchanged)` for every replay.
pub async fn out_of_order_replays(api: &Api) -> Vec<(String, String, u16, bool)> {
    use serde_json::json;
    let token = api.participant("ooo", Condition::Experimental).await;
    for q in 1..=5 {
        let r = api
            .post("/onboarding/seeds", &token, json!({ "question": q, "text": MEMORY }))
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.raw);
    }
    let mut out = Vec::new();
    let mut memory_id = 0u64;

    let steps = |mid: u64| -> Vec<(&'static str, String, Value)> {
        vec![
            (
                "pre_affect",
                "/surveys/affect".into(),
                json!({ "phase": "pre", "positive": 3, "negative": 2 }),
            ),
            ("memory", "/memories".into(), json!({ "text": MEMORY })),
            ("ack", format!("/memories/{mid}/suggestion/ack"), json!({})),
            (
                "imagination",
                format!("/memories/{mid}/imagination"),
                json!({ "text": "I picture it." }),
            ),
            (
                "post_affect",
                "/surveys/affect".into(),
                json!({ "phase": "post", "positive": 4, "negative": 1 }),
            ),
        ]
    };

    for (i, valid) in ["pre_affect", "memory", "ack", "imagination", "post_affect"]
        .iter()
        .enumerate()
    {
        let state = api.get("/flow", &token).await.body["state"]
            .as_str()
            .unwrap()
            .to_string();
        for (name, path, body) in steps(memory_id.max(1)) {
            if name == *valid {
                continue;
            }
            let before = api.log();
            let r = api.post(&path, &token, body).await;
            out.push((state.clone(), name.to_string(), r.status.as_u16(), before == api.log()));
        }
        if *valid == "imagination" {
            // Too early counts as out of order too.
            let before = api.log();
            let r = api
                .post(
                    &format!("/memories/{memory_id}/imagination"),
                    &token,
                    json!({ "text": "early" }),
                )
                .await;
            out.push((
                state.clone(),
                "imagination_early".into(),
                r.status.as_u16(),
                before == api.log(),
            ));
            api.clock.advance(chrono::Duration::seconds(31));
        }
        let (_, path, body) = steps(memory_id.max(1)).remove(i);
        let r = api.post(&path, &token, body).await;
        assert!(r.status.is_success(), "{valid}: {}", r.raw);
        if *valid == "memory" {
            memory_id = r.body["memory"]["id"].as_u64().unwrap();
        }
    }
    out
}

/// Random calls against every endpoint under a control-arm session.
pub struct FuzzReport {
    pub calls: usize,
    /// Calls answered with a 2xx status.
    pub succeeded: usize,
    /// `(call, key)` for every leaked key.
    pub leaks: Vec<(String, String)>,
}

pub async fn fuzz_control(api: &Api, calls: usize, seed: u64) -> FuzzReport {
    use rand::{Rng, SeedableRng};
    use serde_json::json;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut token = api.participant("ctl", Condition::Control).await;
    // An experimental neighbour so ids of real suggestions exist.
    let other = api.participant("exp", Condition::Experimental).await;
    api.post(
        "/surveys/affect",
        &other,
        json!({ "phase": "pre", "positive": 3, "negative": 2 }),
    )
    .await;
    api.post("/memories", &other, json!({ "text": MEMORY })).await;

    let mut leaks = Vec::new();
    let mut succeeded = 0;
    for _ in 0..calls {
        let id = rng.gen_range(0..12u64);
        let small = |rng: &mut rand_chacha::ChaCha8Rng| rng.gen_range(-1..9i64);
        let text = if rng.gen_bool(0.7) {
            MEMORY.to_string()
        } else {
            "short".to_string()
        };
        let items: Vec<i64> = (0..rng.gen_range(6..26)).map(|_| small(&mut rng)).collect();
        let (method, path, body): (&str, String, Option<Value>) = match rng.gen_range(0..26) {
            0 => ("GET", "/flow".into(), None),
            1 => ("GET", "/me".into(), None),
            2 => ("GET", "/dashboard".into(), None),
            3 => ("GET", "/onboarding/questions".into(), None),
            4 => {
                let inst = [
                    "phq8",
                    "sbi",
                    "daily",
                    "feedback",
                    "perceptions_suggestions",
                    "perceptions_imaginations",
                    "x",
                ];
                (
                    "GET",
                    format!("/instruments/{}", inst[rng.gen_range(0..inst.len())]),
                    None,
                )
            }
            5 => ("GET", format!("/memories/{id}"), None),
            6 => (
                "POST",
                "/onboarding/seeds".into(),
                Some(json!({ "question": rng.gen_range(0..7), "text": text })),
            ),
            7..=9 => ("POST", "/memories".into(), Some(json!({ "text": text }))),
            10 => ("POST", format!("/memories/{id}/suggestion"), Some(json!({}))),
            11 => ("POST", format!("/memories/{id}/suggestion/ack"), Some(json!({}))),
            12 => (
                "POST",
                format!("/memories/{id}/imagination"),
                Some(json!({ "text": text })),
            ),
            13..=15 => {
                let phase = if rng.gen_bool(0.5) { "pre" } else { "post" };
                (
                    "POST",
                    "/surveys/affect".into(),
                    Some(json!({ "phase": phase, "positive": small(&mut rng), "negative": small(&mut rng) })),
                )
            }
            16 => (
                "POST",
                "/surveys/likeliness".into(),
                Some(json!({ "suggestion_id": id, "rating": small(&mut rng) })),
            ),
            17 => {
                let wave = if rng.gen_bool(0.5) { "pre_study" } else { "post_study" };
                (
                    "POST",
                    "/surveys/phq8".into(),
                    Some(json!({ "wave": wave, "items": items[..8.min(items.len())] })),
                )
            }
            18 => ("POST", "/surveys/sbi".into(), Some(json!({ "items": items }))),
            19 => {
                let battery = if rng.gen_bool(0.5) {
                    "suggestions"
                } else {
                    "imaginations"
                };
                let scores: serde_json::Map<String, Value> = (1..=11)
                    .map(|i| (format!("sug_{i:02}"), json!(rng.gen_range(1..8))))
                    .collect();
                (
                    "POST",
                    "/surveys/perceptions".into(),
                    Some(json!({ "battery": battery, "scores": scores })),
                )
            }
            20 => (
                "POST",
                "/surveys/feedback".into(),
                Some(json!({ "answers": { "liked": "ok" } })),
            ),
            21 => ("GET", "/admin/export".into(), None),
            22 => (
                "POST",
                "/admin/participants".into(),
                Some(json!({ "username": "z", "password": "z" })),
            ),
            23 => ("POST", "/auth/logout".into(), None),
            24 => {
                api.clock.advance(chrono::Duration::hours(rng.gen_range(1..80)));
                ("GET", "/flow".into(), None)
            }
            _ => ("POST", "/memories".into(), Some(json!({ "txt": 1 }))),
        };
        let call = format!("{method} {path}");
        let r = api.call(method, &path, Some(&token), body).await;
        leaks.extend(leaked_keys(&r.body).into_iter().map(|k| (call.clone(), k)));
        succeeded += usize::from(r.status.is_success());
        if path == "/auth/logout" || r.status == StatusCode::UNAUTHORIZED {
            let again = api.login("ctl", "pw").await;
            leaks.extend(
                leaked_keys(&again.body)
                    .into_iter()
                    .map(|k| ("POST /auth/login".to_string(), k)),
            );
            token = again.body["token"].as_str().unwrap().to_string();
        }
    }
    FuzzReport {
        calls,
        succeeded,
        leaks,
    }
}
