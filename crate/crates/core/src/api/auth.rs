//! Password hashing, sessions and login throttling.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use argon2::password_hash::rand_core::{OsRng, RngCore};
use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use chrono::{DateTime, Duration, Utc};
use serde::Serialize;

use crate::ids::UserId;
use crate::store::Role;

/// Argon2id cost parameters for new hashes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PasswordParams {
    pub m_cost_kib: u32,
    pub t_cost: u32,
    pub p_cost: u32,
}

impl Default for PasswordParams {
    fn default() -> Self {
        Self {
            m_cost_kib: Params::DEFAULT_M_COST,
            t_cost: Params::DEFAULT_T_COST,
            p_cost: Params::DEFAULT_P_COST,
        }
    }
}

impl PasswordParams {
    /// Minimal cost, for tests and simulations only.
    pub fn insecure_fast() -> Self {
        Self {
            m_cost_kib: Params::MIN_M_COST,
            t_cost: 1,
            p_cost: 1,
        }
    }
}

/// PHC-format salted Argon2id hash.
pub fn hash_password(params: PasswordParams, password: &str) -> Result<String, String> {
    let p = Params::new(params.m_cost_kib, params.t_cost, params.p_cost, None).map_err(|e| e.to_string())?;
    let salt = SaltString::generate(&mut OsRng);
    Argon2::new(Algorithm::Argon2id, Version::V0x13, p)
        .hash_password(password.as_bytes(), &salt)
        .map(|h| h.to_string())
        .map_err(|e| e.to_string())
}

pub fn verify_password(hash: &str, password: &str) -> bool {
    PasswordHash::new(hash)
        .map(|parsed| Argon2::default().verify_password(password.as_bytes(), &parsed).is_ok())
        .unwrap_or(false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Session {
    pub user_id: UserId,
    pub role: Role,
    pub token: String,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

/// In-memory bearer sessions; a restart logs everyone out.
#[derive(Default)]
pub struct Sessions {
    by_token: Mutex<HashMap<String, Session>>,
}

impl Sessions {
    pub fn issue(&self, user_id: UserId, role: Role, now: DateTime<Utc>, ttl: Duration) -> Session {
        let mut bytes = [0u8; 32];
        OsRng.fill_bytes(&mut bytes);
        let session = Session {
            user_id,
            role,
            token: hex::encode(bytes),
            issued_at: now,
            expires_at: now + ttl,
        };
        let mut map = self.by_token.lock().expect("sessions poisoned");
        map.retain(|_, s| s.expires_at > now);
        map.insert(session.token.clone(), session.clone());
        session
    }

    pub fn get(&self, token: &str, now: DateTime<Utc>) -> Option<Session> {
        let mut map = self.by_token.lock().expect("sessions poisoned");
        match map.get(token) {
            Some(s) if s.expires_at > now => Some(s.clone()),
            Some(_) => {
                map.remove(token);
                None
            }
            None => None,
        }
    }

    pub fn revoke(&self, token: &str) {
        self.by_token.lock().expect("sessions poisoned").remove(token);
    }
}

/// Failed logins per username in a sliding one-minute window.
pub struct LoginThrottle {
    max_failures: usize,
    failures: Mutex<HashMap<String, VecDeque<DateTime<Utc>>>>,
}

impl LoginThrottle {
    pub fn new(max_failures: usize) -> Self {
        Self {
            max_failures,
            failures: Mutex::new(HashMap::new()),
        }
    }

    fn recent<'a>(
        map: &'a mut HashMap<String, VecDeque<DateTime<Utc>>>,
        user: &str,
        now: DateTime<Utc>,
    ) -> &'a mut VecDeque<DateTime<Utc>> {
        let q = map.entry(user.to_string()).or_default();
        while q.front().is_some_and(|t| now - *t >= Duration::minutes(1)) {
            q.pop_front();
        }
        q
    }

    pub fn is_blocked(&self, user: &str, now: DateTime<Utc>) -> bool {
        let mut map = self.failures.lock().expect("throttle poisoned");
        Self::recent(&mut map, user, now).len() >= self.max_failures
    }

    pub fn record_failure(&self, user: &str, now: DateTime<Utc>) {
        let mut map = self.failures.lock().expect("throttle poisoned");
        Self::recent(&mut map, user, now).push_back(now);
    }

    pub fn clear(&self, user: &str) {
        self.failures.lock().expect("throttle poisoned").remove(user);
    }
}
