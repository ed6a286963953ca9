//! Exact top-k cosine retrieval over one user's embedded memories.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{MemoryId, UserId};
use crate::store::{MemoryKind, StoreState};

/// Number of related memories placed into the suggestion prompt.
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityHit {
    pub memory_id: MemoryId,
    pub score: f64,
    pub rank: usize,
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// A retrieval candidate borrowed from the store.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub id: MemoryId,
    pub created_at: DateTime<Utc>,
    pub embedding: &'a [f64],
}

struct Scored {
    id: MemoryId,
    created_at: DateTime<Utc>,
    score: f64,
}

/// Strict ordering: higher score, then newer, then smaller id.
fn ranks_before(a: &Scored, b: &Scored) -> bool {
    match a.score.total_cmp(&b.score) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => match a.created_at.cmp(&b.created_at) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => a.id < b.id,
        },
    }
}

/// Ranks candidates by cosine similarity to `query` with a bounded insertion
/// buffer of size `k`. Candidates in `exclude` are skipped.
pub fn top_k<'a>(
    query: &[f64],
    candidates: impl IntoIterator<Item = Candidate<'a>>,
    k: usize,
    exclude: &[MemoryId],
) -> Result<Vec<SimilarityHit>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::ZeroK);
    }
    let mut best: Vec<Scored> = Vec::with_capacity(k + 1);
    for c in candidates {
        if exclude.contains(&c.id) {
            continue;
        }
        let scored = Scored {
            id: c.id,
            created_at: c.created_at,
            score: cosine_similarity(query, c.embedding)?,
        };
        if best.len() == k && !ranks_before(&scored, &best[k - 1]) {
            continue;
        }
        let at = best.iter().position(|b| ranks_before(&scored, b)).unwrap_or(best.len());
        best.insert(at, scored);
        best.truncate(k);
    }
    Ok(best
        .into_iter()
        .enumerate()
        .map(|(i, s)| SimilarityHit {
            memory_id: s.id,
            score: s.score,
            rank: i + 1,
        })
        .collect())
}

/// Top-k over a user's seed and daily memories that have embeddings.
/// Imaginations never enter the pool.
pub fn top_k_similar(
    state: &StoreState,
    user: &UserId,
    query: &[f64],
    k: usize,
    exclude: &[MemoryId],
) -> Result<Vec<SimilarityHit>, RetrievalError> {
    if !state.participants.contains_key(user) {
        return Err(RetrievalError::UnknownUser(user.clone()));
    }
    let candidates = state
        .user_memories(user)
        .filter(|m| m.kind != MemoryKind::Imagination)
        .filter_map(|m| {
            m.embedding.as_deref().map(|e| Candidate {
                id: m.id,
                created_at: m.created_at,
                embedding: e,
            })
        });
    top_k(query, candidates, k, exclude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn cosine_fixtures() {
        let v = [0.3, -0.4, 0.5];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-9);
        let mut e1 = vec![0.0; 64];
        let mut e2 = vec![0.0; 64];
        e1[0] = 1.0;
        e2[1] = 1.0;
        assert!(cosine_similarity(&e1, &e2).unwrap().abs() < 1e-9);
        // dot((1,2,2),(2,1,2)) = 8, both norms 3.
        let a = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        let b = [2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
        assert!((cosine_similarity(&a, &b).unwrap() - 8.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn cosine_errors() {
        assert_eq!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(RetrievalError::DimensionMismatch(1, 2))
        );
        assert_eq!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(RetrievalError::ZeroVector)
        );
    }

    fn at(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, h, 0, 0).unwrap()
    }

    #[test]
    fn underfull_pool_returns_all() {
        let vs = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let cands = vs.iter().enumerate().map(|(i, v)| Candidate {
            id: MemoryId(i as u64 + 1),
            created_at: at(i as u32),
            embedding: v,
        });
        let hits = top_k(&[1.0, 0.2], cands, 5, &[]).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(hits.iter().map(|h| h.rank).collect::<Vec<_>>(), [1, 2, 3]);
        assert_eq!(hits[0].memory_id, MemoryId(1));
    }

    #[test]
    fn equal_scores_rank_newer_first() {
        let v = [0.6, 0.8];
        let cands = [
            Candidate {
                id: MemoryId(1),
                created_at: at(1),
                embedding: &v,
            },
            Candidate {
                id: MemoryId(2),
                created_at: at(5),
                embedding: &v,
            },
            Candidate {
                id: MemoryId(3),
                created_at: at(5),
                embedding: &v,
            },
        ];
        let hits = top_k(&[0.6, 0.8], cands, 3, &[]).unwrap();
        let ids: Vec<_> = hits.iter().map(|h| h.memory_id.0).collect();
        assert_eq!(ids, [2, 3, 1]);
    }

    #[test]
    fn excluded_ids_skipped() {
        let v = [1.0, 0.0];
        let cands = [
            Candidate {
                id: MemoryId(1),
                created_at: at(1),
                embedding: &v,
            },
            Candidate {
                id: MemoryId(2),
                created_at: at(2),
                embedding: &v,
            },
        ];
        let hits = top_k(&v, cands, 5, &[MemoryId(2)]).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].memory_id, MemoryId(1));
    }
}
