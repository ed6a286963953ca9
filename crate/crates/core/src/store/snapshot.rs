//! Snapshot file: four text lines.
//!
//! ```text
//! reverie-snapshot v1
//! seq:<last applied sequence number>
//! payload:<base64 of sealed JSON state>
//! crc32:<hex over the sealed bytes>
//! ```

use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;

use super::cipher::{Cipher, StoreKey};
use super::{StoreError, StoreState};

const MAGIC: &str = "reverie-snapshot v1";

fn bad(reason: impl Into<String>) -> StoreError {
    StoreError::CorruptLog {
        line: 0,
        reason: format!("snapshot: {}", reason.into()),
    }
}

pub(crate) fn write(path: &Path, state: &StoreState, cipher: &Cipher) -> Result<(), StoreError> {
    let plain = serde_json::to_vec(state).expect("state always serializes");
    // Sequence 0 is never used by log lines, so snapshot nonces never collide with them.
    let sealed = cipher.seal(0, &plain);
    let body = format!(
        "{MAGIC}\nseq:{}\npayload:{}\ncrc32:{:08x}\n",
        state.last_seq,
        B64.encode(&sealed),
        crc32fast::hash(&sealed)
    );
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, body)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

pub(crate) fn read(path: &Path, key: &StoreKey) -> Result<StoreState, StoreError> {
    let body = std::fs::read_to_string(path)?;
    let mut lines = body.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("unknown header"));
    }
    let mut field = |name: &str| {
        lines
            .next()
            .and_then(|l| l.strip_prefix(name))
            .and_then(|l| l.strip_prefix(':'))
            .ok_or_else(|| bad(format!("missing {name}")))
    };
    let seq: u64 = field("seq")?.parse().map_err(|_| bad("bad seq"))?;
    let sealed = B64.decode(field("payload")?).map_err(|_| bad("bad base64"))?;
    let crc = u32::from_str_radix(field("crc32")?, 16).map_err(|_| bad("bad crc32"))?;
    if crc32fast::hash(&sealed) != crc {
        return Err(bad("checksum mismatch"));
    }
    let plain = Cipher::new(key).open(&sealed).map_err(bad)?;
    let state: StoreState = serde_json::from_slice(&plain).map_err(|e| bad(e.to_string()))?;
    if state.last_seq != seq {
        return Err(bad("sequence header does not match state"));
    }
    Ok(state)
}
