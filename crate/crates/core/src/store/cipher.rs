//! At-rest encryption of log payloads and snapshots.
//!
//! ChaCha20-Poly1305 with a synthetic nonce: the nonce is a keyed hash of the
//! sequence number and the plaintext, so identical inputs produce identical
//! ciphertext and a nonce is only ever reused for the same message.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use sha2::{Digest, Sha256};

const NONCE_LEN: usize = 12;

#[derive(Clone)]
pub struct StoreKey([u8; 32]);

impl StoreKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    /// 64 hex characters.
    pub fn from_hex(hex_key: &str) -> Result<Self, String> {
        let bytes = hex::decode(hex_key.trim()).map_err(|e| e.to_string())?;
        let bytes: [u8; 32] = bytes.try_into().map_err(|_| "store key must be 32 bytes".to_string())?;
        Ok(Self(bytes))
    }

    /// Derives a key from an arbitrary passphrase with SHA-256.
    pub fn from_passphrase(passphrase: &str) -> Self {
        Self(Sha256::digest(passphrase.as_bytes()).into())
    }
}

impl std::fmt::Debug for StoreKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("StoreKey(..)")
    }
}

pub(crate) struct Cipher {
    aead: ChaCha20Poly1305,
    nonce_key: [u8; 32],
}

impl Cipher {
    pub fn new(key: &StoreKey) -> Self {
        let mut h = Sha256::new();
        h.update(b"reverie-nonce-key");
        h.update(key.0);
        Self {
            aead: ChaCha20Poly1305::new(Key::from_slice(&key.0)),
            nonce_key: h.finalize().into(),
        }
    }

    pub fn seal(&self, seq: u64, plaintext: &[u8]) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(self.nonce_key);
        h.update(seq.to_le_bytes());
        h.update(plaintext);
        let digest = h.finalize();
        let nonce = Nonce::from_slice(&digest[..NONCE_LEN]);
        let mut out = nonce.to_vec();
        // Encryption only fails for inputs beyond the AEAD's length limit.
        out.extend(self.aead.encrypt(nonce, plaintext).expect("payload too large"));
        out
    }

    pub fn open(&self, sealed: &[u8]) -> Result<Vec<u8>, String> {
        if sealed.len() < NONCE_LEN {
            return Err("ciphertext shorter than nonce".into());
        }
        let (nonce, body) = sealed.split_at(NONCE_LEN);
        self.aead
            .decrypt(Nonce::from_slice(nonce), body)
            .map_err(|_| "decryption failed (wrong key or tampered payload)".to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seal_is_deterministic_and_opens() {
        let c = Cipher::new(&StoreKey::from_passphrase("k"));
        let a = c.seal(3, b"memory text");
        assert_eq!(a, c.seal(3, b"memory text"));
        assert_ne!(a, c.seal(4, b"memory text"));
        assert_eq!(c.open(&a).unwrap(), b"memory text");
        assert!(!a.windows(6).any(|w| w == b"memory"));
    }

    #[test]
    fn wrong_key_fails() {
        let sealed = Cipher::new(&StoreKey::from_passphrase("a")).seal(1, b"x");
        assert!(Cipher::new(&StoreKey::from_passphrase("b")).open(&sealed).is_err());
    }

    #[test]
    fn hex_key_length_checked() {
        assert!(StoreKey::from_hex(&"ab".repeat(32)).is_ok());
        assert!(StoreKey::from_hex("abcd").is_err());
    }
}
