//! Text-encoder backends producing fixed-size embeddings for the MLP head.
//!
//! The remote protocol is a single endpoint:
//!
//! ```text
//! POST {endpoint}/embed  {"texts": ["..."], "max_tokens": 512}
//!   -> {"dim": 768, "vectors": [[...], ...]}
//! ```

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_TOKENS: usize = 512;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unreachable at {endpoint}: {reason}")]
    Unreachable { endpoint: String, reason: String },
    #[error("backend returned dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("backend timed out after {0:?}")]
    Timeout(Duration),
    #[error("backend protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BackendId {
    pub name: String,
    pub dim: usize,
    pub max_tokens: usize,
}

pub trait EncoderBackend: Send + Sync {
    fn id(&self) -> BackendId;

    /// One vector of length `id().dim` per input text.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError>;

    /// [`embed`](Self::embed) with count and dimension checks on the result.
    fn embed_all(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        let dim = self.id().dim;
        let vectors = self.embed(texts)?;
        if vectors.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "asked for {} vectors, got {}",
                texts.len(),
                vectors.len()
            )));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(BackendError::DimensionMismatch { expected: dim, found: v.len() });
        }
        Ok(vectors)
    }
}

/// First `max_tokens` whitespace tokens of `text`, rejoined by single spaces.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> String {
    text.split_whitespace().take(max_tokens).collect::<Vec<_>>().join(" ")
}

/// Feature-hashing stand-in for a pretrained encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashingBackend {
    dim: usize,
    max_tokens: usize,
}

pub const HASHING_BACKEND_NAME: &str = "hashing";

/// FNV-1a, 64 bit. Stable across processes and platforms.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashingBackend {
    pub fn new(dim: usize) -> Result<Self, BackendError> {
        if dim < 8 {
            return Err(BackendError::Protocol(format!("hashing backend needs dim >= 8, got {dim}")));
        }
        Ok(HashingBackend { dim, max_tokens: DEFAULT_MAX_TOKENS })
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for tok in text.split_whitespace().take(self.max_tokens) {
            v[(fnv1a64(tok.as_bytes()) % self.dim as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EncoderBackend for HashingBackend {
    fn id(&self) -> BackendId {
        BackendId { name: HASHING_BACKEND_NAME.into(), dim: self.dim, max_tokens: self.max_tokens }
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
    max_tokens: usize,
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// HTTP client for a remote encoder speaking the embed protocol.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    name: String,
    endpoint: String,
    dim: usize,
    max_tokens: usize,
    timeout: Duration,
    agent: ureq::Agent,
}

impl ExternalBackend {
    pub fn new(endpoint: impl Into<String>, dim: usize) -> Self {
        Self::with_options(endpoint, dim, DEFAULT_MAX_TOKENS, DEFAULT_TIMEOUT)
    }

    pub fn with_options(endpoint: impl Into<String>, dim: usize, max_tokens: usize, timeout: Duration) -> Self {
        let endpoint = endpoint.into().trim_end_matches('/').to_string();
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        ExternalBackend { name: format!("external:{endpoint}"), endpoint, dim, max_tokens, timeout, agent }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn map_error(&self, e: ureq::Error) -> BackendError {
        match e {
            ureq::Error::Timeout(_) => BackendError::Timeout(self.timeout),
            ureq::Error::StatusCode(code) => BackendError::Protocol(format!("HTTP status {code}")),
            ureq::Error::Json(err) => BackendError::Protocol(err.to_string()),
            ureq::Error::Io(err) if err.kind() == std::io::ErrorKind::TimedOut => BackendError::Timeout(self.timeout),
            other => BackendError::Unreachable { endpoint: self.endpoint.clone(), reason: other.to_string() },
        }
    }
}

impl EncoderBackend for ExternalBackend {
    fn id(&self) -> BackendId {
        BackendId { name: self.name.clone(), dim: self.dim, max_tokens: self.max_tokens }
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let truncated: Vec<String> = texts.iter().map(|t| truncate_tokens(t, self.max_tokens)).collect();
        let body = EmbedRequest { texts: &truncated, max_tokens: self.max_tokens };
        let mut resp = self
            .agent
            .post(format!("{}/embed", self.endpoint))
            .send_json(&body)
            .map_err(|e| self.map_error(e))?;
        let parsed: EmbedResponse = resp.body_mut().read_json().map_err(|e| self.map_error(e))?;
        if parsed.dim != self.dim {
            return Err(BackendError::DimensionMismatch { expected: self.dim, found: parsed.dim });
        }
        if let Some(v) = parsed.vectors.iter().find(|v| v.len() != self.dim) {
            return Err(BackendError::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        Ok(parsed.vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashing_empty_text_is_zero() {
        let b = HashingBackend::new(16).unwrap();
        assert!(b.embed_one("").iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hashing_is_unit_norm_and_stable() {
        let b = HashingBackend::new(32).unwrap();
        let v = b.embed_one("fpga alert on node");
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-9);
        assert_eq!(v, b.embed_one("fpga alert on node"));
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn hashing_truncates_at_max_tokens() {
        let b = HashingBackend::new(8).unwrap();
        let long: String = (0..600).map(|i| format!("t{i} ")).collect();
        let head: String = (0..512).map(|i| format!("t{i} ")).collect();
        assert_eq!(b.embed_one(&long), b.embed_one(&head));
    }

    #[test]
    fn hashing_rejects_small_dim() {
        assert!(HashingBackend::new(7).is_err());
    }

    #[test]
    fn unreachable_endpoint() {
        let b = ExternalBackend::with_options("http://127.0.0.1:9", 4, 512, Duration::from_secs(2));
        let err = b.embed(&["x".to_string()]).unwrap_err();
        assert!(matches!(err, BackendError::Unreachable { .. } | BackendError::Timeout(_)), "{err}");
    }

    #[test]
    fn truncation_helper() {
        assert_eq!(truncate_tokens("a  b\tc d", 3), "a b c");
    }
}
