//! HTTP access to remote planner / segmenter services, behind a
//! transport trait so everything above it can be tested hermetically.
//!
//! Retry policy: connection-level failures and 5xx responses are retried
//! up to the configured count (total attempts = retries + 1); 4xx
//! responses and malformed response bodies fail immediately, since
//! resending the same request cannot fix them.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request to {url} failed: {message}")]
    Io { url: String, message: String },
    #[error("{url} returned status {status}")]
    Status { url: String, status: u16 },
}

impl TransportError {
    /// Whether a resend could plausibly succeed.
    pub fn retryable(&self) -> bool {
        match self {
            TransportError::Io { .. } => true,
            TransportError::Status { status, .. } => *status >= 500,
        }
    }
}

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("unusable response from {url}: {message}")]
    BadResponse { url: String, message: String },
}

/// Sends one JSON document, returns the response body text.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, body: &Value) -> Result<String, TransportError>;
}

/// Real HTTP transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout_secs: u64) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(timeout_secs))
            .build()
            .expect("HTTP client construction cannot fail with static options");
        HttpTransport { client }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport::new(30)
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, body: &Value) -> Result<String, TransportError> {
        let resp = self
            .client
            .post(url)
            .json(body)
            .send()
            .map_err(|e| TransportError::Io { url: url.to_string(), message: e.to_string() })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(TransportError::Status { url: url.to_string(), status: status.as_u16() });
        }
        resp.text()
            .map_err(|e| TransportError::Io { url: url.to_string(), message: e.to_string() })
    }
}

/// A transport plus endpoint base and retry budget.
pub struct RemoteClient {
    transport: Box<dyn Transport>,
    endpoint: String,
    retries: u32,
}

impl RemoteClient {
    pub fn new(transport: Box<dyn Transport>, endpoint: &str, retries: u32) -> Self {
        RemoteClient { transport, endpoint: endpoint.trim_end_matches('/').to_string(), retries }
    }

    pub fn over_http(endpoint: &str, retries: u32) -> Self {
        RemoteClient::new(Box::new(HttpTransport::default()), endpoint, retries)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// POSTs `body` to `{endpoint}/{path}` and parses the response as
    /// JSON, retrying transient failures.
    pub fn call(&self, path: &str, body: &Value) -> Result<Value, RemoteError> {
        let url = format!("{}/{}", self.endpoint, path.trim_start_matches('/'));
        let mut attempt = 0;
        loop {
            match self.transport.post_json(&url, body) {
                Ok(text) => {
                    return serde_json::from_str(&text).map_err(|e| RemoteError::BadResponse {
                        url: url.clone(),
                        message: e.to_string(),
                    });
                }
                Err(e) if e.retryable() && attempt < self.retries => {
                    attempt += 1;
                    log::warn!("retrying {url} (attempt {}): {e}", attempt + 1);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    /// Scripted transport: pops one canned outcome per call.
    struct Script {
        calls: Mutex<Vec<Result<String, TransportError>>>,
        seen: Mutex<usize>,
    }

    impl Script {
        fn new(mut outcomes: Vec<Result<String, TransportError>>) -> Self {
            outcomes.reverse();
            Script { calls: Mutex::new(outcomes), seen: Mutex::new(0) }
        }
    }

    impl Transport for Script {
        fn post_json(&self, _url: &str, _body: &Value) -> Result<String, TransportError> {
            *self.seen.lock().unwrap() += 1;
            self.calls.lock().unwrap().pop().expect("script exhausted")
        }
    }

    fn io_err() -> TransportError {
        TransportError::Io { url: "u".into(), message: "refused".into() }
    }

    fn status(code: u16) -> TransportError {
        TransportError::Status { url: "u".into(), status: code }
    }

    #[test]
    fn retries_io_errors_then_succeeds() {
        let client = RemoteClient::new(
            Box::new(Script::new(vec![Err(io_err()), Ok("{\"ok\":true}".into())])),
            "http://x",
            2,
        );
        let v = client.call("plan", &serde_json::json!({})).unwrap();
        assert_eq!(v["ok"], true);
    }

    #[test]
    fn retries_server_errors() {
        let client = RemoteClient::new(
            Box::new(Script::new(vec![Err(status(503)), Err(status(500)), Ok("1".into())])),
            "http://x",
            2,
        );
        assert_eq!(client.call("plan", &serde_json::json!({})).unwrap(), 1);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let script = Script::new(vec![Err(status(400)), Ok("1".into())]);
        let client = RemoteClient::new(Box::new(script), "http://x", 2);
        let err = client.call("plan", &serde_json::json!({})).unwrap_err();
        assert!(matches!(
            err,
            RemoteError::Transport(TransportError::Status { status: 400, .. })
        ));
    }

    #[test]
    fn malformed_body_is_not_retried() {
        let script = Script::new(vec![Ok("not json".into()), Ok("1".into())]);
        let client = RemoteClient::new(Box::new(script), "http://x", 5);
        assert!(matches!(
            client.call("plan", &serde_json::json!({})).unwrap_err(),
            RemoteError::BadResponse { .. }
        ));
    }

    #[test]
    fn retry_budget_is_exhausted() {
        let client = RemoteClient::new(
            Box::new(Script::new(vec![Err(io_err()), Err(io_err()), Err(io_err())])),
            "http://x",
            2,
        );
        assert!(client.call("plan", &serde_json::json!({})).is_err());
    }

    #[test]
    fn endpoint_slashes_are_normalized() {
        let client = RemoteClient::new(Box::new(Script::new(vec![])), "http://x/", 0);
        assert_eq!(client.endpoint(), "http://x");
    }
}
