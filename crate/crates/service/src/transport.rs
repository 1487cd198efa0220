//! Blocking HTTP transport for the planner backend.

use std::io::ErrorKind;
use std::time::Duration;

use glyphplan_core::planner::{ChatRequest, ChatResponse, ChatTransport, TransportError};
use ureq::Agent;

/// Posts chat requests as JSON. The agent pools connections and is safe to
/// share across threads.
#[derive(Clone)]
pub struct HttpTransport {
    agent: Agent,
}

impl Default for HttpTransport {
    fn default() -> Self {
        let agent = Agent::config_builder().http_status_as_error(false).build().into();
        Self { agent }
    }
}

fn map_error(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::Io(io) if matches!(io.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock) => TransportError::Timeout,
        other => TransportError::Unreachable(other.to_string()),
    }
}

impl ChatTransport for HttpTransport {
    fn send(&self, endpoint: &str, request: &ChatRequest, timeout: Duration) -> Result<ChatResponse, TransportError> {
        let mut response = self
            .agent
            .post(endpoint)
            .config()
            .timeout_global(Some(timeout))
            .build()
            .content_type("application/json")
            .send(serde_json::to_string(request).map_err(|e| TransportError::Decode(e.to_string()))?)
            .map_err(map_error)?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(map_error)?;
        if !(200..300).contains(&status) {
            return Err(TransportError::Status { status, body });
        }
        serde_json::from_str(&body).map_err(|e| TransportError::Decode(e.to_string()))
    }
}
