use std::time::Duration;

use serde_json::Value;
use ureq::Agent;

pub(crate) fn agent(timeout: Duration) -> Agent {
    Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into()
}

/// POSTs `body` as JSON and decodes a JSON reply. Errors are rendered to
/// strings so callers can attach the endpoint.
pub(crate) fn post_json(agent: &Agent, url: &str, body: &Value) -> Result<Value, String> {
    agent
        .post(url)
        .send_json(body)
        .map_err(|e| e.to_string())?
        .body_mut()
        .read_json::<Value>()
        .map_err(|e| e.to_string())
}
