//! Remote chat-completion backend with retry and exponential backoff.

use std::sync::atomic::{AtomicU32, Ordering};
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::{BackendConfig, CompletionBackend, GatewayError, PromptEnvelope};

pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    retries_observed: AtomicU32,
}

impl Default for RemoteBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl RemoteBackend {
    pub fn new() -> Self {
        RemoteBackend {
            client: reqwest::blocking::Client::new(),
            retries_observed: AtomicU32::new(0),
        }
    }

    /// Retries performed across all calls on this backend.
    pub fn retries_observed(&self) -> u32 {
        self.retries_observed.load(Ordering::Relaxed)
    }

    fn build_request(envelope: &PromptEnvelope, config: &BackendConfig) -> Value {
        let mut content = vec![json!({ "type": "text", "text": envelope.text })];
        if let Some(shot) = &envelope.image {
            content.push(json!({
                "type": "image",
                "media_type": shot.media_type,
                "data": base64::engine::general_purpose::STANDARD.encode(&shot.bytes),
            }));
        }
        json!({
            "model": config.model_for(envelope.role),
            "temperature": config.temperature,
            "messages": [{ "role": "user", "content": content }],
        })
    }

    fn extract_body_text(body: &str) -> Result<String, String> {
        let value: Value = serde_json::from_str(body).map_err(|e| format!("response body is not JSON: {e}"))?;
        value
            .pointer("/choices/0/message/content")
            .or_else(|| value.get("content"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| "response body carries no message content".to_string())
    }
}

impl CompletionBackend for RemoteBackend {
    fn complete(&self, envelope: &PromptEnvelope, config: &BackendConfig) -> Result<String, GatewayError> {
        config.validate()?;
        let endpoint = config.endpoint.as_deref().expect("validated above");
        let credential = config.credential.as_deref().expect("validated above");
        let request = Self::build_request(envelope, config);

        let attempts = 1 + config.max_retries;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                self.retries_observed.fetch_add(1, Ordering::Relaxed);
                let delay = config.backoff_base_ms.saturating_mul(1 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(delay));
            }
            let result = self
                .client
                .post(endpoint)
                .bearer_auth(credential)
                .json(&request)
                .send();
            match result {
                Ok(response) if response.status().is_success() => {
                    let body = response.text().map_err(|e| GatewayError::Transport {
                        attempts: attempt + 1,
                        message: e.to_string(),
                    })?;
                    return Self::extract_body_text(&body).map_err(|message| GatewayError::Transport {
                        attempts: attempt + 1,
                        message,
                    });
                }
                Ok(response) => {
                    last_error = format!("server returned {}", response.status());
                }
                Err(e) => {
                    last_error = e.to_string();
                }
            }
        }
        Err(GatewayError::Transport {
            attempts,
            message: last_error,
        })
    }
}
