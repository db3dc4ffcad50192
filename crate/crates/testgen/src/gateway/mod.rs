//! Role-specific prompt rendering, completion backends (remote HTTP or
//! deterministic scripted oracle) and strict structured-response parsing.

mod parse;
mod prompt;
mod remote;
mod scripted;

pub use parse::{extract_first_json_object, parse_response, serialize_response};
pub use prompt::{render_prompt, HistoryEntry, PromptContext, PromptTemplates};
pub use remote::RemoteBackend;
pub use scripted::{OracleEntry, ScriptedBackend};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::app_model::Screenshot;

pub const API_KEY_ENV: &str = "AGENT_TESTGEN_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Selector,
    Observer,
    Verifier,
    Reflector,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Role::Selector => "selector",
            Role::Observer => "observer",
            Role::Verifier => "verifier",
            Role::Reflector => "reflector",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("scripted oracle exhausted for role {role}")]
    ScriptedExhausted { role: Role },
    #[error("{role} response unparseable after {attempts} attempts: {message}; last raw: {last_raw:?}")]
    ParseFailure {
        role: Role,
        attempts: u32,
        message: String,
        last_raw: String,
    },
    #[error("template for {role} {problem} placeholder {placeholder:?}")]
    Template {
        role: Role,
        problem: &'static str,
        placeholder: &'static str,
    },
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("oracle script parse error in {path}: {message}")]
    OracleParse { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    Scripted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub backend_kind: BackendKind,
    pub endpoint: Option<String>,
    pub model_name_per_role: BTreeMap<Role, String>,
    pub temperature: f64,
    /// Transport retries for the remote backend.
    pub max_retries: u32,
    /// Re-asks after a malformed structured response, before aborting.
    pub parse_reasks: u32,
    /// Base delay for exponential backoff, milliseconds.
    pub backoff_base_ms: u64,
    #[serde(skip)]
    pub credential: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        let mut models = BTreeMap::new();
        // one model for the in-loop roles, a second for the reflector
        for role in [Role::Selector, Role::Observer, Role::Verifier] {
            models.insert(role, "gpt-4o".to_string());
        }
        models.insert(Role::Reflector, "gpt-4-turbo".to_string());
        BackendConfig {
            backend_kind: BackendKind::Scripted,
            endpoint: None,
            model_name_per_role: models,
            temperature: 0.0,
            max_retries: 2,
            parse_reasks: 2,
            backoff_base_ms: 100,
            credential: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.backend_kind == BackendKind::Remote {
            if self.endpoint.is_none() {
                return Err(GatewayError::Config("remote backend requires an endpoint".into()));
            }
            if self.credential.is_none() {
                return Err(GatewayError::Config(format!(
                    "remote backend requires a credential (set {API_KEY_ENV})"
                )));
            }
        }
        Ok(())
    }

    pub fn model_for(&self, role: Role) -> &str {
        self.model_name_per_role
            .get(&role)
            .map(String::as_str)
            .unwrap_or("default")
    }
}

/// Typed prompt/response envelope for one LLM call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptEnvelope {
    pub role: Role,
    pub text: String,
    pub image: Option<Screenshot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Success,
    Failed,
}

/// Parsed per-role response fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoleResponse {
    Selector {
        chosen_action: usize,
        action_description: String,
        reason: String,
    },
    Observer {
        observation: String,
    },
    Verifier {
        screen_description: String,
        task_done: bool,
    },
    Reflector {
        verdict: Verdict,
        rules: Vec<String>,
        optimized_steps: Vec<String>,
    },
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, envelope: &PromptEnvelope, config: &BackendConfig) -> Result<String, GatewayError>;
}

/// Audit-log record of one completed exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeRecord {
    pub role: Role,
    pub prompt_digest: String,
    pub reply_digest: String,
}

pub type ExchangeLog = Arc<std::sync::Mutex<Vec<ExchangeRecord>>>;

fn digest(text: &str) -> String {
    use std::hash::{Hash, Hasher};
    let mut hasher = std::hash::DefaultHasher::new();
    text.hash(&mut hasher);
    format!("{:016x}", hasher.finish())
}

/// One gateway session: a backend plus config, templates and the vision flag.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn CompletionBackend>,
    pub config: BackendConfig,
    pub templates: PromptTemplates,
    pub vision_enabled: bool,
    log: Option<ExchangeLog>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn CompletionBackend>, config: BackendConfig) -> Self {
        Gateway {
            backend,
            config,
            templates: PromptTemplates::default(),
            vision_enabled: true,
            log: None,
        }
    }

    /// Attach an audit log; every backend exchange is recorded as digests.
    pub fn with_log(mut self, log: ExchangeLog) -> Self {
        self.log = Some(log);
        self
    }

    pub fn scripted(entries: Vec<OracleEntry>) -> Self {
        Gateway::new(Arc::new(ScriptedBackend::new(entries)), BackendConfig::default())
    }

    pub fn with_vision(mut self, enabled: bool) -> Self {
        self.vision_enabled = enabled;
        self
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn render(&self, context: &PromptContext<'_>) -> Result<PromptEnvelope, GatewayError> {
        render_prompt(&self.templates, context, self.vision_enabled)
    }

    pub fn complete_raw(&self, envelope: &PromptEnvelope) -> Result<String, GatewayError> {
        self.backend.complete(envelope, &self.config)
    }

    /// Complete and parse, re-asking up to `parse_reasks` times on malformed
    /// responses, then aborting with a diagnostic.
    pub fn ask(&self, context: &PromptContext<'_>) -> Result<RoleResponse, GatewayError> {
        let envelope = self.render(context)?;
        self.ask_envelope(&envelope)
    }

    pub fn ask_envelope(&self, envelope: &PromptEnvelope) -> Result<RoleResponse, GatewayError> {
        let mut envelope = envelope.clone();
        let mut last_err = String::new();
        let mut last_raw = String::new();
        let attempts = 1 + self.config.parse_reasks;
        for attempt in 0..attempts {
            if attempt > 0 {
                envelope.text.push_str("\nRespond with only the structured object.");
            }
            let raw = self.backend.complete(&envelope, &self.config)?;
            if let Some(log) = &self.log {
                log.lock().unwrap().push(ExchangeRecord {
                    role: envelope.role,
                    prompt_digest: digest(&envelope.text),
                    reply_digest: digest(&raw),
                });
            }
            match parse_response(envelope.role, &raw) {
                Ok(resp) => return Ok(resp),
                Err(message) => {
                    last_err = message;
                    last_raw = raw;
                }
            }
        }
        Err(GatewayError::ParseFailure {
            role: envelope.role,
            attempts,
            message: last_err,
            last_raw,
        })
    }
}
