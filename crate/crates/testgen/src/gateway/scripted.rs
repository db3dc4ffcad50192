//! Deterministic scripted completion oracle for tests and fixtures.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendConfig, CompletionBackend, GatewayError, PromptEnvelope, Role};

/// One scripted reply. Entries without a `match` key are consumed in order
/// per role (ordinal keying); entries with a `match` key fire only when the
/// key is a substring of the envelope content. Repeatable entries are never
/// consumed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleEntry {
    pub role: Role,
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub match_key: Option<String>,
    pub reply: String,
    #[serde(default)]
    pub repeat: bool,
}

impl OracleEntry {
    pub fn ordinal(role: Role, reply: impl Into<String>) -> Self {
        OracleEntry {
            role,
            match_key: None,
            reply: reply.into(),
            repeat: false,
        }
    }

    pub fn keyed(role: Role, key: impl Into<String>, reply: impl Into<String>) -> Self {
        OracleEntry {
            role,
            match_key: Some(key.into()),
            reply: reply.into(),
            repeat: false,
        }
    }

    pub fn repeatable(mut self) -> Self {
        self.repeat = true;
        self
    }
}

#[derive(Debug, Deserialize)]
struct OracleFile {
    entries: Vec<OracleEntry>,
}

/// The matched content is the prompt text plus, when an image is attached,
/// an `[[image]]` marker followed by the decoded visual snapshot. This is
/// what lets fixtures key verifier replies off the channel they receive.
pub fn match_content(envelope: &PromptEnvelope) -> String {
    match &envelope.image {
        Some(shot) => format!("{}\n[[image]]\n{}", envelope.text, shot.as_text()),
        None => envelope.text.clone(),
    }
}

pub struct ScriptedBackend {
    entries: Vec<OracleEntry>,
    consumed: Mutex<Vec<bool>>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<OracleEntry>) -> Self {
        let consumed = Mutex::new(vec![false; entries.len()]);
        ScriptedBackend { entries, consumed }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GatewayError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: OracleFile = toml::from_str(&text).map_err(|e| GatewayError::OracleParse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(ScriptedBackend::new(file.entries))
    }
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, envelope: &PromptEnvelope, _config: &BackendConfig) -> Result<String, GatewayError> {
        let content = match_content(envelope);
        let mut consumed = self.consumed.lock().expect("oracle cursor poisoned");
        for (i, entry) in self.entries.iter().enumerate() {
            if entry.role != envelope.role {
                continue;
            }
            if consumed[i] && !entry.repeat {
                continue;
            }
            if let Some(key) = &entry.match_key {
                if !content.contains(key.as_str()) {
                    continue;
                }
            }
            consumed[i] = true;
            return Ok(entry.reply.clone());
        }
        Err(GatewayError::ScriptedExhausted {
            role: envelope.role,
        })
    }
}
