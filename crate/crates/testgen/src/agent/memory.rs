//! Cross-run persistent memory: reflection-derived rules and optimized
//! steps, keyed by (app_name, goal), mutable only during training.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::Verdict;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("failed to read persistent memory {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("corrupt persistent memory file {path}: {message}")]
    Corrupt { path: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    #[serde(default)]
    pub rules: Vec<String>,
    #[serde(default)]
    pub optimized_steps: Vec<String>,
    #[serde(default)]
    pub verdict_history: Vec<Verdict>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersistentMemory {
    entries: BTreeMap<(String, String), MemoryEntry>,
}

fn normalize(rule: &str) -> String {
    rule.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl PersistentMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, app_name: &str, goal: &str) -> Option<&MemoryEntry> {
        self.entries.get(&(app_name.to_string(), goal.to_string()))
    }

    pub fn set_entry(&mut self, app_name: &str, goal: &str, entry: MemoryEntry) {
        self.entries
            .insert((app_name.to_string(), goal.to_string()), entry);
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(String, String), &MemoryEntry)> {
        self.entries.iter()
    }

    /// Merge one reflection result: rules appended with whitespace-normalized
    /// de-duplication; optimized_steps replaced by the latest success.
    pub fn merge_reflection(
        &mut self,
        app_name: &str,
        goal: &str,
        verdict: Verdict,
        rules: &[String],
        optimized_steps: &[String],
    ) {
        let entry = self
            .entries
            .entry((app_name.to_string(), goal.to_string()))
            .or_default();
        for rule in rules {
            let norm = normalize(rule);
            if norm.is_empty() {
                continue;
            }
            if !entry.rules.iter().any(|r| normalize(r) == norm) {
                entry.rules.push(rule.clone());
            }
        }
        if verdict == Verdict::Success && !optimized_steps.is_empty() {
            entry.optimized_steps = optimized_steps.to_vec();
        }
        // Consecutive duplicates collapse so retraining on identical
        // evidence is a fixed point.
        if entry.verdict_history.last() != Some(&verdict) {
            entry.verdict_history.push(verdict);
        }
    }

    /// Experience text for the prompt's O4 section; empty memory renders "".
    pub fn render(&self, app_name: &str, goal: &str) -> String {
        let Some(entry) = self.entry(app_name, goal) else {
            return String::new();
        };
        let mut out = String::new();
        if !entry.rules.is_empty() {
            out.push_str("Rules from previous executions:\n");
            for rule in &entry.rules {
                out.push_str(&format!("- {rule}\n"));
            }
        }
        if !entry.optimized_steps.is_empty() {
            out.push_str("Optimized steps from a previous successful execution:\n");
            for (i, step) in entry.optimized_steps.iter().enumerate() {
                out.push_str(&format!("{}. {step}\n", i + 1));
            }
        }
        out
    }
}

// File form: a flat entry list with a stable (app_name, goal) key ordering,
// so training reruns diff cleanly.
#[derive(Debug, Serialize, Deserialize)]
struct MemoryFileEntry {
    app_name: String,
    goal: String,
    #[serde(flatten)]
    entry: MemoryEntry,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct MemoryFile {
    #[serde(default)]
    entries: Vec<MemoryFileEntry>,
}

/// Missing file loads as empty memory.
pub fn load_memory(path: impl AsRef<Path>) -> Result<PersistentMemory, MemoryError> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(PersistentMemory::new());
    }
    let text = std::fs::read_to_string(path).map_err(|source| MemoryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: MemoryFile = toml::from_str(&text).map_err(|e| MemoryError::Corrupt {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut memory = PersistentMemory::new();
    for fe in file.entries {
        memory.entries.insert((fe.app_name, fe.goal), fe.entry);
    }
    Ok(memory)
}

/// Atomic save: write a sibling temp file, then rename over the target.
pub fn save_memory(path: impl AsRef<Path>, memory: &PersistentMemory) -> Result<(), MemoryError> {
    let path = path.as_ref();
    let file = MemoryFile {
        entries: memory
            .entries
            .iter()
            .map(|((app_name, goal), entry)| MemoryFileEntry {
                app_name: app_name.clone(),
                goal: goal.clone(),
                entry: entry.clone(),
            })
            .collect(),
    };
    let text = toml::to_string_pretty(&file).expect("memory serialization cannot fail");
    let tmp = path.with_extension("tmp");
    let io_err = |source| MemoryError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::write(&tmp, text).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}
