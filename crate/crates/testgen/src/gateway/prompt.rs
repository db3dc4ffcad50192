//! Prompt template loading and per-role rendering.

use std::path::Path;

use super::{GatewayError, PromptEnvelope, Role};
use crate::app_model::{CandidateAction, Screenshot, UiChange};

const DEFAULT_SELECTOR: &str = include_str!("../../assets/prompts/selector.txt");
const DEFAULT_OBSERVER: &str = include_str!("../../assets/prompts/observer.txt");
const DEFAULT_VERIFIER: &str = include_str!("../../assets/prompts/verifier.txt");
const DEFAULT_REFLECTOR: &str = include_str!("../../assets/prompts/reflector.txt");

const DEFAULT_SYSTEM_PROMPT: &str =
    "Act step by step, choose only from the offered candidates, and answer in the exact JSON shape requested.";

pub const SELECTOR_PLACEHOLDERS: [&str; 5] = [
    "{system_prompt}",
    "{task}",
    "{history_actions}",
    "{candidate_actions}",
    "{persistent_memory}",
];
pub const VERIFIER_PLACEHOLDERS: [&str; 5] = [
    "{system_prompt}",
    "{task}",
    "{history_actions}",
    "{screenshot}",
    "{persistent_memory}",
];
pub const OBSERVER_PLACEHOLDERS: [&str; 3] = ["{system_prompt}", "{action}", "{ui_changes}"];
pub const REFLECTOR_PLACEHOLDERS: [&str; 3] = ["{system_prompt}", "{task}", "{history_actions}"];

#[derive(Debug, Clone)]
pub struct PromptTemplates {
    pub selector: String,
    pub observer: String,
    pub verifier: String,
    pub reflector: String,
    pub system_prompt: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            selector: strip_comments(DEFAULT_SELECTOR),
            observer: strip_comments(DEFAULT_OBSERVER),
            verifier: strip_comments(DEFAULT_VERIFIER),
            reflector: strip_comments(DEFAULT_REFLECTOR),
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
        }
    }
}

fn strip_comments(template: &str) -> String {
    template
        .lines()
        .filter(|l| !l.starts_with("#!"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl PromptTemplates {
    /// Load role templates from `<dir>/{selector,observer,verifier,reflector}.txt`,
    /// falling back to the built-in defaults for missing files.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let dir = dir.as_ref();
        let mut templates = PromptTemplates::default();
        for (name, slot) in [
            ("selector.txt", &mut templates.selector),
            ("observer.txt", &mut templates.observer),
            ("verifier.txt", &mut templates.verifier),
            ("reflector.txt", &mut templates.reflector),
        ] {
            let path = dir.join(name);
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|source| GatewayError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                *slot = strip_comments(&text);
            }
        }
        templates.validate()?;
        Ok(templates)
    }

    pub fn template_for(&self, role: Role) -> &str {
        match role {
            Role::Selector => &self.selector,
            Role::Observer => &self.observer,
            Role::Verifier => &self.verifier,
            Role::Reflector => &self.reflector,
        }
    }

    pub fn placeholders_for(role: Role) -> &'static [&'static str] {
        match role {
            Role::Selector => &SELECTOR_PLACEHOLDERS,
            Role::Observer => &OBSERVER_PLACEHOLDERS,
            Role::Verifier => &VERIFIER_PLACEHOLDERS,
            Role::Reflector => &REFLECTOR_PLACEHOLDERS,
        }
    }

    /// Each role template must contain each of its placeholders exactly once.
    pub fn validate(&self) -> Result<(), GatewayError> {
        for role in [Role::Selector, Role::Observer, Role::Verifier, Role::Reflector] {
            let template = self.template_for(role);
            for placeholder in Self::placeholders_for(role) {
                match template.matches(placeholder).count() {
                    1 => {}
                    0 => {
                        return Err(GatewayError::Template {
                            role,
                            problem: "is missing",
                            placeholder,
                        })
                    }
                    _ => {
                        return Err(GatewayError::Template {
                            role,
                            problem: "repeats",
                            placeholder,
                        })
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry {
    pub action_description: String,
    pub observation: String,
}

/// Role-specific context bundle for prompt rendering.
#[derive(Debug, Clone)]
pub enum PromptContext<'a> {
    Selector {
        goal: &'a str,
        history: &'a [HistoryEntry],
        candidates: &'a [CandidateAction],
        persistent_memory: &'a str,
    },
    Observer {
        action: String,
        changes: &'a [UiChange],
    },
    Verifier {
        goal: &'a str,
        history: &'a [HistoryEntry],
        textual_dump: &'a str,
        screenshot: &'a Screenshot,
        persistent_memory: &'a str,
    },
    Reflector {
        goal: &'a str,
        history: &'a [HistoryEntry],
    },
}

impl PromptContext<'_> {
    pub fn role(&self) -> Role {
        match self {
            PromptContext::Selector { .. } => Role::Selector,
            PromptContext::Observer { .. } => Role::Observer,
            PromptContext::Verifier { .. } => Role::Verifier,
            PromptContext::Reflector { .. } => Role::Reflector,
        }
    }
}

/// Alternating "[Action i]" / "[Observation i]" lines; empty history renders
/// as an empty section.
pub fn render_history(history: &[HistoryEntry]) -> String {
    let mut out = String::new();
    for (i, entry) in history.iter().enumerate() {
        let n = i + 1;
        out.push_str(&format!("[Action {n}]: {}\n", entry.action_description));
        out.push_str(&format!("[Observation {n}]: {}\n", entry.observation));
    }
    out
}

fn render_candidates(candidates: &[CandidateAction]) -> String {
    candidates
        .iter()
        .map(|c| c.describe())
        .collect::<Vec<_>>()
        .join("\n")
}

fn or_none(text: &str) -> &str {
    if text.trim().is_empty() {
        "none"
    } else {
        text
    }
}

pub fn render_prompt(
    templates: &PromptTemplates,
    context: &PromptContext<'_>,
    vision_enabled: bool,
) -> Result<PromptEnvelope, GatewayError> {
    let role = context.role();
    let template = templates.template_for(role);
    let (text, image) = match context {
        PromptContext::Selector {
            goal,
            history,
            candidates,
            persistent_memory,
        } => {
            let text = template
                .replace("{system_prompt}", &templates.system_prompt)
                .replace("{task}", goal)
                .replace("{history_actions}", &render_history(history))
                .replace("{candidate_actions}", &render_candidates(candidates))
                .replace("{persistent_memory}", or_none(persistent_memory));
            (text, None)
        }
        PromptContext::Observer { action, changes } => {
            let rendered = if changes.is_empty() {
                "no changes detected".to_string()
            } else {
                changes
                    .iter()
                    .map(|c| format!("- {}", c.describe()))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            let text = template
                .replace("{system_prompt}", &templates.system_prompt)
                .replace("{action}", action)
                .replace("{ui_changes}", &rendered);
            (text, None)
        }
        PromptContext::Verifier {
            goal,
            history,
            textual_dump,
            screenshot,
            persistent_memory,
        } => {
            let text = template
                .replace("{system_prompt}", &templates.system_prompt)
                .replace("{task}", goal)
                .replace("{history_actions}", &render_history(history))
                .replace("{screenshot}", textual_dump)
                .replace("{persistent_memory}", or_none(persistent_memory));
            let image = vision_enabled.then(|| (*screenshot).clone());
            (text, image)
        }
        PromptContext::Reflector { goal, history } => {
            let text = template
                .replace("{system_prompt}", &templates.system_prompt)
                .replace("{task}", goal)
                .replace("{history_actions}", &render_history(history));
            (text, None)
        }
    };
    debug_assert!(
        !PromptTemplates::placeholders_for(role)
            .iter()
            .any(|p| text.contains(p)),
        "unresolved placeholder in rendered {role} prompt"
    );
    Ok(PromptEnvelope { role, text, image })
}
