//! Declarative simulated mobile device: app definitions, UI states, action
//! execution, screenshot rendering, state diffing and actionable enumeration.

mod channels;
mod diff;
mod loader;
mod simulator;

pub use channels::{action_space, extract_actionables, render_screenshot, textual_dump, CandidateAction};
pub use diff::{detect_ui_changes, UiChange};
pub use loader::{load_app_model, parse_app_model};
pub use simulator::Simulator;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VISUAL_MEDIA_TYPE: &str = "application/vnd.agent-testgen.visual+json";

#[derive(Debug, Error)]
pub enum AppModelError {
    #[error("failed to read app model {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid app model: {0}")]
    Validation(String),
    #[error("no element {0} in current state")]
    NoSuchElement(String),
    #[error("element {element} does not support {kind}")]
    ActionNotSupported { element: String, kind: ActionKind },
    #[error("no transition defined for {kind} on {element} from screen {screen}")]
    NoTransitionDefined {
        screen: String,
        element: String,
        kind: ActionKind,
    },
    #[error("action {0} requires a target element")]
    MissingTarget(ActionKind),
    #[error("input action requires a payload")]
    MissingPayload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Touch,
    LongTouch,
    Swipe,
    Input,
    Back,
    Wait,
}

impl ActionKind {
    pub fn needs_target(self) -> bool {
        !matches!(self, ActionKind::Back | ActionKind::Wait)
    }
}

impl std::fmt::Display for ActionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ActionKind::Touch => "touch",
            ActionKind::LongTouch => "long_touch",
            ActionKind::Swipe => "swipe",
            ActionKind::Input => "input",
            ActionKind::Back => "back",
            ActionKind::Wait => "wait",
        };
        f.write_str(name)
    }
}

/// One executable interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    /// Resolved element identity; required unless kind is back/wait.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Required iff kind is input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl Action {
    pub fn touch(target: impl Into<String>) -> Self {
        Action {
            kind: ActionKind::Touch,
            target: Some(target.into()),
            payload: None,
        }
    }

    pub fn input(target: impl Into<String>, payload: impl Into<String>) -> Self {
        Action {
            kind: ActionKind::Input,
            target: Some(target.into()),
            payload: Some(payload.into()),
        }
    }

    pub fn back() -> Self {
        Action {
            kind: ActionKind::Back,
            target: None,
            payload: None,
        }
    }

    pub fn wait() -> Self {
        Action {
            kind: ActionKind::Wait,
            target: None,
            payload: None,
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.target, &self.payload) {
            (Some(t), Some(p)) => write!(f, "{}({}, {:?})", self.kind, t, p),
            (Some(t), None) => write!(f, "{}({})", self.kind, t),
            _ => write!(f, "{}", self.kind),
        }
    }
}

/// Serialized as a `[left, top, right, bottom]` array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub left: u32,
    pub top: u32,
    pub right: u32,
    pub bottom: u32,
}

impl Serialize for Bounds {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.left, self.top, self.right, self.bottom].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bounds {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [left, top, right, bottom] = <[u32; 4]>::deserialize(d)?;
        Ok(Bounds {
            left,
            top,
            right,
            bottom,
        })
    }
}

impl Bounds {
    pub fn new(left: u32, top: u32, right: u32, bottom: u32) -> Self {
        Bounds {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.left < self.right && self.top < self.bottom
    }
}

/// A visual attribute value with its channel flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualProp {
    pub value: String,
    #[serde(default = "default_true")]
    pub in_screenshot: bool,
    #[serde(default)]
    pub in_text: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiElement {
    #[serde(default)]
    pub element_id: String,
    pub class_name: String,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub content_desc: Option<String>,
    pub bounds: Bounds,
    pub supported_actions: Vec<ActionKind>,
    /// Element appears in the textual channel (UI dump).
    #[serde(default = "default_true")]
    pub textual_visible: bool,
    /// Element appears in the visual channel (screenshot).
    #[serde(default = "default_true")]
    pub visual_visible: bool,
    #[serde(default)]
    pub visual_props: BTreeMap<String, VisualProp>,
}

impl UiElement {
    /// Resolution order: element_id, then (class_name, content_desc),
    /// then (class_name, text, bounds).
    pub fn identity(&self) -> String {
        if !self.element_id.is_empty() {
            return self.element_id.clone();
        }
        if let Some(desc) = self.content_desc.as_deref().filter(|d| !d.is_empty()) {
            return format!("{}:{}", self.class_name, desc);
        }
        let text = self.text.as_deref().unwrap_or("");
        format!(
            "{}:{}:{},{},{},{}",
            self.class_name, text, self.bounds.left, self.bounds.top, self.bounds.right, self.bounds.bottom
        )
    }

    pub fn has_resolvable_identity(&self) -> bool {
        !self.element_id.is_empty()
            || self.content_desc.as_deref().is_some_and(|d| !d.is_empty())
            || (!self.class_name.is_empty() && self.text.as_deref().is_some_and(|t| !t.is_empty()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiState {
    pub screen_id: String,
    pub elements: Vec<UiElement>,
    pub app_vars: BTreeMap<String, String>,
    #[serde(default)]
    pub loading: bool,
}

impl UiState {
    pub fn find(&self, identity: &str) -> Option<&UiElement> {
        self.elements.iter().find(|e| e.identity() == identity)
    }
}

/// Effect applied to app_vars when a transition fires. A value of "$input"
/// binds the action payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub element: String,
    pub kind: ActionKind,
    /// For input transitions: literal payload or "*" wildcard. Literal wins.
    #[serde(default)]
    pub input_pattern: Option<String>,
    pub to: String,
    #[serde(default)]
    pub effects: BTreeMap<String, String>,
}

/// Screen definition. Element text and visual-prop values may reference
/// app_vars with `{var}` placeholders, substituted when a UiState is built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenDef {
    pub id: String,
    #[serde(default)]
    pub loading: bool,
    pub elements: Vec<UiElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppModel {
    pub app_name: String,
    pub initial_screen: String,
    pub screens: Vec<ScreenDef>,
    pub transitions: Vec<Transition>,
    /// Initial app_vars.
    #[serde(default)]
    pub vars: BTreeMap<String, String>,
}

impl AppModel {
    pub fn screen(&self, id: &str) -> Option<&ScreenDef> {
        self.screens.iter().find(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<(), AppModelError> {
        if self.screens.is_empty() {
            return Err(AppModelError::Validation(
                "screens list is empty; initial_screen is unresolvable".into(),
            ));
        }
        if self.screen(&self.initial_screen).is_none() {
            return Err(AppModelError::Validation(format!(
                "initial_screen {:?} not found in screens",
                self.initial_screen
            )));
        }
        for screen in &self.screens {
            let mut seen = std::collections::BTreeSet::new();
            for el in &screen.elements {
                if !el.bounds.is_valid() {
                    return Err(AppModelError::Validation(format!(
                        "element {:?} on screen {:?} has degenerate bounds",
                        el.identity(),
                        screen.id
                    )));
                }
                if !el.supported_actions.is_empty() && !el.has_resolvable_identity() {
                    return Err(AppModelError::Validation(format!(
                        "actionable element on screen {:?} has no resolvable identity",
                        screen.id
                    )));
                }
                if !seen.insert(el.identity()) {
                    return Err(AppModelError::Validation(format!(
                        "duplicate element identity {:?} on screen {:?}",
                        el.identity(),
                        screen.id
                    )));
                }
            }
        }
        for tr in &self.transitions {
            if self.screen(&tr.from).is_none() {
                return Err(AppModelError::Validation(format!(
                    "transition references unknown screen {:?}",
                    tr.from
                )));
            }
            if self.screen(&tr.to).is_none() {
                return Err(AppModelError::Validation(format!(
                    "transition references unknown screen {:?}",
                    tr.to
                )));
            }
        }
        // Deterministic lookup: at most one transition per (from, element, kind,
        // pattern) tuple.
        let mut keys = std::collections::BTreeSet::new();
        for tr in &self.transitions {
            let key = (
                tr.from.clone(),
                tr.element.clone(),
                tr.kind,
                tr.input_pattern.clone(),
            );
            if !keys.insert(key) {
                return Err(AppModelError::Validation(format!(
                    "ambiguous transitions for {} on {:?} from {:?}",
                    tr.kind, tr.element, tr.from
                )));
            }
        }
        Ok(())
    }
}

/// Byte-deterministic visual snapshot of a UiState.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Screenshot {
    pub media_type: String,
    pub bytes: Vec<u8>,
}

impl Screenshot {
    pub fn as_text(&self) -> &str {
        std::str::from_utf8(&self.bytes).unwrap_or("")
    }
}

/// Substitute `{var}` placeholders from app_vars; unknown vars become "".
pub(crate) fn substitute_vars(template: &str, vars: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        match rest[open..].find('}') {
            Some(close) => {
                let name = &rest[open + 1..open + close];
                if let Some(value) = vars.get(name) {
                    out.push_str(value);
                }
                rest = &rest[open + close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Build the concrete UiState for a screen under the given app_vars.
pub fn instantiate_state(
    model: &AppModel,
    screen_id: &str,
    vars: &BTreeMap<String, String>,
    loading: bool,
) -> UiState {
    let def = model
        .screen(screen_id)
        .expect("screen_id validated at load time");
    let elements = def
        .elements
        .iter()
        .map(|el| {
            let mut el = el.clone();
            if let Some(text) = &el.text {
                el.text = Some(substitute_vars(text, vars));
            }
            for prop in el.visual_props.values_mut() {
                prop.value = substitute_vars(&prop.value, vars);
            }
            el
        })
        .collect();
    UiState {
        screen_id: screen_id.to_string(),
        elements,
        app_vars: vars.clone(),
        loading,
    }
}
