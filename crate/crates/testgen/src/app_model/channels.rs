//! The two asymmetric views of a UiState (textual dump vs visual snapshot)
//! plus actionable enumeration and the action-space product.

use serde::Serialize;
use serde_json::json;

use super::{Action, ActionKind, Screenshot, UiState, VISUAL_MEDIA_TYPE};

/// One (element, supported action) pair, indexed for prompt referencing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateAction {
    pub index: usize,
    pub action: Action,
    pub class_name: String,
    pub text: Option<String>,
    pub content_desc: Option<String>,
}

impl CandidateAction {
    /// One-line JSON rendering used in the candidate list of prompts.
    pub fn describe(&self) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("index".into(), json!(self.index));
        obj.insert("action".into(), json!(self.action.kind.to_string()));
        if let Some(target) = &self.action.target {
            obj.insert("element".into(), json!(target));
            obj.insert("class".into(), json!(self.class_name));
            if let Some(text) = &self.text {
                obj.insert("text".into(), json!(text));
            }
            if let Some(desc) = &self.content_desc {
                obj.insert("content_desc".into(), json!(desc));
            }
        }
        serde_json::Value::Object(obj).to_string()
    }
}

const KIND_ORDER: [ActionKind; 4] = [
    ActionKind::Touch,
    ActionKind::LongTouch,
    ActionKind::Swipe,
    ActionKind::Input,
];

/// Enumerate candidate actions: one per (element, supported action) pair in
/// document order then ActionKind order, plus global back, plus wait iff the
/// state is loading. Ordering is stable for a given state.
pub fn extract_actionables(state: &UiState) -> Vec<CandidateAction> {
    let mut out = Vec::new();
    for el in &state.elements {
        for kind in KIND_ORDER {
            if !el.supported_actions.contains(&kind) {
                continue;
            }
            out.push(CandidateAction {
                index: out.len(),
                action: Action {
                    kind,
                    target: Some(el.identity()),
                    // candidate only; the selector supplies input payloads
                    payload: None,
                },
                class_name: el.class_name.clone(),
                text: el.text.clone(),
                content_desc: el.content_desc.clone(),
            });
        }
    }
    out.push(CandidateAction {
        index: out.len(),
        action: Action::back(),
        class_name: String::new(),
        text: None,
        content_desc: None,
    });
    if state.loading {
        out.push(CandidateAction {
            index: out.len(),
            action: Action::wait(),
            class_name: String::new(),
            text: None,
            content_desc: None,
        });
    }
    out
}

/// Product of candidate counts across the trace: A = a0 x a1 x ... x ae.
pub fn action_space(trace: &[UiState]) -> u128 {
    assert!(!trace.is_empty(), "action_space requires a nonempty trace");
    trace
        .iter()
        .map(|s| extract_actionables(s).len() as u128)
        .product()
}

/// Canonical visual snapshot: screen_id, bounds, and exactly the attributes
/// visible in the visual channel. Rendering is byte-deterministic.
pub fn render_screenshot(state: &UiState) -> Screenshot {
    let elements: Vec<serde_json::Value> = state
        .elements
        .iter()
        .filter(|el| el.visual_visible)
        .map(|el| {
            let mut obj = serde_json::Map::new();
            obj.insert("class".into(), json!(el.class_name));
            obj.insert(
                "bounds".into(),
                json!([el.bounds.left, el.bounds.top, el.bounds.right, el.bounds.bottom]),
            );
            if let Some(text) = &el.text {
                obj.insert("text".into(), json!(text));
            }
            let visual: serde_json::Map<String, serde_json::Value> = el
                .visual_props
                .iter()
                .filter(|(_, p)| p.in_screenshot)
                .map(|(k, p)| (k.clone(), json!(p.value)))
                .collect();
            if !visual.is_empty() {
                obj.insert("visual".into(), serde_json::Value::Object(visual));
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "screen_id": state.screen_id,
        "loading": state.loading,
        "elements": elements,
    });
    Screenshot {
        media_type: VISUAL_MEDIA_TYPE.to_string(),
        bytes: doc.to_string().into_bytes(),
    }
}

/// Structured textual dump: elements with textual_visible=true, their textual
/// attributes, candidate-action indices, and visual_props flagged in_text.
/// Visual-only attributes never appear here.
pub fn textual_dump(state: &UiState) -> String {
    let candidates = extract_actionables(state);
    let elements: Vec<serde_json::Value> = state
        .elements
        .iter()
        .filter(|el| el.textual_visible)
        .map(|el| {
            let identity = el.identity();
            let mut obj = serde_json::Map::new();
            if !el.element_id.is_empty() {
                obj.insert("id".into(), json!(el.element_id));
            }
            obj.insert("class".into(), json!(el.class_name));
            if let Some(text) = &el.text {
                obj.insert("text".into(), json!(text));
            }
            if let Some(desc) = &el.content_desc {
                obj.insert("content_desc".into(), json!(desc));
            }
            obj.insert(
                "bounds".into(),
                json!([el.bounds.left, el.bounds.top, el.bounds.right, el.bounds.bottom]),
            );
            let textual_props: serde_json::Map<String, serde_json::Value> = el
                .visual_props
                .iter()
                .filter(|(_, p)| p.in_text)
                .map(|(k, p)| (k.clone(), json!(p.value)))
                .collect();
            if !textual_props.is_empty() {
                obj.insert("attrs".into(), serde_json::Value::Object(textual_props));
            }
            let indices: Vec<usize> = candidates
                .iter()
                .filter(|c| c.action.target.as_deref() == Some(identity.as_str()))
                .map(|c| c.index)
                .collect();
            if !indices.is_empty() {
                obj.insert("action_indices".into(), json!(indices));
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "screen_id": state.screen_id,
        "loading": state.loading,
        "elements": elements,
    }))
    .expect("dump serialization cannot fail")
}
