//! UI state comparison producing change lists for the Observer.

use serde::Serialize;

use super::UiState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttrChange {
    pub attr: String,
    pub before: Option<String>,
    pub after: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "change_kind", rename_all = "snake_case")]
pub enum UiChange {
    ScreenNavigated {
        from: Option<String>,
        to: String,
    },
    ElementAdded {
        identity: String,
    },
    ElementRemoved {
        identity: String,
    },
    ElementModified {
        identity: String,
        changes: Vec<AttrChange>,
    },
}

impl UiChange {
    pub fn describe(&self) -> String {
        match self {
            UiChange::ScreenNavigated { from, to } => match from {
                Some(f) => format!("navigated from screen '{f}' to screen '{to}'"),
                None => format!("app opened on screen '{to}'"),
            },
            UiChange::ElementAdded { identity } => format!("element '{identity}' appeared"),
            UiChange::ElementRemoved { identity } => format!("element '{identity}' disappeared"),
            UiChange::ElementModified { identity, changes } => {
                let parts: Vec<String> = changes
                    .iter()
                    .map(|c| {
                        format!(
                            "{}: {:?} -> {:?}",
                            c.attr,
                            c.before.as_deref().unwrap_or(""),
                            c.after.as_deref().unwrap_or("")
                        )
                    })
                    .collect();
                format!("element '{identity}' changed ({})", parts.join(", "))
            }
        }
    }
}

/// Compare two states by element identity. A screen change replaces all
/// elements of the old screen; within one screen, text, content_desc and
/// visual_props are compared attribute by attribute.
pub fn detect_ui_changes(prev: Option<&UiState>, cur: &UiState) -> Vec<UiChange> {
    let prev = match prev {
        None => {
            return vec![UiChange::ScreenNavigated {
                from: None,
                to: cur.screen_id.clone(),
            }]
        }
        Some(p) => p,
    };

    if prev.screen_id != cur.screen_id {
        let mut changes = vec![UiChange::ScreenNavigated {
            from: Some(prev.screen_id.clone()),
            to: cur.screen_id.clone(),
        }];
        for el in &prev.elements {
            changes.push(UiChange::ElementRemoved {
                identity: el.identity(),
            });
        }
        for el in &cur.elements {
            changes.push(UiChange::ElementAdded {
                identity: el.identity(),
            });
        }
        return changes;
    }

    let mut changes = Vec::new();
    for el in &prev.elements {
        let identity = el.identity();
        match cur.find(&identity) {
            None => changes.push(UiChange::ElementRemoved { identity }),
            Some(after) => {
                let mut attr_changes = Vec::new();
                if el.text != after.text {
                    attr_changes.push(AttrChange {
                        attr: "text".into(),
                        before: el.text.clone(),
                        after: after.text.clone(),
                    });
                }
                if el.content_desc != after.content_desc {
                    attr_changes.push(AttrChange {
                        attr: "content_desc".into(),
                        before: el.content_desc.clone(),
                        after: after.content_desc.clone(),
                    });
                }
                let prop_names: std::collections::BTreeSet<&String> = el
                    .visual_props
                    .keys()
                    .chain(after.visual_props.keys())
                    .collect();
                for name in prop_names {
                    let before = el.visual_props.get(name).map(|p| p.value.clone());
                    let after_val = after.visual_props.get(name).map(|p| p.value.clone());
                    if before != after_val {
                        attr_changes.push(AttrChange {
                            attr: name.clone(),
                            before,
                            after: after_val,
                        });
                    }
                }
                if !attr_changes.is_empty() {
                    changes.push(UiChange::ElementModified {
                        identity,
                        changes: attr_changes,
                    });
                }
            }
        }
    }
    for el in &cur.elements {
        let identity = el.identity();
        if prev.find(&identity).is_none() {
            changes.push(UiChange::ElementAdded { identity });
        }
    }
    changes
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::app_model::{ActionKind, Bounds, UiElement, VisualProp};

    fn toggle(state_value: &str) -> UiElement {
        let mut props = BTreeMap::new();
        props.insert(
            "toggle_state".to_string(),
            VisualProp {
                value: state_value.to_string(),
                in_screenshot: true,
                in_text: false,
            },
        );
        UiElement {
            element_id: "toggle".into(),
            class_name: "toggle".into(),
            text: None,
            content_desc: None,
            bounds: Bounds::new(0, 0, 10, 10),
            supported_actions: vec![ActionKind::Touch],
            textual_visible: true,
            visual_visible: true,
            visual_props: props,
        }
    }

    fn state(screen: &str, elements: Vec<UiElement>) -> UiState {
        UiState {
            screen_id: screen.into(),
            elements,
            app_vars: BTreeMap::new(),
            loading: false,
        }
    }

    #[test]
    fn identical_states_yield_empty_diff() {
        let st = state("s", vec![toggle("off")]);
        assert!(detect_ui_changes(Some(&st), &st).is_empty());
    }

    #[test]
    fn missing_prev_yields_single_navigation() {
        let st = state("s", vec![toggle("off")]);
        let changes = detect_ui_changes(None, &st);
        assert_eq!(
            changes,
            vec![UiChange::ScreenNavigated {
                from: None,
                to: "s".into()
            }]
        );
    }

    #[test]
    fn toggle_flip_is_one_modification() {
        let before = state("s", vec![toggle("off")]);
        let after = state("s", vec![toggle("on")]);
        let changes = detect_ui_changes(Some(&before), &after);
        assert_eq!(changes.len(), 1);
        match &changes[0] {
            UiChange::ElementModified { identity, changes } => {
                assert_eq!(identity, "toggle");
                assert_eq!(changes.len(), 1);
                assert_eq!(changes[0].attr, "toggle_state");
                assert_eq!(changes[0].before.as_deref(), Some("off"));
                assert_eq!(changes[0].after.as_deref(), Some("on"));
            }
            other => panic!("expected modification, got {other:?}"),
        }
    }

    #[test]
    fn navigation_replaces_all_elements() {
        let before = state("s3", vec![toggle("off")]);
        let after = state("s4", vec![toggle("on")]);
        let changes = detect_ui_changes(Some(&before), &after);
        assert_eq!(changes.len(), 3);
        assert!(matches!(&changes[0], UiChange::ScreenNavigated { from: Some(f), to } if f == "s3" && to == "s4"));
        assert!(matches!(&changes[1], UiChange::ElementRemoved { .. }));
        assert!(matches!(&changes[2], UiChange::ElementAdded { .. }));
    }
}
