use std::collections::BTreeMap;

use super::{instantiate_state, Action, ActionKind, AppModel, AppModelError, Transition, UiState};

/// Executes actions against an AppModel, tracking app_vars, the loading flag
/// and a navigation stack for `back`. The model itself stays immutable;
/// independent simulators may share one model.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    model: &'m AppModel,
    current_screen: String,
    vars: BTreeMap<String, String>,
    loading: bool,
    nav_stack: Vec<String>,
}

impl<'m> Simulator<'m> {
    pub fn new(model: &'m AppModel) -> Self {
        let loading = model
            .screen(&model.initial_screen)
            .map(|s| s.loading)
            .unwrap_or(false);
        Simulator {
            model,
            current_screen: model.initial_screen.clone(),
            vars: model.vars.clone(),
            loading,
            nav_stack: Vec::new(),
        }
    }

    pub fn model(&self) -> &'m AppModel {
        self.model
    }

    pub fn current_state(&self) -> UiState {
        instantiate_state(self.model, &self.current_screen, &self.vars, self.loading)
    }

    /// Execute one action, returning the successor state.
    pub fn execute(&mut self, action: &Action) -> Result<UiState, AppModelError> {
        match action.kind {
            ActionKind::Wait => {
                self.loading = false;
                return Ok(self.current_state());
            }
            ActionKind::Back => {
                if let Some(prev) = self.nav_stack.pop() {
                    self.enter_screen(prev);
                }
                return Ok(self.current_state());
            }
            _ => {}
        }

        let target = action
            .target
            .as_deref()
            .ok_or(AppModelError::MissingTarget(action.kind))?;
        if action.kind == ActionKind::Input && action.payload.is_none() {
            return Err(AppModelError::MissingPayload);
        }
        let state = self.current_state();
        let element = state
            .find(target)
            .ok_or_else(|| AppModelError::NoSuchElement(target.to_string()))?;
        if !element.supported_actions.contains(&action.kind) {
            return Err(AppModelError::ActionNotSupported {
                element: target.to_string(),
                kind: action.kind,
            });
        }

        let transition = self
            .lookup_transition(target, action)
            .ok_or_else(|| AppModelError::NoTransitionDefined {
                screen: self.current_screen.clone(),
                element: target.to_string(),
                kind: action.kind,
            })?
            .clone();

        for (var, value) in &transition.effects {
            let resolved = if value == "$input" {
                action.payload.clone().unwrap_or_default()
            } else {
                value.clone()
            };
            self.vars.insert(var.clone(), resolved);
        }
        if transition.to != self.current_screen {
            self.nav_stack.push(self.current_screen.clone());
            self.enter_screen(transition.to.clone());
        }
        Ok(self.current_state())
    }

    fn enter_screen(&mut self, screen: String) {
        self.loading = self.model.screen(&screen).map(|s| s.loading).unwrap_or(false);
        self.current_screen = screen;
    }

    /// Most-specific match wins: a literal input_pattern beats the "*"
    /// wildcard; non-input actions ignore patterns.
    fn lookup_transition(&self, target: &str, action: &Action) -> Option<&Transition> {
        let matching = |tr: &&Transition| {
            tr.from == self.current_screen && tr.element == target && tr.kind == action.kind
        };
        if action.kind == ActionKind::Input {
            let payload = action.payload.as_deref().unwrap_or("");
            self.model
                .transitions
                .iter()
                .filter(matching)
                .filter(|tr| tr.input_pattern.as_deref() == Some(payload))
                .next()
                .or_else(|| {
                    self.model
                        .transitions
                        .iter()
                        .filter(matching)
                        .find(|tr| matches!(tr.input_pattern.as_deref(), Some("*") | None))
                })
        } else {
            self.model.transitions.iter().find(matching)
        }
    }
}
