//! Test-script emission and fail-fast replay. Scripts are a line-oriented
//! DSL (`find_element(<strategy>, "<value>").<verb>(...)`) with a structured
//! TOML sidecar for machine consumption.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::app_model::{Action, ActionKind, AppModel, Simulator, UiState};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("failed to read script {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("script parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("action {index} targets an element with no locatable attribute")]
    Unlocatable { index: usize },
    #[error("action {index} references a state missing from the trajectory")]
    TrajectoryMismatch { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocatorStrategy {
    ContentDesc,
    Text,
    Id,
}

impl std::fmt::Display for LocatorStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LocatorStrategy::ContentDesc => "content_desc",
            LocatorStrategy::Text => "text",
            LocatorStrategy::Id => "id",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Click,
    Fill,
    LongClick,
    Swipe,
    Back,
    Wait,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Click => "click",
            Verb::Fill => "fill",
            Verb::LongClick => "long_click",
            Verb::Swipe => "swipe",
            Verb::Back => "back",
            Verb::Wait => "wait",
        }
    }

    fn action_kind(self) -> ActionKind {
        match self {
            Verb::Click => ActionKind::Touch,
            Verb::Fill => ActionKind::Input,
            Verb::LongClick => ActionKind::LongTouch,
            Verb::Swipe => ActionKind::Swipe,
            Verb::Back => ActionKind::Back,
            Verb::Wait => ActionKind::Wait,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub verb: Verb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locator_strategy: Option<LocatorStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locator_value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestScript {
    pub task_comment: String,
    pub steps: Vec<ScriptStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayStatus {
    Passed,
    Failed,
}

#[derive(Debug, Clone)]
pub struct ExecutionReport {
    pub status: ReplayStatus,
    pub failed_step_index: Option<usize>,
    pub final_state: UiState,
    pub goal_reached: bool,
}

/// Per-task goal predicate: expected final screen and/or app_var values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalCheck {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_screen: Option<String>,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub app_vars: std::collections::BTreeMap<String, String>,
}

impl GoalCheck {
    pub fn is_satisfied(&self, state: &UiState) -> bool {
        if let Some(screen) = &self.final_screen {
            if &state.screen_id != screen {
                return false;
            }
        }
        self.app_vars
            .iter()
            .all(|(k, v)| state.app_vars.get(k) == Some(v))
    }
}

/// One step per action; locator preference content_desc > text > id.
/// `states[i]` must be the state action i was taken in.
pub fn emit_script(
    actions: &[Action],
    states: &[UiState],
    goal: &str,
) -> Result<TestScript, ScriptError> {
    let mut steps = Vec::with_capacity(actions.len());
    for (index, action) in actions.iter().enumerate() {
        let verb = match action.kind {
            ActionKind::Touch => Verb::Click,
            ActionKind::Input => Verb::Fill,
            ActionKind::LongTouch => Verb::LongClick,
            ActionKind::Swipe => Verb::Swipe,
            ActionKind::Back => Verb::Back,
            ActionKind::Wait => Verb::Wait,
        };
        let step = match &action.target {
            None => ScriptStep {
                verb,
                locator_strategy: None,
                locator_value: None,
                fill_value: None,
            },
            Some(target) => {
                let state = states
                    .get(index)
                    .ok_or(ScriptError::TrajectoryMismatch { index })?;
                let element = state
                    .find(target)
                    .ok_or(ScriptError::TrajectoryMismatch { index })?;
                let (strategy, value) = if let Some(desc) =
                    element.content_desc.as_deref().filter(|d| !d.is_empty())
                {
                    (LocatorStrategy::ContentDesc, desc.to_string())
                } else if let Some(text) = element.text.as_deref().filter(|t| !t.is_empty()) {
                    (LocatorStrategy::Text, text.to_string())
                } else if !element.element_id.is_empty() {
                    (LocatorStrategy::Id, element.element_id.clone())
                } else {
                    // impossible for elements satisfying the identity invariant
                    return Err(ScriptError::Unlocatable { index });
                };
                ScriptStep {
                    verb,
                    locator_strategy: Some(strategy),
                    locator_value: Some(value),
                    fill_value: action.payload.clone(),
                }
            }
        };
        steps.push(step);
    }
    Ok(TestScript {
        task_comment: goal.to_string(),
        steps,
    })
}

fn quote(value: &str) -> String {
    format!("\"{}\"", value.replace('\\', "\\\\").replace('"', "\\\""))
}

fn unquote(raw: &str) -> Option<String> {
    let inner = raw.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::with_capacity(inner.len());
    let mut escaped = false;
    for c in inner.chars() {
        if escaped {
            out.push(c);
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            return None;
        } else {
            out.push(c);
        }
    }
    (!escaped).then_some(out)
}

impl TestScript {
    /// Render the human-reviewable DSL form.
    pub fn to_dsl(&self) -> String {
        let mut out = format!("# Task: {}\n", self.task_comment);
        for step in &self.steps {
            match (&step.locator_strategy, &step.locator_value) {
                (Some(strategy), Some(value)) => {
                    out.push_str(&format!("find_element({strategy}, {})", quote(value)));
                    match step.verb {
                        Verb::Fill => out.push_str(&format!(
                            ".fill({})",
                            quote(step.fill_value.as_deref().unwrap_or(""))
                        )),
                        verb => out.push_str(&format!(".{}()", verb.name())),
                    }
                }
                _ => out.push_str(&format!("{}()", step.verb.name())),
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_dsl(text: &str) -> Result<TestScript, ScriptError> {
        let mut task_comment = String::new();
        let mut steps = Vec::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if task_comment.is_empty() {
                    task_comment = comment.strip_prefix("Task:").unwrap_or(comment).trim().to_string();
                }
                continue;
            }
            steps.push(parse_step(line, lineno)?);
        }
        Ok(TestScript {
            task_comment,
            steps,
        })
    }

    pub fn save(&self, dsl_path: impl AsRef<Path>) -> Result<(), ScriptError> {
        let dsl_path = dsl_path.as_ref();
        let io_err = |path: &Path, source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::write(dsl_path, self.to_dsl()).map_err(|e| io_err(dsl_path, e))?;
        let sidecar = dsl_path.with_extension("toml");
        let doc = toml::to_string_pretty(self).expect("script serialization cannot fail");
        std::fs::write(&sidecar, doc).map_err(|e| io_err(&sidecar, e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TestScript, ScriptError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| ScriptError::Parse {
                line: 0,
                message: e.to_string(),
            })
        } else {
            Self::parse_dsl(&text)
        }
    }
}

fn parse_step(line: &str, lineno: usize) -> Result<ScriptStep, ScriptError> {
    let err = |message: String| ScriptError::Parse {
        line: lineno,
        message,
    };
    if let Some(rest) = line.strip_prefix("find_element(") {
        let (args, call) = rest
            .split_once(')')
            .ok_or_else(|| err("unterminated find_element(...)".into()))?;
        let (strategy_raw, value_raw) = args
            .split_once(',')
            .ok_or_else(|| err("find_element needs a strategy and a value".into()))?;
        let strategy = match strategy_raw.trim() {
            "content_desc" => LocatorStrategy::ContentDesc,
            "text" => LocatorStrategy::Text,
            "id" => LocatorStrategy::Id,
            other => return Err(err(format!("unknown locator strategy {other:?}"))),
        };
        let value = unquote(value_raw.trim())
            .ok_or_else(|| err("locator value must be double-quoted".into()))?;
        let call = call
            .strip_prefix('.')
            .ok_or_else(|| err("expected .<verb>(...) after find_element".into()))?;
        let (verb_name, verb_args) = call
            .strip_suffix(')')
            .and_then(|c| c.split_once('('))
            .ok_or_else(|| err("malformed verb call".into()))?;
        let (verb, fill_value) = match verb_name {
            "click" => (Verb::Click, None),
            "long_click" => (Verb::LongClick, None),
            "swipe" => (Verb::Swipe, None),
            "fill" => {
                let v = unquote(verb_args.trim())
                    .ok_or_else(|| err("fill value must be double-quoted".into()))?;
                (Verb::Fill, Some(v))
            }
            other => return Err(err(format!("unknown verb {other:?}"))),
        };
        Ok(ScriptStep {
            verb,
            locator_strategy: Some(strategy),
            locator_value: Some(value),
            fill_value,
        })
    } else if line == "back()" {
        Ok(ScriptStep {
            verb: Verb::Back,
            locator_strategy: None,
            locator_value: None,
            fill_value: None,
        })
    } else if line == "wait()" {
        Ok(ScriptStep {
            verb: Verb::Wait,
            locator_strategy: None,
            locator_value: None,
            fill_value: None,
        })
    } else {
        Err(err(format!("unrecognized statement {line:?}")))
    }
}

fn resolve_locator<'s>(
    state: &'s UiState,
    strategy: LocatorStrategy,
    value: &str,
) -> Option<&'s crate::app_model::UiElement> {
    state.elements.iter().find(|el| match strategy {
        LocatorStrategy::ContentDesc => el.content_desc.as_deref() == Some(value),
        LocatorStrategy::Text => el.text.as_deref() == Some(value),
        LocatorStrategy::Id => el.element_id == value,
    })
}

/// Execute a script against a fresh simulator. A step whose locator resolves
/// no element (or whose action the model rejects) halts execution at that
/// index; replay failures are data, not errors. With all steps passing, the
/// goal_check (when supplied) decides goal_reached.
pub fn replay(script: &TestScript, model: &AppModel, goal_check: Option<&GoalCheck>) -> ExecutionReport {
    let mut sim = Simulator::new(model);
    for (index, step) in script.steps.iter().enumerate() {
        let action = match (&step.locator_strategy, &step.locator_value) {
            (Some(strategy), Some(value)) => {
                let state = sim.current_state();
                match resolve_locator(&state, *strategy, value) {
                    Some(element) => Action {
                        kind: step.verb.action_kind(),
                        target: Some(element.identity()),
                        payload: step.fill_value.clone(),
                    },
                    None => {
                        return ExecutionReport {
                            status: ReplayStatus::Failed,
                            failed_step_index: Some(index),
                            final_state: state,
                            goal_reached: false,
                        }
                    }
                }
            }
            _ => Action {
                kind: step.verb.action_kind(),
                target: None,
                payload: None,
            },
        };
        if sim.execute(&action).is_err() {
            return ExecutionReport {
                status: ReplayStatus::Failed,
                failed_step_index: Some(index),
                final_state: sim.current_state(),
                goal_reached: false,
            };
        }
    }
    let final_state = sim.current_state();
    let goal_reached = goal_check.map_or(true, |check| check.is_satisfied(&final_state));
    ExecutionReport {
        status: if goal_reached {
            ReplayStatus::Passed
        } else {
            // all steps executed but the task goal was not reached
            ReplayStatus::Failed
        },
        failed_step_index: None,
        final_state,
        goal_reached,
    }
}
