//! The action-sequence generation loop: Action Selector, Observer, Verifier
//! and Reflector wired around task and persistent memory.

mod memory;

pub use memory::{load_memory, save_memory, MemoryEntry, MemoryError, PersistentMemory};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::app_model::{
    detect_ui_changes, extract_actionables, render_screenshot, textual_dump, Action, ActionKind,
    AppModel, AppModelError, CandidateAction, Screenshot, Simulator, UiChange, UiState,
};
use crate::gateway::{
    Gateway, GatewayError, HistoryEntry, PromptContext, RoleResponse, Verdict,
};

pub const DEFAULT_MAX_ACTIONS: usize = 20;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    App(#[from] AppModelError),
    #[error("selector chose index {index} outside candidate range 0..{len} after re-ask")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("selector returned {role} response")]
    WrongResponseShape { role: crate::gateway::Role },
}

/// Per-run short-term log; reset at the start of every run.
#[derive(Debug, Clone, Default)]
pub struct TaskMemory {
    pub goal: String,
    pub actions: Vec<ActionRecord>,
    pub observations: Vec<String>,
    pub finished: bool,
}

impl TaskMemory {
    pub fn new(goal: impl Into<String>) -> Self {
        TaskMemory {
            goal: goal.into(),
            ..Default::default()
        }
    }

    pub fn history(&self) -> Vec<HistoryEntry> {
        self.actions
            .iter()
            .zip(&self.observations)
            .map(|(a, o)| HistoryEntry {
                action_description: a.description.clone(),
                observation: o.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub action: Action,
    pub description: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    VerifierDone,
    MaxActions,
    Aborted,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub actions: Vec<ActionRecord>,
    pub observations: Vec<String>,
    pub finished: bool,
    /// states[0] is the initial state; states[i+1] follows actions[i].
    pub trajectory: Vec<(UiState, Screenshot)>,
    pub stop_reason: StopReason,
    /// Diagnostic for aborted runs; the trajectory up to the failure is kept.
    pub abort_error: Option<String>,
}

impl RunResult {
    pub fn action_sequence(&self) -> Vec<Action> {
        self.actions.iter().map(|r| r.action.clone()).collect()
    }

    /// The state each action was taken in.
    pub fn state_before(&self, action_index: usize) -> Option<&UiState> {
        self.trajectory.get(action_index).map(|(s, _)| s)
    }
}

fn select_action(
    gateway: &Gateway,
    tm: &TaskMemory,
    persistent_text: &str,
    candidates: &[CandidateAction],
) -> Result<ActionRecord, AgentError> {
    assert!(!candidates.is_empty(), "candidate list is never empty (back is always offered)");
    let history = tm.history();
    let context = PromptContext::Selector {
        goal: &tm.goal,
        history: &history,
        candidates,
        persistent_memory: persistent_text,
    };
    // out-of-range index gets one re-ask with the range restated
    for attempt in 0..2 {
        let mut envelope = gateway.render(&context)?;
        if attempt > 0 {
            envelope.text.push_str(&format!(
                "\nThe chosen_action index must be between 0 and {}.",
                candidates.len() - 1
            ));
        }
        let response = gateway.ask_envelope(&envelope)?;
        let RoleResponse::Selector {
            chosen_action,
            action_description,
            reason,
        } = response
        else {
            return Err(AgentError::WrongResponseShape {
                role: response.role(),
            });
        };
        match candidates.get(chosen_action) {
            Some(candidate) => {
                let mut action = candidate.action.clone();
                if action.kind == ActionKind::Input {
                    action.payload = Some(extract_input_text(&action_description));
                }
                return Ok(ActionRecord {
                    action,
                    description: action_description,
                    reason,
                });
            }
            None if attempt == 0 => continue,
            None => {
                return Err(AgentError::IndexOutOfRange {
                    index: chosen_action,
                    len: candidates.len(),
                })
            }
        }
    }
    unreachable!("loop returns on every path")
}

/// Input payload convention: the selector quotes the text to type in its
/// action_description, e.g. `Type "8:00" into the time field`. The first
/// double-quoted span is the payload; no quotes means empty input.
fn extract_input_text(description: &str) -> String {
    let Some(open) = description.find('"') else {
        return String::new();
    };
    match description[open + 1..].find('"') {
        Some(close) => description[open + 1..open + 1 + close].to_string(),
        None => String::new(),
    }
}

fn observe(gateway: &Gateway, record: &ActionRecord, changes: &[UiChange]) -> Result<String, AgentError> {
    let response = gateway.ask(&PromptContext::Observer {
        action: record.description.clone(),
        changes,
    })?;
    match response {
        RoleResponse::Observer { observation } => Ok(observation),
        other => Err(AgentError::WrongResponseShape { role: other.role() }),
    }
}

fn verify(
    gateway: &Gateway,
    tm: &TaskMemory,
    persistent_text: &str,
    state: &UiState,
    shot: &Screenshot,
) -> Result<(bool, String), AgentError> {
    let history = tm.history();
    let dump = textual_dump(state);
    let response = gateway.ask(&PromptContext::Verifier {
        goal: &tm.goal,
        history: &history,
        textual_dump: &dump,
        screenshot: shot,
        persistent_memory: persistent_text,
    })?;
    match response {
        RoleResponse::Verifier {
            task_done,
            screen_description,
        } => Ok((task_done, screen_description)),
        other => Err(AgentError::WrongResponseShape { role: other.role() }),
    }
}

/// Post-run reflection over the executed actions, observations and goal.
pub fn reflect(
    gateway: &Gateway,
    tm: &TaskMemory,
) -> Result<(Verdict, Vec<String>, Vec<String>), AgentError> {
    let history = tm.history();
    let response = gateway.ask(&PromptContext::Reflector {
        goal: &tm.goal,
        history: &history,
    })?;
    match response {
        RoleResponse::Reflector {
            verdict,
            rules,
            optimized_steps,
        } => {
            let steps = match verdict {
                Verdict::Success => optimized_steps,
                Verdict::Failed => Vec::new(),
            };
            Ok((verdict, rules, steps))
        }
        other => Err(AgentError::WrongResponseShape { role: other.role() }),
    }
}

/// Run one task end to end. The first action is selected from the initial
/// state before entering the loop; the loop executes, observes and verifies
/// after every action until the verifier reports done or the cap is hit.
/// Reflection updates persistent memory only when `is_training` is set.
pub fn run_task(
    goal: &str,
    model: &AppModel,
    pm: &mut PersistentMemory,
    is_training: bool,
    gateway: &Gateway,
    max_actions: usize,
) -> RunResult {
    assert!(max_actions >= 1, "max_actions must be at least 1");
    let mut tm = TaskMemory::new(goal);
    let persistent_text = pm.render(&model.app_name, goal);
    let mut sim = Simulator::new(model);
    let mut trajectory = Vec::new();

    let initial = sim.current_state();
    trajectory.push((initial.clone(), render_screenshot(&initial)));

    let abort = |tm: TaskMemory, trajectory: Vec<(UiState, Screenshot)>, err: AgentError| RunResult {
        actions: tm.actions.clone(),
        observations: tm.observations,
        finished: false,
        trajectory,
        stop_reason: StopReason::Aborted,
        abort_error: Some(err.to_string()),
    };

    let candidates = extract_actionables(&initial);
    let mut record = match select_action(gateway, &tm, &persistent_text, &candidates) {
        Ok(r) => r,
        Err(e) => return abort(tm, trajectory, e),
    };
    let mut prev_state: Option<UiState> = None;

    while !tm.finished && tm.actions.len() < max_actions {
        let new_state = match sim.execute(&record.action) {
            Ok(s) => s,
            Err(e) => return abort(tm, trajectory, e.into()),
        };
        tm.actions.push(record.clone());
        let changes = detect_ui_changes(prev_state.as_ref(), &new_state);
        let observation = match observe(gateway, &record, &changes) {
            Ok(o) => o,
            Err(e) => return abort(tm, trajectory, e),
        };
        tm.observations.push(observation);
        let shot = render_screenshot(&new_state);
        trajectory.push((new_state.clone(), shot.clone()));
        // a wrong continue/stop decision corrupts every downstream metric,
        // so a verify error aborts rather than continuing
        let (done, _screen_description) =
            match verify(gateway, &tm, &persistent_text, &new_state, &shot) {
                Ok(v) => v,
                Err(e) => return abort(tm, trajectory, e),
            };
        tm.finished = done;
        if !tm.finished && tm.actions.len() < max_actions {
            let candidates = extract_actionables(&new_state);
            record = match select_action(gateway, &tm, &persistent_text, &candidates) {
                Ok(r) => r,
                Err(e) => return abort(tm, trajectory, e),
            };
            prev_state = Some(new_state);
        }
    }

    if is_training {
        if let Ok((verdict, rules, steps)) = reflect(gateway, &tm) {
            pm.merge_reflection(&model.app_name, goal, verdict, &rules, &steps);
        }
    }

    let stop_reason = if tm.finished {
        StopReason::VerifierDone
    } else {
        StopReason::MaxActions
    };
    RunResult {
        actions: tm.actions.clone(),
        observations: tm.observations.clone(),
        finished: tm.finished,
        trajectory,
        stop_reason,
        abort_error: None,
    }
}
