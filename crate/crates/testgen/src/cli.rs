//! Command-line workflows: generation runs, training, script replay and
//! metric aggregation over saved run traces.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{
    load_memory, run_task, save_memory, MemoryError, PersistentMemory, RunResult, StopReason,
    DEFAULT_MAX_ACTIONS,
};
use crate::app_model::{
    action_space, load_app_model, Action, AppModel, AppModelError,
};
use crate::exec::{map_items, ExecMode};
use crate::gateway::{
    BackendConfig, BackendKind, ExchangeRecord, Gateway, GatewayError, PromptTemplates,
    RemoteBackend, ScriptedBackend, API_KEY_ENV,
};
use crate::metrics::{aggregate, judge, AggregateReport, TaskMetadata};
use crate::ranker::{rank, score_run, ScoredSequence};
use crate::script::{emit_script, replay, GoalCheck, ReplayStatus, ScriptError, TestScript};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    App(#[from] AppModelError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid tasks file {path}: {message}")]
    TasksParse { path: String, message: String },
    #[error("invalid trace file {path}: {message}")]
    TraceParse { path: String, message: String },
    #[error("no task named {goal:?} in the tasks file")]
    NoSuchTask { goal: String },
    #[error("tasks file contains no tasks")]
    EmptyTasks,
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Which completion backend a run should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Scripted,
    Remote,
}

/// Everything a `run` or `train` invocation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub app_path: PathBuf,
    pub tasks_path: PathBuf,
    pub backend: BackendChoice,
    /// Oracle script for the scripted backend; one fresh cursor per run.
    pub oracle_path: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub vision: bool,
    pub runs_per_task: usize,
    pub max_actions: usize,
    pub out_dir: PathBuf,
    pub memory_path: Option<PathBuf>,
    pub prompt_dir: Option<PathBuf>,
    pub mode: ExecMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            app_path: PathBuf::new(),
            tasks_path: PathBuf::new(),
            backend: BackendChoice::Scripted,
            oracle_path: None,
            endpoint: None,
            vision: true,
            runs_per_task: 3,
            max_actions: DEFAULT_MAX_ACTIONS,
            out_dir: PathBuf::from("out"),
            memory_path: None,
            prompt_dir: None,
            mode: ExecMode::Sequential,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(default)]
    pub app_name: String,
    pub goal: String,
    #[serde(default)]
    pub ground_truth: Vec<Action>,
    #[serde(default)]
    pub goal_check: Option<GoalCheck>,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct TasksFile {
    #[serde(default)]
    tasks: Vec<TaskSpec>,
}

pub fn load_tasks(path: impl AsRef<Path>) -> Result<Vec<TaskSpec>, CliError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: TasksFile = toml::from_str(&text).map_err(|e| CliError::TasksParse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if file.tasks.is_empty() {
        return Err(CliError::EmptyTasks);
    }
    Ok(file.tasks)
}

/// On-disk record of one generation run, written as TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub app_name: String,
    pub goal: String,
    pub run_index: usize,
    pub finished: bool,
    pub stop_reason: StopReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_error: Option<String>,
    pub score: usize,
    pub task_length: usize,
    /// u128 kept as a decimal string; TOML integers are i64.
    pub action_space: String,
    pub screens_visited: Vec<String>,
    pub actions: Vec<crate::agent::ActionRecord>,
    pub observations: Vec<String>,
    #[serde(default)]
    pub exchanges: Vec<ExchangeRecord>,
}

impl RunTrace {
    pub fn action_sequence(&self) -> Vec<Action> {
        self.actions.iter().map(|r| r.action.clone()).collect()
    }
}

fn build_trace(
    task: &TaskSpec,
    run_index: usize,
    run: &RunResult,
    scored: &ScoredSequence,
    exchanges: Vec<ExchangeRecord>,
) -> RunTrace {
    let states: Vec<_> = run.trajectory.iter().map(|(s, _)| s.clone()).collect();
    RunTrace {
        app_name: task.app_name.clone(),
        goal: task.goal.clone(),
        run_index,
        finished: run.finished,
        stop_reason: run.stop_reason,
        abort_error: run.abort_error.clone(),
        score: scored.score,
        task_length: task.ground_truth.len(),
        action_space: action_space(&states).to_string(),
        screens_visited: states.iter().map(|s| s.screen_id.clone()).collect(),
        actions: run.actions.clone(),
        observations: run.observations.clone(),
        exchanges,
    }
}

/// Filesystem-safe directory name for a task goal.
pub fn task_slug(goal: &str) -> String {
    let mut slug = String::new();
    for c in goal.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
        } else if !slug.ends_with('_') {
            slug.push('_');
        }
    }
    slug.trim_matches('_').to_string()
}

fn build_gateway(config: &RunConfig) -> Result<Gateway, CliError> {
    let mut backend_config = BackendConfig::default();
    let backend: Arc<dyn crate::gateway::CompletionBackend> = match config.backend {
        BackendChoice::Scripted => {
            let path = config.oracle_path.as_ref().ok_or_else(|| {
                CliError::Usage("scripted backend requires --oracle <file>".into())
            })?;
            Arc::new(ScriptedBackend::load(path)?)
        }
        BackendChoice::Remote => {
            backend_config.backend_kind = BackendKind::Remote;
            backend_config.endpoint = config.endpoint.clone();
            backend_config.credential = std::env::var(API_KEY_ENV).ok();
            backend_config.validate()?;
            Arc::new(RemoteBackend::new())
        }
    };
    let mut gateway = Gateway::new(backend, backend_config).with_vision(config.vision);
    if let Some(dir) = &config.prompt_dir {
        gateway = gateway.with_templates(PromptTemplates::load_dir(dir)?);
    }
    Ok(gateway)
}

/// Outcome of one task inside a batch run.
#[derive(Debug, Clone, Serialize)]
pub struct TaskOutcome {
    pub goal: String,
    pub slug: String,
    pub scores: Vec<usize>,
    pub chosen_run: Option<usize>,
    pub finished: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub outcomes: Vec<TaskOutcome>,
}

impl RunSummary {
    pub fn all_succeeded(&self) -> bool {
        self.outcomes.iter().all(|o| o.error.is_none())
    }
}

/// Generate action sequences for every task: `runs_per_task` independent runs,
/// keyword ranking, and a replayable script for the winner. Failures are
/// recorded per task; remaining tasks still run.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let model = load_app_model(&config.app_path)?;
    let tasks = load_tasks(&config.tasks_path)?;
    let memory = match &config.memory_path {
        Some(path) => load_memory(path)?,
        None => PersistentMemory::new(),
    };
    std::fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))?;

    let outcomes = map_items(config.mode, tasks, |task| {
        match run_one_task(config, &model, &memory, &task) {
            Ok(outcome) => outcome,
            Err(e) => TaskOutcome {
                goal: task.goal.clone(),
                slug: task_slug(&task.goal),
                scores: Vec::new(),
                chosen_run: None,
                finished: false,
                error: Some(e.to_string()),
            },
        }
    });
    Ok(RunSummary { outcomes })
}

fn run_one_task(
    config: &RunConfig,
    model: &AppModel,
    memory: &PersistentMemory,
    task: &TaskSpec,
) -> Result<TaskOutcome, CliError> {
    let slug = task_slug(&task.goal);
    let task_dir = config.out_dir.join(&slug);
    std::fs::create_dir_all(&task_dir).map_err(|e| io_err(&task_dir, e))?;

    let indices: Vec<usize> = (0..config.runs_per_task).collect();
    let runs: Vec<Result<(RunResult, Vec<ExchangeRecord>), CliError>> =
        map_items(config.mode, indices, |run_index| {
            let log = Arc::new(std::sync::Mutex::new(Vec::new()));
            let gateway = build_gateway(config)?.with_log(log.clone());
            let mut local_memory = memory.clone();
            let run = run_task(
                &task.goal,
                model,
                &mut local_memory,
                false,
                &gateway,
                config.max_actions,
            );
            let exchanges = std::mem::take(&mut *log.lock().unwrap());
            let _ = run_index;
            Ok((run, exchanges))
        });

    let mut results = Vec::with_capacity(runs.len());
    for run in runs {
        results.push(run?);
    }

    let scored: Vec<ScoredSequence> = results
        .iter()
        .enumerate()
        .map(|(i, (run, _))| score_run(i, run, &task.goal))
        .collect();
    for (i, (run, exchanges)) in results.iter().enumerate() {
        let trace = build_trace(task, i, run, &scored[i], exchanges.clone());
        let text = toml::to_string_pretty(&trace).expect("trace serializes");
        let path = task_dir.join(format!("run_{i}.toml"));
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }

    let winner = rank(&scored);
    let (winning_run, _) = &results[winner.run_index];
    std::fs::write(
        task_dir.join("chosen"),
        format!("run_{}\n", winner.run_index),
    )
    .map_err(|e| io_err(&task_dir.join("chosen"), e))?;

    // A script is only emitted for non-empty winning sequences.
    if !winning_run.actions.is_empty() {
        let states: Vec<_> = winning_run.trajectory.iter().map(|(s, _)| s.clone()).collect();
        let script = emit_script(&winning_run.action_sequence(), &states, &task.goal)?;
        script.save(task_dir.join("script.dsl"))?;
    }

    Ok(TaskOutcome {
        goal: task.goal.clone(),
        slug,
        scores: scored.iter().map(|s| s.score).collect(),
        chosen_run: Some(winner.run_index),
        finished: winning_run.finished,
        error: None,
    })
}

/// Run every task once in training mode and persist the reflected memory.
/// Tasks run with isolated memory snapshots; entry updates are merged after
/// all runs finish, so a parallel `mode` is safe.
pub fn cmd_train(config: &RunConfig) -> Result<PersistentMemory, CliError> {
    let model = load_app_model(&config.app_path)?;
    let tasks = load_tasks(&config.tasks_path)?;
    let memory_path = config.memory_path.clone().ok_or_else(|| {
        CliError::Usage("training requires --memory <file> to persist reflections".into())
    })?;
    let mut memory = load_memory(&memory_path)?;

    let updates: Vec<Result<(String, String, Option<crate::agent::MemoryEntry>), CliError>> =
        map_items(config.mode, tasks, |task| {
            let gateway = build_gateway(config)?;
            let mut local = memory.clone();
            let _ = run_task(
                &task.goal,
                &model,
                &mut local,
                true,
                &gateway,
                config.max_actions,
            );
            let entry = local.entry(&task.app_name, &task.goal).cloned();
            Ok((task.app_name, task.goal, entry))
        });

    for update in updates {
        let (app_name, goal, entry) = update?;
        if let Some(entry) = entry {
            memory.set_entry(&app_name, &goal, entry);
        }
    }
    save_memory(&memory_path, &memory)?;
    Ok(memory)
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub status: ReplayStatus,
    pub failed_step_index: Option<usize>,
    pub goal_reached: bool,
    pub final_screen: String,
}

/// Replay a saved script against the app model. The goal predicate is looked
/// up in the tasks file by goal text when one is given.
pub fn cmd_replay(
    script_path: impl AsRef<Path>,
    app_path: impl AsRef<Path>,
    tasks_path: Option<&Path>,
    goal: Option<&str>,
) -> Result<ReplayOutcome, CliError> {
    let model = load_app_model(app_path)?;
    let script = TestScript::load(script_path)?;
    let goal_check = match (tasks_path, goal) {
        (Some(tasks_path), Some(goal)) => {
            let tasks = load_tasks(tasks_path)?;
            let task = tasks
                .into_iter()
                .find(|t| t.goal == goal)
                .ok_or_else(|| CliError::NoSuchTask { goal: goal.into() })?;
            task.goal_check
        }
        _ => None,
    };
    let report = replay(&script, &model, goal_check.as_ref());
    Ok(ReplayOutcome {
        status: report.status,
        failed_step_index: report.failed_step_index,
        goal_reached: report.goal_reached,
        final_screen: report.final_state.screen_id,
    })
}

fn load_trace(path: &Path) -> Result<RunTrace, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::TraceParse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Judge every task's chosen run against its ground truth and aggregate.
/// Writes `report.txt` and `report.csv` next to the traces.
pub fn cmd_metrics(
    traces_dir: impl AsRef<Path>,
    tasks_path: impl AsRef<Path>,
) -> Result<AggregateReport, CliError> {
    let traces_dir = traces_dir.as_ref();
    let tasks = load_tasks(tasks_path)?;
    let mut judgements = Vec::new();
    let mut metadata = Vec::new();
    for task in &tasks {
        if task.ground_truth.is_empty() {
            continue;
        }
        let task_dir = traces_dir.join(task_slug(&task.goal));
        let chosen_path = task_dir.join("chosen");
        let chosen = std::fs::read_to_string(&chosen_path).map_err(|e| io_err(&chosen_path, e))?;
        let trace = load_trace(&task_dir.join(format!("{}.toml", chosen.trim())))?;
        judgements.push(judge(
            &trace.action_sequence(),
            &task.ground_truth,
            trace.finished,
        ));
        metadata.push(TaskMetadata {
            app_name: task.app_name.clone(),
            task_length: task.ground_truth.len(),
            action_space: trace.action_space.parse().unwrap_or(0),
        });
    }
    if judgements.is_empty() {
        return Err(CliError::Usage(
            "no task in the tasks file has ground truth to judge".into(),
        ));
    }
    let report = aggregate(&judgements, &metadata);
    let txt_path = traces_dir.join("report.txt");
    std::fs::write(&txt_path, report.render_text()).map_err(|e| io_err(&txt_path, e))?;
    let csv_path = traces_dir.join("report.csv");
    std::fs::write(&csv_path, report.render_csv()).map_err(|e| io_err(&csv_path, e))?;
    Ok(report)
}
