use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use agent_testgen::agent::DEFAULT_MAX_ACTIONS;
use agent_testgen::cli::{
    cmd_metrics, cmd_replay, cmd_run, cmd_train, BackendChoice, RunConfig,
};
use agent_testgen::exec::ExecMode;
use agent_testgen::script::ReplayStatus;

#[derive(Parser)]
#[command(
    name = "agent-testgen",
    about = "Generate, rank and replay GUI test scripts from natural-language task goals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Scripted,
    Remote,
}

#[derive(Args)]
struct RunArgs {
    /// App model file (TOML)
    #[arg(long)]
    app: PathBuf,
    /// Tasks file (TOML)
    #[arg(long)]
    tasks: PathBuf,
    /// Completion backend
    #[arg(long, value_enum, default_value = "scripted")]
    backend: BackendArg,
    /// Oracle script for the scripted backend
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Endpoint URL for the remote backend
    #[arg(long)]
    endpoint: Option<String>,
    /// Disable the visual channel (no screenshots attached to prompts)
    #[arg(long)]
    no_vision: bool,
    /// Independent runs per task before ranking
    #[arg(long, default_value_t = 3)]
    runs: usize,
    /// Hard cap on actions per run
    #[arg(long, default_value_t = DEFAULT_MAX_ACTIONS)]
    max_actions: usize,
    /// Output directory for traces and scripts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Persistent memory file
    #[arg(long)]
    memory: Option<PathBuf>,
    /// Directory of prompt template overrides
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Run tasks in parallel
    #[arg(long)]
    jobs: bool,
}

impl RunArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            app_path: self.app.clone(),
            tasks_path: self.tasks.clone(),
            backend: match self.backend {
                BackendArg::Scripted => BackendChoice::Scripted,
                BackendArg::Remote => BackendChoice::Remote,
            },
            oracle_path: self.oracle.clone(),
            endpoint: self.endpoint.clone(),
            vision: !self.no_vision,
            runs_per_task: self.runs.max(1),
            max_actions: self.max_actions.max(1),
            out_dir: self.out.clone(),
            memory_path: self.memory.clone(),
            prompt_dir: self.prompts.clone(),
            mode: if self.jobs {
                ExecMode::Parallel
            } else {
                ExecMode::Sequential
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate action sequences and emit a script per task
    Run(RunArgs),
    /// Run each task once in training mode and persist reflections
    Train(RunArgs),
    /// Replay a saved script against an app model
    Replay {
        /// Script file (.dsl or .toml)
        script: PathBuf,
        #[arg(long)]
        app: PathBuf,
        /// Tasks file holding the goal predicate
        #[arg(long)]
        tasks: Option<PathBuf>,
        /// Goal text identifying the task in the tasks file
        #[arg(long)]
        goal: Option<String>,
    },
    /// Judge saved traces against ground truth and print a report
    Metrics {
        /// Directory of per-task run traces
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => {
            let summary = match cmd_run(&args.to_config()) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            for outcome in &summary.outcomes {
                match (&outcome.error, outcome.chosen_run) {
                    (Some(err), _) => println!("task '{}': failed: {err}", outcome.goal),
                    (None, Some(run)) => println!(
                        "task '{}': chose run_{run} (scores {:?}, finished: {})",
                        outcome.goal, outcome.scores, outcome.finished
                    ),
                    (None, None) => println!("task '{}': no runs", outcome.goal),
                }
            }
            if summary.all_succeeded() {
                Ok(())
            } else {
                Err("one or more tasks failed".to_string())
            }
        }
        Command::Train(args) => match cmd_train(&args.to_config()) {
            Ok(memory) => {
                println!("trained {} memory entries", memory.entries().count());
                Ok(())
            }
            Err(e) => return fail(e),
        },
        Command::Replay {
            script,
            app,
            tasks,
            goal,
        } => match cmd_replay(&script, &app, tasks.as_deref(), goal.as_deref()) {
            Ok(outcome) => {
                match outcome.status {
                    ReplayStatus::Passed => {
                        println!("passed (final screen: {})", outcome.final_screen)
                    }
                    ReplayStatus::Failed => match outcome.failed_step_index {
                        Some(i) => println!("failed at step {i}"),
                        None => println!(
                            "failed: goal not reached (final screen: {})",
                            outcome.final_screen
                        ),
                    },
                }
                if outcome.status == ReplayStatus::Passed {
                    Ok(())
                } else {
                    Err("replay failed".to_string())
                }
            }
            Err(e) => return fail(e),
        },
        Command::Metrics { traces, tasks } => match cmd_metrics(&traces, &tasks) {
            Ok(report) => {
                print!("{}", report.render_text());
                Ok(())
            }
            Err(e) => return fail(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn fail(error: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {error}");
    ExitCode::FAILURE
}
