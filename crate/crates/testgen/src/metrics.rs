//! Sequence-correctness metric suite over (generated, ground-truth) pairs:
//! exact-match, prefix-match, precision, task completion and task coverage,
//! aggregated across a task set with length and action-space stratification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Whether two actions count as the same for judging: same kind, same
/// resolved element identity, same payload.
pub type ActionKey = crate::app_model::Action;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskJudgement {
    pub exact: bool,
    pub completed: bool,
    pub covered: bool,
    pub prefix_fraction: f64,
    /// Alternative denominator (|generated|) reported for comparison.
    pub prefix_fraction_generated: f64,
    pub precision: f64,
    pub premature: bool,
}

/// True iff `needle` is an in-order subsequence of `haystack`.
fn is_subsequence(needle: &[ActionKey], haystack: &[ActionKey]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// Count of truth actions matched in order by a greedy scan of generated.
fn greedy_matched(generated: &[ActionKey], truth: &[ActionKey]) -> usize {
    let mut matched = 0;
    for action in generated {
        if matched < truth.len() && action == &truth[matched] {
            matched += 1;
        }
    }
    matched
}

pub fn judge(generated: &[ActionKey], truth: &[ActionKey], finished: bool) -> TaskJudgement {
    assert!(!truth.is_empty(), "ground truth must be nonempty");
    let covered = is_subsequence(truth, generated);
    let completed = covered && generated.last() == truth.last();
    let exact = generated == truth;
    let lcp = generated
        .iter()
        .zip(truth)
        .take_while(|(g, t)| g == t)
        .count();
    let prefix_fraction = lcp as f64 / truth.len() as f64;
    let prefix_fraction_generated = if generated.is_empty() {
        0.0
    } else {
        lcp as f64 / generated.len() as f64
    };
    let precision = if lcp == 0 || generated.is_empty() {
        // zero prefix means nothing downstream is reusable
        0.0
    } else {
        greedy_matched(generated, truth) as f64 / generated.len() as f64
    };
    TaskJudgement {
        exact,
        completed,
        covered,
        prefix_fraction,
        prefix_fraction_generated,
        precision,
        premature: finished && !covered,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetadata {
    pub app_name: String,
    pub task_length: usize,
    pub action_space: u128,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub tasks: usize,
    pub exact: usize,
    pub completed: usize,
    pub covered: usize,
    pub premature: usize,
}

impl MetricCounts {
    fn add(&mut self, j: &TaskJudgement) {
        self.tasks += 1;
        self.exact += j.exact as usize;
        self.completed += j.completed as usize;
        self.covered += j.covered as usize;
        self.premature += j.premature as usize;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateReport {
    pub totals: MetricCounts,
    pub exact_pct: f64,
    pub completion_pct: f64,
    pub coverage_pct: f64,
    pub prefix_match_pct: f64,
    pub prefix_match_generated_pct: f64,
    pub precision_pct: f64,
    pub by_app: BTreeMap<String, MetricCounts>,
    pub by_length: BTreeMap<usize, MetricCounts>,
    /// Keyed by floor(log10(action_space)).
    pub by_action_space_decade: BTreeMap<u32, MetricCounts>,
    pub mean_action_space: f64,
}

pub fn aggregate(judgements: &[TaskJudgement], metadata: &[TaskMetadata]) -> AggregateReport {
    assert!(!judgements.is_empty(), "aggregate requires at least one judgement");
    assert_eq!(judgements.len(), metadata.len(), "metadata must align with judgements");
    let n = judgements.len() as f64;
    let mut totals = MetricCounts::default();
    let mut by_app: BTreeMap<String, MetricCounts> = BTreeMap::new();
    let mut by_length: BTreeMap<usize, MetricCounts> = BTreeMap::new();
    let mut by_decade: BTreeMap<u32, MetricCounts> = BTreeMap::new();
    let mut prefix_sum = 0.0;
    let mut prefix_gen_sum = 0.0;
    let mut precision_sum = 0.0;
    let mut space_sum = 0.0;
    for (j, meta) in judgements.iter().zip(metadata) {
        totals.add(j);
        by_app.entry(meta.app_name.clone()).or_default().add(j);
        by_length.entry(meta.task_length).or_default().add(j);
        let decade = (meta.action_space.max(1) as f64).log10().floor() as u32;
        by_decade.entry(decade).or_default().add(j);
        prefix_sum += j.prefix_fraction;
        prefix_gen_sum += j.prefix_fraction_generated;
        precision_sum += j.precision;
        space_sum += meta.action_space as f64;
    }
    AggregateReport {
        exact_pct: 100.0 * totals.exact as f64 / n,
        completion_pct: 100.0 * totals.completed as f64 / n,
        coverage_pct: 100.0 * totals.covered as f64 / n,
        prefix_match_pct: 100.0 * prefix_sum / n,
        prefix_match_generated_pct: 100.0 * prefix_gen_sum / n,
        precision_pct: 100.0 * precision_sum / n,
        totals,
        by_app,
        by_length,
        by_action_space_decade: by_decade,
        mean_action_space: space_sum / n,
    }
}

impl AggregateReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("Total tasks: {}\n", self.totals.tasks));
        out.push_str(&format!("Exact-match tasks: {}\n", self.totals.exact));
        out.push_str(&format!("Completed tasks: {}\n", self.totals.completed));
        out.push_str(&format!("Covered tasks: {}\n", self.totals.covered));
        out.push_str(&format!("Premature tasks: {}\n", self.totals.premature));
        out.push_str(&format!("Exact-match (%): {:.1}\n", self.exact_pct));
        out.push_str(&format!("Task Completion (%): {:.1}\n", self.completion_pct));
        out.push_str(&format!("Task Coverage (%): {:.1}\n", self.coverage_pct));
        out.push_str(&format!("Prefix-match (%): {:.1}\n", self.prefix_match_pct));
        out.push_str(&format!(
            "Prefix-match over generated (%): {:.1}\n",
            self.prefix_match_generated_pct
        ));
        out.push_str(&format!("Precision (%): {:.1}\n", self.precision_pct));
        out.push_str(&format!("Mean action space: {:.1}\n", self.mean_action_space));
        out
    }

    /// Flat CSV of the stratified counts for plotting.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("stratum,key,tasks,exact,completed,covered,premature\n");
        let mut push = |stratum: &str, key: &str, c: &MetricCounts| {
            out.push_str(&format!(
                "{stratum},{key},{},{},{},{},{}\n",
                c.tasks, c.exact, c.completed, c.covered, c.premature
            ));
        };
        push("total", "all", &self.totals);
        for (app, c) in &self.by_app {
            push("app", app, c);
        }
        for (len, c) in &self.by_length {
            push("length", &len.to_string(), c);
        }
        for (decade, c) in &self.by_action_space_decade {
            push("action_space_decade", &format!("1e{decade}"), c);
        }
        out
    }
}
