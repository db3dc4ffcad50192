//! Ranking of independently generated candidate sequences by term overlap
//! with the task description.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::agent::RunResult;
use crate::app_model::UiState;

/// Lowercased alphanumeric tokens of a goal, duplicates removed. No stemming
/// and no stop-word filtering.
pub fn task_terms(goal: &str) -> BTreeSet<String> {
    tokenize(goal)
}

fn tokenize(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Union of tokenized text, content_desc and element_id of every element
/// actually targeted by an action in the sequence. `states[i]` must be the
/// state action i was taken in.
pub fn interacted_words(
    actions: &[crate::app_model::Action],
    states: &[UiState],
) -> BTreeSet<String> {
    let mut words = BTreeSet::new();
    for (action, state) in actions.iter().zip(states) {
        let Some(target) = action.target.as_deref() else {
            continue;
        };
        let Some(element) = state.find(target) else {
            continue;
        };
        if let Some(text) = &element.text {
            words.extend(tokenize(text));
        }
        if let Some(desc) = &element.content_desc {
            words.extend(tokenize(desc));
        }
        words.extend(tokenize(&element.element_id));
    }
    words
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoredSequence {
    pub run_index: usize,
    pub score: usize,
    pub finished: bool,
    pub len: usize,
    pub interacted_words: BTreeSet<String>,
}

/// Score(S) = sum over w in T of 1[w in U]: exact token equality.
pub fn score(terms: &BTreeSet<String>, interacted: &BTreeSet<String>) -> usize {
    terms.iter().filter(|w| interacted.contains(*w)).count()
}

pub fn score_run(run_index: usize, run: &RunResult, goal: &str) -> ScoredSequence {
    let actions = run.action_sequence();
    let states: Vec<UiState> = run.trajectory.iter().map(|(s, _)| s.clone()).collect();
    let interacted = interacted_words(&actions, &states);
    ScoredSequence {
        run_index,
        score: score(&task_terms(goal), &interacted),
        finished: run.finished,
        len: actions.len(),
        interacted_words: interacted,
    }
}

/// Argmax by score; ties broken by finished-first, then shorter sequence,
/// then lower run_index. Order-independent because run_index is intrinsic.
pub fn rank(candidates: &[ScoredSequence]) -> &ScoredSequence {
    assert!(!candidates.is_empty(), "rank requires at least one candidate");
    candidates
        .iter()
        .min_by_key(|c| (std::cmp::Reverse(c.score), std::cmp::Reverse(c.finished), c.len, c.run_index))
        .expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scored(run_index: usize, score: usize, finished: bool, len: usize) -> ScoredSequence {
        ScoredSequence {
            run_index,
            score,
            finished,
            len,
            interacted_words: BTreeSet::new(),
        }
    }

    #[test]
    fn goal_tokenization_keeps_stop_words_and_numerals() {
        let terms = task_terms("Add contact Alice to Favorites");
        let expected: BTreeSet<String> = ["add", "contact", "alice", "to", "favorites"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(terms, expected);

        let terms = task_terms("Set alarm at 8:00am");
        let expected: BTreeSet<String> = ["set", "alarm", "at", "8", "00am"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(terms, expected);

        assert!(task_terms("").is_empty());
    }

    #[test]
    fn alice_example_prefers_favorites_sequence() {
        let terms = task_terms("Add contact Alice to Favorites");
        let u1: BTreeSet<String> = ["add", "to", "favorites", "alice"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let u2: BTreeSet<String> = ["search", "alice"].iter().map(|s| s.to_string()).collect();
        assert_eq!(score(&terms, &u1), 4);
        assert_eq!(score(&terms, &u2), 1);
        let candidates = vec![
            ScoredSequence { run_index: 0, score: score(&terms, &u1), finished: true, len: 3, interacted_words: u1 },
            ScoredSequence { run_index: 1, score: score(&terms, &u2), finished: true, len: 3, interacted_words: u2 },
        ];
        assert_eq!(rank(&candidates).run_index, 0);
    }

    #[test]
    fn single_candidate_wins() {
        let candidates = vec![scored(0, 0, false, 9)];
        assert_eq!(rank(&candidates).run_index, 0);
    }

    #[test]
    fn ties_break_finished_then_shorter_then_index() {
        let candidates = vec![scored(0, 3, true, 8), scored(1, 3, true, 5)];
        assert_eq!(rank(&candidates).run_index, 1);

        let candidates = vec![scored(0, 3, false, 5), scored(1, 3, true, 8)];
        assert_eq!(rank(&candidates).run_index, 1);

        let candidates = vec![scored(0, 3, true, 5), scored(1, 3, true, 5)];
        assert_eq!(rank(&candidates).run_index, 0);
    }
}
