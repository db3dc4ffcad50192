//! Acceptance gate: eight end-to-end criteria, one pass line each.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read as _, Write as _};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use agent_testgen::agent::{run_task, save_memory, PersistentMemory, RunResult, StopReason};
use agent_testgen::app_model::{
    action_space, load_app_model, Action, ActionKind, AppModel, Bounds, Screenshot, UiElement,
    UiState,
};
use agent_testgen::gateway::{
    parse_response, serialize_response, BackendConfig, BackendKind, CompletionBackend, Gateway,
    GatewayError, OracleEntry, PromptEnvelope, RemoteBackend, Role, RoleResponse, ScriptedBackend,
    Verdict, API_KEY_ENV,
};
use agent_testgen::metrics::{aggregate, judge, TaskMetadata};
use agent_testgen::ranker::{rank, score, ScoredSequence};
use agent_testgen::script::{emit_script, replay, GoalCheck, LocatorStrategy, ReplayStatus};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn clock_gateway(vision: bool) -> Gateway {
    let backend = ScriptedBackend::load(fixture("clock_oracle.toml")).expect("oracle loads");
    Gateway::new(Arc::new(backend), BackendConfig::default()).with_vision(vision)
}

fn run_clock(vision: bool) -> (AppModel, RunResult) {
    let model = load_app_model(fixture("clock_app.toml")).expect("model loads");
    let mut pm = PersistentMemory::new();
    let run = run_task(
        "Set Alarm at 8:00am",
        &model,
        &mut pm,
        false,
        &clock_gateway(vision),
        20,
    );
    (model, run)
}

/// Criterion 1: the bundled clock fixture reproduces the dual-channel
/// behavior — with vision a 4-action run ends on the alarm list; without
/// vision the verifier stops one screen early on the confirmation dialog.
#[test]
fn criterion_1_end_to_end_vision_ablation() {
    let (_, with_vision) = run_clock(true);
    assert_eq!(with_vision.actions.len(), 4);
    assert!(with_vision.finished);
    assert_eq!(with_vision.stop_reason, StopReason::VerifierDone);
    assert_eq!(
        with_vision.trajectory.last().unwrap().0.screen_id,
        "alarm_list"
    );

    let (_, without_vision) = run_clock(false);
    assert_eq!(without_vision.actions.len(), 3);
    assert!(without_vision.finished, "text-only verifier stops early");
    assert_eq!(
        without_vision.trajectory.last().unwrap().0.screen_id,
        "confirm"
    );

    // Determinism: a re-run yields byte-identical action sequences.
    let (_, again) = run_clock(true);
    assert_eq!(again.action_sequence(), with_vision.action_sequence());
    println!("acceptance 1: PASS — vision run 4 actions to alarm_list; text-only stops at confirm");
}

#[derive(Debug, Deserialize)]
struct PairsFile {
    pairs: Vec<Pair>,
}

#[derive(Debug, Deserialize)]
struct Pair {
    app_name: String,
    finished: bool,
    action_space: String,
    generated: Vec<Action>,
    truth: Vec<Action>,
}

/// Criterion 2: the bundled 150-pair fixture reproduces the published
/// headline percentages at the formula level.
#[test]
fn criterion_2_metric_formulas_on_150_pairs() {
    let text = std::fs::read_to_string(fixture("metrics_150.toml")).unwrap();
    let file: PairsFile = toml::from_str(&text).unwrap();
    assert_eq!(file.pairs.len(), 150);
    let judgements: Vec<_> = file
        .pairs
        .iter()
        .map(|p| judge(&p.generated, &p.truth, p.finished))
        .collect();
    let metadata: Vec<_> = file
        .pairs
        .iter()
        .map(|p| TaskMetadata {
            app_name: p.app_name.clone(),
            task_length: p.truth.len(),
            action_space: p.action_space.parse().unwrap(),
        })
        .collect();
    let report = aggregate(&judgements, &metadata);
    assert!((report.exact_pct - 87.3).abs() < 0.05, "{}", report.exact_pct);
    assert!(
        (report.completion_pct - 88.0).abs() < 0.05,
        "{}",
        report.completion_pct
    );
    assert!(
        (report.coverage_pct - 88.0).abs() < 0.05,
        "{}",
        report.coverage_pct
    );
    println!(
        "acceptance 2: PASS — exact {:.1}%, completion {:.1}%, coverage {:.1}%",
        report.exact_pct, report.completion_pct, report.coverage_pct
    );
}

fn symbol(i: usize) -> Action {
    Action::touch(["a", "b", "c", "d"][i])
}

fn all_sequences(max_len: usize) -> Vec<Vec<Action>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for s in 0..4 {
                let mut longer = seq.clone();
                longer.push(symbol(s));
                next.push(longer);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Subsequence check by exhaustive position-subset enumeration.
fn oracle_subsequence(needle: &[Action], haystack: &[Action]) -> bool {
    let n = haystack.len();
    if needle.len() > n {
        return false;
    }
    (0u32..1 << n).any(|mask| {
        let picked: Vec<_> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| haystack[i].clone())
            .collect();
        picked == needle
    })
}

fn oracle_prefix(generated: &[Action], truth: &[Action]) -> usize {
    let mut lcp = 0;
    while lcp < generated.len() && lcp < truth.len() && generated[lcp] == truth[lcp] {
        lcp += 1;
    }
    lcp
}

fn random_sequence(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Action> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| symbol(rng.gen_range(0..4))).collect()
}

/// Criterion 3: judge() agrees with the brute-force subsequence and prefix
/// oracles exhaustively (all 4-symbol sequences up to length 5), and the
/// implication chain holds on 10,000 randomized pairs up to length 8.
#[test]
fn criterion_3_metric_oracle_equivalence() {
    let sequences = all_sequences(5);
    let mut checked = 0usize;
    for truth in sequences.iter().filter(|t| !t.is_empty()) {
        for generated in &sequences {
            let j = judge(generated, truth, true);
            assert_eq!(j.covered, oracle_subsequence(truth, generated));
            let lcp = oracle_prefix(generated, truth);
            assert_eq!(j.prefix_fraction, lcp as f64 / truth.len() as f64);
            assert_eq!(j.exact, generated == truth);
            checked += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let truth = {
            let mut t = random_sequence(&mut rng, 8);
            if t.is_empty() {
                t.push(symbol(0));
            }
            t
        };
        let generated = random_sequence(&mut rng, 8);
        let finished = rng.gen_bool(0.5);
        let j = judge(&generated, &truth, finished);
        assert!(!j.exact || j.completed, "exact implies completed");
        assert!(!j.completed || j.covered, "completed implies covered");
        if oracle_prefix(&generated, &truth) == 0 {
            assert_eq!(j.precision, 0.0, "zero prefix implies zero precision");
        }
        assert_eq!(j.premature, finished && !j.covered);
    }
    println!(
        "acceptance 3: PASS — {checked} exhaustive pairs + 10000 randomized pairs agree with oracles"
    );
}

fn word_pool() -> Vec<String> {
    "add book favorite alice store cart checkout open tap note alarm time set list save delete edit share search filter"
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn random_word_set(rng: &mut ChaCha8Rng, pool: &[String]) -> BTreeSet<String> {
    pool.iter()
        .filter(|_| rng.gen_bool(0.4))
        .cloned()
        .collect()
}

/// Criterion 4: keyword score equals brute-force indicator summation, the
/// bookstore example ranks the favorites-interacting run first, and the
/// winner is stable under candidate-order permutation.
#[test]
fn criterion_4_ranking() {
    let pool = word_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1_000 {
        let terms = random_word_set(&mut rng, &pool);
        let interacted = random_word_set(&mut rng, &pool);
        let brute: usize = terms
            .iter()
            .map(|w| usize::from(interacted.contains(w)))
            .sum();
        assert_eq!(score(&terms, &interacted), brute);
    }

    // "Add to Favorites" example: both runs touch the book title, only one
    // reaches the favorites control.
    let terms = agent_testgen::ranker::task_terms("Add The Great Gatsby to Favorites");
    let favorites: BTreeSet<String> =
        ["add", "the", "great", "gatsby", "favorites"].iter().map(|s| s.to_string()).collect();
    let cart: BTreeSet<String> =
        ["add", "the", "great", "gatsby", "cart"].iter().map(|s| s.to_string()).collect();
    let candidates = vec![
        ScoredSequence {
            run_index: 0,
            score: score(&terms, &cart),
            finished: true,
            len: 4,
            interacted_words: cart,
        },
        ScoredSequence {
            run_index: 1,
            score: score(&terms, &favorites),
            finished: true,
            len: 4,
            interacted_words: favorites.clone(),
        },
    ];
    assert_eq!(rank(&candidates).interacted_words, favorites);

    // Permutation invariance over candidates with pairwise-distinct keys.
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keyed: BTreeMap<(usize, bool, usize), BTreeSet<String>> = BTreeMap::new();
        for _ in 0..8 {
            let words = random_word_set(&mut rng, &pool);
            let terms = random_word_set(&mut rng, &pool);
            keyed.insert(
                (score(&terms, &words), rng.gen_bool(0.5), rng.gen_range(1..9)),
                words,
            );
        }
        let mut candidates: Vec<ScoredSequence> = keyed
            .iter()
            .map(|((s, f, l), words)| ScoredSequence {
                run_index: 0,
                score: *s,
                finished: *f,
                len: *l,
                interacted_words: words.clone(),
            })
            .collect();
        for (i, c) in candidates.iter_mut().enumerate() {
            c.run_index = i;
        }
        let first_winner = rank(&candidates).interacted_words.clone();
        candidates.shuffle(&mut rng);
        for (i, c) in candidates.iter_mut().enumerate() {
            c.run_index = i;
        }
        assert_eq!(rank(&candidates).interacted_words, first_winner);
    }
    println!("acceptance 4: PASS — brute-force score, bookstore example, permutation-stable winner");
}

fn random_oracle(rng: &mut ChaCha8Rng) -> Vec<OracleEntry> {
    let selector_replies = [
        r#"{"chosen_action": 0, "action_description": "tap \"OK\"", "reason": "r"}"#.to_string(),
        r#"{"chosen_action": 1, "action_description": "tap thing", "reason": "r"}"#.to_string(),
        r#"{"chosen_action": 99, "action_description": "out of range", "reason": "r"}"#.to_string(),
        "garbage, no object".to_string(),
        r#"{"chosen_action": "one"}"#.to_string(),
    ];
    let verifier_replies = [
        r#"{"screen_description": "s", "task_done": false}"#.to_string(),
        r#"{"screen_description": "s", "task_done": true}"#.to_string(),
        r#"{"task_done": "maybe"}"#.to_string(),
    ];
    let mut entries = Vec::new();
    for _ in 0..rng.gen_range(0..8) {
        let reply = selector_replies[rng.gen_range(0..selector_replies.len())].clone();
        let mut entry = OracleEntry::ordinal(Role::Selector, reply);
        if rng.gen_bool(0.3) {
            entry = entry.repeatable();
        }
        entries.push(entry);
    }
    for _ in 0..rng.gen_range(0..8) {
        let mut entry = OracleEntry::ordinal(Role::Observer, r#"{"observation": "o"}"#);
        if rng.gen_bool(0.5) {
            entry = entry.repeatable();
        }
        entries.push(entry);
    }
    for _ in 0..rng.gen_range(0..8) {
        let reply = verifier_replies[rng.gen_range(0..verifier_replies.len())].clone();
        let mut entry = OracleEntry::ordinal(Role::Verifier, reply);
        if rng.gen_bool(0.3) {
            entry = entry.repeatable();
        }
        entries.push(entry);
    }
    let verdict = if rng.gen_bool(0.5) { "success" } else { "failed" };
    entries.push(OracleEntry::ordinal(
        Role::Reflector,
        format!(
            r#"{{"verdict": "{verdict}", "rules": ["rule one"], "optimized_steps": ["step"]}}"#
        ),
    ));
    entries
}

/// Criterion 5: loop and phase invariants under 1,000 adversarial oracles.
#[test]
fn criterion_5_loop_and_phase_invariants() {
    let model = load_app_model(fixture("clock_app.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let memory_file = dir.path().join("memory.toml");

    let mut seeded = PersistentMemory::new();
    seeded.merge_reflection(
        "other_app",
        "Other goal",
        Verdict::Success,
        &["keep me".into()],
        &["step".into()],
    );

    for i in 0..1_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let entries = random_oracle(&mut rng);
        let max_actions = rng.gen_range(1..=5);

        // Evaluation phase: the memory file stays byte-identical.
        save_memory(&memory_file, &seeded).unwrap();
        let before = std::fs::read(&memory_file).unwrap();
        let mut pm = seeded.clone();
        let gateway = Gateway::scripted(entries.clone());
        let run = run_task("Set Alarm at 8:00am", &model, &mut pm, false, &gateway, max_actions);
        assert!(run.actions.len() <= max_actions, "run {i} exceeded cap");
        assert_eq!(pm, seeded, "run {i} mutated memory in evaluation mode");
        save_memory(&memory_file, &pm).unwrap();
        assert_eq!(std::fs::read(&memory_file).unwrap(), before, "run {i}");

        // Training phase: only the executed task's entry may change.
        let mut trained = seeded.clone();
        let gateway = Gateway::scripted(entries.clone());
        let run = run_task("Set Alarm at 8:00am", &model, &mut trained, true, &gateway, max_actions);
        assert!(run.actions.len() <= max_actions);
        assert_eq!(
            trained.entry("other_app", "Other goal"),
            seeded.entry("other_app", "Other goal"),
            "run {i} touched an unrelated memory entry"
        );

        // Repeated identical training is a fixed point.
        let once = trained.clone();
        let gateway = Gateway::scripted(entries.clone());
        run_task("Set Alarm at 8:00am", &model, &mut trained, true, &gateway, max_actions);
        assert_eq!(trained, once, "run {i} retraining was not idempotent");
    }
    println!("acceptance 5: PASS — 1000 adversarial runs hold cap, phase and idempotence invariants");
}

fn locator_matches(element: &UiElement, strategy: LocatorStrategy, value: &str) -> bool {
    match strategy {
        LocatorStrategy::ContentDesc => element.content_desc.as_deref() == Some(value),
        LocatorStrategy::Text => element.text.as_deref() == Some(value),
        LocatorStrategy::Id => element.element_id == value,
    }
}

/// Criterion 6: emit → replay round trip on every finished bundled run, and
/// removing the step-k target makes replay fail at exactly index k.
#[test]
fn criterion_6_script_round_trip() {
    let mut finished_runs = 0;
    for vision in [true, false] {
        let (model, run) = run_clock(vision);
        assert!(run.finished);
        finished_runs += 1;
        let states: Vec<UiState> = run.trajectory.iter().map(|(s, _)| s.clone()).collect();
        let script = emit_script(&run.action_sequence(), &states, "Set Alarm at 8:00am").unwrap();
        assert_eq!(script.steps.len(), run.actions.len());
        let report = replay(&script, &model, None);
        assert_eq!(report.status, ReplayStatus::Passed, "vision={vision}");

        if vision {
            let mut check = GoalCheck {
                final_screen: Some("alarm_list".into()),
                app_vars: BTreeMap::new(),
            };
            check.app_vars.insert("alarm_set".into(), "on".into());
            let report = replay(&script, &model, Some(&check));
            assert!(report.goal_reached);
        }

        // Deleting step k's target element fails replay at exactly k.
        for k in 0..script.steps.len() {
            let step = &script.steps[k];
            let (Some(strategy), Some(value)) = (step.locator_strategy, step.locator_value.clone())
            else {
                continue; // back/wait carry no locator
            };
            let mut broken = model.clone();
            for screen in &mut broken.screens {
                screen
                    .elements
                    .retain(|e| !locator_matches(e, strategy, &value));
            }
            let report = replay(&script, &broken, None);
            assert_eq!(report.status, ReplayStatus::Failed);
            assert_eq!(report.failed_step_index, Some(k), "vision={vision} step {k}");
        }
    }
    println!("acceptance 6: PASS — {finished_runs} finished runs round-trip; step-k deletion fails at k");
}

fn random_state(rng: &mut ChaCha8Rng, tag: usize) -> UiState {
    let n = rng.gen_range(0..4);
    let elements = (0..n)
        .map(|j| {
            let kinds = [
                ActionKind::Touch,
                ActionKind::LongTouch,
                ActionKind::Swipe,
                ActionKind::Input,
            ];
            UiElement {
                element_id: format!("e{tag}_{j}"),
                class_name: "android.widget.Button".into(),
                text: None,
                content_desc: None,
                bounds: Bounds::new(0, 0, 10, 10),
                supported_actions: kinds
                    .into_iter()
                    .filter(|_| rng.gen_bool(0.5))
                    .collect(),
                textual_visible: true,
                visual_visible: true,
                visual_props: BTreeMap::new(),
            }
        })
        .collect();
    UiState {
        screen_id: format!("s{tag}"),
        elements,
        app_vars: BTreeMap::new(),
        loading: rng.gen_bool(0.2),
    }
}

/// Criterion 7: the action-space product matches independent per-state
/// counting on the bundled fixture and is multiplicative under trace
/// concatenation.
#[test]
fn criterion_7_action_space() {
    let (_, run) = run_clock(true);
    let states: Vec<UiState> = run.trajectory.iter().map(|(s, _)| s.clone()).collect();
    let expected: u128 = states
        .iter()
        .map(|state| {
            let mut count: u128 = 1; // back is always available
            for element in &state.elements {
                count += element.supported_actions.len() as u128;
            }
            if state.loading {
                count += 1; // wait
            }
            count
        })
        .product();
    assert_eq!(action_space(&states), expected);

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let a: Vec<UiState> = (0..rng.gen_range(1..5)).map(|t| random_state(&mut rng, t)).collect();
        let b: Vec<UiState> = (0..rng.gen_range(1..5))
            .map(|t| random_state(&mut rng, 100 + t))
            .collect();
        let joined: Vec<UiState> = a.iter().chain(&b).cloned().collect();
        assert_eq!(action_space(&joined), action_space(&a) * action_space(&b));
    }
    println!("acceptance 7: PASS — product matches per-state counts and is concatenation-multiplicative");
}

struct GarbageBackend {
    calls: AtomicU32,
}

impl CompletionBackend for GarbageBackend {
    fn complete(&self, _: &PromptEnvelope, _: &BackendConfig) -> Result<String, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok("this is not a structured object".into())
    }
}

/// Minimal HTTP stub: answers each connection with the queued status code.
fn stub_server(statuses: Vec<u16>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for status in statuses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let body = loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf).into_owned();
                if let Some(split) = text.find("\r\n\r\n") {
                    let length = text
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                        .unwrap_or(0);
                    let body = &text[split + 4..];
                    if body.len() >= length {
                        break body.to_string();
                    }
                }
            };
            bodies.push(body);
            let payload = r#"{"content":"{\"observation\": \"ok\"}"}"#;
            let response = if status == 200 {
                format!(
                    "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    payload.len(),
                    payload
                )
            } else {
                format!("HTTP/1.1 {status} Server Error\r\nContent-Length: 0\r\nConnection: close\r\n\r\n")
            };
            stream.write_all(response.as_bytes()).unwrap();
        }
        bodies
    });
    (format!("http://{addr}"), handle)
}

fn remote_config(endpoint: &str) -> BackendConfig {
    BackendConfig {
        backend_kind: BackendKind::Remote,
        endpoint: Some(endpoint.to_string()),
        credential: Some("test-credential".into()),
        backoff_base_ms: 1,
        ..BackendConfig::default()
    }
}

/// Criterion 8: response round trip, exact re-ask count on malformed
/// replies, and the wire behavior of the remote backend (no image part with
/// vision disabled; retry then success on transient server errors).
#[test]
fn criterion_8_gateway() {
    let _ = API_KEY_ENV; // credential comes from the environment in production

    // Round trip over generated responses.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for i in 0..500 {
        let response = match i % 4 {
            0 => RoleResponse::Selector {
                chosen_action: rng.gen_range(0..50),
                action_description: format!("tap \"thing {i}\""),
                reason: "because".into(),
            },
            1 => RoleResponse::Observer {
                observation: format!("saw {i} things"),
            },
            2 => RoleResponse::Verifier {
                screen_description: "a screen".into(),
                task_done: rng.gen_bool(0.5),
            },
            _ => RoleResponse::Reflector {
                verdict: if rng.gen_bool(0.5) { Verdict::Success } else { Verdict::Failed },
                rules: vec![format!("rule {i}")],
                optimized_steps: vec!["step".into()],
            },
        };
        let role = response.role();
        assert_eq!(parse_response(role, &serialize_response(&response)).unwrap(), response);
    }

    // Malformed replies: exactly parse_reasks re-asks, then abort.
    let backend = Arc::new(GarbageBackend { calls: AtomicU32::new(0) });
    let mut config = BackendConfig::default();
    config.parse_reasks = 3;
    let gateway = Gateway::new(backend.clone(), config);
    let envelope = PromptEnvelope {
        role: Role::Observer,
        text: "observe".into(),
        image: None,
    };
    let err = gateway.ask_envelope(&envelope).unwrap_err();
    assert!(matches!(err, GatewayError::ParseFailure { attempts: 4, .. }), "{err}");
    assert_eq!(backend.calls.load(Ordering::SeqCst), 4);

    // Vision disabled: the request body carries no image part.
    let (endpoint, handle) = stub_server(vec![200]);
    let remote = RemoteBackend::new();
    let envelope = PromptEnvelope {
        role: Role::Verifier,
        text: "verify without vision".into(),
        image: None,
    };
    remote.complete(&envelope, &remote_config(&endpoint)).unwrap();
    let bodies = handle.join().unwrap();
    let body: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    let parts = body["messages"][0]["content"].as_array().unwrap();
    assert_eq!(parts.len(), 1);
    assert!(parts.iter().all(|p| p["type"] == "text"));

    // Transient 5xx responses are retried with backoff, then succeed.
    let (endpoint, handle) = stub_server(vec![500, 500, 200]);
    let remote = RemoteBackend::new();
    let envelope = PromptEnvelope {
        role: Role::Verifier,
        text: "verify".into(),
        image: Some(Screenshot {
            media_type: agent_testgen::app_model::VISUAL_MEDIA_TYPE.into(),
            bytes: b"{}".to_vec(),
        }),
    };
    let reply = remote.complete(&envelope, &remote_config(&endpoint)).unwrap();
    assert_eq!(reply, r#"{"observation": "ok"}"#);
    assert_eq!(remote.retries_observed(), 2);
    let bodies = handle.join().unwrap();
    assert_eq!(bodies.len(), 3);
    println!("acceptance 8: PASS — round trip, exact re-ask count, wire assertions against stub server");
}
