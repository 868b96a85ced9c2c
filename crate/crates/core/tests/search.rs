//! End-to-end behaviour of the search loop with offline providers.

use std::sync::atomic::{AtomicUsize, Ordering};

use props_core::envs::EnvName;
use props_core::llm::{
    Completion, LlmError, Provider, ProviderConfig, ReplayProvider, ScriptedProvider, ScriptedStrategy, Transcript,
};
use props_core::numopt::{Adam, Function, ObjectiveSpec};
use props_core::policies::PolicyKind;
use props_core::prompt::{parse_history_line, PromptFacts};
use props_core::search::{
    aggregate, evaluate_params, read_record, run_numopt, run_policy_search, run_search_with, write_record, Aggregate,
    RunRecord, SearchConfig, SearchError, SearchMode, StepSource,
};

fn scripted(strategy: ScriptedStrategy, seed: u64) -> ProviderConfig {
    ProviderConfig::scripted(strategy, seed)
}

fn small_cartpole(seed: u64) -> SearchConfig {
    let mut c = SearchConfig::policy(
        EnvName::CartPole,
        PolicyKind::Linear,
        SearchMode::Props,
        scripted(ScriptedStrategy::MuPlusLambda, seed),
        seed,
    );
    c.max_iters = 30;
    c.episodes_per_eval = 3;
    c
}

fn history_lines(prompt: &str) -> Vec<(Vec<f64>, f64)> {
    prompt
        .lines()
        .filter(|l| l.starts_with("params[0]:") && l.contains("f(params):"))
        .map(|l| parse_history_line(l).unwrap())
        .collect()
}

/// Answers from a fixed list, cycling.
struct Canned {
    answers: Vec<String>,
    next: AtomicUsize,
}

impl Provider for Canned {
    fn call(&self, _prompt: &str) -> Result<Completion, LlmError> {
        let i = self.next.fetch_add(1, Ordering::SeqCst);
        Ok(Completion {
            text: self.answers[i % self.answers.len()].clone(),
            attempt: 1,
        })
    }
}

#[test]
fn defaults_follow_protocol_schedule() {
    let c = SearchConfig::policy(EnvName::CartPole, PolicyKind::Linear, SearchMode::Props, scripted(ScriptedStrategy::MuPlusLambda, 0), 0);
    assert_eq!((c.max_iters, c.episodes_per_eval, c.n_seed_examples, c.history_maxlen), (400, 20, 5, None));
    let n = SearchConfig::numopt("levy", 2, scripted(ScriptedStrategy::GaussianHillClimb, 0), 0);
    assert_eq!(n.max_iters, 100);
    assert_eq!(n.mode, SearchMode::Numopt);
}

#[test]
fn replay_run_is_bit_identical() {
    let cfg = small_cartpole(4);
    let transcript = Transcript::new();
    let provider = ScriptedProvider::new(ScriptedStrategy::MuPlusLambda, 4);
    let original = run_search_with(&cfg, &provider, &transcript).unwrap();
    assert_eq!(transcript.len(), 30);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    std::fs::write(&path, transcript.to_jsonl()).unwrap();
    let mut replay_cfg = cfg.clone();
    replay_cfg.provider = ProviderConfig::replay(&path);
    let a = run_policy_search(&replay_cfg).unwrap();
    let b = run_policy_search(&replay_cfg).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
    assert_eq!(a.steps, original.steps);
    assert_eq!(a.summary.best_f, original.summary.best_f);
}

#[test]
fn best_so_far_is_monotone_and_episode_budget_matches() {
    let r = run_policy_search(&small_cartpole(1)).unwrap();
    let series = r.best_so_far();
    assert!(series.windows(2).all(|w| w[1] >= w[0]));
    let best = r.steps.iter().map(|s| s.f).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(r.summary.best_f, Some(best));
    assert_eq!(r.summary.iterations_completed, 30);
    assert_eq!(r.summary.episodes, (5 + 30) * 3);
    assert_eq!(r.steps.iter().filter(|s| s.source == StepSource::SeedExample).count(), 5);
    assert!(r.steps.iter().enumerate().all(|(i, s)| s.index == i));
}

#[test]
fn every_recorded_f_replays_exactly() {
    for env in [EnvName::FrozenLake, EnvName::CartPole, EnvName::MountainCarC] {
        let mut cfg = small_cartpole(7);
        cfg.target = props_core::search::Target::Env { env, policy: props_core::policies::default_kind(&env.spec()) };
        cfg.max_iters = 10;
        let r = run_policy_search(&cfg).unwrap();
        for s in &r.steps {
            let f = evaluate_params(&r.header.config, &r.header, &s.params, s.eval_seed.unwrap()).unwrap();
            assert_eq!(f, s.f, "{env} step {}", s.index);
        }
    }
}

#[test]
fn history_maxlen_bounds_prompt_history() {
    for maxlen in [Some(1), Some(10), None] {
        let mut cfg = small_cartpole(2);
        cfg.history_maxlen = maxlen;
        let r = run_policy_search(&cfg).unwrap();
        for (k, s) in r.steps.iter().enumerate() {
            let Some(prompt) = &s.prompt else { continue };
            let lines = history_lines(prompt);
            let expect = maxlen.map_or(k, |m| k.min(m));
            assert_eq!(lines.len(), expect, "maxlen {maxlen:?} step {k}");
            // Oldest-first eviction: the prompt shows exactly the most recent entries, in order.
            for (line, prev) in lines.iter().zip(&r.steps[k - expect..k]) {
                assert_eq!(line.1, (prev.f * 100.0).round() / 100.0);
            }
        }
    }
}

#[test]
fn parse_failures_reprompt_then_fall_back() {
    let mut cfg = small_cartpole(3);
    cfg.max_iters = 2;
    let garbage = Canned {
        answers: vec!["I think the answer is 42.".into()],
        next: AtomicUsize::new(0),
    };
    let t = Transcript::new();
    let r = run_search_with(&cfg, &garbage, &t).unwrap();
    assert_eq!(t.len(), 2 * 4);
    let prompted: Vec<_> = r.steps.iter().filter(|s| s.iteration > 0).collect();
    assert_eq!(prompted.len(), 2);
    for s in prompted {
        assert_eq!(s.source, StepSource::Fallback);
        assert_eq!(s.parse_retries, 3);
        assert_eq!(s.rejected.len(), 4);
    }

    let params: Vec<String> = (0..10).map(|i| format!("params[{i}]: 0.5")).collect();
    let flaky = Canned {
        answers: vec!["params[0]: oops".into(), params.join("; ") + "\nsteady"],
        next: AtomicUsize::new(0),
    };
    let r = run_search_with(&cfg, &flaky, &Transcript::new()).unwrap();
    let s = r.steps.iter().find(|s| s.iteration == 1).unwrap();
    assert_eq!((s.source, s.parse_retries, s.explanation.as_str()), (StepSource::Model, 1, "steady"));
    assert_eq!(s.params.0, vec![0.5; 10]);
}

#[test]
fn out_of_range_values_are_kept_and_flagged() {
    let mut cfg = small_cartpole(3);
    cfg.max_iters = 1;
    let mut p: Vec<String> = (0..10).map(|i| format!("params[{i}]: 1.0")).collect();
    p[0] = "params[0]: -10.7".into();
    let r = run_search_with(&cfg, &Canned { answers: vec![p.join("; ")], next: AtomicUsize::new(0) }, &Transcript::new()).unwrap();
    let s = r.steps.last().unwrap();
    assert!(s.out_of_range);
    assert_eq!(s.params.0[0], -10.7);
}

#[test]
fn provider_failure_keeps_partial_record() {
    let mut cfg = small_cartpole(5);
    cfg.max_iters = 10;
    let t = Transcript::new();
    run_search_with(&cfg, &ScriptedProvider::new(ScriptedStrategy::GaussianHillClimb, 5), &t).unwrap();
    let mut short = t.snapshot();
    short.truncate(4);
    let err = run_search_with(&cfg, &ReplayProvider::from_exchanges(short), &Transcript::new()).unwrap_err();
    match &err {
        SearchError::ProviderFailure { error: LlmError::ReplayExhausted(4), partial } => {
            assert_eq!(partial.steps.len(), 5 + 4);
            assert!(!partial.is_complete());
        }
        e => panic!("{e:?}"),
    }
    assert!(err.partial().is_some());
}

#[test]
fn tabular_search_on_cliff_walking() {
    let mut cfg = SearchConfig::policy(
        EnvName::CliffWalking,
        PolicyKind::Tabular,
        SearchMode::PropsPlusHints,
        scripted(ScriptedStrategy::GaussianHillClimb, 1),
        1,
    );
    cfg.max_iters = 20;
    cfg.episodes_per_eval = 1;
    let r = run_policy_search(&cfg).unwrap();
    let prompt = r.steps.last().unwrap().prompt.as_ref().unwrap();
    assert!(prompt.contains("Important hints:"));
    for s in &r.steps {
        assert!(s.params.0.iter().all(|v| [0.0, 1.0, 2.0, 3.0].contains(v)));
        assert!(!s.out_of_range);
    }
}

#[test]
fn mode_target_mismatch_is_rejected() {
    let mut cfg = small_cartpole(0);
    cfg.mode = SearchMode::Numopt;
    assert!(matches!(run_policy_search(&cfg), Err(SearchError::InvalidConfig(_))));
    let mut cfg = small_cartpole(0);
    cfg.mode = SearchMode::PropsPlusHints;
    assert!(matches!(run_policy_search(&cfg), Err(SearchError::InvalidConfig(m)) if m.contains("hints")));
    let mut cfg = small_cartpole(0);
    cfg.history_maxlen = Some(0);
    cfg.episodes_per_eval = 0;
    match run_policy_search(&cfg) {
        Err(SearchError::InvalidConfig(m)) => assert!(m.contains("history_maxlen") && m.contains("episodes_per_eval")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn numopt_warmup_and_final_iteration() {
    let cfg = SearchConfig::numopt("levy", 3, scripted(ScriptedStrategy::GaussianHillClimb, 2), 2);
    let r = run_numopt(&cfg).unwrap();
    assert_eq!(r.steps.len(), 100);
    assert_eq!(r.summary.iterations_completed, 100);
    assert_eq!(r.summary.episodes, 0);
    assert!(r.steps[..2].iter().all(|s| s.source == StepSource::Warmup && s.prompt.is_none()));

    // Oracle: two Adam updates from the recorded initial point.
    let spec = ObjectiveSpec::new(Function::by_name("levy").unwrap(), r.header.objective_shift.clone().unwrap());
    let x0 = r.header.initial_point.clone().unwrap();
    let mut adam = Adam::new(3, 0.5);
    let x1 = adam.step(&x0, &spec.grad(&x0).unwrap());
    let x2 = adam.step(&x1, &spec.grad(&x1).unwrap());
    assert_eq!(r.steps[0].params.0, x1);
    assert_eq!(r.steps[1].params.0, x2);
    assert_eq!(r.steps[0].f, spec.eval(&x1).unwrap());

    let first = r.steps[2].prompt.as_ref().unwrap();
    assert!(first.starts_with("You are an optimization assistant"));
    assert!(first.contains("iteration 3 out of 100"));
    let last = PromptFacts::extract(r.steps[99].prompt.as_ref().unwrap()).unwrap();
    assert_eq!((last.iteration, last.max_steps), (100, 100));
    assert!(last.minimize);
    let series = r.best_so_far();
    assert!(series.windows(2).all(|w| w[1] <= w[0]));
    let min = r.steps.iter().map(|s| s.f).fold(f64::INFINITY, f64::min);
    assert_eq!(r.summary.best_f, Some(min));
}

#[test]
fn hill_climb_on_salomon_from_near_optimum() {
    for seed in 0..10 {
        let mut cfg = SearchConfig::numopt("salomon", 2, scripted(ScriptedStrategy::GaussianHillClimb, seed), seed);
        cfg.max_iters = 2;
        let shift = run_numopt(&cfg).unwrap().header.objective_shift.unwrap();
        cfg.max_iters = 100;
        cfg.step_size = Some(0.1);
        cfg.initial_point = Some(shift.iter().map(|o| o + 0.05).collect());
        let r = run_numopt(&cfg).unwrap();
        assert!(r.summary.best_f.unwrap() <= 0.3, "seed {seed}: {:?}", r.summary.best_f);
    }
}

#[test]
fn mu_plus_lambda_solves_cartpole() {
    use rayon::prelude::*;
    let best: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|s| {
            let cfg = SearchConfig::policy(EnvName::CartPole, PolicyKind::Linear, SearchMode::Props, scripted(ScriptedStrategy::MuPlusLambda, s), s);
            run_policy_search(&cfg).unwrap().summary.best_f.unwrap()
        })
        .collect();
    let hits = best.iter().filter(|b| **b >= 400.0).count();
    assert!(hits >= 8, "{best:?}");
}

#[test]
fn aggregate_statistics() {
    let r = run_policy_search(&{
        let mut c = small_cartpole(0);
        c.max_iters = 1;
        c
    })
    .unwrap();
    let with = |f: f64| {
        let mut x: RunRecord = r.clone();
        x.summary.best_f = Some(f);
        x
    };
    assert_eq!(aggregate(&[with(478.27)]).unwrap(), Aggregate { n: 1, mean: 478.27, std: 0.0, stderr: 0.0 });
    let a = aggregate(&[with(0.0), with(2.0)]).unwrap();
    assert_eq!((a.mean, a.std), (1.0, 2f64.sqrt()));
    assert_eq!(a.stderr, 1.0);
    let ten: Vec<RunRecord> = (0..10).map(|_| with(3.5)).collect();
    assert_eq!(aggregate(&ten).unwrap().std, 0.0);
    assert!(matches!(aggregate(&[]), Err(SearchError::EmptyInput)));
}

#[test]
fn records_round_trip_through_jsonl() {
    let r = run_policy_search(&small_cartpole(9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(format!("{}.jsonl", props_core::search::record_stem(r.config())));
    assert!(path.ends_with("cart-pole-props-9.jsonl"));
    write_record(&r, &path).unwrap();
    assert!(props_core::search::summary_path(&path).exists());
    assert_eq!(read_record(&path).unwrap(), r);

    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), r.steps.len() + 2);
    let truncated = lines[..lines.len() - 1].join("\n");
    std::fs::write(&path, truncated).unwrap();
    assert!(matches!(read_record(&path), Err(SearchError::RecordCorrupt(m)) if m.contains("summary")));
    std::fs::write(&path, "{\"step\": 1}\n").unwrap();
    assert!(matches!(read_record(&path), Err(SearchError::RecordCorrupt(_))));
}
