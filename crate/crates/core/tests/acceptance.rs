//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p props-core --test acceptance`. Criterion 11 talks to a live
//! OpenAI-compatible endpoint and only runs when `PROPS_LIVE_SMOKE=1` and
//! `PROPS_API_KEY`, `PROPS_BASE_URL`, `PROPS_MODEL` are all set; otherwise it prints SKIP.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use props_core::envs::constants::*;
use props_core::envs::{make, rollout, Action, CliffWalking, EnvName, FrozenLake};
use props_core::llm::{
    build_provider, load_exchanges, scripted_respond, ProviderConfig, ScriptedStrategy, Transcript,
};
use props_core::numopt::bench::{bench, BenchConfig, Baseline};
use props_core::numopt::{Function, ObjectiveSpec};
use props_core::policies::{ParamVector, PolicyKind, TabularPolicy};
use props_core::prompt::{
    format_history, parse_history_line, parse_response, render, HistoryBuffer, HistoryEntry, PromptContext,
};
use props_core::reprext::{dmp_rollout, lift, make_projection, DmpParams};
use props_core::runner;
use props_core::search::{
    run_policy_search, run_search_with, write_record, SearchConfig, SearchMode, StepSource,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. Benchmark minima

fn minima() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for name in Function::NAMES {
        let function = Function::by_name(name).unwrap();
        let offset = if name == "levy" { 1.0 } else { 0.0 };
        for dim in [2, 4, 8, 16] {
            for k in 0..20u64 {
                let spec = ObjectiveSpec::shifted(function.clone(), dim, 1000 * dim as u64 + k);
                let x: Vec<f64> = spec.shift.iter().map(|o| o + offset).collect();
                let v = spec.eval(&x).map_err(|e| e.to_string())?;
                ensure(v.abs() <= 1e-9, || format!("{name} D={dim} shift {k}: f = {v:e}"))?;
                worst = worst.max(v.abs());
                count += 1;
            }
        }
    }
    Ok(format!("{count} minimizers, max |f| = {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 2. Gradients against central differences

fn gradients() -> Outcome {
    let functions = [
        Function::ackley(),
        Function::Rastrigin,
        Function::Levy,
        Function::Weierstrass { a: 0.5, b: 3.0, k_max: 3 },
        Function::Salomon,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for function in &functions {
        for i in 0..100 {
            let dim = rng.random_range(1..=8);
            // Stay away from the origin, where the radial terms are not differentiable.
            let z: Vec<f64> = loop {
                let z: Vec<f64> = (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect();
                if z.iter().map(|v| v * v).sum::<f64>().sqrt() > 0.1 {
                    break z;
                }
            };
            let g = function.gradient(&z).map_err(|e| format!("{}: {e}", function.name()))?;
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for j in 0..dim {
                let mut hi = z.clone();
                let mut lo = z.clone();
                hi[j] += h;
                lo[j] -= h;
                let fd = (function.value(&hi) - function.value(&lo)) / (2.0 * h);
                let rel = (g[j] - fd).abs() / scale;
                worst = worst.max(rel);
                ensure(rel <= 1e-4, || {
                    format!("{} point {i} coord {j}: analytic {} vs numeric {fd} (rel {rel:e})", function.name(), g[j])
                })?;
            }
        }
    }
    Ok(format!("500 points, max relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 3. Environment oracles

fn cliff_value_iteration() -> (Vec<f64>, Vec<usize>) {
    let n = CLIFF_ROWS * CLIFF_COLS;
    let mut v = vec![0.0; n];
    let q = |v: &[f64], s: usize, a: usize| {
        let (next, r, done) = CliffWalking::model(s, a);
        r + if done { 0.0 } else { v[next] }
    };
    for _ in 0..10_000 {
        let mut delta = 0.0f64;
        for s in 0..n {
            if s == CLIFF_GOAL || CliffWalking::is_cliff(s) {
                continue;
            }
            let best = (0..4).map(|a| q(&v, s, a)).fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta == 0.0 {
            break;
        }
    }
    let policy = (0..n)
        .map(|s| (0..4).fold(0, |b, a| if q(&v, s, a) > q(&v, s, b) { a } else { b }))
        .collect();
    (v, policy)
}

/// Game value for the player to move facing `n` sticks (misère: taking the last loses),
/// against an adversary choosing any legal reply.
fn nim_value(n: usize, memo: &mut HashMap<usize, (i32, usize)>) -> (i32, usize) {
    if let Some(&hit) = memo.get(&n) {
        return hit;
    }
    let mut best = (i32::MIN, 1);
    for take in 1..=NIM_MAX_TAKE.min(n) {
        let left = n - take;
        let value = if left == 0 {
            -1
        } else {
            (1..=NIM_MAX_TAKE.min(left))
                .map(|reply| if left == reply { 1 } else { nim_value(left - reply, memo).0 })
                .min()
                .unwrap()
        };
        if value > best.0 {
            best = (value, take);
        }
    }
    memo.insert(n, best);
    best
}

fn tiles() -> Vec<u8> {
    FROZEN_LAKE_MAP.iter().flat_map(|r| r.bytes()).collect()
}

/// Probability of reaching the goal from each cell within `horizon` moves, with each
/// move landing in the intended or one of the two perpendicular directions.
fn lake_success(policy: Option<&[usize]>, horizon: usize) -> (Vec<f64>, Vec<usize>) {
    let t = tiles();
    let n = t.len();
    let mut p: Vec<f64> = t.iter().map(|&c| if c == b'G' { 1.0 } else { 0.0 }).collect();
    let q = |p: &[f64], s: usize, a: usize| {
        [(a + 3) % 4, a, (a + 1) % 4].iter().map(|&d| p[FrozenLake::move_from(s, d)]).sum::<f64>() / 3.0
    };
    let mut greedy = vec![0; n];
    for _ in 0..horizon {
        let mut next = p.clone();
        for s in 0..n {
            if t[s] == b'G' || t[s] == b'H' {
                continue;
            }
            next[s] = match policy {
                Some(pi) => q(&p, s, pi[s]),
                None => {
                    let a = (0..4).fold(0, |b, a| if q(&p, s, a) > q(&p, s, b) + 1e-12 { a } else { b });
                    greedy[s] = a;
                    q(&p, s, a)
                }
            };
        }
        p = next;
    }
    (p, greedy)
}

fn env_oracles() -> Outcome {
    // (a) CliffWalking
    let (v, pi) = cliff_value_iteration();
    ensure(v[CLIFF_START] == -13.0, || format!("value iteration gives V(start) = {}", v[CLIFF_START]))?;
    let spec = EnvName::CliffWalking.spec();
    let policy = TabularPolicy::for_env(&spec, ParamVector(pi.iter().map(|&a| a as f64).collect())).unwrap();
    let mut env = make(EnvName::CliffWalking);
    let cliff = rollout(env.as_mut(), &policy, 0).map_err(|e| e.to_string())?.total_reward;
    ensure(cliff == -13.0, || format!("CliffWalking optimal return {cliff}"))?;

    // (b) Nim
    let mut memo = HashMap::new();
    ensure(nim_value(NIM_STICKS, &mut memo).0 == 1, || "starting position is not a win".into())?;
    let mut env = make(EnvName::Nim);
    let mut wins = 0;
    for seed in 0..1000u64 {
        let mut obs = env.reset(seed);
        let mut total = 0.0;
        loop {
            let n = obs.as_index().ok_or("nim observation is not one-hot")?;
            let take = nim_value(n, &mut memo).1;
            let r = env.step(&Action::Discrete(take - 1)).map_err(|e| e.to_string())?;
            total += r.reward;
            if r.terminated || r.truncated {
                break;
            }
            obs = r.observation;
        }
        if total == 1.0 {
            wins += 1;
        }
    }
    ensure(wins == 1000, || format!("Nim minimax policy won {wins}/1000"))?;

    // (c) FrozenLake
    let (_, greedy) = lake_success(None, 2000);
    let (exact, _) = lake_success(Some(&greedy), FROZEN_LAKE_MAX_STEPS);
    let start = tiles().iter().position(|&c| c == b'S').unwrap();
    let spec = EnvName::FrozenLake.spec();
    let policy = TabularPolicy::for_env(&spec, ParamVector(greedy.iter().map(|&a| a as f64).collect())).unwrap();
    let episodes = 20_000u64;
    let successes: u64 = (0..episodes)
        .into_par_iter()
        .map_init(
            || make(EnvName::FrozenLake),
            |env, seed| (rollout(env.as_mut(), &policy, seed).unwrap().total_reward == 1.0) as u64,
        )
        .sum();
    let empirical = successes as f64 / episodes as f64;
    ensure((empirical - exact[start]).abs() <= 0.02, || {
        format!("FrozenLake empirical {empirical:.4} vs exact {:.4}", exact[start])
    })?;

    // (d) Pong, under random and ball-tracking paddles
    let mut env = make(EnvName::Pong);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_return = f64::NEG_INFINITY;
    for seed in 0..400u64 {
        let mut obs = env.reset(seed);
        let mut total = 0.0;
        loop {
            let a = if seed % 2 == 0 {
                rng.random_range(0..3)
            } else {
                let v = obs.as_vector().unwrap();
                match v[2] - v[0] {
                    d if d > 0.02 => 0,
                    d if d < -0.02 => 1,
                    _ => 2,
                }
            };
            let r = env.step(&Action::Discrete(a)).map_err(|e| e.to_string())?;
            total += r.reward;
            if r.terminated || r.truncated {
                break;
            }
            obs = r.observation;
        }
        max_return = max_return.max(total);
    }
    ensure(max_return <= 3.0, || format!("Pong return {max_return} exceeds 3"))?;

    Ok(format!(
        "cliff {cliff}, nim {wins}/1000, lake {empirical:.4} vs {:.4}, pong max {max_return}",
        exact[start]
    ))
}

// ---------------------------------------------------------------------------
// 4. Protocol round trip and golden prompts

fn history_of(entries: &[(&[f64], f64)]) -> HistoryBuffer {
    let mut h = HistoryBuffer::unbounded();
    for (i, (p, f)) in entries.iter().enumerate() {
        h.push(HistoryEntry { params: ParamVector(p.to_vec()), f: *f, iteration: i + 1 }).unwrap();
    }
    h
}

fn protocol() -> Outcome {
    let q = |v: f64, d: usize| format!("{v:.d$}").parse::<f64>().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..1000 {
        let rank = rng.random_range(1..=20);
        let decimals = rng.random_range(0..=3);
        let mut h = HistoryBuffer::unbounded();
        let mut truth = Vec::new();
        for i in 0..rng.random_range(1..=10) {
            let p: Vec<f64> = (0..rank).map(|_| rng.random_range(-1e3..1e3)).collect();
            let f = rng.random_range(-1e5..1e5);
            truth.push((p.clone(), f));
            h.push(HistoryEntry { params: ParamVector(p), f, iteration: i + 1 }).unwrap();
        }
        let text = format_history(&h, decimals);
        let lines: Vec<&str> = text.lines().collect();
        ensure(lines.len() == truth.len(), || format!("history {trial}: {} lines", lines.len()))?;
        for (line, (p, f)) in lines.iter().zip(&truth) {
            let (pp, ff) = parse_history_line(line).map_err(|e| format!("history {trial}: {e}"))?;
            let want: Vec<f64> = p.iter().map(|v| q(*v, decimals)).collect();
            ensure(pp == want && ff == q(*f, 2), || format!("history {trial}: `{line}` did not round trip"))?;
        }
    }

    let mut scripted = 0;
    for env in EnvName::ALL {
        let spec = env.spec();
        let kind = props_core::policies::default_kind(&spec);
        let ctx = PromptContext::for_env(&spec, kind, false, false).unwrap();
        for seed in 0..20u64 {
            let mut h = HistoryBuffer::unbounded();
            for i in 0..(seed as usize % 7) {
                let p: Vec<f64> = if ctx.action_set.is_empty() {
                    (0..ctx.rank).map(|_| q(rng.random_range(-6.0..6.0), ctx.decimals)).collect()
                } else {
                    (0..ctx.rank).map(|_| rng.random_range(0..ctx.action_set.len()) as f64).collect()
                };
                h.push(HistoryEntry { params: ParamVector(p), f: rng.random_range(-50.0..50.0), iteration: i + 1 })
                    .unwrap();
            }
            let prompt = render(&ctx, &h, h.len() + 1).map_err(|e| e.to_string())?;
            for strategy in [ScriptedStrategy::GaussianHillClimb, ScriptedStrategy::MuPlusLambda] {
                let out = scripted_respond(strategy, seed, &prompt).map_err(|e| e.to_string())?;
                parse_response(&out, &ctx).map_err(|e| format!("{env} seed {seed}: {e}\n{out}"))?;
                scripted += 1;
            }
        }
    }

    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let linear = {
        let ctx = PromptContext::for_env(&EnvName::MountainCarC.spec(), PolicyKind::Linear, false, false).unwrap();
        render(&ctx, &history_of(&[(&[-2.1, -1.6, -2.6], -116.18), (&[1.0, 0.0, 3.5], -0.42)]), 3).unwrap()
    };
    let tabular = {
        let ctx = PromptContext::for_env(&EnvName::CliffWalking.spec(), PolicyKind::Tabular, false, false).unwrap();
        render(&ctx, &history_of(&[(&[1.0; 48], -100.0)]), 2).unwrap()
    };
    let plus = {
        let ctx = PromptContext::for_env(&EnvName::CartPole.spec(), PolicyKind::Linear, true, false).unwrap();
        render(&ctx, &HistoryBuffer::unbounded(), 1).unwrap()
    };
    ensure(plus.contains("a pole is attached by an un-actuated joint"), || "CartPole description missing".into())?;
    for (file, actual) in [
        ("props-linear-rank3.txt", &linear),
        ("props-tabular-cliff-walking.txt", &tabular),
        ("props-plus-cart-pole.txt", &plus),
    ] {
        let expected = std::fs::read(dir.join(file)).map_err(|e| format!("{file}: {e}"))?;
        ensure(expected == actual.as_bytes(), || format!("{file} differs from the rendered prompt"))?;
    }
    Ok(format!("1000 histories, {scripted} scripted responses, 3 golden prompts"))
}

// ---------------------------------------------------------------------------
// 5. Offline end-to-end on CartPole

fn cartpole_end_to_end() -> Outcome {
    let best: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = SearchConfig::policy(
                EnvName::CartPole,
                PolicyKind::Linear,
                SearchMode::Props,
                ProviderConfig::scripted(ScriptedStrategy::MuPlusLambda, seed),
                seed,
            );
            assert_eq!((cfg.max_iters, cfg.episodes_per_eval), (400, 20));
            run_policy_search(&cfg).map(|r| r.summary.best_f.unwrap_or(f64::NAN)).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let mean = best.iter().sum::<f64>() / best.len() as f64;
    let detail = format!("mean best {mean:.2} over 10 seeds {best:.1?}");
    ensure(mean >= 400.0, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 6. History-length mechanics

fn history_mechanics() -> Outcome {
    let mut prompts = 0;
    for maxlen in [Some(1), Some(10), None] {
        let mut cfg = SearchConfig::policy(
            EnvName::CartPole,
            PolicyKind::Linear,
            SearchMode::Props,
            ProviderConfig::scripted(ScriptedStrategy::MuPlusLambda, 6),
            6,
        );
        cfg.max_iters = 40;
        cfg.episodes_per_eval = 2;
        cfg.history_maxlen = maxlen;
        let decimals = cfg.prompt_context().map_err(|e| e.to_string())?.decimals;
        let r = run_policy_search(&cfg).map_err(|e| e.to_string())?;
        for (k, step) in r.steps.iter().enumerate() {
            let Some(prompt) = &step.prompt else { continue };
            let shown: Vec<&str> =
                prompt.lines().filter(|l| l.starts_with("params[0]:") && l.contains("f(params):")).collect();
            let expect = maxlen.map_or(k, |m| m.min(k));
            ensure(shown.len() == expect, || format!("maxlen {maxlen:?}, step {k}: {} history lines", shown.len()))?;
            for (line, prev) in shown.iter().zip(&r.steps[k - expect..k]) {
                let want = props_core::prompt::format_history_line(&prev.params.0, prev.f, decimals);
                ensure(*line == want, || format!("maxlen {maxlen:?}, step {k}: `{line}` is not `{want}`"))?;
            }
            prompts += 1;
        }
    }
    Ok(format!("{prompts} prompts checked"))
}

// ---------------------------------------------------------------------------
// 7. Baseline ballpark

fn baselines() -> Outcome {
    let run = |function: &str, optimizer: Baseline| {
        let cfg = BenchConfig {
            functions: vec![function.into()],
            dims: vec![2],
            optimizers: vec![optimizer],
            trials: 50,
            steps: 100,
            ..BenchConfig::default()
        };
        let rows = bench(&cfg).map_err(|e| e.to_string())?;
        Ok::<_, String>((rows[0].mean, rows[0].std))
    };
    let (adam, adam_std) = run("levy", Baseline::Adam)?;
    let (nm, nm_std) = run("rastrigin", Baseline::NelderMead)?;
    let detail = format!("adam/levy {adam:.2} ± {adam_std:.2}, nelder-mead/rastrigin {nm:.2} ± {nm_std:.2}");
    ensure((5.0..=30.0).contains(&adam) && (20.0..=90.0).contains(&nm), || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 8. Projection properties

fn projections() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut orth, mut norm, mut linear) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let d = rng.random_range(1..=200);
        let k = rng.random_range(1..=20.min(d));
        let seed: u64 = rng.random();
        let map = make_projection(d, k, seed).map_err(|e| e.to_string())?;
        for a in 0..k {
            for b in 0..k {
                let dot: f64 = (0..d).map(|r| map.get(r, a) * map.get(r, b)).sum();
                orth = orth.max((dot - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        let gauss = |rng: &mut ChaCha8Rng| (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>();
        let (z1, z2) = (gauss(&mut rng), gauss(&mut rng));
        let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let t1 = lift(&map, &z1).map_err(|e| e.to_string())?;
        let t2 = lift(&map, &z2).map_err(|e| e.to_string())?;
        norm = norm.max((l2(&t1.0) - l2(&z1)).abs());
        let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let combo: Vec<f64> = z1.iter().zip(&z2).map(|(x, y)| a * x + b * y).collect();
        let tc = lift(&map, &combo).map_err(|e| e.to_string())?;
        for i in 0..d {
            linear = linear.max((tc.0[i] - (a * t1.0[i] + b * t2.0[i])).abs());
        }
    }
    let detail = format!("max |QᵀQ - I| {orth:.1e}, norm error {norm:.1e}, linearity error {linear:.1e}");
    ensure(orth < 1e-10 && norm <= 1e-9 && linear <= 1e-9, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 9. DMP rollouts

fn dmp() -> Outcome {
    let mut rest = DmpParams::with_weights(vec![0.0; 6]);
    rest.y0 = 0.7;
    let flat = dmp_rollout(&rest).map_err(|e| e.to_string())?;
    ensure(flat.iter().all(|&y| y == 0.7), || "zero forcing moved the trajectory".into())?;

    let (c, tau, y0, v0) = (2.0, 1.5, 0.3, -0.2);
    let max_error = |dt: f64| {
        let mut p = DmpParams::with_weights(vec![c; 6]);
        p.tau = tau;
        p.y0 = y0;
        p.ydot0 = v0;
        p.dt = dt;
        let ys = dmp_rollout(&p).unwrap();
        ys.iter()
            .enumerate()
            .map(|(k, y)| {
                let t = k as f64 * dt;
                (y - (y0 + v0 * t + 0.5 * c / (tau * tau) * t * t)).abs()
            })
            .fold(0.0f64, f64::max)
    };
    let (coarse, fine) = (max_error(0.01), max_error(0.005));
    let ratio = coarse / fine;
    let detail = format!("constant forcing error {coarse:.2e} -> {fine:.2e}, ratio {ratio:.3}");
    ensure((ratio - 2.0).abs() <= 0.2, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------------------
// 10. Determinism and replay

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut evaluations = 0;
    let mut configs = Vec::new();
    for (i, env) in [EnvName::CliffWalking, EnvName::FrozenLake, EnvName::CartPole, EnvName::MountainCarC]
        .into_iter()
        .enumerate()
    {
        let kind = props_core::policies::default_kind(&env.spec());
        let mut cfg = SearchConfig::policy(
            env,
            kind,
            SearchMode::Props,
            ProviderConfig::scripted(ScriptedStrategy::GaussianHillClimb, i as u64),
            10 + i as u64,
        );
        cfg.max_iters = 15;
        cfg.episodes_per_eval = 4;
        configs.push(cfg);
    }
    let mut numopt = SearchConfig::numopt("rastrigin", 2, ProviderConfig::scripted(ScriptedStrategy::MuPlusLambda, 5), 5);
    numopt.max_iters = 20;
    configs.push(numopt);

    for cfg in configs {
        let label = cfg.target.label();
        let transcript = Transcript::new();
        let provider = build_provider(&cfg.provider).map_err(|e| e.to_string())?;
        let original = run_search_with(&cfg, &*provider, &transcript).map_err(|e| format!("{label}: {e}"))?;
        let path = dir.path().join(format!("{label}.jsonl"));
        write_record(&original, &path).map_err(|e| e.to_string())?;
        let report = runner::replay(&path).map_err(|e| e.to_string())?;
        ensure(report.is_exact() && report.max_deviation == 0.0, || {
            format!("{label}: replay deviation {} ({} mismatches)", report.max_deviation, report.mismatches.len())
        })?;
        evaluations += report.evaluations;

        // Re-running from the recorded completions reproduces the record.
        let tpath = dir.path().join(format!("{label}.transcript.jsonl"));
        std::fs::write(&tpath, transcript.to_jsonl()).map_err(|e| e.to_string())?;
        let mut again = cfg.clone();
        again.provider = ProviderConfig::replay(&tpath);
        let rerun = props_core::search::run_search(&again).map_err(|e| format!("{label}: {e}"))?;
        ensure(rerun.steps == original.steps, || format!("{label}: replayed completions diverged"))?;
    }
    Ok(format!("{evaluations} evaluations replayed with zero deviation"))
}

// ---------------------------------------------------------------------------
// 11. Live smoke test

fn live_smoke() -> Option<Outcome> {
    if std::env::var("PROPS_LIVE_SMOKE").ok().as_deref() != Some("1") {
        return None;
    }
    let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
    let (Some(_), Some(base), Some(model)) = (var("PROPS_API_KEY"), var("PROPS_BASE_URL"), var("PROPS_MODEL")) else {
        return Some(Err("PROPS_LIVE_SMOKE=1 needs PROPS_API_KEY, PROPS_BASE_URL and PROPS_MODEL".into()));
    };
    Some((|| {
        let mut cfg = SearchConfig::policy(
            EnvName::CartPole,
            PolicyKind::Linear,
            SearchMode::Props,
            ProviderConfig::http(&base, &model),
            0,
        );
        cfg.max_iters = 10;
        let provider = build_provider(&cfg.provider).map_err(|e| e.to_string())?;
        let transcript = Transcript::new();
        let record = run_search_with(&cfg, &*provider, &transcript).map_err(|e| e.to_string())?;
        let fallbacks = record.steps.iter().filter(|s| s.source == StepSource::Fallback).count();
        ensure(record.is_complete() && fallbacks == 0, || format!("{fallbacks} unparseable iterations"))?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("live.transcript.jsonl");
        std::fs::write(&path, transcript.to_jsonl()).map_err(|e| e.to_string())?;
        let exchanges = load_exchanges(&path).map_err(|e| e.to_string())?;
        Ok(format!("{} exchanges, best {:?}", exchanges.len(), record.summary.best_f))
    })())
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("benchmark minima", minima),
        ("gradient correctness", gradients),
        ("environment oracles", env_oracles),
        ("protocol round trip", protocol),
        ("offline end-to-end", cartpole_end_to_end),
        ("history-length mechanics", history_mechanics),
        ("baseline ballpark", baselines),
        ("projection properties", projections),
        ("dmp rollouts", dmp),
        ("determinism and replay", determinism),
    ];
    let mut failed = 0;
    let report = |i: usize, name: &str, outcome: Option<Outcome>, secs: f64| match outcome {
        Some(Ok(detail)) => println!("criterion {i:>2} PASS {name} ({secs:.1}s): {detail}"),
        Some(Err(detail)) => println!("criterion {i:>2} FAIL {name} ({secs:.1}s): {detail}"),
        None => println!("criterion {i:>2} SKIP {name}: set PROPS_LIVE_SMOKE=1 to run"),
    };
    for (i, (name, check)) in criteria.iter().enumerate() {
        // A panic still prints its message, then counts as a failure.
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        failed += outcome.is_err() as usize;
        report(i + 1, name, Some(outcome), start.elapsed().as_secs_f64());
    }
    let start = Instant::now();
    let live = catch_unwind(live_smoke).unwrap_or_else(|_| Some(Err("panicked".into())));
    failed += matches!(live, Some(Err(_))) as usize;
    report(11, "live smoke test", live, start.elapsed().as_secs_f64());

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
