//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p sdp-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod scripted;

#[path = "../../env-constraint/tests/common/mod.rs"]
mod constraint_fx;

#[path = "../../retrieval-multihop/tests/common/mod.rs"]
mod retrieval_fx;

#[path = "../../analytics/tests/common/mod.rs"]
mod analytics_fx;

use std::cell::RefCell;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_analytics::{action_fidelity, anatomy, cascade_extra_steps, certified_prefix_ratio};
use sdp_constraint::{
    build_constraint_plan, filter_options, generate_sandbox, plan_steps, CheapestChooser, ConstraintEnvironment,
    ConstraintOperators, LocalConstraints, PlanStep, SizeParams, TripContext, TripSpec,
};
use sdp_core::*;
use sdp_retrieval::{build_index, validate_hop, Bm25Params, SearchCache};
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

// 1 ---------------------------------------------------------------------------

fn golden_artifact() -> Outcome {
    let start = Instant::now();
    // p1 first try; p2 validates with k=2 (p2, p3); p4 fails twice, b=2
    // forces the single replan; p4r1 and g then certify first try.
    let ops = scripted::QueueOps::new(scripted::chain(5), [1, 2, 0, 0, 1, 1]);
    let mut env = scripted::EchoEnv::default();
    let task = EpisodeTask::new("golden", Predicate::goal("g", "goal holds"));
    let a = run_episode(&EngineConfig::new(2, 1, 60), &ops, &mut env, &task).map_err(|e| e.to_string())?;

    let act = |s: &str| json!({ "payload": s, "rendered": s });
    let verdict = |k: usize| json!({ "k": k, "reason": if k == 0 { "unmet" } else { "met" } });
    let attempt = |step: usize, cursor: usize, target: &str, action: &str, k: usize| {
        json!({
            "step_index": step,
            "cursor": cursor,
            "target_predicate_id": target,
            "action": act(action),
            "verdict": verdict(k),
            "reason": if k == 0 { "unmet" } else { "met" },
        })
    };
    let transition = |step: usize, from: usize, to: usize, action: &str, ids: &[&str]| {
        json!({
            "step_index": step,
            "from_cursor": from,
            "to_cursor": to,
            "cascade_depth": to - from,
            "action": act(action),
            "certified": ids,
        })
    };
    let golden = json!({
        "transitions": [
            transition(0, 0, 1, "do p1 #0", &["p1"]),
            transition(1, 1, 3, "do p2 #0", &["p2", "p3"]),
            transition(4, 3, 4, "do p4r1 #0", &["p4r1"]),
            transition(5, 4, 5, "do g #0", &["g"]),
        ],
        "attempts": [
            attempt(0, 0, "p1", "do p1 #0", 1),
            attempt(1, 1, "p2", "do p2 #0", 2),
            attempt(2, 3, "p4", "do p4 #0", 0),
            attempt(3, 3, "p4", "do p4 #1", 0),
            attempt(4, 3, "p4r1", "do p4r1 #0", 1),
            attempt(5, 4, "g", "do g #0", 1),
        ],
        "replan_events": [{ "cursor": 3, "attempts_exhausted": 2, "replan_index": 1 }],
    });
    let got = json!({
        "transitions": a.transitions,
        "attempts": a.attempts,
        "replan_events": a.replan_events,
    });
    ensure(got == golden, || format!("artifact differs from golden:\n got {got}\nwant {golden}"))?;
    ensure(a.goal_certified && a.termination == Termination::GoalCertified, || format!("{:?}", a.termination))?;
    let tail_ids: Vec<&str> = a.plans[1].predicates.iter().map(|p| p.id.as_str()).collect();
    ensure(tail_ids == ["p4r1", "g"], || format!("replanned tail {tail_ids:?}"))?;
    ensure(a.plans[1].provenance == Provenance::Replan { index: 1, cursor: 3 }, || format!("{:?}", a.plans[1].provenance))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("transitions, attempts and replan events match the golden ({elapsed:.1?})"))
}

// 2 ---------------------------------------------------------------------------

fn predicate_counts() -> Outcome {
    let shape = |days: usize, cities: usize| TripSpec {
        id: format!("{days}d-{cities}c"),
        origin: "O".into(),
        city_sequence: (0..cities).map(|i| format!("c{i}")).collect(),
        days,
        travelers: 1,
        budget: 1,
        local_constraints: LocalConstraints::default(),
        required_cuisines: Default::default(),
    };
    let mut got = Vec::new();
    for (d, c) in [(3, 1), (5, 2), (7, 3)] {
        got.push(build_constraint_plan(&shape(d, c)).map_err(|e| e.to_string())?.len());
    }
    ensure(got == [11, 17, 23], || format!("counts {got:?}"))?;
    Ok("3d-1c / 5d-2c / 7d-3c give 11 / 17 / 23".into())
}

// 3 ---------------------------------------------------------------------------

fn guaranteed_pass() -> Outcome {
    let start = Instant::now();
    let mut trips = 0;
    let mut violations = Vec::new();
    for seed in 0..20u64 {
        let g = generate_sandbox(seed, &SizeParams { specs: 10, ..SizeParams::default() }).map_err(|e| e.to_string())?;
        let sandbox = Arc::new(g.sandbox);
        for spec in &g.specs {
            let ops = ConstraintOperators::new(spec.clone(), sandbox.clone(), Box::new(CheapestChooser))
                .map_err(|e| e.to_string())?;
            let mut env = ConstraintEnvironment::new(spec.clone(), sandbox.clone());
            let a = run_episode(&EngineConfig::constraint(), &ops, &mut env, &ops.task()).map_err(|e| e.to_string())?;
            ensure(a.goal_certified, || format!("seed {seed} {}: {:?}", spec.id, a.termination))?;
            let ctx = TripContext::from_value(&env.view()).map_err(|e| e.to_string())?;
            violations.extend(constraint_fx::itinerary_violations(&sandbox, spec, &ctx.itinerary_state));
            trips += 1;
        }
    }
    ensure(trips == 200, || format!("{trips} trips generated"))?;
    ensure(violations.is_empty(), || format!("{} violations: {:?}", violations.len(), &violations[..violations.len().min(5)]))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("200/200 certified, 0 violations ({elapsed:.1?})"))
}

// 4 ---------------------------------------------------------------------------

fn filter_oracle() -> Outcome {
    let g = generate_sandbox(21, &SizeParams { specs: 30, ..SizeParams::default() }).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let (mut cases, mut empties, mut discrepancies) = (0, 0, Vec::new());
    while cases < 1000 {
        let (spec, state, _) = constraint_fx::random_case(&mut rng, &g.sandbox, &g.specs);
        let open: Vec<PlanStep> = plan_steps(&spec)
            .into_iter()
            .filter(|s| s.is_selection() && s.slots().iter().any(|sl| state.filled(sl).is_none()))
            .collect();
        let Some(step) = open.choose(&mut rng) else { continue };
        let slot = step.slots().into_iter().find(|sl| state.filled(sl).is_none()).unwrap();
        let expected = constraint_fx::brute_force_filter(&g.sandbox, &spec, &state, &slot);
        let got = match filter_options(&state, &spec, &step.predicate(&spec), &g.sandbox) {
            Ok(out) => out.options.into_iter().map(|c| c.id).collect(),
            Err(_) => {
                empties += 1;
                Vec::new()
            }
        };
        if got != expected {
            discrepancies.push(format!("case {cases} ({})", step.id()));
        }
        cases += 1;
    }
    ensure(discrepancies.is_empty(), || format!("{} discrepancies: {:?}", discrepancies.len(), &discrepancies[..discrepancies.len().min(5)]))?;
    Ok(format!("1000 cases, 0 discrepancies ({empties} empty option sets)"))
}

// 5 ---------------------------------------------------------------------------

fn mix(parts: &impl Hash) -> u64 {
    let mut h = DefaultHasher::new();
    parts.hash(&mut h);
    h.finish()
}

/// Operators whose every answer is a pure function of the target, the retry
/// index within the current cursor and the tail.
struct TableOps {
    seed: u64,
    plan: Vec<Predicate>,
}

impl Operators for TableOps {
    fn propose(&self, input: &ProposeInput<'_>, _: &Predicate) -> Result<Predicate, OperatorError> {
        Ok(self.plan[input.position].clone())
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        Action::text(format!("{}|{}", input.target.id.as_str(), input.retries_on_target()))
    }

    fn validate(&self, tail: &[Predicate], o: &Observation) -> Result<ValidationVerdict, OperatorError> {
        let text = o.rendered.strip_prefix("saw ").unwrap_or(&o.rendered);
        let k = match text.split_once("|noise:") {
            Some((_, n)) => n.parse().unwrap(),
            None => [0, 0, 0, 0, 1, 1, 1, 1, 2, 3][(mix(&(self.seed, text)) % 10) as usize],
        };
        let k = k.min(tail.len());
        Ok(if k == 0 { ValidationVerdict::reject("unmet") } else { ValidationVerdict::new(k, "met") })
    }

    fn replan(&self, _: &CertifiedState, _: &Predicate, t: &TrajectoryView<'_>) -> Result<Vec<Predicate>, OperatorError> {
        Ok(t.tail
            .iter()
            .map(|p| if p.is_goal { p.clone() } else { Predicate::new(format!("{}x", p.id.as_str()), p.text.clone(), p.kind.clone()) })
            .collect())
    }
}

/// Echo environment that overrides validation with queued noise while
/// nothing is committed, so runs of one scenario diverge on cursor 0.
struct NoisyEnv {
    noise: VecDeque<usize>,
    committed: Vec<String>,
}

impl Environment for NoisyEnv {
    fn reset(&mut self) -> Result<Value, OperatorError> {
        self.committed.clear();
        Ok(json!([]))
    }

    fn step(&mut self, action: &Action) -> Result<Observation, OperatorError> {
        match self.noise.pop_front().filter(|_| self.committed.is_empty()) {
            Some(k) => Ok(Observation::text(format!("saw {}|noise:{k}", action.rendered))),
            None => Ok(Observation::text(format!("saw {}", action.rendered))),
        }
    }

    fn commit(&mut self, certified: &[Predicate], _: &ValidationVerdict) -> Result<Value, OperatorError> {
        self.committed.extend(certified.iter().map(|p| p.id.as_str().to_string()));
        Ok(json!(self.committed))
    }
}

/// (cursor, tail ids, snapshot) on arrival at each certified state past the
/// first, with the attempt history that led there and the next certified
/// state reached from it.
type Key = (usize, Vec<String>, Vec<String>);
type Next = (usize, Vec<String>, Vec<String>);

fn arrivals(a: &TrajectoryArtifact) -> Vec<(Key, Vec<(String, usize)>, Next)> {
    let active = |cursor: usize| a.plans.iter().rev().find(|p| p.start_cursor() <= cursor).unwrap();
    let tail_at = |plan: &PlanTail, cursor: usize| -> Vec<String> {
        plan.predicates[cursor - plan.start_cursor()..].iter().map(|p| p.id.as_str().to_string()).collect()
    };
    let mut certified: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for (j, t) in a.transitions.iter().enumerate() {
        if j > 0 {
            let prev = &a.transitions[j - 1];
            let key = (t.from_cursor, tail_at(active(prev.from_cursor), t.from_cursor), certified.clone());
            let history = a.attempts[..=prev.step_index].iter().map(|x| (x.target_predicate_id.as_str().to_string(), x.verdict.k)).collect();
            let mut after = certified.clone();
            after.extend(t.certified.iter().map(|p| p.as_str().to_string()));
            let next = (t.to_cursor, after, tail_at(active(t.from_cursor), t.to_cursor));
            out.push((key, history, next));
        }
        certified.extend(t.certified.iter().map(|p| p.as_str().to_string()));
    }
    out
}

fn markov_property() -> Outcome {
    let variants: [&[usize]; 8] = [&[], &[1], &[0, 1], &[2], &[0, 2], &[3], &[0, 0, 1], &[0, 0, 2]];
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut compared, mut collisions, mut violations) = (0usize, 0usize, Vec::new());
    for scenario in 0..100 {
        let seed: u64 = rng.gen();
        let n = rng.gen_range(4..10);
        let mut seen: BTreeMap<Key, (Vec<(String, usize)>, Next)> = BTreeMap::new();
        for noise in variants {
            let ops = TableOps { seed, plan: scripted::chain(n) };
            let mut env = NoisyEnv { noise: noise.iter().copied().collect(), committed: Vec::new() };
            let task = EpisodeTask::new(format!("m{scenario}"), Predicate::goal("g", "goal holds"));
            let a = run_episode(&EngineConfig::new(2, 200, 20_000), &ops, &mut env, &task).map_err(|e| e.to_string())?;
            for (key, history, next) in arrivals(&a) {
                match seen.get(&key) {
                    None => {
                        seen.insert(key, (history, next));
                    }
                    Some((h, prev)) => {
                        compared += 1;
                        if *h != history {
                            collisions += 1;
                        }
                        if *prev != next {
                            violations.push(format!("scenario {scenario}: {key:?} -> {prev:?} vs {next:?}"));
                        }
                    }
                }
            }
        }
    }
    ensure(violations.is_empty(), || format!("{} violations: {:?}", violations.len(), &violations[..violations.len().min(3)]))?;
    ensure(collisions > 0, || "no two distinct histories reached a shared state".into())?;
    Ok(format!("100 scenarios, {compared} repeated states ({collisions} via distinct histories), 0 violations"))
}

// 6 ---------------------------------------------------------------------------

fn bm25_oracle() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut scored = 0;
    for _ in 0..40 {
        let corpus = retrieval_fx::random_corpus(&mut rng, 50);
        let idx = build_index(&corpus, Bm25Params::default()).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let q = retrieval_fx::random_query(&mut rng);
            let oracle = retrieval_fx::brute_bm25(&corpus, &q, 1.2, 0.75);
            let Ok(hits) = idx.search(&q, corpus.len()) else {
                ensure(oracle.is_empty(), || format!("`{q}` returned nothing but the oracle scores it"))?;
                continue;
            };
            ensure(hits.len() == oracle.len(), || format!("`{q}`: {} hits vs {} scored", hits.len(), oracle.len()))?;
            for h in hits {
                let want = oracle[&h.paragraph.doc_id];
                ensure(close(h.score, want), || format!("`{q}` {}: {} vs {want}", h.paragraph.doc_id, h.score))?;
                scored += 1;
            }
        }
    }
    let mut first = 0;
    for _ in 0..10 {
        let corpus = retrieval_fx::random_corpus(&mut rng, 50);
        let idx = build_index(&corpus, Bm25Params::default()).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let target = &corpus[rng.gen_range(0..corpus.len())];
            let hits = idx.search(&target.title, 10).map_err(|e| e.to_string())?;
            if hits[0].paragraph.doc_id == target.doc_id {
                first += 1;
            }
        }
    }
    ensure(first == 100, || format!("exact title ranked first in {first}/100"))?;
    Ok(format!("{scored} scores within 1e-9 relative; exact title first in 100/100"))
}

// 7 ---------------------------------------------------------------------------

fn hop_fallback() -> Outcome {
    let paras = retrieval_fx::fixture_paragraphs();
    let cases = retrieval_fx::fallback_cases();
    ensure(cases.len() == 20, || format!("{} cases", cases.len()))?;
    let verifier = retrieval_fx::TableVerifier::for_cases(&cases);
    let mut corrected = 0;
    for c in &cases {
        let v = validate_hop(&c.finding, &paras, &SearchCache::new(), &verifier).map_err(|e| e.to_string())?;
        if v.k == 1 && v.detail["title"] == c.true_title {
            corrected += 1;
        }
    }
    ensure(corrected == 20, || format!("corrected {corrected}/20"))?;
    let verifier = retrieval_fx::TableVerifier::for_cases(&cases);
    for f in retrieval_fx::negation_findings() {
        let v = validate_hop(&f, &paras, &SearchCache::new(), &verifier).map_err(|e| e.to_string())?;
        ensure(v.k == 0, || format!("negated `{}` got k={}", f.finding_text, v.k))?;
    }
    ensure(verifier.calls.get() == 0, || format!("{} verifier calls on negated findings", verifier.calls.get()))?;
    Ok("20/20 corrected with k=1; negations k=0 with 0 verifier calls".into())
}

// 8 ---------------------------------------------------------------------------

fn ablation_formulas() -> Outcome {
    let cases = analytics_fx::ablation_cases();
    ensure(cases.len() == 10, || format!("{} cases", cases.len()))?;
    for c in &cases {
        let a = &c.artifact;
        let id = &a.task_id;
        let f = action_fidelity(a).ok();
        let want_f = c.fidelity.map(|(num, den)| num as f64 / den as f64);
        ensure(f == want_f, || format!("{id}: fidelity {f:?} vs {want_f:?}"))?;
        let r = certified_prefix_ratio(a);
        let want_r = c.stall.0.map_or(1.0, |s| s as f64 / c.stall.1 as f64);
        ensure(r.r == want_r && r.source == c.source, || format!("{id}: r {} ({:?}) vs {want_r} ({:?})", r.r, r.source, c.source))?;
        let cap = a.config.global_step_cap;
        let cc = cascade_extra_steps(a, cap);
        let factor = if c.complete { 1.0 } else { cap as f64 / (c.recorded_steps + c.extra_steps) as f64 };
        ensure(
            (cc.extra_steps, cc.recorded_steps, cc.complete, cc.proportional_score_factor)
                == (c.extra_steps, c.recorded_steps, c.complete, factor),
            || format!("{id}: cascade {cc:?}"),
        )?;
    }
    Ok("fidelity, prefix ratio and cascade extra steps exact on 10 artifacts".into())
}

// 9 ---------------------------------------------------------------------------

fn anatomy_bounds() -> Outcome {
    let unit = |x: f64| (0.0..=1.0).contains(&x);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for set in 0..200 {
        let runs: Vec<TrajectoryArtifact> = (0..rng.gen_range(0..20))
            .map(|i| {
                let ks: Vec<usize> = (0..rng.gen_range(0..30)).map(|_| rng.gen_range(0..4)).collect();
                let cfg = EngineConfig::new(rng.gen_range(1..4), rng.gen_range(0..3), rng.gen_range(1..40));
                analytics_fx::scripted_run(&format!("t{i}"), rng.gen_range(1..8), cfg, ks)
            })
            .collect();
        let labels: BTreeMap<String, bool> = runs.iter().map(|a| (a.task_id.clone(), rng.gen_bool(0.5))).collect();
        let rep = anatomy(&runs, Some(&labels)).map_err(|e| e.to_string())?;
        let bounded = unit(rep.cascade_rate)
            && rep.success_rate_by_replan_count.values().all(|b| unit(b.rate))
            && rep.certified_progress_per_run.iter().all(|p| unit(p.progress))
            && rep.mean_failed_progress.is_none_or(unit);
        ensure(bounded, || format!("set {set}: fraction out of [0,1]"))?;
        let cal = rep.calibration.clone().ok_or("calibration missing")?;
        ensure(cal.total() == runs.len() && unit(cal.agreement()), || format!("set {set}: calibration {cal:?} over {} runs", runs.len()))?;
        let again = anatomy(&runs, Some(&labels)).map_err(|e| e.to_string())?;
        ensure(
            serde_json::to_string(&rep).unwrap() == serde_json::to_string(&again).unwrap(),
            || format!("set {set}: repeated invocation differs"),
        )?;
    }
    Ok("200 random artifact sets: bounded, calibration sums to run count, repeatable".into())
}

// 10 --------------------------------------------------------------------------

const ODD_TEXT: [&str; 6] = ["plain", "quote \" and \\ slash", "tab\tnewline\n", "ünïcödé ✓", "emoji 🚀", ""];

/// Random plans, payloads and verdict details, including awkward strings
/// and floats.
struct NoisyOps {
    plan: Vec<Predicate>,
    rng: RefCell<ChaCha8Rng>,
}

impl Operators for NoisyOps {
    fn propose(&self, input: &ProposeInput<'_>, _: &Predicate) -> Result<Predicate, OperatorError> {
        Ok(self.plan[input.position].clone())
    }

    fn realize(&self, input: &RealizeInput<'_>) -> Result<Action, OperatorError> {
        let mut rng = self.rng.borrow_mut();
        let payload = json!({ "x": rng.gen::<f64>() * 10f64.powi(rng.gen_range(-300..300)), "n": rng.gen::<i64>(), "s": ODD_TEXT.choose(&mut *rng) });
        Action::new(payload, format!("act {} {}", input.target.id.as_str(), ODD_TEXT.choose(&mut *rng).unwrap()))
    }

    fn validate(&self, tail: &[Predicate], _: &Observation) -> Result<ValidationVerdict, OperatorError> {
        let mut rng = self.rng.borrow_mut();
        let k = rng.gen_range(0..3usize).min(tail.len());
        let v = if k == 0 { ValidationVerdict::reject(*ODD_TEXT.choose(&mut *rng).unwrap()) } else { ValidationVerdict::new(k, "ok") };
        Ok(if rng.gen_bool(0.3) { v.with_detail(json!({ "score": rng.gen::<f64>(), "tag": ODD_TEXT.choose(&mut *rng) })) } else { v })
    }

    fn replan(&self, _: &CertifiedState, _: &Predicate, t: &TrajectoryView<'_>) -> Result<Vec<Predicate>, OperatorError> {
        let n = t.replan_events.len() + 1;
        Ok(t.tail.iter().map(|p| if p.is_goal { p.clone() } else { Predicate::new(format!("{}·{n}", p.id.as_str()), p.text.clone(), p.kind.clone()) }).collect())
    }
}

fn persistence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut artifacts = Vec::with_capacity(1000);
    for i in 0..1000 {
        let n = rng.gen_range(1..8);
        let mut plan: Vec<Predicate> = (1..n)
            .map(|j| {
                Predicate::new(format!("p{j}"), format!("{} {j}", ODD_TEXT.choose(&mut rng).unwrap()), "step")
                    .with_attrs(json!({ "w": rng.gen::<f64>(), "i": rng.gen::<u32>() }))
            })
            .collect();
        plan.push(Predicate::goal("g", *ODD_TEXT.choose(&mut rng).unwrap()));
        let ops = NoisyOps { plan, rng: RefCell::new(ChaCha8Rng::seed_from_u64(rng.gen())) };
        let mut env = scripted::EchoEnv::default();
        let task = EpisodeTask::new(format!("task-{i}-{}", ODD_TEXT.choose(&mut rng).unwrap()), Predicate::goal("g", "goal"));
        let cfg = EngineConfig::new(rng.gen_range(1..4), rng.gen_range(0..3), rng.gen_range(1..40));
        let a = match run_episode(&cfg, &ops, &mut env, &task) {
            Ok(a) => a,
            Err(EpisodeError::Operator(f)) => *f.artifact,
            Err(e) => return Err(format!("run {i}: {e}")),
        };
        artifacts.push(a);
    }
    let mut first = Vec::new();
    write_jsonl(&mut first, &artifacts).map_err(|e| e.to_string())?;
    let back = read_jsonl(first.as_slice()).map_err(|e| e.to_string())?;
    ensure(back == artifacts, || "read artifacts differ from written ones".into())?;
    let mut second = Vec::new();
    write_jsonl(&mut second, &back).map_err(|e| e.to_string())?;
    ensure(first == second, || "second write differs byte-wise".into())?;
    let distinct: BTreeSet<_> = artifacts.iter().map(|a| a.transitions.len()).collect();
    Ok(format!("1000 artifacts, {} bytes, byte-identical ({} distinct transition counts)", first.len(), distinct.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("engine golden artifact", golden_artifact),
        ("constraint predicate counts", predicate_counts),
        ("guaranteed-pass filtering", guaranteed_pass),
        ("filter oracle equivalence", filter_oracle),
        ("markov property", markov_property),
        ("bm25 oracle", bm25_oracle),
        ("hop validation fallback", hop_fallback),
        ("ablation formulas", ablation_formulas),
        ("anatomy bounds and determinism", anatomy_bounds),
        ("artifact persistence", persistence),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
