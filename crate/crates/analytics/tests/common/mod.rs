//! Ten artifacts produced by scripted verdict queues, with hand-derived
//! ablation values written next to each script.
#![allow(dead_code)]

#[path = "../../../core/tests/common/mod.rs"]
pub mod scripted;

use sdp_analytics::StallSource;
use sdp_core::{run_episode, EngineConfig, EpisodeTask, Predicate, TrajectoryArtifact};

pub fn scripted_run(id: &str, n: usize, config: EngineConfig, ks: Vec<usize>) -> TrajectoryArtifact {
    let ops = scripted::QueueOps::new(scripted::chain(n), ks);
    let mut env = scripted::EchoEnv::default();
    let task = EpisodeTask::new(id, Predicate::goal("g", "goal holds"));
    run_episode(&config, &ops, &mut env, &task).unwrap()
}

pub struct AblationCase {
    pub artifact: TrajectoryArtifact,
    /// (first-try certified steps, certified steps); None when m = 0.
    pub fidelity: Option<(usize, usize)>,
    /// (stall cursor, plan length); r = 1 when the cursor is None.
    pub stall: (Option<usize>, usize),
    pub source: StallSource,
    pub extra_steps: usize,
    pub recorded_steps: usize,
    pub complete: bool,
}

pub fn ablation_cases() -> Vec<AblationCase> {
    let c = |b, r, cap| EngineConfig::new(b, r, cap);
    let mut ks8 = vec![0; 56];
    ks8.extend([3, 4]);
    vec![
        // Four first-try certifications.
        AblationCase {
            artifact: scripted_run("clean", 4, c(3, 2, 60), vec![1, 1, 1, 1]),
            fidelity: Some((4, 4)),
            stall: (None, 4),
            source: StallSource::NoStall,
            extra_steps: 0,
            recorded_steps: 4,
            complete: true,
        },
        // One k=2 cascade: extra (2-1).
        AblationCase {
            artifact: scripted_run("one-cascade", 4, c(3, 2, 60), vec![2, 1, 1]),
            fidelity: Some((3, 3)),
            stall: (None, 4),
            source: StallSource::NoStall,
            extra_steps: 1,
            recorded_steps: 3,
            complete: true,
        },
        // Cursors 0 and 1 each need a retry: f = 2/4.
        AblationCase {
            artifact: scripted_run("retries", 4, c(3, 2, 60), vec![0, 1, 0, 1, 1, 1]),
            fidelity: Some((2, 4)),
            stall: (None, 4),
            source: StallSource::NoStall,
            extra_steps: 0,
            recorded_steps: 6,
            complete: true,
        },
        // Budget 2 exhausted at cursor 2 of 10: r = 2/10, f = 9/10.
        AblationCase {
            artifact: scripted_run("stall-at-2", 10, c(2, 1, 60), vec![1, 1, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1]),
            fidelity: Some((9, 10)),
            stall: (Some(2), 10),
            source: StallSource::FirstReplan,
            extra_steps: 0,
            recorded_steps: 12,
            complete: true,
        },
        // No replans allowed, exhausted at once: r = 0, nothing certified.
        AblationCase {
            artifact: scripted_run("dead-start", 5, c(2, 0, 60), vec![0, 0]),
            fidelity: None,
            stall: (Some(0), 5),
            source: StallSource::ReplansExhausted,
            extra_steps: 0,
            recorded_steps: 2,
            complete: true,
        },
        // Two k=3 cascades: extra 2 + 2.
        AblationCase {
            artifact: scripted_run("double-cascade", 6, c(3, 2, 60), vec![3, 3]),
            fidelity: Some((2, 2)),
            stall: (None, 6),
            source: StallSource::NoStall,
            extra_steps: 4,
            recorded_steps: 2,
            complete: true,
        },
        // 5 recorded + (2 + 1) extra = 8 > cap 5: factor 5/8, f = 2/3.
        AblationCase {
            artifact: scripted_run("overrun", 6, c(3, 2, 5), vec![0, 0, 3, 2, 2]),
            fidelity: Some((2, 3)),
            stall: (None, 6),
            source: StallSource::NoStall,
            extra_steps: 3,
            recorded_steps: 5,
            complete: false,
        },
        // 56 failures at cursor 0 (5 replans) then k=3 and k=4:
        // 58 recorded + 5 extra over a cap of 60 gives 60/63.
        AblationCase {
            artifact: scripted_run("cap-60", 7, c(10, 5, 60), ks8),
            fidelity: Some((1, 2)),
            stall: (Some(0), 7),
            source: StallSource::FirstReplan,
            extra_steps: 5,
            recorded_steps: 58,
            complete: false,
        },
        // Step cap hits at cursor 2 of 5 with no exhaustion.
        AblationCase {
            artifact: scripted_run("step-cap", 5, c(3, 2, 4), vec![1, 0, 1, 0]),
            fidelity: Some((1, 2)),
            stall: (Some(2), 5),
            source: StallSource::StepCap,
            extra_steps: 0,
            recorded_steps: 4,
            complete: true,
        },
        // Exhaustions at cursors 1 and 3; the first counts: r = 1/6.
        AblationCase {
            artifact: scripted_run("two-stalls", 6, c(2, 1, 60), vec![1, 0, 0, 1, 1, 0, 0, 1, 1, 1]),
            fidelity: Some((4, 6)),
            stall: (Some(1), 6),
            source: StallSource::FirstReplan,
            extra_steps: 0,
            recorded_steps: 10,
            complete: true,
        },
    ]
}
