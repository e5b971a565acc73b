mod common;

use cscoop::bench::Benchmark;
use cscoop::explorer::{run_single, RunOptions, RunOutcome, ViolationKind};

use common::bench;

#[test]
fn exclusive_philosophers_always_finish() {
    let p = bench(Benchmark::Dpe, &[2]);
    for seed in 0..50 {
        let (outcome, trace) = run_single(&p, seed, RunOptions::default());
        assert_eq!(outcome, RunOutcome::Terminated, "seed {seed}");
        assert!(!trace.events.is_empty());
    }
}

#[test]
fn some_seed_deadlocks_the_bad_philosophers() {
    let p = bench(Benchmark::Dpb, &[2]);
    let hit = (0..100).find(|s| {
        matches!(
            run_single(&p, *s, RunOptions::default()).0,
            RunOutcome::Violation(ViolationKind::Deadlock)
        )
    });
    assert!(hit.is_some());
}

#[test]
fn runs_are_reproducible() {
    let p = bench(Benchmark::Pc, &[3]);
    for seed in [0, 1, 99] {
        let (a, ta) = run_single(&p, seed, RunOptions::default());
        let (b, tb) = run_single(&p, seed, RunOptions::default());
        assert_eq!(a, b);
        assert_eq!(ta.to_text(), tb.to_text());
    }
}

#[test]
fn step_limit_is_reported() {
    let p = bench(Benchmark::Dpe, &[2]);
    let opts = RunOptions {
        max_steps: 3,
        ..RunOptions::default()
    };
    let (outcome, trace) = run_single(&p, 0, opts);
    assert_eq!(outcome, RunOutcome::StepLimit);
    assert_eq!(trace.events.len(), 3);
}
