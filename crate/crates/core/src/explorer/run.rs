use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::compiler::Program;
use crate::semantics::{enabled_actions, fire, initial_state, SemanticsOptions};

use super::detect::{detect, Checks, ViolationKind};
use super::trace::{replay, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub semantics: SemanticsOptions,
    pub checks: Checks,
    pub max_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            semantics: SemanticsOptions::default(),
            checks: Checks::all(),
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Terminated,
    Violation(ViolationKind),
    StepLimit,
}

impl std::fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunOutcome::Terminated => f.write_str("terminated"),
            RunOutcome::Violation(k) => write!(f, "{k}"),
            RunOutcome::StepLimit => f.write_str("step-limit"),
        }
    }
}

/// One execution choosing uniformly among the enabled firings.
pub fn run_single(p: &Program, seed: u64, opts: RunOptions) -> (RunOutcome, Trace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = initial_state(p, opts.semantics);
    let mut firings = Vec::new();
    let outcome = loop {
        let enabled = enabled_actions(p, &c, opts.semantics);
        if let Some(v) = detect(p, &c, &enabled, opts.checks).first() {
            break RunOutcome::Violation(v.kind);
        }
        let Some(f) = enabled.choose(&mut rng) else {
            break RunOutcome::Terminated;
        };
        if firings.len() == opts.max_steps {
            break RunOutcome::StepLimit;
        }
        c = fire(p, &c, *f, opts.semantics);
        firings.push(*f);
    };
    let trace = replay(p, &firings, opts.semantics)
        .with_footer("outcome", outcome)
        .with_footer("seed", seed)
        .with_footer("steps", firings.len());
    (outcome, trace)
}
