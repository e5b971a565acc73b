//! Breadth-first exploration of the macro-step state space.

mod detect;
mod run;
mod trace;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use crate::compiler::Program;
use crate::model::{canonical_key, Configuration};
use crate::semantics::{enabled_actions, fire, initial_state, Firing, SemanticsOptions};

pub use detect::{detect, detect_lock_cycle, detect_stuck, detect_void_call, Checks, Violation, ViolationKind};
pub use run::{run_single, RunOptions, RunOutcome};
pub use trace::{describe, replay, Trace, TraceEvent};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExploreOptions {
    pub checks: Checks,
    /// Maximum BFS depth, in macro-steps.
    pub bound: Option<usize>,
    pub semantics: SemanticsOptions,
    pub stop_at_first: bool,
    /// Give up once this many states are stored.
    pub max_states: Option<usize>,
}

pub type StateId = usize;

#[derive(Debug, Clone)]
pub struct StateRecord {
    pub config: Configuration,
    pub depth: usize,
    /// First predecessor in BFS order and the firing leading here.
    pub parent: Option<(StateId, Firing)>,
    pub enabled: Vec<Firing>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    pub elapsed: Duration,
    /// Rough estimate of the bytes held by the state table.
    pub peak_memory: usize,
    /// Node/edge counts of the initial and the last discovered configuration.
    pub start_graph: (usize, usize),
    pub final_graph: (usize, usize),
    pub max_depth: usize,
    pub violating_states: usize,
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states)?;
        writeln!(f, "transitions: {}", self.transitions)?;
        writeln!(f, "start graph: {}/{}", self.start_graph.0, self.start_graph.1)?;
        writeln!(f, "final graph: {}/{}", self.final_graph.0, self.final_graph.1)?;
        writeln!(f, "max depth: {}", self.max_depth)?;
        writeln!(f, "violating states: {}", self.violating_states)?;
        writeln!(f, "time: {:.3}s", self.elapsed.as_secs_f64())?;
        write!(
            f,
            "memory estimate: {:.1} MiB",
            self.peak_memory as f64 / (1 << 20) as f64
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct StateSpace {
    pub states: Vec<StateRecord>,
    pub index: HashMap<Vec<u8>, StateId>,
    pub transitions: Vec<(StateId, Firing, StateId)>,
    pub stats: Stats,
}

impl StateSpace {
    pub fn key_of(&self, id: StateId) -> Vec<u8> {
        canonical_key(&self.states[id].config)
    }

    pub fn violating(&self) -> impl Iterator<Item = (StateId, &StateRecord)> {
        self.states.iter().enumerate().filter(|(_, s)| !s.violations.is_empty())
    }

    /// Firings along the BFS-tree path from the initial state to `id`.
    pub fn path_to(&self, mut id: StateId) -> Vec<Firing> {
        let mut path = Vec::new();
        while let Some((parent, f)) = self.states[id].parent {
            path.push(f);
            id = parent;
        }
        path.reverse();
        path
    }
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Safe,
    CounterexampleFound {
        kind: ViolationKind,
        state: StateId,
        trace: Trace,
    },
    BoundReached {
        frontier: usize,
    },
}

impl Verdict {
    pub fn name(&self) -> String {
        match self {
            Verdict::Safe => "safe".into(),
            Verdict::CounterexampleFound { kind, .. } => format!("counterexample ({kind})"),
            Verdict::BoundReached { frontier } => format!("bound reached ({frontier} frontier states)"),
        }
    }

    pub fn kind(&self) -> Option<ViolationKind> {
        match self {
            Verdict::CounterexampleFound { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub space: StateSpace,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ExploreError {
    #[error("state limit of {limit} exceeded after {} states", stats.states)]
    StateLimit { limit: usize, stats: Stats },
    #[error("trace to state {0} does not replay")]
    Replay(StateId),
}

/// Shortest firing sequence to `id`, replayed and checked.
pub fn reconstruct_trace(
    p: &Program,
    space: &StateSpace,
    id: StateId,
    opts: SemanticsOptions,
) -> Result<Trace, ExploreError> {
    let trace = replay(p, &space.path_to(id), opts);
    if trace.final_key() != space.key_of(id) {
        return Err(ExploreError::Replay(id));
    }
    Ok(trace)
}

fn config_bytes(c: &Configuration) -> usize {
    let frames: usize = c
        .processors
        .values()
        .map(|p| p.stack.len() * 96 + p.queue.len() * 64)
        .sum();
    c.processors.len() * 160 + c.objects.len() * 64 + frames
}

struct Builder<'p> {
    p: &'p Program,
    opts: ExploreOptions,
    space: StateSpace,
    memory: usize,
}

impl Builder<'_> {
    /// Records `c` if new; returns its id and whether it was new.
    fn add(&mut self, c: Configuration, depth: usize, parent: Option<(StateId, Firing)>) -> (StateId, bool) {
        let key = canonical_key(&c);
        if let Some(id) = self.space.index.get(&key) {
            return (*id, false);
        }
        let enabled = enabled_actions(self.p, &c, self.opts.semantics);
        let violations = detect(self.p, &c, &enabled, self.opts.checks);
        let id = self.space.states.len();
        self.memory += key.len() * 2 + config_bytes(&c) + 64;
        self.space.stats.max_depth = self.space.stats.max_depth.max(depth);
        self.space.stats.final_graph = c.graph_size();
        if !violations.is_empty() {
            self.space.stats.violating_states += 1;
        }
        self.space.index.insert(key, id);
        self.space.states.push(StateRecord {
            config: c,
            depth,
            parent,
            enabled,
            violations,
        });
        (id, true)
    }
}

/// Explores the state space of `p` breadth-first, deduplicating by
/// canonical key and running the enabled detectors on every new state.
/// Violating states are not expanded.
pub fn explore(p: &Program, opts: ExploreOptions) -> Result<Exploration, ExploreError> {
    let start = Instant::now();
    let mut b = Builder {
        p,
        opts,
        space: StateSpace::default(),
        memory: 0,
    };
    let init = initial_state(p, opts.semantics);
    b.space.stats.start_graph = init.graph_size();
    let (root, _) = b.add(init, 0, None);
    let mut queue = VecDeque::from([root]);
    let mut frontier = 0;
    let mut stopped = !b.space.states[root].violations.is_empty() && opts.stop_at_first;
    while let Some(id) = queue.pop_front().filter(|_| !stopped) {
        let rec = &b.space.states[id];
        if !rec.violations.is_empty() {
            continue;
        }
        if opts.bound.is_some_and(|bound| rec.depth >= bound) {
            frontier += usize::from(!rec.enabled.is_empty());
            continue;
        }
        let depth = rec.depth;
        let config = rec.config.clone();
        for f in rec.enabled.clone() {
            let next = fire(p, &config, f, opts.semantics);
            let (to, new) = b.add(next, depth + 1, Some((id, f)));
            b.space.transitions.push((id, f, to));
            if new {
                if let Some(limit) = opts.max_states.filter(|l| b.space.states.len() > *l) {
                    b.space.stats.states = b.space.states.len();
                    b.space.stats.transitions = b.space.transitions.len();
                    b.space.stats.elapsed = start.elapsed();
                    b.space.stats.peak_memory = b.memory;
                    return Err(ExploreError::StateLimit {
                        limit,
                        stats: b.space.stats,
                    });
                }
                if !b.space.states[to].violations.is_empty() && opts.stop_at_first {
                    stopped = true;
                    break;
                }
                queue.push_back(to);
            }
        }
    }
    let mut space = b.space;
    space.stats.states = space.states.len();
    space.stats.transitions = space.transitions.len();
    space.stats.peak_memory = b.memory;

    let worst = space
        .violating()
        .flat_map(|(id, s)| s.violations.iter().map(move |v| (v.kind, id)))
        .min();
    let verdict = match worst {
        Some((kind, state)) => {
            let trace = reconstruct_trace(p, &space, state, opts.semantics)?;
            let detail = &space.states[state]
                .violations
                .iter()
                .find(|v| v.kind == kind)
                .expect("recorded")
                .detail;
            let trace = trace
                .with_footer("verdict", kind)
                .with_footer("detail", detail)
                .with_footer("steps", space.states[state].depth);
            Verdict::CounterexampleFound { kind, state, trace }
        }
        None if frontier > 0 => Verdict::BoundReached { frontier },
        None => Verdict::Safe,
    };
    space.stats.elapsed = start.elapsed();
    Ok(Exploration { space, verdict })
}
