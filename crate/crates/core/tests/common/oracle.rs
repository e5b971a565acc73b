//! Brute-force reachability: every interleaving is followed to its end,
//! without remembering visited states. Only usable on tiny, terminating
//! programs.

use std::collections::BTreeSet;

use cscoop::compiler::Program;
use cscoop::model::{canonical_key, Configuration};
use cscoop::semantics::{enabled_actions, fire, initial_state, SemanticsOptions};

const MAX_DEPTH: usize = 200;

fn walk(
    p: &Program,
    c: Configuration,
    opts: SemanticsOptions,
    depth: usize,
    seen: &mut BTreeSet<Vec<u8>>,
    paths: &mut usize,
) {
    assert!(depth < MAX_DEPTH, "program does not terminate within {MAX_DEPTH} steps");
    seen.insert(canonical_key(&c));
    let enabled = enabled_actions(p, &c, opts);
    if enabled.is_empty() {
        *paths += 1;
    }
    for f in enabled {
        walk(p, fire(p, &c, f, opts), opts, depth + 1, seen, paths);
    }
}

/// Keys of all reachable configurations and the number of maximal paths.
pub fn reachable_keys(p: &Program, opts: SemanticsOptions) -> (BTreeSet<Vec<u8>>, usize) {
    let mut seen = BTreeSet::new();
    let mut paths = 0;
    walk(p, initial_state(p, opts), opts, 0, &mut seen, &mut paths);
    (seen, paths)
}
