//! Error detectors evaluated on stabilized configurations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::compiler::{Action, Program};
use crate::frontend::Pos;
use crate::ir::CallTarget;
use crate::model::{Configuration, FlagKind, ProcessorId, Value};
use crate::semantics::eval::{read_var, target_value};
use crate::semantics::{pending_edge, Firing};

/// Violation kinds in decreasing priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    Deadlock,
    Stuck,
    VoidCall,
    Postcondition,
    Runtime,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 5] = [
        ViolationKind::Deadlock,
        ViolationKind::Stuck,
        ViolationKind::VoidCall,
        ViolationKind::Postcondition,
        ViolationKind::Runtime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::Deadlock => "deadlock",
            ViolationKind::Stuck => "stuck",
            ViolationKind::VoidCall => "void-call",
            ViolationKind::Postcondition => "postcondition",
            ViolationKind::Runtime => "runtime",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ViolationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().replace('_', "-");
        ViolationKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                format!("unknown check `{s}` (expected deadlock, void-call, postcondition, stuck or runtime)")
            })
    }
}

/// The set of enabled detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checks(u8);

impl Checks {
    pub fn all() -> Checks {
        Checks(0b11111)
    }

    pub fn none() -> Checks {
        Checks(0)
    }

    pub fn only(kinds: &[ViolationKind]) -> Checks {
        kinds.iter().fold(Checks::none(), |c, k| c.with(*k))
    }

    pub fn with(self, k: ViolationKind) -> Checks {
        Checks(self.0 | 1 << k as u8)
    }

    pub fn contains(self, k: ViolationKind) -> bool {
        self.0 & (1 << k as u8) != 0
    }

    pub fn kinds(self) -> impl Iterator<Item = ViolationKind> {
        ViolationKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }

    /// Parses a comma-separated list such as `deadlock,void-call`.
    pub fn parse(list: &str) -> Result<Checks, String> {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .try_fold(Checks::none(), |c, s| Ok(c.with(s.parse()?)))
    }
}

impl Default for Checks {
    fn default() -> Self {
        Checks::all()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

/// A cycle `p1 -> ... -> pk -> p1` of processors, each pending a `Lock`
/// with a target whose handler is held by the next one. The cycle starts
/// at its lowest processor id.
pub fn detect_lock_cycle(p: &Program, c: &Configuration) -> Option<Vec<ProcessorId>> {
    let mut waits: BTreeMap<ProcessorId, Vec<ProcessorId>> = BTreeMap::new();
    for &pid in c.processors.keys() {
        let Some((_, edge, _)) = pending_edge(p, c, pid) else {
            continue;
        };
        let Action::Lock { targets, .. } = &edge.action else {
            continue;
        };
        let frame = c.processor(pid).top().expect("running");
        let mut next: Vec<ProcessorId> = targets
            .iter()
            .filter_map(|t| match read_var(c, frame, *t) {
                Value::Ref(h, _) if h != pid => c.processor(h).locked_by,
                _ => None,
            })
            .filter(|q| *q != pid)
            .collect();
        next.sort();
        next.dedup();
        waits.insert(pid, next);
    }
    // depth-first search for a back edge, lowest ids first
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark: BTreeMap<ProcessorId, Mark> = waits.keys().map(|k| (*k, Mark::New)).collect();
    fn visit(
        v: ProcessorId,
        waits: &BTreeMap<ProcessorId, Vec<ProcessorId>>,
        mark: &mut BTreeMap<ProcessorId, Mark>,
        path: &mut Vec<ProcessorId>,
    ) -> Option<Vec<ProcessorId>> {
        mark.insert(v, Mark::Open);
        path.push(v);
        for w in waits.get(&v).into_iter().flatten() {
            match mark.get(w).copied() {
                Some(Mark::Open) => {
                    let start = path.iter().position(|x| x == w).expect("on path");
                    return Some(path[start..].to_vec());
                }
                Some(Mark::New) => {
                    if let Some(cycle) = visit(*w, waits, mark, path) {
                        return Some(cycle);
                    }
                }
                _ => {}
            }
        }
        path.pop();
        mark.insert(v, Mark::Done);
        None
    }
    let roots: Vec<ProcessorId> = waits.keys().copied().collect();
    for r in roots {
        if mark[&r] == Mark::New {
            if let Some(mut cycle) = visit(r, &waits, &mut mark, &mut Vec::new()) {
                let lowest = cycle
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, p)| **p)
                    .map(|(i, _)| i)
                    .unwrap();
                cycle.rotate_left(lowest);
                return Some(cycle);
            }
        }
    }
    None
}

/// A running processor whose next action dereferences a Void reference.
pub fn detect_void_call(p: &Program, c: &Configuration) -> Option<(ProcessorId, Pos)> {
    for &pid in c.processors.keys() {
        let Some((_, edge, _)) = pending_edge(p, c, pid) else {
            continue;
        };
        let frame = c.processor(pid).top().expect("running");
        let void = match &edge.action {
            Action::Lock { targets, .. } => targets.iter().any(|t| read_var(c, frame, *t) == Value::Void),
            a => match a.call_target() {
                Some(t @ CallTarget::Var(_)) => target_value(c, frame, t) == Value::Void,
                _ => false,
            },
        };
        if void {
            return Some((pid, edge.pos));
        }
    }
    None
}

/// No firing is enabled although some processor still has work.
pub fn detect_stuck(c: &Configuration, enabled: &[Firing]) -> bool {
    enabled.is_empty() && !c.is_terminated()
}

fn location(p: &Program, pid: ProcessorId, c: &Configuration, pos: Pos) -> String {
    let method = c.processor(pid).top().map(|f| p.method(f.method));
    match method {
        Some(g) => format!(
            "{pid} in {} at {}:{pos}",
            g.label,
            g.file.as_deref().unwrap_or("<input>")
        ),
        None => format!("{pid}"),
    }
}

/// Runs the enabled detectors; results are in priority order.
pub fn detect(p: &Program, c: &Configuration, enabled: &[Firing], checks: Checks) -> Vec<Violation> {
    let mut out = Vec::new();
    if checks.contains(ViolationKind::Deadlock) {
        if let Some(cycle) = detect_lock_cycle(p, c) {
            let names: Vec<String> = cycle.iter().chain(cycle.first()).map(|p| p.to_string()).collect();
            out.push(Violation {
                kind: ViolationKind::Deadlock,
                detail: format!("lock cycle {}", names.join(" -> ")),
            });
        }
    }
    let flagged = |k: FlagKind| c.flags.iter().filter(move |f| f.kind == k);
    if checks.contains(ViolationKind::VoidCall) {
        if let Some((pid, pos)) = detect_void_call(p, c) {
            out.push(Violation {
                kind: ViolationKind::VoidCall,
                detail: format!("call on Void target by {}", location(p, pid, c, pos)),
            });
        } else if let Some(f) = flagged(FlagKind::VoidCall).next() {
            out.push(Violation {
                kind: ViolationKind::VoidCall,
                detail: format!("{} in {}", f.detail, p.method(f.method).label),
            });
        }
    }
    if checks.contains(ViolationKind::Postcondition) {
        if let Some(f) = flagged(FlagKind::Postcondition).next() {
            out.push(Violation {
                kind: ViolationKind::Postcondition,
                detail: f.detail.clone(),
            });
        }
    }
    if checks.contains(ViolationKind::Runtime) {
        if let Some(f) = flagged(FlagKind::RuntimeError).next() {
            out.push(Violation {
                kind: ViolationKind::Runtime,
                detail: format!("{} in {}", f.detail, p.method(f.method).label),
            });
        }
    }
    // a blocked void call or failed processor already explains the halt
    let explained = out
        .iter()
        .any(|v| matches!(v.kind, ViolationKind::VoidCall | ViolationKind::Runtime));
    if checks.contains(ViolationKind::Stuck) && !explained && detect_stuck(c, enabled) {
        let busy: Vec<String> = c
            .processors
            .iter()
            .filter(|(_, q)| !q.is_quiescent())
            .map(|(id, _)| id.to_string())
            .collect();
        let at = usize::from(out.first().is_some_and(|v| v.kind == ViolationKind::Deadlock));
        let stuck = Violation {
            kind: ViolationKind::Stuck,
            detail: format!("no action enabled; unfinished: {}", busy.join(", ")),
        };
        out.insert(at, stuck);
    }
    out
}
