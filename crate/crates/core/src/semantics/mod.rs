//! Operational semantics: action rules, prioritized scheduling rules and
//! their composition into macro-steps.

pub mod eval;
mod gc;

use std::collections::BTreeSet;

use crate::compiler::{Action, ActionEdge, Program, StateId};
use crate::ir::{CallTarget, MethodId, VarRef};
use crate::model::{Configuration, ErrorFlag, FlagKind, Frame, ProcessorId, Request, ReturnTo, Status, Value};

pub use eval::{evaluate, EvalError};
pub use gc::collect_garbage;

use eval::{read_var, target_value, write_var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Discipline {
    #[default]
    Fifo,
    /// Any queued request may be dequeued next.
    Bag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SemanticsOptions {
    pub discipline: Discipline,
    /// Drop unreachable, quiescent processors after every step.
    pub gc: bool,
}

/// One enabled atomic step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Firing {
    /// Fire edge `edge` of the method on top of `processor`'s stack.
    Action { processor: ProcessorId, edge: u32 },
    /// Bag discipline only: activate the queued request at `index`.
    Dequeue { processor: ProcessorId, index: u32 },
}

impl Firing {
    pub fn processor(&self) -> ProcessorId {
        match self {
            Firing::Action { processor, .. } | Firing::Dequeue { processor, .. } => *processor,
        }
    }
}

/// The edge a running processor is about to take, if any.
pub fn pending_edge<'p>(
    p: &'p Program,
    c: &Configuration,
    pid: ProcessorId,
) -> Option<(u32, &'p ActionEdge, &'p crate::compiler::MethodGraph)> {
    let proc = c.processor(pid);
    if proc.status != Status::Running {
        return None;
    }
    let frame = proc.top()?;
    let g = p.method(frame.method);
    g.edges_from(frame.state).next().map(|(i, e)| (i, e, g))
}

/// Distinct handlers of `targets` other than `pid`, or `None` if one is Void.
pub fn lock_handlers(
    c: &Configuration,
    frame: &Frame,
    pid: ProcessorId,
    targets: &[VarRef],
) -> Option<BTreeSet<ProcessorId>> {
    let mut hs = BTreeSet::new();
    for t in targets {
        match read_var(c, frame, *t) {
            Value::Ref(h, _) => {
                if h != pid {
                    hs.insert(h);
                }
            }
            _ => return None,
        }
    }
    Some(hs)
}

fn call_enabled(c: &Configuration, frame: &Frame, pid: ProcessorId, target: CallTarget) -> bool {
    match target_value(c, frame, target) {
        Value::Ref(h, _) => h == pid || c.processor(pid).holds.contains_key(&h),
        _ => false,
    }
}

fn lock_enabled(
    p: &Program,
    c: &Configuration,
    frame: &Frame,
    pid: ProcessorId,
    targets: &[VarRef],
    guard: Option<&crate::ir::Expr>,
) -> bool {
    let Some(hs) = lock_handlers(c, frame, pid, targets) else {
        return false;
    };
    let free = hs
        .iter()
        .all(|h| c.processor(*h).locked_by.is_none() || c.processor(*h).locked_by == Some(pid));
    if !free {
        return false;
    }
    match guard {
        None => true,
        Some(g) => {
            hs.iter().all(|h| c.processor(*h).is_quiescent())
                && !matches!(evaluate(p, c, frame, g), Ok(Value::Bool(false)))
        }
    }
}

/// All firings enabled in a stabilized configuration, in processor order.
pub fn enabled_actions(p: &Program, c: &Configuration, opts: SemanticsOptions) -> Vec<Firing> {
    let mut out = Vec::new();
    for (&pid, proc) in &c.processors {
        if opts.discipline == Discipline::Bag && proc.status == Status::Idle {
            for (i, r) in proc.queue.iter().enumerate() {
                if !proc.queue[..i].contains(r) {
                    out.push(Firing::Dequeue {
                        processor: pid,
                        index: i as u32,
                    });
                }
            }
        }
        let Some((idx, edge, _)) = pending_edge(p, c, pid) else {
            continue;
        };
        let frame = proc.top().expect("running");
        let enabled = match &edge.action {
            Action::Command { target, .. } | Action::Query { target, .. } | Action::LocalCall { target, .. } => {
                call_enabled(c, frame, pid, *target)
            }
            Action::Lock { targets, guard } => lock_enabled(p, c, frame, pid, targets, guard.as_ref()),
            _ => true,
        };
        if enabled {
            out.push(Firing::Action {
                processor: pid,
                edge: idx,
            });
        }
    }
    out
}

fn raise(c: &mut Configuration, pid: ProcessorId, kind: FlagKind, detail: String) {
    let (method, state) = c
        .processor(pid)
        .top()
        .map(|f| (f.method, f.state))
        .unwrap_or((MethodId(0), StateId(0)));
    c.flags.insert(ErrorFlag {
        kind,
        method,
        state,
        detail,
    });
}

fn fail(c: &mut Configuration, pid: ProcessorId, err: EvalError) {
    let kind = match err {
        EvalError::VoidTarget => FlagKind::VoidCall,
        _ => FlagKind::RuntimeError,
    };
    raise(c, pid, kind, err.to_string());
    c.processor_mut(pid).status = Status::Failed;
}

/// Runs `f` with the top frame of `pid` temporarily taken off the stack.
fn with_top<R>(c: &mut Configuration, pid: ProcessorId, f: impl FnOnce(&mut Configuration, &mut Frame) -> R) -> R {
    let mut frame = c.processor_mut(pid).stack.pop().expect("running processor");
    let r = f(c, &mut frame);
    c.processor_mut(pid).stack.push(frame);
    r
}

fn set_state(c: &mut Configuration, pid: ProcessorId, s: StateId) {
    c.processor_mut(pid).stack.last_mut().expect("running").state = s;
}

fn eval_args(p: &Program, c: &Configuration, frame: &Frame, args: &[crate::ir::Expr]) -> Result<Vec<Value>, EvalError> {
    args.iter().map(|a| evaluate(p, c, frame, a)).collect()
}

/// Issues a call on `target`: local targets push a frame, separate ones
/// send a request (and block the caller for queries).
fn issue_call(
    p: &Program,
    c: &mut Configuration,
    pid: ProcessorId,
    target: Value,
    method: MethodId,
    args: Vec<Value>,
    result: Option<VarRef>,
) {
    let Value::Ref(h, o) = target else {
        unreachable!("call on Void is never enabled")
    };
    if h == pid {
        let frame = Frame::new(p, method, o, args, ReturnTo::Local(result));
        c.processor_mut(pid).stack.push(frame);
        return;
    }
    let request = Request {
        method,
        object: o,
        args,
        caller: result.map(|_| pid),
    };
    let proc = c.processor_mut(pid);
    proc.outbox.push((h, request));
    if let Some(dest) = result {
        proc.status = Status::Waiting { callee: h, dest };
    }
}

fn fire_action(p: &Program, c: &mut Configuration, pid: ProcessorId, edge_idx: u32) {
    let frame = c.processor(pid).top().expect("running").clone();
    let g = p.method(frame.method);
    let edge = &g.edges[edge_idx as usize];
    debug_assert_eq!(edge.from, frame.state, "firing a stale edge");
    match &edge.action {
        Action::Assign { target, value } => match evaluate(p, c, &frame, value) {
            Ok(v) => {
                set_state(c, pid, edge.to);
                with_top(c, pid, |c, f| write_var(c, f, *target, v));
            }
            Err(e) => fail(c, pid, e),
        },
        Action::Branch { cond } => match evaluate(p, c, &frame, cond) {
            Ok(Value::Bool(b)) => {
                let next = if b {
                    edge.to
                } else {
                    edge.on_false.expect("branch has a false successor")
                };
                set_state(c, pid, next);
            }
            Ok(other) => unreachable!("ill-typed condition {other}"),
            Err(e) => fail(c, pid, e),
        },
        Action::CreateSeparate {
            target,
            class,
            creation,
            args,
        } => match eval_args(p, c, &frame, args) {
            Ok(args) => {
                let (np, no) = c.new_processor(p, *class);
                set_state(c, pid, edge.to);
                with_top(c, pid, |c, f| write_var(c, f, *target, Value::Ref(np, no)));
                if let Some(m) = creation {
                    let request = Request {
                        method: *m,
                        object: no,
                        args,
                        caller: None,
                    };
                    c.processor_mut(pid).outbox.push((np, request));
                }
            }
            Err(e) => fail(c, pid, e),
        },
        Action::CreateLocal {
            target,
            class,
            creation,
            args,
        } => match eval_args(p, c, &frame, args) {
            Ok(args) => {
                let o = c.new_object(p, *class, pid);
                set_state(c, pid, edge.to);
                with_top(c, pid, |c, f| write_var(c, f, *target, Value::Ref(pid, o)));
                if let Some(m) = creation {
                    let frame = Frame::new(p, *m, o, args, ReturnTo::Local(None));
                    c.processor_mut(pid).stack.push(frame);
                }
            }
            Err(e) => fail(c, pid, e),
        },
        Action::Command { target, method, args } => {
            let t = target_value(c, &frame, *target);
            match eval_args(p, c, &frame, args) {
                Ok(args) => {
                    set_state(c, pid, edge.to);
                    issue_call(p, c, pid, t, *method, args, None);
                }
                Err(e) => fail(c, pid, e),
            }
        }
        Action::Query {
            result,
            target,
            method,
            args,
        } => {
            let t = target_value(c, &frame, *target);
            match eval_args(p, c, &frame, args) {
                Ok(args) => {
                    set_state(c, pid, edge.to);
                    issue_call(p, c, pid, t, *method, args, Some(*result));
                }
                Err(e) => fail(c, pid, e),
            }
        }
        Action::LocalCall {
            target,
            method,
            args,
            result,
        } => {
            let t = target_value(c, &frame, *target);
            match eval_args(p, c, &frame, args) {
                Ok(args) => {
                    set_state(c, pid, edge.to);
                    issue_call(p, c, pid, t, *method, args, *result);
                }
                Err(e) => fail(c, pid, e),
            }
        }
        Action::Lock { targets, guard } => {
            if let Some(g) = guard {
                if let Err(e) = evaluate(p, c, &frame, g) {
                    fail(c, pid, e);
                    return;
                }
            }
            let hs = lock_handlers(c, &frame, pid, targets).expect("enabled lock has no Void target");
            for h in hs {
                *c.processor_mut(pid).holds.entry(h).or_insert(0) += 1;
                c.processor_mut(h).locked_by = Some(pid);
            }
            set_state(c, pid, edge.to);
        }
        Action::Unlock { targets } => {
            let hs = lock_handlers(c, &frame, pid, targets).expect("locked targets stay attached");
            for h in hs {
                let holds = &mut c.processor_mut(pid).holds;
                let n = holds.get_mut(&h).expect("unlocking a held processor");
                *n -= 1;
                if *n == 0 {
                    holds.remove(&h);
                    c.processor_mut(h).locked_by = None;
                }
            }
            set_state(c, pid, edge.to);
        }
        Action::PostCheck { cond } => match evaluate(p, c, &frame, cond) {
            Ok(Value::Bool(ok)) => {
                if !ok {
                    raise(
                        c,
                        pid,
                        FlagKind::Postcondition,
                        format!("postcondition of {} violated", g.label),
                    );
                }
                set_state(c, pid, edge.to);
            }
            Ok(other) => unreachable!("ill-typed postcondition {other}"),
            Err(e) => fail(c, pid, e),
        },
        Action::Noop { .. } => set_state(c, pid, edge.to),
    }
}

fn activate(p: &Program, c: &mut Configuration, pid: ProcessorId, index: usize) {
    let proc = c.processor_mut(pid);
    let r = proc.queue.remove(index);
    let return_to = match r.caller {
        Some(caller) => ReturnTo::Remote(caller),
        None => ReturnTo::Queue,
    };
    proc.stack.push(Frame::new(p, r.method, r.object, r.args, return_to));
    proc.status = Status::Running;
}

fn top_is_final(p: &Program, c: &Configuration, pid: ProcessorId) -> Option<ReturnTo> {
    let proc = c.processor(pid);
    if matches!(proc.status, Status::Failed | Status::Waiting { .. }) {
        return None;
    }
    let f = proc.top()?;
    p.method(f.method).is_final(f.state).then_some(f.return_to)
}

/// Picks one of `n > 0` candidates of a tier, listed by ascending id.
pub type TieBreak<'a> = &'a mut dyn FnMut(usize) -> usize;

fn pick(ids: &[ProcessorId], choose: TieBreak, ok: impl Fn(ProcessorId) -> bool) -> Option<ProcessorId> {
    let candidates: Vec<ProcessorId> = ids.iter().copied().filter(|id| ok(*id)).collect();
    match candidates.len() {
        0 => None,
        n => Some(candidates[choose(n).min(n - 1)]),
    }
}

/// One scheduling micro-rule; `false` at the fixpoint.
fn schedule_once(p: &Program, c: &mut Configuration, opts: SemanticsOptions, choose: TieBreak) -> bool {
    let ids: Vec<ProcessorId> = c.processors.keys().copied().collect();
    // (1) deliver outgoing requests
    if let Some(pid) = pick(&ids, choose, |id| !c.processor(id).outbox.is_empty()) {
        let (target, r) = c.processor_mut(pid).outbox.remove(0);
        c.processor_mut(target).queue.push(r);
        return true;
    }
    // (2) write back results of separate queries
    if let Some(pid) = pick(&ids, choose, |id| {
        matches!(top_is_final(p, c, id), Some(ReturnTo::Remote(_)))
    }) {
        let proc = c.processor_mut(pid);
        let frame = proc.stack.pop().expect("final frame");
        if proc.stack.is_empty() {
            proc.status = Status::Idle;
        }
        let ReturnTo::Remote(caller) = frame.return_to else {
            unreachable!()
        };
        if let Status::Waiting { callee, dest } = c.processor(caller).status {
            debug_assert_eq!(callee, pid);
            with_top(c, caller, |c, f| write_var(c, f, dest, frame.result));
            c.processor_mut(caller).status = Status::Running;
        }
        return true;
    }
    // (3) dispose of finished frames
    if let Some(pid) = pick(&ids, choose, |id| top_is_final(p, c, id).is_some()) {
        let proc = c.processor_mut(pid);
        let frame = proc.stack.pop().expect("final frame");
        if proc.stack.is_empty() {
            proc.status = Status::Idle;
        }
        if let ReturnTo::Local(Some(dest)) = frame.return_to {
            with_top(c, pid, |c, f| write_var(c, f, dest, frame.result));
        }
        return true;
    }
    // (4) dequeue the head request of an idle processor
    if opts.discipline == Discipline::Fifo {
        if let Some(pid) = pick(&ids, choose, |id| {
            let q = c.processor(id);
            q.status == Status::Idle && !q.queue.is_empty()
        }) {
            activate(p, c, pid, 0);
            return true;
        }
    }
    // (5) expression reduction happens inside each action
    false
}

/// Applies the scheduling rules to their fixpoint.
pub fn stabilize(p: &Program, c: Configuration, opts: SemanticsOptions) -> Configuration {
    stabilize_by(p, c, opts, &mut |_| 0)
}

/// [`stabilize`] with a caller-chosen order inside each tier. The
/// fixpoint does not depend on the choices.
pub fn stabilize_by(p: &Program, mut c: Configuration, opts: SemanticsOptions, choose: TieBreak) -> Configuration {
    while schedule_once(p, &mut c, opts, choose) {}
    if opts.gc {
        collect_garbage(&mut c);
    }
    c
}

/// Applies one enabled firing and stabilizes the result.
pub fn fire(p: &Program, c: &Configuration, f: Firing, opts: SemanticsOptions) -> Configuration {
    fire_by(p, c, f, opts, &mut |_| 0)
}

/// [`fire`] stabilizing through [`stabilize_by`].
pub fn fire_by(p: &Program, c: &Configuration, f: Firing, opts: SemanticsOptions, choose: TieBreak) -> Configuration {
    let mut next = c.clone();
    match f {
        Firing::Action { processor, edge } => fire_action(p, &mut next, processor, edge),
        Firing::Dequeue { processor, index } => activate(p, &mut next, processor, index as usize),
    }
    stabilize_by(p, next, opts, choose)
}

/// All successors of a stabilized configuration.
pub fn macro_step(p: &Program, c: &Configuration, opts: SemanticsOptions) -> Vec<(Firing, Configuration)> {
    enabled_actions(p, c, opts)
        .into_iter()
        .map(|f| (f, fire(p, c, f, opts)))
        .collect()
}

/// The stabilized starting configuration.
pub fn initial_state(p: &Program, opts: SemanticsOptions) -> Configuration {
    stabilize(p, crate::model::initial_configuration(p), opts)
}
