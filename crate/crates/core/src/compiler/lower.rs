use std::collections::VecDeque;

use super::{Action, ActionEdge, CompileOptions, MethodGraph, StateId};
use crate::frontend::{Pos, TypeEnv, TypedMethod, TypedStmt, TypedStmtKind};
use crate::ir::{Expr, QueryCall, Type, VarRef};

struct Builder<'a> {
    env: &'a TypeEnv,
    locals: Vec<Type>,
    edges: Vec<ActionEdge>,
    next_state: u32,
}

impl Builder<'_> {
    fn fresh(&mut self) -> StateId {
        self.next_state += 1;
        StateId(self.next_state - 1)
    }

    fn edge(&mut self, from: StateId, to: StateId, action: Action, pos: Pos, synthetic: bool) {
        self.edges.push(ActionEdge {
            from,
            to,
            on_false: None,
            action,
            pos,
            synthetic,
        });
    }

    fn emit(&mut self, from: StateId, action: Action, pos: Pos, synthetic: bool) -> StateId {
        let to = self.fresh();
        self.edge(from, to, action, pos, synthetic);
        to
    }

    /// Re-targets every edge entering `old` to `new`.
    fn redirect(&mut self, old: StateId, new: StateId) {
        for e in &mut self.edges {
            if e.to == old {
                e.to = new;
            }
            if e.on_false == Some(old) {
                e.on_false = Some(new);
            }
        }
    }

    fn temp(&mut self, ty: Type) -> VarRef {
        self.locals.push(ty);
        VarRef::Local(self.locals.len() as u16 - 1)
    }

    fn call_action(q: QueryCall, result: VarRef) -> Action {
        if q.separate {
            Action::Query {
                result,
                target: q.target,
                method: q.method,
                args: q.args,
            }
        } else {
            Action::LocalCall {
                target: q.target,
                method: q.method,
                args: q.args,
                result: Some(result),
            }
        }
    }

    fn query_type(&self, q: &QueryCall) -> Type {
        match self.env.method(q.method).result.expect("query") {
            Type::Ref { class, .. } if q.separate => Type::Ref { class, separate: true },
            t => t,
        }
    }

    /// Replaces every query call in `e` by a temporary filled in by a
    /// preceding call action; arguments are hoisted first, left to right.
    fn hoist(&mut self, e: &Expr, at: &mut StateId, pos: Pos) -> Expr {
        match e {
            Expr::Query(q) => {
                let args = self.hoist_all(&q.args, at, pos);
                let t = self.temp(self.query_type(q));
                let call = QueryCall { args, ..(**q).clone() };
                *at = self.emit(*at, Self::call_action(call, t), pos, true);
                Expr::Var(t)
            }
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(self.hoist(a, at, pos))),
            Expr::Binary(op, a, b) => {
                let a = self.hoist(a, at, pos);
                let b = self.hoist(b, at, pos);
                Expr::Binary(*op, Box::new(a), Box::new(b))
            }
            other => other.clone(),
        }
    }

    fn hoist_all(&mut self, es: &[Expr], at: &mut StateId, pos: Pos) -> Vec<Expr> {
        es.iter().map(|e| self.hoist(e, at, pos)).collect()
    }

    fn block(&mut self, stmts: &[TypedStmt], mut at: StateId) -> StateId {
        for s in stmts {
            at = self.stmt(s, at);
        }
        at
    }

    fn branch(&mut self, at: StateId, cond: Expr, pos: Pos) -> (StateId, StateId) {
        let on_true = self.fresh();
        let on_false = self.fresh();
        self.edges.push(ActionEdge {
            from: at,
            to: on_true,
            on_false: Some(on_false),
            action: Action::Branch { cond },
            pos,
            synthetic: false,
        });
        (on_true, on_false)
    }

    fn stmt(&mut self, s: &TypedStmt, from: StateId) -> StateId {
        let mut at = from;
        let pos = s.pos;
        match &s.kind {
            TypedStmtKind::Print(text) => self.emit(at, Action::Noop { note: text.clone() }, pos, false),
            TypedStmtKind::Assign { target, value } => {
                let action = match value {
                    Expr::Query(q) => {
                        let args = self.hoist_all(&q.args, &mut at, pos);
                        let call = QueryCall { args, ..(**q).clone() };
                        Self::call_action(call, *target)
                    }
                    _ => Action::Assign {
                        target: *target,
                        value: self.hoist(value, &mut at, pos),
                    },
                };
                self.emit(at, action, pos, false)
            }
            TypedStmtKind::Create {
                target,
                class,
                separate,
                creation,
                args,
            } => {
                let args = self.hoist_all(args, &mut at, pos);
                let action = if *separate {
                    Action::CreateSeparate {
                        target: *target,
                        class: *class,
                        creation: *creation,
                        args,
                    }
                } else {
                    Action::CreateLocal {
                        target: *target,
                        class: *class,
                        creation: *creation,
                        args,
                    }
                };
                self.emit(at, action, pos, false)
            }
            TypedStmtKind::Call {
                target,
                method,
                args,
                separate,
            } => {
                let args = self.hoist_all(args, &mut at, pos);
                let action = if *separate {
                    Action::Command {
                        target: *target,
                        method: *method,
                        args,
                    }
                } else {
                    Action::LocalCall {
                        target: *target,
                        method: *method,
                        args,
                        result: None,
                    }
                };
                self.emit(at, action, pos, false)
            }
            TypedStmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cond = self.hoist(cond, &mut at, pos);
                let (t, f) = self.branch(at, cond, pos);
                let t_exit = self.block(then_branch, t);
                let f_exit = self.block(else_branch, f);
                self.redirect(f_exit, t_exit);
                t_exit
            }
            TypedStmtKind::Loop { init, until, body } => {
                let head = self.block(init, at);
                let mut test = head;
                let cond = self.hoist(until, &mut test, pos);
                let (exit, entry) = self.branch(test, cond, pos);
                let body_exit = self.block(body, entry);
                self.redirect(body_exit, head);
                exit
            }
        }
    }

    /// Renumbers states breadth-first from `init`, dropping merged ones.
    #[allow(clippy::type_complexity)]
    fn finish(
        self,
        init: StateId,
        last: StateId,
    ) -> (u32, StateId, StateId, Vec<ActionEdge>, Vec<Vec<u32>>, Vec<Type>) {
        let n = self.next_state as usize;
        let mut by_from: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            by_from[e.from.index()].push(i);
        }
        let mut map: Vec<Option<u32>> = vec![None; n];
        let mut count = 0u32;
        let mut queue = VecDeque::from([init]);
        map[init.index()] = Some(0);
        count += 1;
        while let Some(s) = queue.pop_front() {
            for &i in &by_from[s.index()] {
                let e = &self.edges[i];
                for t in std::iter::once(e.to).chain(e.on_false) {
                    if map[t.index()].is_none() {
                        map[t.index()] = Some(count);
                        count += 1;
                        queue.push_back(t);
                    }
                }
            }
        }
        if map[last.index()].is_none() {
            map[last.index()] = Some(count);
            count += 1;
        }
        let remap = |s: StateId| StateId(map[s.index()].expect("reachable state"));
        let mut edges: Vec<ActionEdge> = self
            .edges
            .into_iter()
            .filter(|e| map[e.from.index()].is_some())
            .map(|mut e| {
                e.from = remap(e.from);
                e.to = remap(e.to);
                e.on_false = e.on_false.map(remap);
                e
            })
            .collect();
        edges.sort_by_key(|e| e.from);
        let mut outgoing = vec![Vec::new(); count as usize];
        for (i, e) in edges.iter().enumerate() {
            outgoing[e.from.index()].push(i as u32);
        }
        (count, remap(init), remap(last), edges, outgoing, self.locals)
    }
}

/// Lowers one checked method. Separate formals are locked by a single
/// entry `Lock` (guarded by the wait condition) and released by a single
/// `Unlock` just before the final state.
pub fn lower_method(m: &TypedMethod, env: &TypeEnv, file: Option<String>, options: CompileOptions) -> MethodGraph {
    let mut b = Builder {
        env,
        locals: m.locals.iter().map(|(_, t)| *t).collect(),
        edges: Vec::new(),
        next_state: 0,
    };
    let init = b.fresh();
    let targets = m.separate_formals();
    let locking = !targets.is_empty() || m.require.is_some();
    let mut at = init;
    if locking {
        let lock = Action::Lock {
            targets: targets.clone(),
            guard: m.require.clone(),
        };
        at = b.emit(at, lock, m.pos, true);
    }
    at = b.block(&m.body, at);
    if let (true, Some(ensure)) = (options.postconditions, &m.ensure) {
        let cond = b.hoist(ensure, &mut at, m.end_pos);
        at = b.emit(at, Action::PostCheck { cond }, m.end_pos, true);
    }
    if locking {
        at = b.emit(at, Action::Unlock { targets }, m.end_pos, true);
    }
    if at == init {
        at = b.emit(init, Action::Noop { note: String::new() }, m.pos, true);
    }
    let (state_count, init, last, edges, outgoing, locals) = b.finish(init, at);
    MethodGraph {
        id: m.id,
        class: m.class,
        name: m.name.clone(),
        label: env.method_label(m.id),
        kind: m.kind,
        file,
        pos: m.pos,
        formals: m.formals.iter().map(|(_, t)| *t).collect(),
        declared_locals: m.locals.len(),
        locals,
        result: m.result,
        state_count,
        init,
        finals: vec![last],
        edges,
        outgoing,
    }
}
