use std::fmt::Write;

use super::{Action, MethodGraph, Program};
use crate::ir::{CallTarget, Expr, VarRef};

pub fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn var(g: &MethodGraph, v: VarRef) -> String {
    match v {
        VarRef::Local(i) if i as usize >= g.declared_locals => format!("tmp{i}"),
        other => other.to_string(),
    }
}

fn target(g: &MethodGraph, t: CallTarget) -> String {
    match t {
        CallTarget::Current => "Current".into(),
        CallTarget::Var(v) => var(g, v),
    }
}

fn expr(g: &MethodGraph, p: &Program, e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Void => "Void".into(),
        Expr::Current => "Current".into(),
        Expr::Var(v) => var(g, *v),
        Expr::Field { target, attr } => format!("{}.attr#{attr}", var(g, *target)),
        Expr::Query(q) => format!(
            "{}.{}({})",
            target(g, q.target),
            p.env.method(q.method).name,
            args(g, p, &q.args)
        ),
        Expr::Unary(op, a) => format!("{op:?}({})", expr(g, p, a)),
        Expr::Binary(op, a, b) => format!("({} {} {})", expr(g, p, a), op.symbol(), expr(g, p, b)),
    }
}

fn args(g: &MethodGraph, p: &Program, es: &[Expr]) -> String {
    es.iter().map(|e| expr(g, p, e)).collect::<Vec<_>>().join(", ")
}

fn label(g: &MethodGraph, p: &Program, a: &Action) -> String {
    let name = |m| p.env.method(m).name.clone();
    let vars = |vs: &[VarRef]| vs.iter().map(|v| var(g, *v)).collect::<Vec<_>>().join(", ");
    match a {
        Action::Assign { target, value } => format!("{} := {}", var(g, *target), expr(g, p, value)),
        Action::Branch { cond } => format!("branch {}", expr(g, p, cond)),
        Action::CreateSeparate { target, class, .. } => {
            format!("create separate {} : {}", var(g, *target), p.class_name(*class))
        }
        Action::CreateLocal { target, class, .. } => {
            format!("create {} : {}", var(g, *target), p.class_name(*class))
        }
        Action::Command {
            target: t,
            method,
            args: a,
        } => {
            format!("command {}.{}({})", target(g, *t), name(*method), args(g, p, a))
        }
        Action::Query {
            result,
            target: t,
            method,
            args: a,
        } => format!(
            "{} := query {}.{}({})",
            var(g, *result),
            target(g, *t),
            name(*method),
            args(g, p, a)
        ),
        Action::LocalCall {
            target: t,
            method,
            args: a,
            result,
        } => {
            let call = format!("call {}.{}({})", target(g, *t), name(*method), args(g, p, a));
            match result {
                Some(r) => format!("{} := {call}", var(g, *r)),
                None => call,
            }
        }
        Action::Lock { targets, guard } => match guard {
            Some(c) => format!("lock {{{}}} when {}", vars(targets), expr(g, p, c)),
            None => format!("lock {{{}}}", vars(targets)),
        },
        Action::Unlock { targets } => format!("unlock {{{}}}", vars(targets)),
        Action::PostCheck { cond } => format!("ensure {}", expr(g, p, cond)),
        Action::Noop { note } if note.is_empty() => "noop".into(),
        Action::Noop { note } => format!("print {note}"),
    }
}

/// One `digraph` per method graph, concatenated.
pub fn program_to_dot(p: &Program) -> String {
    let mut out = String::new();
    for g in &p.methods {
        writeln!(out, "digraph \"{}\" {{", dot_escape(&g.label)).unwrap();
        writeln!(out, "  node [shape=circle];").unwrap();
        for s in g.states() {
            let shape = if g.is_final(s) { "doublecircle" } else { "circle" };
            let mark = if s == g.init { ", style=bold" } else { "" };
            writeln!(out, "  {s} [shape={shape}{mark}];").unwrap();
        }
        for e in &g.edges {
            let text = dot_escape(&label(g, p, &e.action));
            match e.on_false {
                Some(f) => {
                    writeln!(out, "  {} -> {} [label=\"{text} [true]\"];", e.from, e.to).unwrap();
                    writeln!(out, "  {} -> {f} [label=\"{text} [false]\"];", e.from).unwrap();
                }
                None => writeln!(out, "  {} -> {} [label=\"{text}\"];", e.from, e.to).unwrap(),
            }
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::tests::compile;
    use super::*;

    #[test]
    fn one_digraph_per_method() {
        let p = compile("class A root x: INTEGER make do x := 1 end go do end end");
        let dot = program_to_dot(&p);
        assert_eq!(dot.matches("digraph").count(), 2);
        assert!(dot.contains("digraph \"A.make\""));
        assert!(dot.contains("attr#0 := 1"));
    }
}
