use std::fmt::Write;

use crate::compiler::dot_escape;
use crate::compiler::Program;
use crate::explorer::{describe, StateSpace};
use crate::model::{Configuration, Status, Value};

/// The explored state space; violating states are filled red and labelled
/// with their violation kinds.
pub fn space_to_dot(p: &Program, space: &StateSpace) -> String {
    let mut out = String::from("digraph states {\n  node [shape=circle];\n");
    for (id, s) in space.states.iter().enumerate() {
        if s.violations.is_empty() {
            let shape = if s.enabled.is_empty() {
                " shape=doublecircle"
            } else {
                ""
            };
            writeln!(out, "  s{id} [label=\"{id}\"{shape}];").unwrap();
        } else {
            let kinds: Vec<&str> = s.violations.iter().map(|v| v.kind.name()).collect();
            writeln!(
                out,
                "  s{id} [label=\"{id}\\n{}\" style=filled fillcolor=red violation=\"{}\"];",
                kinds.join(","),
                kinds.join(",")
            )
            .unwrap();
        }
    }
    for (from, f, to) in &space.transitions {
        let e = describe(p, &space.states[*from].config, *f, 0);
        let label = dot_escape(&format!("{} {} {}", e.processor, e.action, e.method));
        writeln!(out, "  s{from} -> s{to} [label=\"{label}\"];").unwrap();
    }
    out.push_str("}\n");
    out
}

/// One configuration: processors as boxes, objects as ellipses.
pub fn config_to_dot(p: &Program, c: &Configuration) -> String {
    let mut out = String::from("digraph configuration {\n");
    for (id, proc) in &c.processors {
        let status = match proc.status {
            Status::Idle => "idle".to_string(),
            Status::Running => "running".to_string(),
            Status::Waiting { callee, .. } => format!("waiting for {callee}"),
            Status::Failed => "failed".to_string(),
        };
        let frames: Vec<String> = proc
            .stack
            .iter()
            .rev()
            .map(|f| format!("{} @{}", p.method(f.method).label, f.state))
            .collect();
        let mut label = format!("{id} [{status}]");
        for f in frames {
            label.push_str("\\n");
            label.push_str(&dot_escape(&f));
        }
        if !proc.queue.is_empty() {
            write!(label, "\\nqueue: {}", proc.queue.len()).unwrap();
        }
        writeln!(out, "  {id} [shape=box label=\"{label}\"];").unwrap();
        for h in proc.holds.keys() {
            writeln!(out, "  {id} -> {h} [label=\"lock\" color=red];").unwrap();
        }
        if let Status::Waiting { callee, .. } = proc.status {
            writeln!(out, "  {id} -> {callee} [label=\"waits\" style=dashed];").unwrap();
        }
    }
    for (id, o) in &c.objects {
        writeln!(out, "  {id} [label=\"{id}: {}\"];", p.class_name(o.class)).unwrap();
        writeln!(out, "  {id} -> {} [label=\"handler\"];", o.handler).unwrap();
        let class = p.env.class(o.class);
        for ((name, _), v) in class.attributes.iter().zip(&o.attrs) {
            if let Value::Ref(_, t) = v {
                writeln!(out, "  {id} -> {t} [label=\"{}\"];", dot_escape(name)).unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}
