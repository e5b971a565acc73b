use std::fmt;

use super::{Configuration, Frame, ProcessorId, Request, ReturnTo, Status, Value};
use crate::compiler::Program;

/// A violated configuration invariant, tagged with the owning entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDiagnostic {
    pub entity: String,
    pub message: String,
}

impl fmt::Display for ModelDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

struct Checker<'a> {
    c: &'a Configuration,
    p: &'a Program,
    out: Vec<ModelDiagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, entity: impl fmt::Display, message: impl Into<String>) {
        self.out.push(ModelDiagnostic {
            entity: entity.to_string(),
            message: message.into(),
        });
    }

    fn processor_ref(&mut self, owner: &str, id: ProcessorId) {
        if !self.c.processors.contains_key(&id) {
            self.report(owner, format!("unresolved reference to {id}"));
        }
    }

    fn value(&mut self, owner: &str, v: &Value) {
        if let Value::Ref(p, o) = v {
            match self.c.objects.get(o) {
                None => self.report(owner, format!("unresolved reference to {o}")),
                Some(rec) if rec.handler != *p => self.report(owner, format!("reference {v} names the wrong handler")),
                Some(_) => self.processor_ref(owner, *p),
            }
        }
    }

    fn request(&mut self, owner: &str, r: &Request) {
        if !self.c.objects.contains_key(&r.object) {
            self.report(owner, format!("unresolved reference to {}", r.object));
        }
        r.args.iter().for_each(|v| self.value(owner, v));
        if let Some(m) = self.p.methods.get(r.method.index()) {
            if m.formals.len() != r.args.len() {
                self.report(owner, format!("request for {} has {} arguments", m.label, r.args.len()));
            }
            if r.caller.is_some() != m.result.is_some() {
                self.report(owner, format!("request for {} has a mismatched caller", m.label));
            }
        } else {
            self.report(owner, "request names an unknown method");
        }
        if let Some(c) = r.caller {
            self.processor_ref(owner, c);
        }
    }

    fn frame(&mut self, owner: &str, f: &Frame) {
        let Some(g) = self.p.methods.get(f.method.index()) else {
            self.report(owner, "frame names an unknown method");
            return;
        };
        if f.state.0 >= g.state_count {
            self.report(owner, format!("state {} outside {}", f.state, g.label));
        }
        if f.params.len() != g.formals.len() || f.locals.len() != g.locals.len() {
            self.report(owner, format!("frame bindings do not match {}", g.label));
        }
        if !self.c.objects.contains_key(&f.object) {
            self.report(owner, format!("unresolved reference to {}", f.object));
        }
        for v in f.params.iter().chain(&f.locals).chain([&f.result]) {
            self.value(owner, v);
        }
        if let ReturnTo::Remote(c) = f.return_to {
            self.processor_ref(owner, c);
        }
    }

    fn run(&mut self) {
        let c = self.c;
        if !c.processors.contains_key(&c.root) {
            self.report("configuration", "root processor missing");
        }
        for (id, proc) in &c.processors {
            let owner = id.to_string();
            if let Some(l) = proc.locked_by {
                self.processor_ref(&owner, l);
                if l == *id {
                    self.report(&owner, "locked by itself");
                }
                let holders: Vec<_> = c
                    .processors
                    .iter()
                    .filter(|(_, q)| q.holds.get(id).is_some_and(|n| *n > 0))
                    .map(|(q, _)| *q)
                    .collect();
                if holders.len() > 1 {
                    self.report(&owner, "multiple lockers");
                }
                if holders != [l] {
                    self.report(&owner, format!("locked_by {l} but not held by it"));
                }
            }
            for (h, n) in &proc.holds {
                if *n == 0 {
                    self.report(&owner, format!("zero hold count on {h}"));
                }
                match c.processors.get(h) {
                    None => self.report(&owner, format!("unresolved reference to {h}")),
                    Some(q) if q.locked_by != Some(*id) => {
                        let msg = if q.locked_by.is_some() {
                            "multiple lockers".to_string()
                        } else {
                            format!("holds {h} which is not locked")
                        };
                        self.report(h, msg)
                    }
                    Some(_) => {}
                }
            }
            match (proc.status, proc.stack.is_empty()) {
                (Status::Idle, false) => self.report(&owner, "idle with a non-empty stack"),
                (Status::Running | Status::Waiting { .. }, true) => self.report(&owner, "active with an empty stack"),
                _ => {}
            }
            if let Status::Waiting { callee, .. } = proc.status {
                self.processor_ref(&owner, callee);
            }
            for o in &proc.objects {
                match c.objects.get(o) {
                    Some(rec) if rec.handler == *id => {}
                    _ => self.report(&owner, format!("handles {o} inconsistently")),
                }
            }
            for f in &proc.stack {
                self.frame(&owner, f);
            }
            for r in &proc.queue {
                self.request(&owner, r);
            }
            for (t, r) in &proc.outbox {
                self.processor_ref(&owner, *t);
                self.request(&owner, r);
            }
        }
        for (id, o) in &c.objects {
            let owner = id.to_string();
            match c.processors.get(&o.handler) {
                Some(p) if p.objects.contains(id) => {}
                _ => self.report(&owner, format!("handler {} does not list it", o.handler)),
            }
            let layout = self.p.env.classes.get(o.class.index()).map(|k| k.attributes.len());
            if layout != Some(o.attrs.len()) {
                self.report(&owner, "attributes do not match the class layout");
            }
            o.attrs.iter().for_each(|v| self.value(&owner, v));
        }
    }
}

/// Checks the configuration invariants; empty iff all hold.
pub fn validate(c: &Configuration, p: &Program) -> Vec<ModelDiagnostic> {
    let mut checker = Checker { c, p, out: Vec::new() };
    checker.run();
    checker.out
}
