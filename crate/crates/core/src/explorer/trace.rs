use std::fmt::Write;

use crate::compiler::Program;
use crate::model::{canonical_key, Configuration, ProcessorId};
use crate::semantics::{fire, initial_state, Firing, SemanticsOptions};

/// One firing, located in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: usize,
    pub processor: ProcessorId,
    pub action: &'static str,
    pub method: String,
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub firings: Vec<Firing>,
    pub events: Vec<TraceEvent>,
    pub final_config: Configuration,
    /// `# key: value` lines written after the events.
    pub footer: Vec<(String, String)>,
}

/// Describes `f` as fired from `c`.
pub fn describe(p: &Program, c: &Configuration, f: Firing, step: usize) -> TraceEvent {
    let proc = c.processor(f.processor());
    let (action, g, pos) = match f {
        Firing::Action { edge, .. } => {
            let g = p.method(proc.top().expect("running").method);
            let e = &g.edges[edge as usize];
            (e.action.kind_name(), g, e.pos)
        }
        Firing::Dequeue { index, .. } => {
            let g = p.method(proc.queue[index as usize].method);
            ("dequeue", g, g.pos)
        }
    };
    TraceEvent {
        step,
        processor: f.processor(),
        action,
        method: g.label.clone(),
        file: g.file.clone().unwrap_or_else(|| "<input>".into()),
        line: pos.line,
    }
}

/// Applies `firings` from the initial configuration.
pub fn replay(p: &Program, firings: &[Firing], opts: SemanticsOptions) -> Trace {
    let mut c = initial_state(p, opts);
    let mut events = Vec::with_capacity(firings.len());
    for (i, f) in firings.iter().enumerate() {
        events.push(describe(p, &c, *f, i + 1));
        c = fire(p, &c, *f, opts);
    }
    Trace {
        firings: firings.to_vec(),
        events,
        final_config: c,
        footer: Vec::new(),
    }
}

impl Trace {
    pub fn final_key(&self) -> Vec<u8> {
        canonical_key(&self.final_config)
    }

    pub fn with_footer(mut self, key: &str, value: impl ToString) -> Trace {
        self.footer.push((key.to_string(), value.to_string()));
        self
    }

    /// `step \t processor \t action \t method \t file:line` per event.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}:{}",
                e.step, e.processor, e.action, e.method, e.file, e.line
            )
            .unwrap();
        }
        for (k, v) in &self.footer {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        out
    }
}
