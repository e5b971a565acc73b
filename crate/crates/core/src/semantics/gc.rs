use std::collections::BTreeSet;

use crate::model::{Configuration, ObjectId, Processor, ProcessorId, ReturnTo, Status, Value};

fn busy(p: &Processor) -> bool {
    !p.is_quiescent() || !p.holds.is_empty() || p.locked_by.is_some()
}

/// Processors reachable from the root or a busy processor through any
/// reference, lock or pending request.
fn reachable(c: &Configuration) -> BTreeSet<ProcessorId> {
    let mut seen_p = BTreeSet::new();
    let mut seen_o: BTreeSet<ObjectId> = BTreeSet::new();
    let mut work_p: Vec<ProcessorId> = c
        .processors
        .iter()
        .filter(|(_, p)| busy(p))
        .map(|(id, _)| *id)
        .collect();
    work_p.push(c.root);
    let mut work_o = vec![c.root_object];
    fn value(v: &Value, wp: &mut Vec<ProcessorId>, wo: &mut Vec<ObjectId>) {
        if let Value::Ref(p, o) = v {
            wp.push(*p);
            wo.push(*o);
        }
    }
    while !work_p.is_empty() || !work_o.is_empty() {
        if let Some(o) = work_o.pop() {
            if !seen_o.insert(o) {
                continue;
            }
            let Some(rec) = c.objects.get(&o) else {
                continue;
            };
            work_p.push(rec.handler);
            for v in &rec.attrs {
                value(v, &mut work_p, &mut work_o);
            }
            continue;
        }
        let pid = work_p.pop().expect("non-empty");
        if !seen_p.insert(pid) {
            continue;
        }
        let proc = c.processor(pid);
        for f in &proc.stack {
            work_o.push(f.object);
            for v in f.params.iter().chain(&f.locals).chain([&f.result]) {
                value(v, &mut work_p, &mut work_o);
            }
            if let ReturnTo::Remote(q) = f.return_to {
                work_p.push(q);
            }
        }
        for r in proc.queue.iter().chain(proc.outbox.iter().map(|(_, r)| r)) {
            work_o.push(r.object);
            for v in &r.args {
                value(v, &mut work_p, &mut work_o);
            }
            work_p.extend(r.caller);
        }
        work_p.extend(proc.outbox.iter().map(|(t, _)| *t));
        work_p.extend(proc.holds.keys().copied());
        work_p.extend(proc.locked_by);
        if let Status::Waiting { callee, .. } = proc.status {
            work_p.push(callee);
        }
    }
    seen_p
}

/// Removes processors that are idle, have nothing queued, take part in no
/// lock and cannot be reached from the root or a busy processor, together
/// with their objects.
pub fn collect_garbage(c: &mut Configuration) {
    let live = reachable(c);
    let dead: Vec<ProcessorId> = c.processors.keys().filter(|id| !live.contains(id)).copied().collect();
    for id in dead {
        let proc = c.processors.remove(&id).expect("listed");
        for o in proc.objects {
            c.objects.remove(&o);
        }
    }
}
