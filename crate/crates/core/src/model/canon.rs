//! Canonical keys: a byte serialization that is invariant under renaming of
//! processor and object ids.
//!
//! Ids are renamed in breadth-first discovery order from the root
//! processor, following only position-ordered links (stack, queue, outbox,
//! status, lock owner, object handler, attributes in layout order). Entities
//! not reached that way are named by a local signature; ties between equal
//! signatures are resolved by trying each candidate and keeping the smallest
//! key, up to a fixed budget.

use std::collections::{BTreeMap, VecDeque};

use super::{Configuration, ObjectId, ObjectRec, Processor, ProcessorId, Request, ReturnTo, Status, Value};
use crate::ir::VarRef;

const MAGIC: &[u8; 4] = b"CSK1";
const UNNAMED: u32 = u32::MAX;
/// Upper bound on completed tie-break branches per key.
const BRANCH_BUDGET: usize = 64;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn tag(&mut self, t: u8) {
        self.0.push(t);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn len(&mut self, n: usize) {
        self.u32(n as u32);
    }

    fn bytes(&mut self, b: &[u8]) {
        self.len(b.len());
        self.0.extend_from_slice(b);
    }

    fn var(&mut self, v: VarRef) {
        match v {
            VarRef::Formal(i) => {
                self.tag(0);
                self.u32(i.into())
            }
            VarRef::Local(i) => {
                self.tag(1);
                self.u32(i.into())
            }
            VarRef::Attr(i) => {
                self.tag(2);
                self.u32(i.into())
            }
            VarRef::Result => self.tag(3),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Entity {
    P(ProcessorId),
    O(ObjectId),
}

#[derive(Clone)]
struct Naming {
    p: BTreeMap<ProcessorId, u32>,
    o: BTreeMap<ObjectId, u32>,
    pending: VecDeque<Entity>,
}

impl Naming {
    fn p(&mut self, id: ProcessorId) {
        if !self.p.contains_key(&id) {
            self.p.insert(id, self.p.len() as u32);
            self.pending.push_back(Entity::P(id));
        }
    }

    fn o(&mut self, id: ObjectId) {
        if !self.o.contains_key(&id) {
            self.o.insert(id, self.o.len() as u32);
            self.pending.push_back(Entity::O(id));
        }
    }

    fn value(&mut self, v: &Value) {
        if let Value::Ref(p, o) = v {
            self.p(*p);
            self.o(*o);
        }
    }

    fn request(&mut self, r: &Request) {
        self.o(r.object);
        r.args.iter().for_each(|v| self.value(v));
        if let Some(c) = r.caller {
            self.p(c);
        }
    }

    /// Names everything reachable from the pending entities.
    fn traverse(&mut self, c: &Configuration) {
        while let Some(e) = self.pending.pop_front() {
            match e {
                Entity::P(id) => {
                    let p = c.processor(id);
                    for f in &p.stack {
                        self.o(f.object);
                        for v in f.params.iter().chain(&f.locals).chain([&f.result]) {
                            self.value(v);
                        }
                        if let ReturnTo::Remote(caller) = f.return_to {
                            self.p(caller);
                        }
                    }
                    if let Status::Waiting { callee, .. } = p.status {
                        self.p(callee);
                    }
                    for r in &p.queue {
                        self.request(r);
                    }
                    for (t, r) in &p.outbox {
                        self.p(*t);
                        self.request(r);
                    }
                    if let Some(l) = p.locked_by {
                        self.p(l);
                    }
                }
                Entity::O(id) => {
                    let o = c.object(id);
                    self.p(o.handler);
                    o.attrs.iter().for_each(|v| self.value(v));
                }
            }
        }
    }

    fn unnamed(&self, c: &Configuration) -> Vec<Entity> {
        let ps = c
            .processors
            .keys()
            .filter(|id| !self.p.contains_key(id))
            .map(|id| Entity::P(*id));
        let os = c
            .objects
            .keys()
            .filter(|id| !self.o.contains_key(id))
            .map(|id| Entity::O(*id));
        ps.chain(os).collect()
    }

    fn signature(&self, c: &Configuration, e: Entity) -> Vec<u8> {
        let ids = Ids {
            p: |p: ProcessorId| self.p.get(&p).copied().unwrap_or(UNNAMED),
            o: |o: ObjectId| self.o.get(&o).copied().unwrap_or(UNNAMED),
        };
        let mut w = Writer::default();
        match e {
            Entity::P(id) => {
                w.tag(0);
                write_processor(&mut w, c.processor(id), &ids);
            }
            Entity::O(id) => {
                w.tag(1);
                write_object(&mut w, c.object(id), &ids);
            }
        }
        w.0
    }

    fn name(&mut self, e: Entity) {
        match e {
            Entity::P(id) => self.p(id),
            Entity::O(id) => self.o(id),
        }
    }
}

/// Id mapping applied while writing.
struct Ids<P, O> {
    p: P,
    o: O,
}

impl<P: Fn(ProcessorId) -> u32, O: Fn(ObjectId) -> u32> Ids<P, O> {
    fn value(&self, v: &Value) -> Value {
        match v {
            Value::Ref(p, o) => Value::Ref(ProcessorId((self.p)(*p)), ObjectId((self.o)(*o))),
            other => *other,
        }
    }
}

fn write_value(w: &mut Writer, v: &Value) {
    match v {
        Value::Int(i) => {
            w.tag(0);
            w.i64(*i)
        }
        Value::Bool(b) => {
            w.tag(1);
            w.tag(*b as u8)
        }
        Value::Ref(p, o) => {
            w.tag(2);
            w.u32(p.0);
            w.u32(o.0)
        }
        Value::Void => w.tag(3),
    }
}

fn write_values<P, O>(w: &mut Writer, vs: &[Value], ids: &Ids<P, O>)
where
    P: Fn(ProcessorId) -> u32,
    O: Fn(ObjectId) -> u32,
{
    w.len(vs.len());
    vs.iter().for_each(|v| write_value(w, &ids.value(v)));
}

fn write_request<P, O>(w: &mut Writer, r: &Request, ids: &Ids<P, O>)
where
    P: Fn(ProcessorId) -> u32,
    O: Fn(ObjectId) -> u32,
{
    w.u32(r.method.0);
    w.u32((ids.o)(r.object));
    write_values(w, &r.args, ids);
    match r.caller {
        Some(c) => {
            w.tag(1);
            w.u32((ids.p)(c))
        }
        None => w.tag(0),
    }
}

fn write_object<P, O>(w: &mut Writer, o: &ObjectRec, ids: &Ids<P, O>)
where
    P: Fn(ProcessorId) -> u32,
    O: Fn(ObjectId) -> u32,
{
    w.u32(o.class.0);
    w.u32((ids.p)(o.handler));
    write_values(w, &o.attrs, ids);
}

fn write_processor<P, O>(w: &mut Writer, p: &Processor, ids: &Ids<P, O>)
where
    P: Fn(ProcessorId) -> u32,
    O: Fn(ObjectId) -> u32,
{
    match p.locked_by {
        Some(l) => {
            w.tag(1);
            w.u32((ids.p)(l))
        }
        None => w.tag(0),
    }
    let mut holds: Vec<(u32, u32)> = p.holds.iter().map(|(h, n)| ((ids.p)(*h), *n)).collect();
    holds.sort_unstable();
    w.len(holds.len());
    for (h, n) in holds {
        w.u32(h);
        w.u32(n);
    }
    w.len(p.queue.len());
    p.queue.iter().for_each(|r| write_request(w, r, ids));
    w.len(p.outbox.len());
    for (t, r) in &p.outbox {
        w.u32((ids.p)(*t));
        write_request(w, r, ids);
    }
    w.len(p.stack.len());
    for f in &p.stack {
        w.u32(f.method.0);
        w.u32(f.state.0);
        write_values(w, &f.params, ids);
        write_values(w, &f.locals, ids);
        write_value(w, &ids.value(&f.result));
        w.u32((ids.o)(f.object));
        match f.return_to {
            ReturnTo::Queue => w.tag(0),
            ReturnTo::Remote(c) => {
                w.tag(1);
                w.u32((ids.p)(c))
            }
            ReturnTo::Local(None) => w.tag(2),
            ReturnTo::Local(Some(v)) => {
                w.tag(3);
                w.var(v)
            }
        }
    }
    match p.status {
        Status::Idle => w.tag(0),
        Status::Running => w.tag(1),
        Status::Waiting { callee, dest } => {
            w.tag(2);
            w.u32((ids.p)(callee));
            w.var(dest)
        }
        Status::Failed => w.tag(3),
    }
    let mut objects: Vec<u32> = p.objects.iter().map(|o| (ids.o)(*o)).collect();
    objects.sort_unstable();
    w.len(objects.len());
    objects.into_iter().for_each(|o| w.u32(o));
}

/// Serializes `c` under a complete naming, entities in new-id order.
fn serialize(c: &Configuration, naming: &Naming) -> Vec<u8> {
    let ids = Ids {
        p: |p: ProcessorId| naming.p[&p],
        o: |o: ObjectId| naming.o[&o],
    };
    let mut w = Writer::default();
    w.0.extend_from_slice(MAGIC);
    w.bytes(&c.program);
    w.u32((ids.p)(c.root));
    w.u32(naming.o.get(&c.root_object).copied().unwrap_or(UNNAMED));
    let mut ps: Vec<(u32, &Processor)> = c.processors.iter().map(|(id, p)| ((ids.p)(*id), p)).collect();
    ps.sort_unstable_by_key(|(id, _)| *id);
    w.len(ps.len());
    for (id, p) in ps {
        w.u32(id);
        write_processor(&mut w, p, &ids);
    }
    let mut os: Vec<(u32, &ObjectRec)> = c.objects.iter().map(|(id, o)| ((ids.o)(*id), o)).collect();
    os.sort_unstable_by_key(|(id, _)| *id);
    w.len(os.len());
    for (id, o) in os {
        w.u32(id);
        write_object(&mut w, o, &ids);
    }
    w.len(c.flags.len());
    for f in &c.flags {
        w.tag(f.kind as u8);
        w.u32(f.method.0);
        w.u32(f.state.0);
        w.bytes(f.detail.as_bytes());
    }
    w.0
}

fn complete(c: &Configuration, mut naming: Naming, budget: &mut usize) -> Vec<u8> {
    loop {
        naming.traverse(c);
        let rest = naming.unnamed(c);
        if rest.is_empty() {
            *budget = budget.saturating_sub(1);
            return serialize(c, &naming);
        }
        let mut sigs: Vec<(Vec<u8>, Entity)> = rest.iter().map(|e| (naming.signature(c, *e), *e)).collect();
        sigs.sort();
        // entities with a unique signature are named together, in signature order
        let mut unique = false;
        for (i, (sig, e)) in sigs.iter().enumerate() {
            let dup = (i > 0 && sigs[i - 1].0 == *sig) || sigs.get(i + 1).is_some_and(|n| n.0 == *sig);
            if !dup {
                naming.name(*e);
                unique = true;
            }
        }
        if unique {
            continue;
        }
        let best = &sigs[0].0;
        let tied: Vec<Entity> = sigs.iter().take_while(|(s, _)| s == best).map(|(_, e)| *e).collect();
        if *budget <= 1 {
            naming.name(tied[0]);
            continue;
        }
        let mut keys = Vec::with_capacity(tied.len());
        for e in tied {
            if *budget == 0 && !keys.is_empty() {
                break;
            }
            let mut branch = naming.clone();
            branch.name(e);
            keys.push(complete(c, branch, budget));
        }
        return keys.into_iter().min().expect("at least one branch");
    }
}

/// Deterministic key, equal for configurations that differ only by a
/// consistent renaming of processor and object ids.
pub fn canonical_key(c: &Configuration) -> Vec<u8> {
    let mut naming = Naming {
        p: BTreeMap::new(),
        o: BTreeMap::new(),
        pending: VecDeque::new(),
    };
    naming.p(c.root);
    if c.objects.contains_key(&c.root_object) {
        naming.o(c.root_object);
    }
    let mut budget = BRANCH_BUDGET;
    complete(c, naming, &mut budget)
}
