//! Run-time configurations: processors, queues, locks, frames and objects.

mod canon;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::compiler::{Program, StateId};
use crate::ir::{ClassId, MethodId, Type, VarRef};

pub use canon::canonical_key;
pub use validate::{validate, ModelDiagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcessorId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(pub u32);

impl fmt::Display for ProcessorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    /// Handler and object; the handler is always the object's handler.
    Ref(ProcessorId, ObjectId),
    Void,
}

impl Value {
    pub fn default_for(ty: Type) -> Value {
        match ty {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Ref { .. } | Type::Void => Value::Void,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Ref(p, o) => write!(f, "{o}@{p}"),
            Value::Void => f.write_str("Void"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObjectRec {
    pub class: ClassId,
    pub handler: ProcessorId,
    /// In class layout order.
    pub attrs: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Request {
    pub method: MethodId,
    pub object: ObjectId,
    pub args: Vec<Value>,
    /// Waiting caller, present for queries.
    pub caller: Option<ProcessorId>,
}

/// What happens to a frame's result once it reaches a final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReturnTo {
    /// Activated from the request queue; nothing to return.
    Queue,
    /// Separate query: the result goes back to the waiting processor.
    Remote(ProcessorId),
    /// Local call: the result, if any, goes into the frame below.
    Local(Option<VarRef>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub method: MethodId,
    pub state: StateId,
    pub params: Vec<Value>,
    pub locals: Vec<Value>,
    pub result: Value,
    pub object: ObjectId,
    pub return_to: ReturnTo,
}

impl Frame {
    pub fn new(p: &Program, method: MethodId, object: ObjectId, params: Vec<Value>, return_to: ReturnTo) -> Frame {
        let g = p.method(method);
        Frame {
            method,
            state: g.init,
            params,
            locals: g.locals.iter().map(|t| Value::default_for(*t)).collect(),
            result: g.result.map(Value::default_for).unwrap_or(Value::Void),
            object,
            return_to,
        }
    }

    pub fn read(&self, v: VarRef) -> Option<Value> {
        match v {
            VarRef::Formal(i) => self.params.get(i as usize).copied(),
            VarRef::Local(i) => self.locals.get(i as usize).copied(),
            VarRef::Result => Some(self.result),
            VarRef::Attr(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Idle,
    Running,
    /// Blocked on a separate query until `callee` writes the result to `dest`.
    Waiting {
        callee: ProcessorId,
        dest: VarRef,
    },
    /// Stopped by a run-time error.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Processor {
    pub locked_by: Option<ProcessorId>,
    /// Hold counts of the locks this processor has acquired.
    pub holds: BTreeMap<ProcessorId, u32>,
    pub queue: Vec<Request>,
    /// Requests created by the last action, not yet delivered.
    pub outbox: Vec<(ProcessorId, Request)>,
    /// Bottom first.
    pub stack: Vec<Frame>,
    pub status: Status,
    pub objects: BTreeSet<ObjectId>,
}

impl Processor {
    pub fn new() -> Processor {
        Processor {
            locked_by: None,
            holds: BTreeMap::new(),
            queue: Vec::new(),
            outbox: Vec::new(),
            stack: Vec::new(),
            status: Status::Idle,
            objects: BTreeSet::new(),
        }
    }

    pub fn top(&self) -> Option<&Frame> {
        self.stack.last()
    }

    pub fn is_quiescent(&self) -> bool {
        self.status == Status::Idle && self.queue.is_empty() && self.outbox.is_empty()
    }
}

impl Default for Processor {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlagKind {
    Postcondition,
    VoidCall,
    RuntimeError,
}

impl FlagKind {
    pub fn name(self) -> &'static str {
        match self {
            FlagKind::Postcondition => "postcondition",
            FlagKind::VoidCall => "void_call",
            FlagKind::RuntimeError => "runtime",
        }
    }
}

/// A raised violation, located by the method and control state that raised it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ErrorFlag {
    pub kind: FlagKind,
    pub method: MethodId,
    pub state: StateId,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    /// Digest of the program this configuration belongs to.
    pub program: [u8; 32],
    pub processors: BTreeMap<ProcessorId, Processor>,
    pub objects: BTreeMap<ObjectId, ObjectRec>,
    pub next_processor: u32,
    pub next_object: u32,
    pub root: ProcessorId,
    pub root_object: ObjectId,
    pub flags: BTreeSet<ErrorFlag>,
}

impl Configuration {
    pub fn processor(&self, id: ProcessorId) -> &Processor {
        &self.processors[&id]
    }

    pub fn processor_mut(&mut self, id: ProcessorId) -> &mut Processor {
        self.processors.get_mut(&id).expect("live processor")
    }

    pub fn object(&self, id: ObjectId) -> &ObjectRec {
        &self.objects[&id]
    }

    pub fn ref_to(&self, o: ObjectId) -> Value {
        Value::Ref(self.object(o).handler, o)
    }

    /// Allocates a processor that handles one new object of `class`.
    pub fn new_processor(&mut self, p: &Program, class: ClassId) -> (ProcessorId, ObjectId) {
        let pid = ProcessorId(self.next_processor);
        self.next_processor += 1;
        self.processors.insert(pid, Processor::new());
        let oid = self.new_object(p, class, pid);
        (pid, oid)
    }

    pub fn new_object(&mut self, p: &Program, class: ClassId, handler: ProcessorId) -> ObjectId {
        let oid = ObjectId(self.next_object);
        self.next_object += 1;
        let attrs = p
            .env
            .class(class)
            .attributes
            .iter()
            .map(|(_, t)| Value::default_for(*t))
            .collect();
        self.objects.insert(oid, ObjectRec { class, handler, attrs });
        self.processor_mut(handler).objects.insert(oid);
        oid
    }

    /// Every processor idle with nothing left to do.
    pub fn is_terminated(&self) -> bool {
        self.processors.values().all(|p| p.is_quiescent())
    }

    /// Applies an id renaming everywhere. Both maps must be injective on
    /// the ids present.
    pub fn map_ids(&self, fp: impl Fn(ProcessorId) -> ProcessorId, fo: impl Fn(ObjectId) -> ObjectId) -> Configuration {
        let val = |v: &Value| match v {
            Value::Ref(p, o) => Value::Ref(fp(*p), fo(*o)),
            other => *other,
        };
        let vals = |vs: &[Value]| vs.iter().map(val).collect::<Vec<_>>();
        let req = |r: &Request| Request {
            method: r.method,
            object: fo(r.object),
            args: vals(&r.args),
            caller: r.caller.map(&fp),
        };
        let processors = self
            .processors
            .iter()
            .map(|(id, p)| {
                let q = Processor {
                    locked_by: p.locked_by.map(&fp),
                    holds: p.holds.iter().map(|(h, n)| (fp(*h), *n)).collect(),
                    queue: p.queue.iter().map(req).collect(),
                    outbox: p.outbox.iter().map(|(t, r)| (fp(*t), req(r))).collect(),
                    stack: p
                        .stack
                        .iter()
                        .map(|f| Frame {
                            method: f.method,
                            state: f.state,
                            params: vals(&f.params),
                            locals: vals(&f.locals),
                            result: val(&f.result),
                            object: fo(f.object),
                            return_to: match f.return_to {
                                ReturnTo::Remote(c) => ReturnTo::Remote(fp(c)),
                                other => other,
                            },
                        })
                        .collect(),
                    status: match p.status {
                        Status::Waiting { callee, dest } => Status::Waiting {
                            callee: fp(callee),
                            dest,
                        },
                        other => other,
                    },
                    objects: p.objects.iter().map(|o| fo(*o)).collect(),
                };
                (fp(*id), q)
            })
            .collect();
        let objects = self
            .objects
            .iter()
            .map(|(id, o)| {
                (
                    fo(*id),
                    ObjectRec {
                        class: o.class,
                        handler: fp(o.handler),
                        attrs: vals(&o.attrs),
                    },
                )
            })
            .collect();
        Configuration {
            program: self.program,
            processors,
            objects,
            next_processor: self.next_processor,
            next_object: self.next_object,
            root: fp(self.root),
            root_object: fo(self.root_object),
            flags: self.flags.clone(),
        }
    }

    /// Node and edge counts of the configuration viewed as a graph, in the
    /// vocabulary of the GXL export.
    pub fn graph_size(&self) -> (usize, usize) {
        let mut nodes = self.processors.len() + self.objects.len() + self.flags.len();
        let mut edges = self.objects.len();
        let mut states = BTreeSet::new();
        for p in self.processors.values() {
            nodes += p.stack.len() + p.queue.len() + p.outbox.len();
            edges += 2 * p.stack.len() + 2 * p.queue.len() + 2 * p.outbox.len();
            edges += p.holds.len();
            edges += usize::from(matches!(p.status, Status::Waiting { .. }));
            states.extend(p.stack.iter().map(|f| (f.method, f.state)));
        }
        nodes += states.len();
        let refs = |vs: &[Value]| vs.iter().filter(|v| matches!(v, Value::Ref(..))).count();
        for o in self.objects.values() {
            edges += refs(&o.attrs);
        }
        for p in self.processors.values() {
            for f in &p.stack {
                edges += refs(&f.params) + refs(&f.locals) + refs(std::slice::from_ref(&f.result));
            }
        }
        (nodes, edges)
    }
}

/// The configuration before anything runs: one root processor whose root
/// object is about to execute `make`.
pub fn initial_configuration(p: &Program) -> Configuration {
    let mut c = Configuration {
        program: p.digest,
        processors: BTreeMap::new(),
        objects: BTreeMap::new(),
        next_processor: 0,
        next_object: 0,
        root: ProcessorId(0),
        root_object: ObjectId(0),
        flags: BTreeSet::new(),
    };
    let (root, obj) = c.new_processor(p, p.root_class);
    c.root = root;
    c.root_object = obj;
    let frame = Frame::new(p, p.root, obj, Vec::new(), ReturnTo::Queue);
    let proc = c.processor_mut(root);
    proc.stack.push(frame);
    proc.status = Status::Running;
    c
}
