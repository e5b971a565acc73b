//! GXL encoding of a single configuration.
//!
//! Node types: `Processor` (`pN`), `Object` (`oN`), `Frame` (`pN.fI`),
//! `Request` (`pN.qI`, `pN.outI`), `ControlState` (`mM.sS`), `Flag`.
//!
//! Edge types:
//! - `handler`: object to its processor
//! - `lock`: holder to locked processor, `count` attribute
//! - `frame`: processor to frame, `depth` attribute (0 is the bottom)
//! - `current_state`: frame to control state
//! - `self`: frame to its current object
//! - `returns_to`: frame to the processor waiting for its result
//! - `queue`: processor to its first queued request, then `next`
//! - `outbox`: processor to an undelivered request, `index` attribute
//! - `deliver_to`: undelivered request to its target processor
//! - `target`: request to its object; `caller`: request to the querying processor
//! - `waits`: processor to the callee of its pending query, `dest` attribute
//!
//! Values are `int`, `bool`, `locator` (references, `#oN`) or the enum `Void`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use roxmltree::{Document, Node};

use crate::compiler::{Program, StateId};
use crate::ir::{MethodId, VarRef};
use crate::model::{
    Configuration, ErrorFlag, FlagKind, Frame, ObjectId, ObjectRec, Processor, ProcessorId, Request, ReturnTo, Status,
    Value,
};

const XLINK: &str = "http://www.w3.org/1999/xlink";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid GXL: {0}")]
pub struct GxlError(pub String);

fn bad(msg: impl Into<String>) -> GxlError {
    GxlError(msg.into())
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn var_name(v: VarRef) -> String {
    match v {
        VarRef::Formal(i) => format!("formal:{i}"),
        VarRef::Local(i) => format!("local:{i}"),
        VarRef::Attr(i) => format!("attr:{i}"),
        VarRef::Result => "result".into(),
    }
}

fn parse_var(s: &str) -> Result<VarRef, GxlError> {
    if s == "result" {
        return Ok(VarRef::Result);
    }
    let (kind, idx) = s.split_once(':').ok_or_else(|| bad(format!("bad variable `{s}`")))?;
    let idx: u16 = idx.parse().map_err(|_| bad(format!("bad variable `{s}`")))?;
    match kind {
        "formal" => Ok(VarRef::Formal(idx)),
        "local" => Ok(VarRef::Local(idx)),
        "attr" => Ok(VarRef::Attr(idx)),
        _ => Err(bad(format!("bad variable `{s}`"))),
    }
}

struct Out {
    text: String,
    edges: usize,
}

impl Out {
    fn value(&mut self, name: &str, v: &Value) {
        let body = match v {
            Value::Int(i) => format!("<int>{i}</int>"),
            Value::Bool(b) => format!("<bool>{b}</bool>"),
            Value::Ref(_, o) => format!("<locator xlink:href=\"#{o}\"/>"),
            Value::Void => "<enum>Void</enum>".into(),
        };
        writeln!(self.text, "      <attr name=\"{}\">{body}</attr>", esc(name)).unwrap();
    }

    fn string(&mut self, name: &str, v: &str) {
        writeln!(
            self.text,
            "      <attr name=\"{name}\"><string>{}</string></attr>",
            esc(v)
        )
        .unwrap();
    }

    fn int(&mut self, name: &str, v: i64) {
        writeln!(self.text, "      <attr name=\"{name}\"><int>{v}</int></attr>").unwrap();
    }

    fn open_node(&mut self, id: &str, ty: &str) {
        writeln!(self.text, "    <node id=\"{id}\">\n      <type xlink:href=\"#{ty}\"/>").unwrap();
    }

    fn close_node(&mut self) {
        self.text.push_str("    </node>\n");
    }

    fn edge(&mut self, from: &str, to: &str, ty: &str, attrs: &[(&str, String)]) {
        let id = self.edges;
        self.edges += 1;
        write!(
            self.text,
            "    <edge id=\"e{id}\" from=\"{from}\" to=\"{to}\">\n      <type xlink:href=\"#{ty}\"/>\n"
        )
        .unwrap();
        for (k, v) in attrs {
            writeln!(self.text, "      <attr name=\"{k}\"><string>{}</string></attr>", esc(v)).unwrap();
        }
        self.text.push_str("    </edge>\n");
    }

    fn request(&mut self, p: &Program, id: &str, r: &Request) {
        self.open_node(id, "Request");
        self.string("method", &p.method(r.method).label);
        for (i, a) in r.args.iter().enumerate() {
            self.value(&format!("arg:{i}"), a);
        }
        self.close_node();
        self.edge(id, &r.object.to_string(), "target", &[]);
        if let Some(c) = r.caller {
            self.edge(id, &c.to_string(), "caller", &[]);
        }
    }
}

/// Writes `c` as a GXL document.
pub fn to_gxl(p: &Program, c: &Configuration) -> String {
    let mut out = Out {
        text: String::new(),
        edges: 0,
    };
    out.text.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(out.text, "<gxl xmlns:xlink=\"{XLINK}\">").unwrap();
    out.text
        .push_str("  <graph id=\"configuration\" edgeids=\"true\" edgemode=\"directed\">\n");
    let hex: String = c.program.iter().map(|b| format!("{b:02x}")).collect();
    out.string("program", &hex);
    out.int("next_processor", c.next_processor.into());
    out.int("next_object", c.next_object.into());
    out.string("root", &c.root.to_string());
    out.string("root_object", &c.root_object.to_string());

    let mut states = BTreeSet::new();
    for (id, proc) in &c.processors {
        out.open_node(&id.to_string(), "Processor");
        let status = match proc.status {
            Status::Idle => "idle",
            Status::Running => "running",
            Status::Waiting { .. } => "waiting",
            Status::Failed => "failed",
        };
        out.string("status", status);
        out.close_node();
        for (depth, f) in proc.stack.iter().enumerate() {
            let fid = format!("{id}.f{depth}");
            out.open_node(&fid, "Frame");
            out.string("method", &p.method(f.method).label);
            for (i, v) in f.params.iter().enumerate() {
                out.value(&format!("formal:{i}"), v);
            }
            for (i, v) in f.locals.iter().enumerate() {
                out.value(&format!("local:{i}"), v);
            }
            out.value("result", &f.result);
            match f.return_to {
                ReturnTo::Queue => out.string("return", "queue"),
                ReturnTo::Remote(_) => out.string("return", "remote"),
                ReturnTo::Local(None) => out.string("return", "local"),
                ReturnTo::Local(Some(v)) => out.string("return", &format!("local {}", var_name(v))),
            }
            out.close_node();
            out.edge(&id.to_string(), &fid, "frame", &[("depth", depth.to_string())]);
            let sid = format!("m{}.s{}", f.method.0, f.state.0);
            out.edge(&fid, &sid, "current_state", &[]);
            states.insert((f.method, f.state, sid));
            out.edge(&fid, &f.object.to_string(), "self", &[]);
            if let ReturnTo::Remote(q) = f.return_to {
                out.edge(&fid, &q.to_string(), "returns_to", &[]);
            }
        }
        let mut prev = id.to_string();
        for (i, r) in proc.queue.iter().enumerate() {
            let rid = format!("{id}.q{i}");
            out.request(p, &rid, r);
            out.edge(&prev, &rid, if i == 0 { "queue" } else { "next" }, &[]);
            prev = rid;
        }
        for (i, (to, r)) in proc.outbox.iter().enumerate() {
            let rid = format!("{id}.out{i}");
            out.request(p, &rid, r);
            out.edge(&id.to_string(), &rid, "outbox", &[("index", i.to_string())]);
            out.edge(&rid, &to.to_string(), "deliver_to", &[]);
        }
        for (h, n) in &proc.holds {
            out.edge(&id.to_string(), &h.to_string(), "lock", &[("count", n.to_string())]);
        }
        if let Status::Waiting { callee, dest } = proc.status {
            out.edge(
                &id.to_string(),
                &callee.to_string(),
                "waits",
                &[("dest", var_name(dest))],
            );
        }
    }
    for (id, o) in &c.objects {
        out.open_node(&id.to_string(), "Object");
        let class = p.env.class(o.class);
        out.string("class", &class.name);
        for ((name, _), v) in class.attributes.iter().zip(&o.attrs) {
            out.value(&format!("attr:{name}"), v);
        }
        out.close_node();
        out.edge(&id.to_string(), &o.handler.to_string(), "handler", &[]);
    }
    for (method, state, sid) in states {
        out.open_node(&sid, "ControlState");
        out.string("method", &p.method(method).label);
        out.int("state", state.0.into());
        out.close_node();
    }
    for (i, f) in c.flags.iter().enumerate() {
        out.open_node(&format!("flag{i}"), "Flag");
        out.string("kind", f.kind.name());
        out.string("method", &p.method(f.method).label);
        out.int("state", f.state.0.into());
        out.string("detail", &f.detail);
        out.close_node();
    }
    out.text.push_str("  </graph>\n</gxl>\n");
    out.text
}

// ---- reading ----

fn type_of<'a>(n: Node<'a, '_>) -> Option<&'a str> {
    n.children()
        .find(|c| c.has_tag_name("type"))
        .and_then(|t| t.attribute((XLINK, "href")))
        .map(|h| h.trim_start_matches('#'))
}

fn attrs<'a, 'i>(n: Node<'a, 'i>) -> BTreeMap<&'a str, Node<'a, 'i>> {
    n.children()
        .filter(|c| c.has_tag_name("attr"))
        .filter_map(|a| Some((a.attribute("name")?, a.children().find(|v| v.is_element())?)))
        .collect()
}

fn text<'a>(attrs: &BTreeMap<&str, Node<'a, '_>>, name: &str) -> Result<&'a str, GxlError> {
    attrs
        .get(name)
        .map(|v| v.text().unwrap_or(""))
        .ok_or_else(|| bad(format!("missing attribute `{name}`")))
}

fn int(attrs: &BTreeMap<&str, Node<'_, '_>>, name: &str) -> Result<i64, GxlError> {
    text(attrs, name)?
        .trim()
        .parse()
        .map_err(|_| bad(format!("attribute `{name}` is not an integer")))
}

fn processor_id(s: &str) -> Result<ProcessorId, GxlError> {
    s.strip_prefix('p')
        .and_then(|n| n.parse().ok())
        .map(ProcessorId)
        .ok_or_else(|| bad(format!("bad processor id `{s}`")))
}

fn object_id(s: &str) -> Result<ObjectId, GxlError> {
    s.trim_start_matches('#')
        .strip_prefix('o')
        .and_then(|n| n.parse().ok())
        .map(ObjectId)
        .ok_or_else(|| bad(format!("bad object id `{s}`")))
}

struct Edge<'a> {
    from: &'a str,
    to: &'a str,
    ty: &'a str,
    attrs: BTreeMap<&'a str, &'a str>,
}

/// Reads a document written by [`to_gxl`] for the same program.
pub fn from_gxl(p: &Program, doc: &str) -> Result<Configuration, GxlError> {
    let doc = Document::parse(doc).map_err(|e| bad(e.to_string()))?;
    let graph = doc
        .descendants()
        .find(|n| n.has_tag_name("graph"))
        .ok_or_else(|| bad("no graph element"))?;
    let gattrs = attrs(graph);
    let digest = text(&gattrs, "program")?;
    if digest != p.digest_hex() {
        return Err(bad("document was written for a different program"));
    }
    let method_of = |label: &str| -> Result<MethodId, GxlError> {
        p.methods
            .iter()
            .find(|m| m.label == label)
            .map(|m| m.id)
            .ok_or_else(|| bad(format!("unknown method `{label}`")))
    };

    let mut nodes: HashMap<&str, (&str, Node)> = HashMap::new();
    let mut edges = Vec::new();
    for n in graph.children().filter(|n| n.is_element()) {
        let ty = type_of(n).unwrap_or("");
        if n.has_tag_name("node") {
            let id = n.attribute("id").ok_or_else(|| bad("node without id"))?;
            nodes.insert(id, (ty, n));
        } else if n.has_tag_name("edge") {
            let from = n.attribute("from").ok_or_else(|| bad("edge without source"))?;
            let to = n.attribute("to").ok_or_else(|| bad("edge without target"))?;
            let ea = attrs(n).into_iter().map(|(k, v)| (k, v.text().unwrap_or(""))).collect();
            edges.push(Edge {
                from,
                to,
                ty,
                attrs: ea,
            });
        }
    }
    let out_edges =
        |from: &str, ty: &str| -> Vec<&Edge> { edges.iter().filter(|e| e.from == from && e.ty == ty).collect() };
    let one = |from: &str, ty: &str| -> Result<&str, GxlError> {
        match out_edges(from, ty).as_slice() {
            [e] => Ok(e.to),
            _ => Err(bad(format!("expected one `{ty}` edge from `{from}`"))),
        }
    };

    // objects first: references resolve through their handlers
    let mut objects = BTreeMap::new();
    for (id, (ty, n)) in &nodes {
        if *ty != "Object" {
            continue;
        }
        let a = attrs(*n);
        let class_name = text(&a, "class")?;
        let class = p
            .env
            .class_named(class_name)
            .ok_or_else(|| bad(format!("unknown class `{class_name}`")))?;
        let handler = processor_id(one(id, "handler")?)?;
        objects.insert(object_id(id)?, (class.id, handler, *n));
    }
    let value = |v: Node| -> Result<Value, GxlError> {
        match v.tag_name().name() {
            "int" => v
                .text()
                .unwrap_or("")
                .trim()
                .parse()
                .map(Value::Int)
                .map_err(|_| bad("bad int")),
            "bool" => match v.text().unwrap_or("").trim() {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                other => Err(bad(format!("bad bool `{other}`"))),
            },
            "enum" if v.text() == Some("Void") => Ok(Value::Void),
            "locator" => {
                let o = object_id(v.attribute((XLINK, "href")).unwrap_or(""))?;
                let (_, handler, _) = objects
                    .get(&o)
                    .ok_or_else(|| bad(format!("dangling reference to {o}")))?;
                Ok(Value::Ref(*handler, o))
            }
            other => Err(bad(format!("unexpected value element `{other}`"))),
        }
    };
    let values = |a: &BTreeMap<&str, Node>, prefix: &str| -> Result<Vec<Value>, GxlError> {
        let mut vs: Vec<(usize, Value)> = Vec::new();
        for (k, v) in a {
            if let Some(i) = k.strip_prefix(prefix).and_then(|i| i.parse().ok()) {
                vs.push((i, value(*v)?));
            }
        }
        vs.sort_by_key(|(i, _)| *i);
        if vs.iter().enumerate().any(|(i, (j, _))| i != *j) {
            return Err(bad(format!("gap in `{prefix}` values")));
        }
        Ok(vs.into_iter().map(|(_, v)| v).collect())
    };
    let request = |id: &str| -> Result<Request, GxlError> {
        let (_, n) = nodes.get(id).ok_or_else(|| bad(format!("missing request `{id}`")))?;
        let a = attrs(*n);
        let caller = match out_edges(id, "caller").as_slice() {
            [] => None,
            [e] => Some(processor_id(e.to)?),
            _ => return Err(bad("several callers")),
        };
        Ok(Request {
            method: method_of(text(&a, "method")?)?,
            object: object_id(one(id, "target")?)?,
            args: values(&a, "arg:")?,
            caller,
        })
    };

    let mut c = Configuration {
        program: p.digest,
        processors: BTreeMap::new(),
        objects: BTreeMap::new(),
        next_processor: u32::try_from(int(&gattrs, "next_processor")?).map_err(|_| bad("bad next_processor"))?,
        next_object: u32::try_from(int(&gattrs, "next_object")?).map_err(|_| bad("bad next_object"))?,
        root: processor_id(text(&gattrs, "root")?)?,
        root_object: object_id(text(&gattrs, "root_object")?)?,
        flags: BTreeSet::new(),
    };
    for (oid, (class, handler, n)) in &objects {
        let a = attrs(*n);
        let info = p.env.class(*class);
        let attrs = info
            .attributes
            .iter()
            .map(|(name, _)| {
                a.get(format!("attr:{name}").as_str())
                    .ok_or_else(|| bad(format!("{oid} lacks attribute `{name}`")))
                    .and_then(|v| value(*v))
            })
            .collect::<Result<Vec<_>, _>>()?;
        c.objects.insert(
            *oid,
            ObjectRec {
                class: *class,
                handler: *handler,
                attrs,
            },
        );
    }
    for (id, (ty, n)) in &nodes {
        if *ty != "Processor" {
            continue;
        }
        let pid = processor_id(id)?;
        let a = attrs(*n);
        let mut proc = Processor::new();
        proc.status = match text(&a, "status")? {
            "idle" => Status::Idle,
            "running" => Status::Running,
            "failed" => Status::Failed,
            "waiting" => {
                let [e] = out_edges(id, "waits")[..] else {
                    return Err(bad(format!("{id} waits without a `waits` edge")));
                };
                Status::Waiting {
                    callee: processor_id(e.to)?,
                    dest: parse_var(e.attrs.get("dest").copied().unwrap_or(""))?,
                }
            }
            other => return Err(bad(format!("bad status `{other}`"))),
        };
        let mut frames = Vec::new();
        for e in out_edges(id, "frame") {
            let depth: usize = e
                .attrs
                .get("depth")
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| bad("frame edge without depth"))?;
            let (_, fnode) = nodes
                .get(e.to)
                .ok_or_else(|| bad(format!("missing frame `{}`", e.to)))?;
            let fa = attrs(*fnode);
            let (_, snode) = nodes
                .get(one(e.to, "current_state")?)
                .ok_or_else(|| bad("missing control state"))?;
            let state = StateId(u32::try_from(int(&attrs(*snode), "state")?).map_err(|_| bad("bad state"))?);
            let return_to = match text(&fa, "return")? {
                "queue" => ReturnTo::Queue,
                "remote" => ReturnTo::Remote(processor_id(one(e.to, "returns_to")?)?),
                "local" => ReturnTo::Local(None),
                other => match other.strip_prefix("local ") {
                    Some(v) => ReturnTo::Local(Some(parse_var(v)?)),
                    None => return Err(bad(format!("bad return `{other}`"))),
                },
            };
            let result = fa.get("result").map(|v| value(*v)).transpose()?.unwrap_or(Value::Void);
            frames.push((
                depth,
                Frame {
                    method: method_of(text(&fa, "method")?)?,
                    state,
                    params: values(&fa, "formal:")?,
                    locals: values(&fa, "local:")?,
                    result,
                    object: object_id(one(e.to, "self")?)?,
                    return_to,
                },
            ));
        }
        frames.sort_by_key(|(d, _)| *d);
        proc.stack = frames.into_iter().map(|(_, f)| f).collect();
        let mut next = out_edges(id, "queue").first().map(|e| e.to);
        while let Some(rid) = next {
            if proc.queue.len() > edges.len() {
                return Err(bad("cyclic queue"));
            }
            proc.queue.push(request(rid)?);
            next = out_edges(rid, "next").first().map(|e| e.to);
        }
        let mut outbox = Vec::new();
        for e in out_edges(id, "outbox") {
            let i: usize = e
                .attrs
                .get("index")
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| bad("outbox edge without index"))?;
            outbox.push((i, (processor_id(one(e.to, "deliver_to")?)?, request(e.to)?)));
        }
        outbox.sort_by_key(|(i, _)| *i);
        proc.outbox = outbox.into_iter().map(|(_, r)| r).collect();
        for e in out_edges(id, "lock") {
            let n = e
                .attrs
                .get("count")
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| bad("lock edge without count"))?;
            proc.holds.insert(processor_id(e.to)?, n);
        }
        proc.objects = c
            .objects
            .iter()
            .filter(|(_, o)| o.handler == pid)
            .map(|(id, _)| *id)
            .collect();
        c.processors.insert(pid, proc);
    }
    let holders: Vec<(ProcessorId, ProcessorId)> = c
        .processors
        .iter()
        .flat_map(|(h, q)| q.holds.keys().map(move |t| (*h, *t)))
        .collect();
    for (holder, target) in holders {
        c.processors
            .get_mut(&target)
            .ok_or_else(|| bad(format!("lock on unknown processor {target}")))?
            .locked_by = Some(holder);
    }
    for (ty, n) in nodes.values() {
        if *ty != "Flag" {
            continue;
        }
        let a = attrs(*n);
        let kind = match text(&a, "kind")? {
            "postcondition" => FlagKind::Postcondition,
            "void_call" => FlagKind::VoidCall,
            "runtime" => FlagKind::RuntimeError,
            other => return Err(bad(format!("bad flag kind `{other}`"))),
        };
        c.flags.insert(ErrorFlag {
            kind,
            method: method_of(text(&a, "method")?)?,
            state: StateId(u32::try_from(int(&a, "state")?).map_err(|_| bad("bad state"))?),
            detail: text(&a, "detail")?.to_string(),
        });
    }
    if !c.processors.contains_key(&c.root) {
        return Err(bad("root processor missing"));
    }
    Ok(c)
}
