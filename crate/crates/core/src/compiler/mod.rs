//! Lowering of checked programs to per-method control-flow graphs.

mod dot;
mod lower;

use std::fmt;

use sha2::{Digest, Sha256};

use crate::frontend::{Pos, TypeEnv, TypedProgram};
use crate::ir::{CallTarget, ClassId, Expr, MethodId, MethodKind, Type, VarRef};

pub use dot::{dot_escape, program_to_dot};
pub use lower::lower_method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Assign {
        target: VarRef,
        value: Expr,
    },
    /// Moves to the edge's `to` state when true, to `on_false` otherwise.
    Branch {
        cond: Expr,
    },
    CreateSeparate {
        target: VarRef,
        class: ClassId,
        creation: Option<MethodId>,
        args: Vec<Expr>,
    },
    CreateLocal {
        target: VarRef,
        class: ClassId,
        creation: Option<MethodId>,
        args: Vec<Expr>,
    },
    Command {
        target: CallTarget,
        method: MethodId,
        args: Vec<Expr>,
    },
    Query {
        result: VarRef,
        target: CallTarget,
        method: MethodId,
        args: Vec<Expr>,
    },
    /// Call on a non-separate target; `result` is set for queries.
    LocalCall {
        target: CallTarget,
        method: MethodId,
        args: Vec<Expr>,
        result: Option<VarRef>,
    },
    /// Atomically locks the handlers of all targets once `guard` holds.
    Lock {
        targets: Vec<VarRef>,
        guard: Option<Expr>,
    },
    Unlock {
        targets: Vec<VarRef>,
    },
    PostCheck {
        cond: Expr,
    },
    Noop {
        note: String,
    },
}

impl Action {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Action::Assign { .. } => "assign",
            Action::Branch { .. } => "branch",
            Action::CreateSeparate { .. } => "create_separate",
            Action::CreateLocal { .. } => "create_local",
            Action::Command { .. } => "command",
            Action::Query { .. } => "query",
            Action::LocalCall { .. } => "local_call",
            Action::Lock { .. } => "lock",
            Action::Unlock { .. } => "unlock",
            Action::PostCheck { .. } => "postcheck",
            Action::Noop { .. } => "noop",
        }
    }

    /// The reference variable the action dereferences, if any.
    pub fn call_target(&self) -> Option<CallTarget> {
        match self {
            Action::Command { target, .. } | Action::Query { target, .. } | Action::LocalCall { target, .. } => {
                Some(*target)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionEdge {
    pub from: StateId,
    pub to: StateId,
    /// False successor; present exactly for `Branch`.
    pub on_false: Option<StateId>,
    pub action: Action,
    pub pos: Pos,
    /// Inserted by the compiler rather than written in the source
    /// (locking, hoisted queries, postcondition checks).
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodGraph {
    pub id: MethodId,
    pub class: ClassId,
    pub name: String,
    /// `CLASS.name`.
    pub label: String,
    pub kind: MethodKind,
    pub file: Option<String>,
    pub pos: Pos,
    pub formals: Vec<Type>,
    /// Declared locals followed by compiler temporaries.
    pub locals: Vec<Type>,
    pub declared_locals: usize,
    pub result: Option<Type>,
    pub state_count: u32,
    pub init: StateId,
    pub finals: Vec<StateId>,
    pub edges: Vec<ActionEdge>,
    /// Edge indices leaving each state.
    pub outgoing: Vec<Vec<u32>>,
}

impl MethodGraph {
    pub fn is_final(&self, s: StateId) -> bool {
        self.finals.contains(&s)
    }

    pub fn edges_from(&self, s: StateId) -> impl Iterator<Item = (u32, &ActionEdge)> {
        self.outgoing[s.index()]
            .iter()
            .map(move |&i| (i, &self.edges[i as usize]))
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_count).map(StateId)
    }

    /// Source position of `state`'s first outgoing action, or the method end.
    pub fn state_pos(&self, s: StateId) -> Pos {
        self.edges_from(s).next().map(|(_, e)| e.pos).unwrap_or(self.pos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    /// Emit `PostCheck` actions for `ensure` clauses.
    pub postconditions: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { postconditions: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub env: TypeEnv,
    /// Indexed by `MethodId`.
    pub methods: Vec<MethodGraph>,
    pub root_class: ClassId,
    pub root: MethodId,
    pub options: CompileOptions,
    /// SHA-256 over the lowered program; part of every canonical key.
    pub digest: [u8; 32],
}

impl Program {
    pub fn method(&self, id: MethodId) -> &MethodGraph {
        &self.methods[id.index()]
    }

    pub fn find(&self, class: &str, method: &str) -> Option<&MethodGraph> {
        let c = self.env.class_named(class)?;
        self.env.find_method(c.id, method).map(|sig| self.method(sig.id))
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        &self.env.class(id).name
    }

    pub fn digest_hex(&self) -> String {
        self.digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Lowers every method of every class.
pub fn lower_program(typed: &TypedProgram, options: CompileOptions) -> Program {
    let mut methods: Vec<MethodGraph> = typed
        .methods()
        .map(|m| {
            let file = typed.classes[m.class.index()].source.clone();
            lower_method(m, &typed.env, file, options)
        })
        .collect();
    methods.sort_by_key(|g| g.id);
    let root_class = typed.env.root;
    let root = typed
        .env
        .find_method(root_class, "make")
        .expect("checked root has make")
        .id;
    let mut hasher = Sha256::new();
    hasher.update(format!("{:?}{:?}{:?}", typed.env, methods, options).as_bytes());
    Program {
        env: typed.env.clone(),
        methods,
        root_class,
        root,
        options,
        digest: hasher.finalize().into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{analyze, SourceUnit};

    pub(crate) fn compile(src: &str) -> Program {
        let typed = analyze(&[SourceUnit::new("t.cscoop", src)]).unwrap();
        lower_program(&typed, CompileOptions::default())
    }

    #[test]
    fn single_empty_root() {
        let p = compile("class A root make do end end");
        assert_eq!(p.methods.len(), 1);
        let g = p.method(p.root);
        assert_eq!(g.edges.len(), 1);
        assert!(matches!(g.edges[0].action, Action::Noop { .. }));
        assert_eq!(g.edges[0].from, g.init);
        assert!(g.is_final(g.edges[0].to));
    }

    #[test]
    fn digest_is_deterministic() {
        let src = "class A root x: INTEGER make do x := 1 end end";
        assert_eq!(compile(src).digest, compile(src).digest);
        assert_ne!(
            compile(src).digest,
            compile("class A root x: INTEGER make do x := 2 end end").digest
        );
    }
}
