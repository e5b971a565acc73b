//! Typed, name-resolved program representation shared by the checker, the
//! compiler and the run-time semantics.

use std::fmt;

pub use crate::frontend::ast::{BinOp, MethodKind, UnOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl MethodId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Ref {
        class: ClassId,
        separate: bool,
    },
    /// Type of the `Void` literal; conforms to every reference type.
    Void,
}

impl Type {
    pub fn is_ref(self) -> bool {
        matches!(self, Type::Ref { .. } | Type::Void)
    }

    /// Whether a value of type `source` may be stored in a slot of type `self`.
    pub fn accepts(self, source: Type) -> bool {
        match (self, source) {
            (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => true,
            (Type::Ref { .. }, Type::Void) => true,
            (
                Type::Ref {
                    class: c1,
                    separate: s1,
                },
                Type::Ref {
                    class: c2,
                    separate: s2,
                },
            ) => c1 == c2 && (s1 || !s2),
            _ => false,
        }
    }
}

/// A resolved variable binding inside one method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Formal(u16),
    Local(u16),
    /// Attribute of the current object, indexed into the class layout.
    Attr(u16),
    Result,
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::Formal(i) => write!(f, "formal#{i}"),
            VarRef::Local(i) => write!(f, "local#{i}"),
            VarRef::Attr(i) => write!(f, "attr#{i}"),
            VarRef::Result => f.write_str("Result"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CallTarget {
    Current,
    Var(VarRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryCall {
    pub target: CallTarget,
    pub method: MethodId,
    pub args: Vec<Expr>,
    /// Declared separateness of the target; separate calls are hoisted by the compiler.
    pub separate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Void,
    Current,
    Var(VarRef),
    /// `target.attribute` read of another object.
    Field {
        target: VarRef,
        attr: u16,
    },
    Query(Box<QueryCall>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Visits sub-expressions bottom-up, left to right.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            Expr::Query(q) => q.args.iter().for_each(|a| a.walk(f)),
            Expr::Unary(_, a) => a.walk(f),
            Expr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
        f(self);
    }

    pub fn contains_separate_query(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let Expr::Query(q) = e {
                found |= q.separate;
            }
        });
        found
    }
}
