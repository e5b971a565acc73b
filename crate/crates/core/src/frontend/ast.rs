//! Untyped syntax tree produced by the parser.

use super::source::Pos;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxTree {
    pub classes: Vec<ClassDecl>,
    /// Name of the class declared with the `root` marker.
    pub root_class: String,
}

impl SyntaxTree {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub is_root: bool,
    pub attributes: Vec<VarDecl>,
    pub methods: Vec<MethodDecl>,
    pub pos: Pos,
    /// File the class was read from, when known.
    pub source: Option<String>,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&VarDecl> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

/// An attribute, formal argument or local variable declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: DeclaredType,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Command,
    Query,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub kind: MethodKind,
    pub formals: Vec<VarDecl>,
    pub locals: Vec<VarDecl>,
    pub require: Option<Expr>,
    pub body: Vec<Stmt>,
    pub ensure: Option<Expr>,
    pub result_type: Option<DeclaredType>,
    pub pos: Pos,
    /// Position of the closing `end`.
    pub end_pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeName {
    Integer,
    Boolean,
    Class(String),
}

impl TypeName {
    pub fn from_ident(name: &str) -> Self {
        match name {
            "INTEGER" => TypeName::Integer,
            "BOOLEAN" => TypeName::Boolean,
            other => TypeName::Class(other.to_string()),
        }
    }

    pub fn spelling(&self) -> &str {
        match self {
            TypeName::Integer => "INTEGER",
            TypeName::Boolean => "BOOLEAN",
            TypeName::Class(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeclaredType {
    pub base: TypeName,
    pub separate: bool,
}

impl DeclaredType {
    pub fn new(base: TypeName, separate: bool) -> Self {
        Self { base, separate }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    /// `create target` or `create target.method (args)`.
    Create {
        target: String,
        call: Option<(String, Vec<Expr>)>,
    },
    Assign {
        target: AssignTarget,
        value: Expr,
    },
    /// A call used as a statement. The expression is always [`ExprKind::Call`].
    Call(Expr),
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    Loop {
        init: Vec<Stmt>,
        until: Expr,
        body: Vec<Stmt>,
    },
    /// `print (...)`; the argument text is kept verbatim but carries no meaning.
    Print(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignTarget {
    Name(String),
    Result,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "//",
            BinOp::Mod => "\\\\",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "=",
            BinOp::Ne => "/=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Void,
    Current,
    Result,
    Name(String),
    /// `target.name (args)` or unqualified `name (args)`. A qualified
    /// `x.name` without arguments may also denote an attribute read.
    Call {
        target: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
    },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Resets every position in the tree; used to compare trees structurally.
pub fn strip_positions(tree: &mut SyntaxTree) {
    fn expr(e: &mut Expr) {
        e.pos = Pos::default();
        match &mut e.kind {
            ExprKind::Call { target, args, .. } => {
                if let Some(t) = target {
                    expr(t);
                }
                args.iter_mut().for_each(expr);
            }
            ExprKind::Unary(_, a) => expr(a),
            ExprKind::Binary(_, a, b) => {
                expr(a);
                expr(b);
            }
            _ => {}
        }
    }
    fn stmts(list: &mut [Stmt]) {
        for s in list {
            s.pos = Pos::default();
            match &mut s.kind {
                StmtKind::Create { call, .. } => {
                    if let Some((_, args)) = call {
                        args.iter_mut().for_each(expr);
                    }
                }
                StmtKind::Assign { value, .. } => expr(value),
                StmtKind::Call(e) => expr(e),
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    expr(cond);
                    stmts(then_branch);
                    stmts(else_branch);
                }
                StmtKind::Loop { init, until, body } => {
                    stmts(init);
                    expr(until);
                    stmts(body);
                }
                StmtKind::Print(_) => {}
            }
        }
    }
    for c in &mut tree.classes {
        c.pos = Pos::default();
        for a in &mut c.attributes {
            a.pos = Pos::default();
        }
        for m in &mut c.methods {
            m.pos = Pos::default();
            m.end_pos = Pos::default();
            for v in m.formals.iter_mut().chain(m.locals.iter_mut()) {
                v.pos = Pos::default();
            }
            if let Some(r) = &mut m.require {
                expr(r);
            }
            if let Some(e) = &mut m.ensure {
                expr(e);
            }
            stmts(&mut m.body);
        }
    }
}
