//! Second pass: name resolution and type checking, producing a typed tree.

use super::ast::{
    self, AssignTarget, BinOp, ClassDecl, ExprKind, MethodDecl, MethodKind, Stmt, StmtKind, SyntaxTree, UnOp,
};
use super::source::Pos;
use super::types::{ClassInfo, MethodSig, TypeEnv};
use super::{Diagnostic, DiagnosticKind};
use crate::ir::{CallTarget, ClassId, Expr, MethodId, QueryCall, Type, VarRef};

#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub env: TypeEnv,
    /// Indexed by `ClassId`.
    pub classes: Vec<TypedClass>,
}

impl TypedProgram {
    pub fn method(&self, id: MethodId) -> &TypedMethod {
        let sig = self.env.method(id);
        self.classes[sig.class.index()]
            .methods
            .iter()
            .find(|m| m.id == id)
            .expect("method id belongs to its class")
    }

    pub fn methods(&self) -> impl Iterator<Item = &TypedMethod> {
        self.classes.iter().flat_map(|c| c.methods.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedClass {
    pub id: ClassId,
    pub name: String,
    pub source: Option<String>,
    /// Sorted by method name, i.e. by `MethodId`.
    pub methods: Vec<TypedMethod>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedMethod {
    pub id: MethodId,
    pub class: ClassId,
    pub name: String,
    pub kind: MethodKind,
    pub formals: Vec<(String, Type)>,
    pub locals: Vec<(String, Type)>,
    pub require: Option<Expr>,
    pub body: Vec<TypedStmt>,
    pub ensure: Option<Expr>,
    pub result: Option<Type>,
    pub pos: Pos,
    pub end_pos: Pos,
}

impl TypedMethod {
    /// Formals of separate reference type; these are locked on entry.
    pub fn separate_formals(&self) -> Vec<VarRef> {
        self.formals
            .iter()
            .enumerate()
            .filter(|(_, (_, t))| matches!(t, Type::Ref { separate: true, .. }))
            .map(|(i, _)| VarRef::Formal(i as u16))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedStmt {
    pub kind: TypedStmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedStmtKind {
    Create {
        target: VarRef,
        class: ClassId,
        separate: bool,
        creation: Option<MethodId>,
        args: Vec<Expr>,
    },
    Assign {
        target: VarRef,
        value: Expr,
    },
    /// Command call; `separate` is the declared separateness of the target.
    Call {
        target: CallTarget,
        method: MethodId,
        args: Vec<Expr>,
        separate: bool,
    },
    If {
        cond: Expr,
        then_branch: Vec<TypedStmt>,
        else_branch: Vec<TypedStmt>,
    },
    Loop {
        init: Vec<TypedStmt>,
        until: Expr,
        body: Vec<TypedStmt>,
    },
    Print(String),
}

/// References obtained through a separate target live on another processor.
fn separated(ty: Type, through_separate: bool) -> Type {
    match ty {
        Type::Ref { class, .. } if through_separate => Type::Ref { class, separate: true },
        other => other,
    }
}

fn err(kind: DiagnosticKind, pos: Pos, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(kind, pos, msg.into())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Clause {
    Body,
    Require,
    Ensure,
}

struct Scope<'a> {
    env: &'a TypeEnv,
    class: &'a ClassInfo,
    sig: &'a MethodSig,
    locals: Vec<(String, Type)>,
    clause: Clause,
}

impl Scope<'_> {
    /// Formals shadow locals, locals shadow attributes.
    fn lookup(&self, name: &str) -> Option<(VarRef, Type)> {
        if let Some(i) = self.sig.formals.iter().position(|(n, _)| n == name) {
            return Some((VarRef::Formal(i as u16), self.sig.formals[i].1));
        }
        if let Some(i) = self.locals.iter().position(|(n, _)| n == name) {
            return Some((VarRef::Local(i as u16), self.locals[i].1));
        }
        self.class.attribute(name).map(|(i, t)| (VarRef::Attr(i), t))
    }

    fn current_type(&self) -> Type {
        Type::Ref {
            class: self.class.id,
            separate: false,
        }
    }

    fn result_type(&self, pos: Pos) -> Result<Type, Diagnostic> {
        match (self.sig.result, self.clause) {
            (Some(t), Clause::Body | Clause::Ensure) => Ok(t),
            _ => Err(err(
                DiagnosticKind::UnknownName,
                pos,
                "`Result` is only available in the body or postcondition of a query",
            )),
        }
    }

    fn expr(&self, e: &ast::Expr) -> Result<(Expr, Type), Diagnostic> {
        match &e.kind {
            ExprKind::Int(v) => Ok((Expr::Int(*v), Type::Int)),
            ExprKind::Bool(b) => Ok((Expr::Bool(*b), Type::Bool)),
            ExprKind::Void => Ok((Expr::Void, Type::Void)),
            ExprKind::Current => Ok((Expr::Current, self.current_type())),
            ExprKind::Result => Ok((Expr::Var(VarRef::Result), self.result_type(e.pos)?)),
            ExprKind::Name(name) => match self.lookup(name) {
                Some((v, t)) => Ok((Expr::Var(v), t)),
                None => self.call(e.pos, None, name, &[]),
            },
            ExprKind::Call { target, name, args } => self.call(e.pos, target.as_deref(), name, args),
            ExprKind::Unary(op, operand) => {
                let (x, t) = self.expr(operand)?;
                let want = match op {
                    UnOp::Neg => Type::Int,
                    UnOp::Not => Type::Bool,
                };
                if t != want {
                    return Err(self.mismatch(operand.pos, want, t));
                }
                Ok((Expr::Unary(*op, Box::new(x)), want))
            }
            ExprKind::Binary(op, lhs, rhs) => {
                let (l, lt) = self.expr(lhs)?;
                let (r, rt) = self.expr(rhs)?;
                let ty = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                        self.expect_pair(e.pos, *op, lt, rt, Type::Int)?;
                        Type::Int
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        self.expect_pair(e.pos, *op, lt, rt, Type::Int)?;
                        Type::Bool
                    }
                    BinOp::And | BinOp::Or => {
                        self.expect_pair(e.pos, *op, lt, rt, Type::Bool)?;
                        Type::Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let ok = match (lt, rt) {
                            (Type::Int, Type::Int) | (Type::Bool, Type::Bool) => true,
                            (Type::Void, t) | (t, Type::Void) => t.is_ref(),
                            (Type::Ref { class: a, .. }, Type::Ref { class: b, .. }) => a == b,
                            _ => false,
                        };
                        if !ok {
                            return Err(err(
                                DiagnosticKind::TypeMismatch,
                                e.pos,
                                format!(
                                    "type mismatch: cannot compare {} with {}",
                                    self.env.type_name(lt),
                                    self.env.type_name(rt)
                                ),
                            ));
                        }
                        Type::Bool
                    }
                };
                Ok((Expr::Binary(*op, Box::new(l), Box::new(r)), ty))
            }
        }
    }

    fn expect_pair(&self, pos: Pos, op: BinOp, lt: Type, rt: Type, want: Type) -> Result<(), Diagnostic> {
        if lt == want && rt == want {
            Ok(())
        } else {
            Err(err(
                DiagnosticKind::TypeMismatch,
                pos,
                format!(
                    "type mismatch: `{}` expects {} operands, found {} and {}",
                    op.symbol(),
                    self.env.type_name(want),
                    self.env.type_name(lt),
                    self.env.type_name(rt)
                ),
            ))
        }
    }

    fn mismatch(&self, pos: Pos, want: Type, got: Type) -> Diagnostic {
        err(
            DiagnosticKind::TypeMismatch,
            pos,
            format!(
                "type mismatch: expected {}, found {}",
                self.env.type_name(want),
                self.env.type_name(got)
            ),
        )
    }

    /// Resolves a call target to a binding and its class.
    fn target(&self, t: Option<&ast::Expr>) -> Result<(CallTarget, ClassId, bool), Diagnostic> {
        let Some(t) = t else {
            return Ok((CallTarget::Current, self.class.id, false));
        };
        let (target, ty) = match &t.kind {
            ExprKind::Current => (CallTarget::Current, self.current_type()),
            ExprKind::Result => (CallTarget::Var(VarRef::Result), self.result_type(t.pos)?),
            ExprKind::Name(n) => match self.lookup(n) {
                Some((v, ty)) => (CallTarget::Var(v), ty),
                None => return Err(err(DiagnosticKind::UnknownName, t.pos, format!("unknown name `{n}`"))),
            },
            _ => {
                return Err(err(
                    DiagnosticKind::InvalidTarget,
                    t.pos,
                    "call target must be a variable or `Current`",
                ))
            }
        };
        match ty {
            Type::Ref { class, separate } => Ok((target, class, separate)),
            other => Err(err(
                DiagnosticKind::InvalidTarget,
                t.pos,
                format!("call target has type {}", self.env.type_name(other)),
            )),
        }
    }

    /// Separate targets must be formals of the enclosing routine so that
    /// their handlers are locked for the whole call.
    fn check_controlled(&self, pos: Pos, target: CallTarget, separate: bool) -> Result<(), Diagnostic> {
        if separate && !matches!(target, CallTarget::Var(VarRef::Formal(_))) {
            return Err(err(
                DiagnosticKind::InvalidTarget,
                pos,
                "separate call target must be a formal argument of the enclosing routine",
            ));
        }
        Ok(())
    }

    fn args(&self, pos: Pos, sig: &MethodSig, args: &[ast::Expr], separate: bool) -> Result<Vec<Expr>, Diagnostic> {
        if sig.formals.len() != args.len() {
            return Err(err(
                DiagnosticKind::InvalidCall,
                pos,
                format!(
                    "`{}` expects {} argument(s), found {}",
                    sig.name,
                    sig.formals.len(),
                    args.len()
                ),
            ));
        }
        let mut out = Vec::with_capacity(args.len());
        for ((fname, fty), a) in sig.formals.iter().zip(args) {
            let (x, t) = self.expr(a)?;
            if !fty.accepts(t) {
                return Err(self.mismatch(a.pos, *fty, t));
            }
            if separate && matches!(fty, Type::Ref { separate: false, .. }) {
                return Err(err(
                    DiagnosticKind::InvalidCall,
                    a.pos,
                    format!("formal `{fname}` of a separate call must be declared separate"),
                ));
            }
            out.push(x);
        }
        Ok(out)
    }

    /// Expression-position call: a query, or an attribute read `x.attr`.
    fn call(
        &self,
        pos: Pos,
        target: Option<&ast::Expr>,
        name: &str,
        args: &[ast::Expr],
    ) -> Result<(Expr, Type), Diagnostic> {
        let (ctarget, class, separate) = self.target(target)?;
        let info = self.env.class(class);
        if let (Some(_), Some((attr, ty)), true) = (target, info.attribute(name), args.is_empty()) {
            let controlled = matches!(ctarget, CallTarget::Var(VarRef::Formal(_)));
            if separate && (self.clause != Clause::Require || !controlled) {
                return Err(err(
                    DiagnosticKind::InvalidCall,
                    pos,
                    format!("attribute `{name}` of a separate object can only be read in a wait condition on a formal argument; use a query"),
                ));
            }
            let expr = match ctarget {
                CallTarget::Current => Expr::Var(VarRef::Attr(attr)),
                CallTarget::Var(v) => Expr::Field { target: v, attr },
            };
            return Ok((expr, separated(ty, separate)));
        }
        let Some(sig) = self.env.find_method(class, name) else {
            return Err(err(
                DiagnosticKind::UnknownName,
                pos,
                format!("unknown name `{name}` in class {}", info.name),
            ));
        };
        if sig.kind == MethodKind::Command {
            return Err(err(
                DiagnosticKind::InvalidCall,
                pos,
                format!("command `{name}` cannot be used in an expression"),
            ));
        }
        self.check_controlled(pos, ctarget, separate)?;
        let args = self.args(pos, sig, args, separate)?;
        let ty = separated(sig.result.expect("queries have a result type"), separate);
        Ok((
            Expr::Query(Box::new(QueryCall {
                target: ctarget,
                method: sig.id,
                args,
                separate,
            })),
            ty,
        ))
    }

    fn assign_target(&self, pos: Pos, target: &AssignTarget) -> Result<(VarRef, Type), Diagnostic> {
        match target {
            AssignTarget::Result => Ok((VarRef::Result, self.result_type(pos)?)),
            AssignTarget::Name(n) => match self.lookup(n) {
                Some((VarRef::Formal(_), _)) => Err(err(
                    DiagnosticKind::InvalidTarget,
                    pos,
                    format!("formal argument `{n}` cannot be assigned"),
                )),
                Some(found) => Ok(found),
                None => Err(err(DiagnosticKind::UnknownName, pos, format!("unknown name `{n}`"))),
            },
        }
    }

    fn stmts(&self, list: &[Stmt]) -> Result<Vec<TypedStmt>, Diagnostic> {
        list.iter().map(|s| self.stmt(s)).collect()
    }

    fn stmt(&self, s: &Stmt) -> Result<TypedStmt, Diagnostic> {
        let kind = match &s.kind {
            StmtKind::Print(text) => TypedStmtKind::Print(text.clone()),
            StmtKind::Assign { target, value } => {
                let (v, tt) = self.assign_target(s.pos, target)?;
                let (x, xt) = self.expr(value)?;
                if !tt.accepts(xt) {
                    return Err(self.mismatch(value.pos, tt, xt));
                }
                TypedStmtKind::Assign { target: v, value: x }
            }
            StmtKind::Create { target, call } => {
                let (v, ty) = self.assign_target(s.pos, &AssignTarget::Name(target.clone()))?;
                let Type::Ref { class, separate } = ty else {
                    return Err(err(
                        DiagnosticKind::InvalidTarget,
                        s.pos,
                        format!("creation target `{target}` is not of a class type"),
                    ));
                };
                let (creation, args) = match call {
                    None => (None, Vec::new()),
                    Some((name, args)) => {
                        let Some(sig) = self.env.find_method(class, name) else {
                            return Err(err(
                                DiagnosticKind::UnknownName,
                                s.pos,
                                format!("unknown creation procedure `{name}`"),
                            ));
                        };
                        if sig.kind != MethodKind::Command {
                            return Err(err(
                                DiagnosticKind::InvalidCall,
                                s.pos,
                                format!("creation procedure `{name}` must be a command"),
                            ));
                        }
                        (Some(sig.id), self.args(s.pos, sig, args, separate)?)
                    }
                };
                TypedStmtKind::Create {
                    target: v,
                    class,
                    separate,
                    creation,
                    args,
                }
            }
            StmtKind::Call(e) => {
                let ExprKind::Call { target, name, args } = &e.kind else {
                    return Err(err(DiagnosticKind::InvalidCall, s.pos, "expected a call"));
                };
                let (ctarget, class, separate) = self.target(target.as_deref())?;
                let Some(sig) = self.env.find_method(class, name) else {
                    return Err(err(
                        DiagnosticKind::UnknownName,
                        e.pos,
                        format!("unknown command `{name}` in class {}", self.env.class(class).name),
                    ));
                };
                if sig.kind == MethodKind::Query {
                    return Err(err(
                        DiagnosticKind::InvalidCall,
                        e.pos,
                        format!("query `{name}` cannot be used as a statement"),
                    ));
                }
                self.check_controlled(e.pos, ctarget, separate)?;
                let args = self.args(e.pos, sig, args, separate)?;
                TypedStmtKind::Call {
                    target: ctarget,
                    method: sig.id,
                    args,
                    separate,
                }
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => TypedStmtKind::If {
                cond: self.condition(cond)?,
                then_branch: self.stmts(then_branch)?,
                else_branch: self.stmts(else_branch)?,
            },
            StmtKind::Loop { init, until, body } => TypedStmtKind::Loop {
                init: self.stmts(init)?,
                until: self.condition(until)?,
                body: self.stmts(body)?,
            },
        };
        Ok(TypedStmt { kind, pos: s.pos })
    }

    fn condition(&self, e: &ast::Expr) -> Result<Expr, Diagnostic> {
        let (x, t) = self.expr(e)?;
        if t != Type::Bool {
            return Err(self.mismatch(e.pos, Type::Bool, t));
        }
        Ok(x)
    }
}

fn check_method(env: &TypeEnv, class: &ClassInfo, decl: &MethodDecl) -> Result<TypedMethod, Diagnostic> {
    let sig = env.find_method(class.id, &decl.name).expect("collected");
    let mut locals = Vec::new();
    for l in &decl.locals {
        locals.push((l.name.clone(), env.resolve(&l.ty, l.pos)?));
    }
    let mut scope = Scope {
        env,
        class,
        sig,
        locals,
        clause: Clause::Require,
    };
    let require = match &decl.require {
        Some(r) => Some(scope.condition(r)?),
        None => None,
    };
    scope.clause = Clause::Body;
    let body = scope.stmts(&decl.body)?;
    scope.clause = Clause::Ensure;
    let ensure = match &decl.ensure {
        Some(e) => Some(scope.condition(e)?),
        None => None,
    };
    Ok(TypedMethod {
        id: sig.id,
        class: class.id,
        name: decl.name.clone(),
        kind: sig.kind,
        formals: sig.formals.clone(),
        locals: scope.locals,
        require,
        body,
        ensure,
        result: sig.result,
        pos: decl.pos,
        end_pos: decl.end_pos,
    })
}

/// Type-checks every method body against `env`.
pub fn check(tree: &SyntaxTree, env: &TypeEnv) -> Result<TypedProgram, Diagnostic> {
    let mut classes: Vec<TypedClass> = Vec::with_capacity(env.classes.len());
    for info in &env.classes {
        let decl: &ClassDecl = tree
            .classes
            .iter()
            .find(|c| c.name == info.name)
            .expect("env built from this tree");
        let mut methods = Vec::new();
        for mdecl in &decl.methods {
            methods.push(check_method(env, info, mdecl).map_err(|d| d.with_source(decl))?);
        }
        methods.sort_by_key(|m| m.id);
        classes.push(TypedClass {
            id: info.id,
            name: info.name.clone(),
            source: decl.source.clone(),
            methods,
        });
    }
    Ok(TypedProgram {
        env: env.clone(),
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{analyze, SourceUnit};

    fn typed(src: &str) -> Result<TypedProgram, Diagnostic> {
        analyze(&[SourceUnit::new("t.cscoop", src)])
    }

    fn method<'a>(p: &'a TypedProgram, class: &str, name: &str) -> &'a TypedMethod {
        let c = p.env.by_name[class];
        let id = p.env.find_method(c, name).unwrap().id;
        p.method(id)
    }

    #[test]
    fn integer_decrement() {
        let p =
            typed("class P root\n times_to_eat: INTEGER\n make do times_to_eat := times_to_eat - 1 end\nend").unwrap();
        let m = method(&p, "P", "make");
        assert_eq!(
            m.body[0].kind,
            TypedStmtKind::Assign {
                target: VarRef::Attr(0),
                value: Expr::Binary(BinOp::Sub, Box::new(Expr::Var(VarRef::Attr(0))), Box::new(Expr::Int(1)))
            }
        );
    }

    #[test]
    fn mixed_arithmetic_rejected() {
        let e = typed("class P root\n b: INTEGER\n make do b := 1 + true end\nend").unwrap_err();
        assert_eq!(e.kind, DiagnosticKind::TypeMismatch);
    }

    #[test]
    fn separate_query_in_expression() {
        let src = "class A root\n r: INTEGER\n make do end\n \
                   read (buf: separate BUF) do r := buf.count end\nend\n\
                   class BUF\n n: INTEGER\n count: INTEGER do Result := n end\nend";
        let p = typed(src).unwrap();
        let m = method(&p, "A", "read");
        let TypedStmtKind::Assign {
            value: Expr::Query(q), ..
        } = &m.body[0].kind
        else {
            panic!("{:?}", m.body[0])
        };
        assert!(q.separate);
        assert_eq!(q.target, CallTarget::Var(VarRef::Formal(0)));
    }

    #[test]
    fn query_as_statement_and_command_in_expression() {
        let base = "class A root\n x: INTEGER\n make do STMT end\n \
                    q: INTEGER do Result := 1 end\n c do end\nend";
        let e = typed(&base.replace("STMT", "q")).unwrap_err();
        assert_eq!(e.kind, DiagnosticKind::InvalidCall);
        let e = typed(&base.replace("STMT", "x := c")).unwrap_err();
        assert_eq!(e.kind, DiagnosticKind::InvalidCall);
        assert!(typed(&base.replace("STMT", "x := q + 1; c")).is_ok());
    }

    #[test]
    fn scoping_formals_over_locals_over_attributes() {
        let src = "class A root\n x: INTEGER\n make do end\n \
                   f (x: INTEGER) local y: INTEGER do y := x end\n \
                   g local x: INTEGER do x := 2 end\nend";
        let p = typed(src).unwrap();
        let f = method(&p, "A", "f");
        assert_eq!(
            f.body[0].kind,
            TypedStmtKind::Assign {
                target: VarRef::Local(0),
                value: Expr::Var(VarRef::Formal(0))
            }
        );
        let g = method(&p, "A", "g");
        assert!(matches!(
            g.body[0].kind,
            TypedStmtKind::Assign {
                target: VarRef::Local(0),
                ..
            }
        ));
    }

    #[test]
    fn separate_call_needs_controlled_target() {
        let src = "class A root\n f: separate F\n make do create f; f.use end\nend\n\
                   class F\n use do end\nend";
        let e = typed(src).unwrap_err();
        assert_eq!(e.kind, DiagnosticKind::InvalidTarget);
    }

    #[test]
    fn separate_attribute_only_in_wait_condition() {
        let ok = "class A root\n make do end\n \
                  take (b: separate B) require b.full do end\nend\nclass B\n full: BOOLEAN\nend";
        assert!(typed(ok).is_ok());
        let bad = "class A root\n v: BOOLEAN\n make do end\n \
                   take (b: separate B) do v := b.full end\nend\nclass B\n full: BOOLEAN\nend";
        assert_eq!(typed(bad).unwrap_err().kind, DiagnosticKind::InvalidCall);
    }

    #[test]
    fn assignment_conformance() {
        let base = "class A root\n s: separate B\n n: B\n make do STMT end\nend\nclass B end";
        assert!(typed(&base.replace("STMT", "s := n")).is_ok());
        assert!(typed(&base.replace("STMT", "n := Void")).is_ok());
        assert_eq!(
            typed(&base.replace("STMT", "n := s")).unwrap_err().kind,
            DiagnosticKind::TypeMismatch
        );
    }

    #[test]
    fn formals_are_read_only_and_arity_checked() {
        let src = "class A root\n make do f (1, 2) end\n f (k: INTEGER) do end\nend";
        assert_eq!(typed(src).unwrap_err().kind, DiagnosticKind::InvalidCall);
        let src = "class A root\n make do end\n f (k: INTEGER) do k := 1 end\nend";
        assert_eq!(typed(src).unwrap_err().kind, DiagnosticKind::InvalidTarget);
    }

    #[test]
    fn result_only_in_queries() {
        let src = "class A root\n make do Result := 1 end\nend";
        assert_eq!(typed(src).unwrap_err().kind, DiagnosticKind::UnknownName);
    }

    #[test]
    fn diagnostics_carry_file() {
        let e = analyze(&[SourceUnit::new(
            "dir/x.cscoop",
            "class A root\n make do y := 1 end\nend",
        )])
        .unwrap_err();
        assert_eq!(e.path.as_deref(), Some("dir/x.cscoop"));
        assert_eq!(e.to_string(), "dir/x.cscoop:2:10: unknown name `y`");
    }
}
