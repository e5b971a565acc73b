//! Recursive-descent parser over the token stream.

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::source::Pos;
use super::{Diagnostic, DiagnosticKind};

type PResult<T> = Result<T, Diagnostic>;

pub fn parse(tokens: &[Token]) -> PResult<SyntaxTree> {
    finish_tree(parse_classes(tokens)?)
}

/// Parses a sequence of class declarations without the whole-program checks.
pub fn parse_classes(tokens: &[Token]) -> PResult<Vec<ClassDecl>> {
    let mut p = Parser { tokens, idx: 0 };
    let mut classes = Vec::new();
    while p.peek().is_some() {
        classes.push(p.class()?);
    }
    Ok(classes)
}

/// Checks that there is at least one class and exactly one `root` class.
pub fn finish_tree(classes: Vec<ClassDecl>) -> PResult<SyntaxTree> {
    if classes.is_empty() {
        return Err(Diagnostic::new(
            DiagnosticKind::NoClasses,
            Pos::new(1, 1),
            "no classes".into(),
        ));
    }
    let roots: Vec<&ClassDecl> = classes.iter().filter(|c| c.is_root).collect();
    let root_class = match roots.as_slice() {
        [one] => one.name.clone(),
        [] => {
            return Err(Diagnostic::new(
                DiagnosticKind::MissingRoot,
                classes[0].pos,
                "no class is marked `root`".into(),
            )
            .with_source(&classes[0]))
        }
        [_, second, ..] => {
            return Err(Diagnostic::new(
                DiagnosticKind::MissingRoot,
                second.pos,
                "more than one class is marked `root`".into(),
            )
            .with_source(second))
        }
    };
    Ok(SyntaxTree { classes, root_class })
}

struct Parser<'a> {
    tokens: &'a [Token],
    idx: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a TokenKind> {
        self.tokens.get(self.idx).map(|t| &t.kind)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'a TokenKind> {
        self.tokens.get(self.idx + ahead).map(|t| &t.kind)
    }

    fn pos(&self) -> Pos {
        match self.tokens.get(self.idx) {
            Some(t) => t.pos,
            None => self
                .tokens
                .last()
                .map(|t| Pos::new(t.pos.line, t.pos.col + 1))
                .unwrap_or(Pos::new(1, 1)),
        }
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> Diagnostic {
        let found = match self.peek() {
            Some(k) => k.describe(),
            None => "end of input".to_string(),
        };
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        let mut d = Diagnostic::new(
            DiagnosticKind::Syntax,
            self.pos(),
            format!("expected {}, found {found}", expected.join(" or ")),
        );
        d.expected = expected;
        d
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Pos> {
        let pos = self.pos();
        if self.eat(&kind) {
            Ok(pos)
        } else {
            Err(self.error(&[&kind.describe()]))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                self.idx += 1;
                Ok((name.clone(), pos))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn class(&mut self) -> PResult<ClassDecl> {
        let pos = self.expect(TokenKind::Class)?;
        let (name, _) = self.ident()?;
        let is_root = self.eat(&TokenKind::Root);
        let mut attributes = Vec::new();
        let mut methods = Vec::new();
        loop {
            match self.peek() {
                Some(TokenKind::End) => {
                    self.idx += 1;
                    break;
                }
                Some(TokenKind::Ident(_)) => self.feature(&mut attributes, &mut methods)?,
                _ => return Err(self.error(&["feature name", "`end`"])),
            }
        }
        Ok(ClassDecl {
            name,
            is_root,
            attributes,
            methods,
            pos,
            source: None,
        })
    }

    fn feature(&mut self, attrs: &mut Vec<VarDecl>, methods: &mut Vec<MethodDecl>) -> PResult<()> {
        let (name, pos) = self.ident()?;
        match self.peek() {
            Some(TokenKind::Comma) => {
                let mut names = vec![(name, pos)];
                while self.eat(&TokenKind::Comma) {
                    names.push(self.ident()?);
                }
                self.expect(TokenKind::Colon)?;
                let ty = self.declared_type()?;
                attrs.extend(names.into_iter().map(|(name, pos)| VarDecl {
                    name,
                    ty: ty.clone(),
                    pos,
                }));
                Ok(())
            }
            Some(TokenKind::Colon) => {
                self.idx += 1;
                let ty = self.declared_type()?;
                if matches!(self.peek(), Some(TokenKind::Require | TokenKind::Local | TokenKind::Do)) {
                    methods.push(self.method_rest(name, pos, Vec::new(), Some(ty))?);
                } else {
                    attrs.push(VarDecl { name, ty, pos });
                }
                Ok(())
            }
            Some(TokenKind::LParen) => {
                self.idx += 1;
                let formals = self.var_groups(&TokenKind::RParen)?;
                self.expect(TokenKind::RParen)?;
                let result = if self.eat(&TokenKind::Colon) {
                    Some(self.declared_type()?)
                } else {
                    None
                };
                methods.push(self.method_rest(name, pos, formals, result)?);
                Ok(())
            }
            Some(TokenKind::Require | TokenKind::Local | TokenKind::Do) => {
                methods.push(self.method_rest(name, pos, Vec::new(), None)?);
                Ok(())
            }
            _ => Err(self.error(&["`:`", "`,`", "`(`", "`do`", "`require`", "`local`"])),
        }
    }

    /// `a, b: T; c: U` up to (not including) `stop` or `do`.
    fn var_groups(&mut self, stop: &TokenKind) -> PResult<Vec<VarDecl>> {
        let mut out = Vec::new();
        while !self.at(stop) && !self.at(&TokenKind::Do) {
            let mut names = vec![self.ident()?];
            while self.eat(&TokenKind::Comma) {
                names.push(self.ident()?);
            }
            self.expect(TokenKind::Colon)?;
            let ty = self.declared_type()?;
            out.extend(names.into_iter().map(|(name, pos)| VarDecl {
                name,
                ty: ty.clone(),
                pos,
            }));
            let separated = self.eat(&TokenKind::Semicolon) || self.eat(&TokenKind::Comma);
            if !separated && !matches!(self.peek(), Some(TokenKind::Ident(_))) {
                break;
            }
        }
        Ok(out)
    }

    fn declared_type(&mut self) -> PResult<DeclaredType> {
        let separate = self.eat(&TokenKind::Separate);
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                self.idx += 1;
                Ok(DeclaredType::new(TypeName::from_ident(name), separate))
            }
            _ => Err(self.error(&["type name"])),
        }
    }

    fn method_rest(
        &mut self,
        name: String,
        pos: Pos,
        formals: Vec<VarDecl>,
        result_type: Option<DeclaredType>,
    ) -> PResult<MethodDecl> {
        let require = if self.eat(&TokenKind::Require) {
            Some(self.expr()?)
        } else {
            None
        };
        let locals = if self.eat(&TokenKind::Local) {
            self.var_groups(&TokenKind::Do)?
        } else {
            Vec::new()
        };
        self.expect(TokenKind::Do)?;
        let body = self.stmts()?;
        let mut ensure = if self.eat(&TokenKind::Ensure) {
            Some(self.expr()?)
        } else {
            None
        };
        let end_pos = self.expect(TokenKind::End)?;
        if ensure.is_none() && self.eat(&TokenKind::Ensure) {
            ensure = Some(self.expr()?);
        }
        let kind = if result_type.is_some() {
            MethodKind::Query
        } else {
            MethodKind::Command
        };
        Ok(MethodDecl {
            name,
            kind,
            formals,
            locals,
            require,
            body,
            ensure,
            result_type,
            pos,
            end_pos,
        })
    }

    fn stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None
                | Some(TokenKind::End | TokenKind::Ensure | TokenKind::Else | TokenKind::Elseif | TokenKind::Until) => {
                    return Ok(out)
                }
                Some(TokenKind::Semicolon) => {
                    self.idx += 1;
                }
                Some(_) => out.push(self.stmt()?),
            }
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let kind = match self.peek() {
            Some(TokenKind::Create) => {
                self.idx += 1;
                let (target, _) = self.ident()?;
                let call = if self.eat(&TokenKind::Dot) {
                    let (method, _) = self.ident()?;
                    let args = if self.at(&TokenKind::LParen) {
                        self.args()?
                    } else {
                        Vec::new()
                    };
                    Some((method, args))
                } else {
                    None
                };
                StmtKind::Create { target, call }
            }
            Some(TokenKind::If) => {
                self.idx += 1;
                self.if_rest()?
            }
            Some(TokenKind::From) => {
                self.idx += 1;
                let init = self.stmts()?;
                self.expect(TokenKind::Until)?;
                let until = self.expr()?;
                self.expect(TokenKind::Loop)?;
                let body = self.stmts()?;
                self.expect(TokenKind::End)?;
                StmtKind::Loop { init, until, body }
            }
            Some(TokenKind::Print) => {
                self.idx += 1;
                StmtKind::Print(self.print_text()?)
            }
            Some(TokenKind::Result) if self.peek_at(1) == Some(&TokenKind::Assign) => {
                self.idx += 2;
                StmtKind::Assign {
                    target: AssignTarget::Result,
                    value: self.expr()?,
                }
            }
            Some(TokenKind::Ident(name)) if self.peek_at(1) == Some(&TokenKind::Assign) => {
                let name = name.clone();
                self.idx += 2;
                StmtKind::Assign {
                    target: AssignTarget::Name(name),
                    value: self.expr()?,
                }
            }
            Some(TokenKind::Ident(_) | TokenKind::Current) => {
                let e = self.postfix()?;
                if !matches!(e.kind, ExprKind::Call { .. } | ExprKind::Name(_)) {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        pos,
                        "expression used as a statement".into(),
                    ));
                }
                // A bare name statement is an argumentless unqualified call.
                let e = match e.kind {
                    ExprKind::Name(name) => Expr {
                        kind: ExprKind::Call {
                            target: None,
                            name,
                            args: Vec::new(),
                        },
                        pos: e.pos,
                    },
                    _ => e,
                };
                StmtKind::Call(e)
            }
            _ => return Err(self.error(&["statement"])),
        };
        Ok(Stmt { kind, pos })
    }

    fn if_rest(&mut self) -> PResult<StmtKind> {
        let cond = self.expr()?;
        self.expect(TokenKind::Then)?;
        let then_branch = self.stmts()?;
        let else_branch = if self.at(&TokenKind::Elseif) {
            let pos = self.pos();
            self.idx += 1;
            // `elseif` closes with the enclosing `end`; nest it as an else branch.
            let nested = self.if_rest()?;
            return Ok(StmtKind::If {
                cond,
                then_branch,
                else_branch: vec![Stmt { kind: nested, pos }],
            });
        } else if self.eat(&TokenKind::Else) {
            self.stmts()?
        } else {
            Vec::new()
        };
        self.expect(TokenKind::End)?;
        Ok(StmtKind::If {
            cond,
            then_branch,
            else_branch,
        })
    }

    /// Balanced-parenthesis argument of `print`, rendered back as token text.
    fn print_text(&mut self) -> PResult<String> {
        self.expect(TokenKind::LParen)?;
        let mut depth = 1usize;
        let mut parts = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return Err(self.error(&["`)`"]));
            };
            self.idx += 1;
            match tok {
                TokenKind::LParen => depth += 1,
                TokenKind::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                _ => {}
            }
            parts.push(spell(tok));
        }
        Ok(parts.join(" "))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if self.eat(&TokenKind::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(&TokenKind::Comma) {
                continue;
            }
            self.expect(TokenKind::RParen)?;
            return Ok(args);
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek()? {
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::IntDiv => BinOp::Div,
            TokenKind::Mod => BinOp::Mod,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::Eq => BinOp::Eq,
            TokenKind::Ne => BinOp::Ne,
            TokenKind::And => BinOp::And,
            TokenKind::Or => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let pos = self.pos();
            self.idx += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let op = match self.peek() {
            Some(TokenKind::Minus) => UnOp::Neg,
            Some(TokenKind::Not) => UnOp::Not,
            _ => return self.postfix(),
        };
        self.idx += 1;
        let operand = self.unary()?;
        Ok(Expr {
            kind: ExprKind::Unary(op, Box::new(operand)),
            pos,
        })
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.at(&TokenKind::Dot) {
            self.idx += 1;
            let (name, pos) = self.ident()?;
            let args = if self.at(&TokenKind::LParen) {
                self.args()?
            } else {
                Vec::new()
            };
            e = Expr {
                kind: ExprKind::Call {
                    target: Some(Box::new(e)),
                    name,
                    args,
                },
                pos,
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let kind = match self.peek() {
            Some(TokenKind::Int(v)) => ExprKind::Int(*v),
            Some(TokenKind::True) => ExprKind::Bool(true),
            Some(TokenKind::False) => ExprKind::Bool(false),
            Some(TokenKind::Void) => ExprKind::Void,
            Some(TokenKind::Current) => ExprKind::Current,
            Some(TokenKind::Result) => ExprKind::Result,
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.idx += 1;
                if self.at(&TokenKind::LParen) {
                    let args = self.args()?;
                    return Ok(Expr {
                        kind: ExprKind::Call {
                            target: None,
                            name,
                            args,
                        },
                        pos,
                    });
                }
                return Ok(Expr {
                    kind: ExprKind::Name(name),
                    pos,
                });
            }
            Some(TokenKind::LParen) => {
                self.idx += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                return Ok(inner);
            }
            _ => return Err(self.error(&["expression"])),
        };
        self.idx += 1;
        Ok(Expr { kind, pos })
    }
}

/// Source spelling of a token, used to keep `print` arguments as text.
fn spell(tok: &TokenKind) -> String {
    match tok {
        TokenKind::Ident(n) => n.clone(),
        TokenKind::Int(v) => v.to_string(),
        TokenKind::Str(s) => format!("\"{s}\""),
        other => other.describe().trim_matches('`').to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::tokenize;
    use crate::frontend::source::SourceUnit;

    fn parse_src(src: &str) -> PResult<SyntaxTree> {
        parse(&tokenize(&SourceUnit::new("t.cscoop", src)).unwrap())
    }

    const LISTING_1: &str = r#"
class PHILOSOPHER root
  live -- Each Philosopher eats times_to_eat times
    do
      from until
        times_to_eat < 1
      loop
        print ("Philosopher " + Current.id.out + " waiting for forks.")
        eat (left_fork, right_fork)
        print ("Philosopher " + Current.id.out + " has eaten.")
        times_to_eat := times_to_eat - 1
      end
    end
  eat (left, right: separate FORK) -- Eat, having acquired left and right forks
    do
      -- Here, eating takes place
    end
  left_fork, right_fork: separate FORK -- References to forks used for eating
  times_to_eat: INTEGER
end
"#;

    #[test]
    fn philosopher_snippet() {
        let tree = parse_src(LISTING_1).unwrap();
        let class = &tree.classes[0];
        assert_eq!(class.name, "PHILOSOPHER");
        let methods: Vec<&str> = class.methods.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(methods, ["live", "eat"]);
        let attrs: Vec<&str> = class.attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(attrs, ["left_fork", "right_fork", "times_to_eat"]);
        assert_eq!(
            class.attribute("left_fork").unwrap().ty,
            DeclaredType::new(TypeName::Class("FORK".into()), true)
        );
        let eat = class.method("eat").unwrap();
        assert_eq!(eat.formals.len(), 2);
        assert!(eat.body.is_empty());
        let live = class.method("live").unwrap();
        let StmtKind::Loop { init, until, body } = &live.body[0].kind else {
            panic!("expected loop")
        };
        assert!(init.is_empty());
        assert!(matches!(until.kind, ExprKind::Binary(BinOp::Lt, _, _)));
        assert_eq!(body.len(), 4);
    }

    #[test]
    fn bad_eat_snippet() {
        let src = r#"
class PHILOSOPHER root
  left_fork, right_fork: separate FORK
  pickup_left_then_right (left: separate FORK)
    do
      print ("Philosopher " + Current.id.out + " waiting for right fork.")
      pickup_right (right_fork)
    end
  pickup_right (right: separate FORK)
    do
    end
end
"#;
        let tree = parse_src(src).unwrap();
        let m = tree.classes[0].method("pickup_left_then_right").unwrap();
        assert_eq!(m.body.len(), 2);
        assert!(matches!(m.body[0].kind, StmtKind::Print(_)));
        match &m.body[1].kind {
            StmtKind::Call(Expr {
                kind: ExprKind::Call { target, name, args },
                ..
            }) => {
                assert!(target.is_none());
                assert_eq!(name, "pickup_right");
                assert_eq!(args.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_has_no_classes() {
        let err = parse_src("   -- nothing\n").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::NoClasses);
        assert_eq!(err.message, "no classes");
    }

    #[test]
    fn syntax_error_lists_expected_tokens() {
        let err = parse_src("class A root\n  make do x := end\nend").unwrap_err();
        assert_eq!(err.kind, DiagnosticKind::Syntax);
        assert_eq!(err.expected, vec!["expression".to_string()]);
        assert_eq!(err.pos, Pos::new(2, 16));
    }

    #[test]
    fn precedence_and_associativity() {
        let tree = parse_src("class A root\n x: INTEGER\n make do x := 1 + 2 * 3 - 4 end\nend").unwrap();
        let StmtKind::Assign { value, .. } = &tree.classes[0].methods[0].body[0].kind else {
            panic!()
        };
        // (1 + (2 * 3)) - 4
        let ExprKind::Binary(BinOp::Sub, lhs, _) = &value.kind else {
            panic!("{value:?}")
        };
        assert!(matches!(lhs.kind, ExprKind::Binary(BinOp::Add, _, _)));
    }

    #[test]
    fn query_with_result_type_and_ensure_forms() {
        let src = "class A root\n n: INTEGER\n count: INTEGER do Result := n ensure Result = n end\n \
                   other (k: INTEGER): BOOLEAN require k > 0 local t: INTEGER do t := k end ensure Result = false\n \
                   make do end\nend";
        let tree = parse_src(src).unwrap();
        let c = &tree.classes[0];
        assert_eq!(c.attributes.len(), 1);
        let count = c.method("count").unwrap();
        assert_eq!(count.kind, MethodKind::Query);
        assert!(count.ensure.is_some());
        let other = c.method("other").unwrap();
        assert!(other.require.is_some() && other.ensure.is_some());
        assert_eq!(other.locals.len(), 1);
    }

    #[test]
    fn exactly_one_root() {
        assert_eq!(
            parse_src("class A make do end end").unwrap_err().kind,
            DiagnosticKind::MissingRoot
        );
        assert_eq!(
            parse_src("class A root make do end end class B root end")
                .unwrap_err()
                .kind,
            DiagnosticKind::MissingRoot
        );
    }
}
