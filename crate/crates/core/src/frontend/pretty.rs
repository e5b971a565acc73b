//! Source printer. Re-parsing its output yields the same tree modulo positions.

use std::fmt::Write;

use super::ast::*;

pub fn pretty(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    for (i, class) in tree.classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_class(&mut out, class);
    }
    out
}

fn print_type(ty: &DeclaredType) -> String {
    if ty.separate {
        format!("separate {}", ty.base.spelling())
    } else {
        ty.base.spelling().to_string()
    }
}

fn print_class(out: &mut String, class: &ClassDecl) {
    let _ = writeln!(out, "class {}{}", class.name, if class.is_root { " root" } else { "" });
    for a in &class.attributes {
        let _ = writeln!(out, "  {}: {}", a.name, print_type(&a.ty));
    }
    for m in &class.methods {
        print_method(out, m);
    }
    out.push_str("end\n");
}

fn print_method(out: &mut String, m: &MethodDecl) {
    out.push_str("  ");
    out.push_str(&m.name);
    if !m.formals.is_empty() {
        let formals: Vec<String> = m
            .formals
            .iter()
            .map(|f| format!("{}: {}", f.name, print_type(&f.ty)))
            .collect();
        let _ = write!(out, " ({})", formals.join("; "));
    }
    if let Some(r) = &m.result_type {
        let _ = write!(out, ": {}", print_type(r));
    }
    out.push('\n');
    if let Some(req) = &m.require {
        let _ = writeln!(out, "    require\n      {}", expr_to_string(req));
    }
    if !m.locals.is_empty() {
        out.push_str("    local\n");
        for l in &m.locals {
            let _ = writeln!(out, "      {}: {}", l.name, print_type(&l.ty));
        }
    }
    out.push_str("    do\n");
    print_stmts(out, &m.body, 3);
    if let Some(ens) = &m.ensure {
        let _ = writeln!(out, "    ensure\n      {}", expr_to_string(ens));
    }
    out.push_str("    end\n");
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_stmts(out: &mut String, stmts: &[Stmt], level: usize) {
    for s in stmts {
        print_stmt(out, s, level);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::Create { target, call } => {
            let _ = write!(out, "create {target}");
            if let Some((method, args)) = call {
                let _ = write!(out, ".{method}{}", print_args(args, false));
            }
            out.push('\n');
        }
        StmtKind::Assign { target, value } => {
            let t = match target {
                AssignTarget::Name(n) => n.as_str(),
                AssignTarget::Result => "Result",
            };
            let _ = writeln!(out, "{t} := {}", expr_to_string(value));
        }
        StmtKind::Call(e) => {
            // Argumentless unqualified calls print as a bare name.
            match &e.kind {
                ExprKind::Call {
                    target: None,
                    name,
                    args,
                } if args.is_empty() => {
                    let _ = writeln!(out, "{name}");
                }
                _ => {
                    let _ = writeln!(out, "{}", expr_to_string(e));
                }
            }
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "if {} then", expr_to_string(cond));
            print_stmts(out, then_branch, level + 1);
            if !else_branch.is_empty() {
                indent(out, level);
                out.push_str("else\n");
                print_stmts(out, else_branch, level + 1);
            }
            indent(out, level);
            out.push_str("end\n");
        }
        StmtKind::Loop { init, until, body } => {
            out.push_str("from\n");
            print_stmts(out, init, level + 1);
            indent(out, level);
            let _ = writeln!(out, "until {}", expr_to_string(until));
            indent(out, level);
            out.push_str("loop\n");
            print_stmts(out, body, level + 1);
            indent(out, level);
            out.push_str("end\n");
        }
        StmtKind::Print(text) => {
            let _ = writeln!(out, "print ({text})");
        }
    }
}

fn print_args(args: &[Expr], force: bool) -> String {
    if args.is_empty() && !force {
        return String::new();
    }
    let list: Vec<String> = args.iter().map(expr_to_string).collect();
    format!(" ({})", list.join(", "))
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Void => out.push_str("Void"),
        ExprKind::Current => out.push_str("Current"),
        ExprKind::Result => out.push_str("Result"),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Call { target, name, args } => match target {
            None => {
                let _ = write!(out, "{name}{}", print_args(args, true));
            }
            Some(t) => {
                match t.kind {
                    ExprKind::Name(_) | ExprKind::Current | ExprKind::Result | ExprKind::Call { .. } => {
                        write_expr(out, t, 6)
                    }
                    _ => {
                        out.push('(');
                        write_expr(out, t, 0);
                        out.push(')');
                    }
                }
                let _ = write!(out, ".{name}{}", print_args(args, false));
            }
        },
        ExprKind::Unary(op, operand) => {
            out.push_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "not ",
            });
            let simple = matches!(
                operand.kind,
                ExprKind::Int(_)
                    | ExprKind::Bool(_)
                    | ExprKind::Void
                    | ExprKind::Current
                    | ExprKind::Result
                    | ExprKind::Name(_)
                    | ExprKind::Call { .. }
            );
            if simple {
                write_expr(out, operand, 6);
            } else {
                out.push('(');
                write_expr(out, operand, 0);
                out.push(')');
            }
        }
        ExprKind::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, lhs, prec);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, prec + 1);
            if paren {
                out.push(')');
            }
        }
    }
}
