//! Side-effect-free expression evaluation.

use std::fmt;

use crate::compiler::{Action, Program};
use crate::ir::{BinOp, CallTarget, Expr, MethodId, UnOp, VarRef};
use crate::model::{Configuration, Frame, ObjectId, ReturnTo, Value};

/// Steps an inline query may take before evaluation gives up.
pub const INLINE_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    DivisionByZero,
    Overflow,
    /// Dereferenced `Void`.
    VoidTarget,
    /// Inline query execution met an action it cannot run synchronously.
    Unsupported(&'static str),
    Budget,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero => f.write_str("division by zero"),
            EvalError::Overflow => f.write_str("integer overflow"),
            EvalError::VoidTarget => f.write_str("call on Void target"),
            EvalError::Unsupported(what) => write!(f, "{what} inside a wait condition"),
            EvalError::Budget => f.write_str("wait condition did not terminate"),
        }
    }
}

pub type EvalResult = Result<Value, EvalError>;

/// Reads a variable of `frame`, whose current object lives in `c`.
pub fn read_var(c: &Configuration, frame: &Frame, v: VarRef) -> Value {
    match v {
        VarRef::Attr(i) => c.object(frame.object).attrs[i as usize],
        other => frame.read(other).expect("bound variable"),
    }
}

pub fn target_value(c: &Configuration, frame: &Frame, t: CallTarget) -> Value {
    match t {
        CallTarget::Current => c.ref_to(frame.object),
        CallTarget::Var(v) => read_var(c, frame, v),
    }
}

/// Writes a variable of the frame `frame` (on the stack of some processor)
/// or an attribute of its object.
pub fn write_var(c: &mut Configuration, frame: &mut Frame, v: VarRef, value: Value) {
    match v {
        VarRef::Formal(i) => frame.params[i as usize] = value,
        VarRef::Local(i) => frame.locals[i as usize] = value,
        VarRef::Result => frame.result = value,
        VarRef::Attr(i) => c.objects.get_mut(&frame.object).expect("live object").attrs[i as usize] = value,
    }
}

fn int(v: Value) -> i64 {
    match v {
        Value::Int(i) => i,
        other => panic!("ill-typed operand {other}"),
    }
}

fn boolean(v: Value) -> bool {
    match v {
        Value::Bool(b) => b,
        other => panic!("ill-typed operand {other}"),
    }
}

pub fn binary(op: BinOp, a: Value, b: Value) -> EvalResult {
    let arith = |r: Option<i64>| r.map(Value::Int).ok_or(EvalError::Overflow);
    Ok(match op {
        BinOp::Add => arith(int(a).checked_add(int(b)))?,
        BinOp::Sub => arith(int(a).checked_sub(int(b)))?,
        BinOp::Mul => arith(int(a).checked_mul(int(b)))?,
        BinOp::Div | BinOp::Mod if int(b) == 0 => return Err(EvalError::DivisionByZero),
        BinOp::Div => arith(int(a).checked_div(int(b)))?,
        BinOp::Mod => arith(int(a).checked_rem(int(b)))?,
        BinOp::Lt => Value::Bool(int(a) < int(b)),
        BinOp::Le => Value::Bool(int(a) <= int(b)),
        BinOp::Gt => Value::Bool(int(a) > int(b)),
        BinOp::Ge => Value::Bool(int(a) >= int(b)),
        BinOp::Eq => Value::Bool(a == b),
        BinOp::Ne => Value::Bool(a != b),
        BinOp::And => Value::Bool(boolean(a) && boolean(b)),
        BinOp::Or => Value::Bool(boolean(a) || boolean(b)),
    })
}

/// Evaluates `e` in the context of `frame`. Query calls are executed
/// inline on a scratch copy of `c`, so the configuration is never changed.
pub fn evaluate(p: &Program, c: &Configuration, frame: &Frame, e: &Expr) -> EvalResult {
    let mut budget = INLINE_BUDGET;
    eval_in(p, c, frame, e, &mut budget)
}

fn eval_in(p: &Program, c: &Configuration, frame: &Frame, e: &Expr, budget: &mut usize) -> EvalResult {
    Ok(match e {
        Expr::Int(i) => Value::Int(*i),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Void => Value::Void,
        Expr::Current => c.ref_to(frame.object),
        Expr::Var(v) => read_var(c, frame, *v),
        Expr::Field { target, attr } => match read_var(c, frame, *target) {
            Value::Ref(_, o) => c.object(o).attrs[*attr as usize],
            _ => return Err(EvalError::VoidTarget),
        },
        Expr::Unary(UnOp::Neg, a) => {
            let v = int(eval_in(p, c, frame, a, budget)?);
            Value::Int(v.checked_neg().ok_or(EvalError::Overflow)?)
        }
        Expr::Unary(UnOp::Not, a) => Value::Bool(!boolean(eval_in(p, c, frame, a, budget)?)),
        Expr::Binary(op, a, b) => {
            let a = eval_in(p, c, frame, a, budget)?;
            let b = eval_in(p, c, frame, b, budget)?;
            binary(*op, a, b)?
        }
        Expr::Query(q) => {
            let args = q
                .args
                .iter()
                .map(|a| eval_in(p, c, frame, a, budget))
                .collect::<Result<Vec<_>, _>>()?;
            let Value::Ref(_, o) = target_value(c, frame, q.target) else {
                return Err(EvalError::VoidTarget);
            };
            run_inline(p, c.clone(), q.method, o, args, budget)?
        }
    })
}

/// Runs a query to completion on `scratch`, ignoring processor boundaries.
fn run_inline(
    p: &Program,
    mut scratch: Configuration,
    method: MethodId,
    object: ObjectId,
    args: Vec<Value>,
    budget: &mut usize,
) -> EvalResult {
    let mut stack = vec![Frame::new(p, method, object, args, ReturnTo::Local(None))];
    loop {
        if *budget == 0 {
            return Err(EvalError::Budget);
        }
        *budget -= 1;
        let mut frame = stack.pop().expect("non-empty inline stack");
        let g = p.method(frame.method);
        if g.is_final(frame.state) {
            match (stack.last_mut(), frame.return_to) {
                (None, _) => return Ok(frame.result),
                (Some(below), ReturnTo::Local(Some(dest))) => write_var(&mut scratch, below, dest, frame.result),
                (Some(_), _) => {}
            }
            continue;
        }
        let (_, edge) = g.edges_from(frame.state).next().expect("non-final state has an edge");
        frame.state = edge.to;
        match &edge.action {
            Action::Assign { target, value } => {
                let v = eval_in(p, &scratch, &frame, value, budget)?;
                write_var(&mut scratch, &mut frame, *target, v);
                stack.push(frame);
            }
            Action::Branch { cond } => {
                if !boolean(eval_in(p, &scratch, &frame, cond, budget)?) {
                    frame.state = edge.on_false.expect("branch has a false successor");
                }
                stack.push(frame);
            }
            Action::Lock { guard, .. } => {
                if let Some(g) = guard {
                    if !boolean(eval_in(p, &scratch, &frame, g, budget)?) {
                        return Err(EvalError::Unsupported("a blocked wait condition"));
                    }
                }
                stack.push(frame);
            }
            Action::Unlock { .. } | Action::Noop { .. } | Action::PostCheck { .. } => stack.push(frame),
            Action::LocalCall {
                target, method, args, ..
            }
            | Action::Query {
                target, method, args, ..
            } => {
                let dest = result_of(&edge.action);
                let args = args
                    .iter()
                    .map(|a| eval_in(p, &scratch, &frame, a, budget))
                    .collect::<Result<Vec<_>, _>>()?;
                let Value::Ref(_, o) = target_value(&scratch, &frame, *target) else {
                    return Err(EvalError::VoidTarget);
                };
                stack.push(frame);
                stack.push(Frame::new(p, *method, o, args, ReturnTo::Local(dest)));
            }
            Action::Command { .. } => return Err(EvalError::Unsupported("a separate command")),
            Action::CreateLocal { .. } | Action::CreateSeparate { .. } => {
                return Err(EvalError::Unsupported("object creation"))
            }
        }
    }
}

fn result_of(a: &Action) -> Option<VarRef> {
    match a {
        Action::Query { result, .. } => Some(*result),
        Action::LocalCall { result, .. } => *result,
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{lower_program, CompileOptions};
    use crate::frontend::{analyze, SourceUnit};
    use crate::model::initial_configuration;

    /// Evaluates `expr` as the right-hand side of `v := expr` with `v: ty`.
    fn eval_src(attrs: &str, ty: &str, expr: &str) -> EvalResult {
        let src = format!("class A root\n {attrs}\n v: {ty}\n make do v := {expr} end\nend");
        let typed = analyze(&[SourceUnit::new("t", src)]).unwrap();
        let p = lower_program(&typed, CompileOptions::default());
        let c = initial_configuration(&p);
        let frame = c.processor(c.root).top().unwrap().clone();
        let g = p.method(p.root);
        let Action::Assign { value, .. } = &g.edges[0].action else {
            panic!("{:?}", g.edges)
        };
        evaluate(&p, &c, &frame, value)
    }

    #[test]
    fn guard_of_listing_one() {
        assert_eq!(
            eval_src("times_to_eat: INTEGER", "BOOLEAN", "times_to_eat < 1"),
            Ok(Value::Bool(true))
        );
    }

    #[test]
    fn arithmetic_precedence() {
        assert_eq!(eval_src("", "INTEGER", "1 + 2 * 3"), Ok(Value::Int(7)));
        assert_eq!(eval_src("", "INTEGER", "-7 // 2"), Ok(Value::Int(-3)));
        assert_eq!(eval_src("", "INTEGER", "7 \\\\ 3"), Ok(Value::Int(1)));
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(
            eval_src("x: INTEGER", "INTEGER", "x // 0"),
            Err(EvalError::DivisionByZero)
        );
    }

    #[test]
    fn overflow_is_an_error() {
        assert_eq!(
            binary(BinOp::Add, Value::Int(i64::MAX), Value::Int(1)),
            Err(EvalError::Overflow)
        );
        assert_eq!(
            binary(BinOp::Div, Value::Int(i64::MIN), Value::Int(-1)),
            Err(EvalError::Overflow)
        );
    }

    #[test]
    fn reference_equality() {
        assert_eq!(eval_src("", "BOOLEAN", "Current = Current"), Ok(Value::Bool(true)));
        assert_eq!(eval_src("", "BOOLEAN", "Current /= Void"), Ok(Value::Bool(true)));
    }
}
