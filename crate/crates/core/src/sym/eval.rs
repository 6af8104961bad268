//! Three-valued evaluation under a partial assignment.

use crate::program::{BinOp, UnOp};

use super::expr::{arith, compare, Param, Symbol, SymExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

/// Something an assignment may leave open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Scalar(Symbol),
    Param(Param),
    Cell(Symbol, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eval {
    Known(Value),
    /// Depends on the first unassigned atom met left to right.
    Blocked(Atom),
    /// Division by zero or overflow somewhere that mattered.
    Undefined,
}

pub trait Assignment {
    fn scalar(&self, s: Symbol) -> Option<Value>;
    fn param(&self, p: Param) -> Option<i64>;
    fn cell(&self, array: Symbol, index: i64) -> Option<i64>;
}

/// Bounded-quantifier instances evaluated before giving up on expansion.
const MAX_QUANTIFIER_RANGE: i64 = 1 << 20;

pub fn evaluate(e: &SymExpr, asg: &dyn Assignment) -> Eval {
    eval(e, asg, &mut Vec::new())
}

/// Evaluates to a boolean, treating blocked or undefined results as `None`.
pub fn evaluate_bool(e: &SymExpr, asg: &dyn Assignment) -> Option<bool> {
    match evaluate(e, asg) {
        Eval::Known(Value::Bool(b)) => Some(b),
        _ => None,
    }
}

fn int_of(e: Eval) -> Result<i64, Eval> {
    match e {
        Eval::Known(Value::Int(v)) => Ok(v),
        Eval::Known(Value::Bool(_)) => Err(Eval::Undefined),
        other => Err(other),
    }
}

/// Kleene conjunction over lazily produced members.
fn kleene_and(mut members: impl FnMut(&mut dyn FnMut(Eval) -> bool)) -> Eval {
    let mut blocked = None;
    let mut undefined = false;
    let mut falsified = false;
    members(&mut |r| match r {
        Eval::Known(Value::Bool(false)) => {
            falsified = true;
            false
        }
        Eval::Known(_) => true,
        Eval::Blocked(a) => {
            blocked.get_or_insert(a);
            true
        }
        Eval::Undefined => {
            undefined = true;
            true
        }
    });
    if falsified {
        Eval::Known(Value::Bool(false))
    } else if let Some(a) = blocked {
        Eval::Blocked(a)
    } else if undefined {
        Eval::Undefined
    } else {
        Eval::Known(Value::Bool(true))
    }
}

fn eval(e: &SymExpr, asg: &dyn Assignment, env: &mut Vec<(Param, i64)>) -> Eval {
    match e {
        SymExpr::Int(v) => Eval::Known(Value::Int(*v)),
        SymExpr::Bool(b) => Eval::Known(Value::Bool(*b)),
        SymExpr::Sym(s) => asg.scalar(*s).map_or(Eval::Blocked(Atom::Scalar(*s)), Eval::Known),
        SymExpr::Param(p) => match env.iter().rev().find(|(q, _)| q == p) {
            Some((_, v)) => Eval::Known(Value::Int(*v)),
            None => asg
                .param(*p)
                .map_or(Eval::Blocked(Atom::Param(*p)), |v| Eval::Known(Value::Int(v))),
        },
        SymExpr::Select(a, idx) => match int_of(eval(idx, asg, env)) {
            Ok(i) => asg
                .cell(*a, i)
                .map_or(Eval::Blocked(Atom::Cell(*a, i)), |v| Eval::Known(Value::Int(v))),
            Err(other) => other,
        },
        SymExpr::Unary(op, inner) => match (op, eval(inner, asg, env)) {
            (UnOp::Neg, Eval::Known(Value::Int(v))) => {
                v.checked_neg().map_or(Eval::Undefined, |n| Eval::Known(Value::Int(n)))
            }
            (UnOp::Not, Eval::Known(Value::Bool(b))) => Eval::Known(Value::Bool(!b)),
            (_, Eval::Known(_)) => Eval::Undefined,
            (_, other) => other,
        },
        SymExpr::Binary(BinOp::Or, l, r) => {
            let a = eval(l, asg, env);
            if a == Eval::Known(Value::Bool(true)) {
                return a;
            }
            let b = eval(r, asg, env);
            match (a, b) {
                (_, Eval::Known(Value::Bool(true))) => b,
                (Eval::Known(Value::Bool(false)), Eval::Known(Value::Bool(false))) => a,
                (Eval::Blocked(_), _) => a,
                (_, Eval::Blocked(_)) => b,
                _ => Eval::Undefined,
            }
        }
        SymExpr::Binary(op, l, r) => {
            let a = eval(l, asg, env);
            if matches!(a, Eval::Blocked(_)) {
                return a;
            }
            let b = eval(r, asg, env);
            match (a, b) {
                (Eval::Known(Value::Int(x)), Eval::Known(Value::Int(y))) => {
                    if op.is_comparison() {
                        Eval::Known(Value::Bool(compare(*op, x, y)))
                    } else {
                        arith(*op, x, y).map_or(Eval::Undefined, |v| Eval::Known(Value::Int(v)))
                    }
                }
                (Eval::Known(Value::Bool(x)), Eval::Known(Value::Bool(y))) => match op {
                    BinOp::Eq => Eval::Known(Value::Bool(x == y)),
                    BinOp::Ne => Eval::Known(Value::Bool(x != y)),
                    _ => Eval::Undefined,
                },
                (_, Eval::Blocked(atom)) => Eval::Blocked(atom),
                _ => Eval::Undefined,
            }
        }
        SymExpr::And(items) => kleene_and(|sink| {
            for it in items {
                if !sink(eval(it, asg, env)) {
                    return;
                }
            }
        }),
        SymExpr::Forall { var, lo, hi, body } => {
            let lo = match int_of(eval(lo, asg, env)) {
                Ok(v) => v,
                Err(other) => return other,
            };
            let hi = match int_of(eval(hi, asg, env)) {
                Ok(v) => v,
                Err(other) => return other,
            };
            if hi.saturating_sub(lo) > MAX_QUANTIFIER_RANGE {
                return Eval::Undefined;
            }
            kleene_and(|sink| {
                for v in lo..hi {
                    env.push((*var, v));
                    let r = eval(body, asg, env);
                    env.pop();
                    if !sink(r) {
                        return;
                    }
                }
            })
        }
    }
}
