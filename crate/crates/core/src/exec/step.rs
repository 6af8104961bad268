use crate::program::{Action, EdgeId, Expr, FuncId, Loc, Program, VarId};
use crate::sym::{Frame, InitialMemory, ProgramState, StackRecord, SymExpr, SymMemory};

use super::{ExecError, Step, Successor};

/// (Θ, true, [], entry of the start function)
pub fn initial_state(p: &Program) -> ProgramState {
    ProgramState {
        memory: InitialMemory::new(p).memory(),
        pc: SymExpr::TRUE,
        stack: Vec::new(),
        loc: p.entry_of(p.start),
    }
}

pub fn is_final(p: &Program, s: &ProgramState) -> bool {
    s.loc == p.exit_of(p.start) || p.is_error_location(s.loc)
}

/// Resets the callee's frame to Θ and binds its parameters to `args`, all
/// evaluated in the pre-call memory.
fn enter(p: &Program, theta0: &InitialMemory, m: &SymMemory, callee: FuncId, args: &[Expr]) -> SymMemory {
    let f = p.func(callee);
    let values: Vec<SymExpr> = args.iter().map(|a| m.eval(a)).collect();
    let mut out = m.clone();
    for v in f.frame_vars() {
        out.set(v, theta0.value(v));
    }
    for (param, val) in f.params.iter().zip(values) {
        out.set(*param, val);
    }
    out
}

fn caller_frame(p: &Program, s: &ProgramState, ret_loc: Loc, dest: Option<VarId>) -> Frame {
    let f = p.func(s.loc.func);
    Frame {
        func: s.loc.func,
        values: f.frame_vars().map(|v| s.memory.get(v).clone()).collect(),
        ret_loc,
        dest,
    }
}

fn moved(s: &ProgramState, memory: SymMemory, loc: Loc) -> ProgramState {
    ProgramState { memory, pc: s.pc.clone(), stack: s.stack.clone(), loc }
}

fn along(p: &Program, theta0: &InitialMemory, s: &ProgramState, eid: EdgeId) -> Successor {
    let edge = p.edge(eid);
    let dst = Loc { func: eid.func, idx: edge.dst };
    let step = Step::Edge(eid);
    let plain = |state| Successor { state, label: SymExpr::TRUE, step: step.clone() };
    match &edge.action {
        Action::Skip => plain(moved(s, s.memory.clone(), dst)),
        Action::Assign { dest, value } => {
            let mut m = s.memory.clone();
            m.set(*dest, s.memory.eval(value));
            plain(moved(s, m, dst))
        }
        Action::Ret(value) => {
            let mut m = s.memory.clone();
            m.set(p.func(eid.func).ret_var, s.memory.eval(value));
            plain(moved(s, m, dst))
        }
        Action::Guard(g) => {
            let label = s.memory.eval(g);
            let state = ProgramState {
                memory: s.memory.clone(),
                pc: SymExpr::and([s.pc.clone(), label.clone()]),
                stack: s.stack.clone(),
                loc: dst,
            };
            Successor { state, label, step }
        }
        Action::Enter { callee, args } => plain(moved(s, enter(p, theta0, &s.memory, *callee, args), dst)),
        Action::CallAssign { callee, args, .. } | Action::CallVoid { callee, args } => {
            let dest = match &edge.action {
                Action::CallAssign { dest, .. } => Some(*dest),
                _ => None,
            };
            let mut stack = s.stack.clone();
            stack.push(StackRecord::Frame(caller_frame(p, s, dst, dest)));
            let state = ProgramState {
                memory: enter(p, theta0, &s.memory, *callee, args),
                pc: s.pc.clone(),
                stack,
                loc: p.entry_of(*callee),
            };
            plain(state)
        }
    }
}

/// Pops the caller frame at a callee exit: callee frame back to Θ, caller
/// frame restored, then `dest := ret_callee`.
fn return_from(p: &Program, theta0: &InitialMemory, s: &ProgramState, fr: &Frame) -> Successor {
    let callee = p.func(s.loc.func);
    let ret_val = s.memory.get(callee.ret_var).clone();
    let mut m = s.memory.clone();
    for v in callee.frame_vars() {
        m.set(v, theta0.value(v));
    }
    for (v, val) in p.func(fr.func).frame_vars().zip(&fr.values) {
        m.set(v, val.clone());
    }
    if let Some(d) = fr.dest {
        m.set(d, ret_val);
    }
    let mut stack = s.stack.clone();
    stack.pop();
    Successor {
        state: ProgramState { memory: m, pc: s.pc.clone(), stack, loc: fr.ret_loc },
        label: SymExpr::TRUE,
        step: Step::Return { from: s.loc },
    }
}

/// One classic step from a non-final state, in out-edge declaration order.
pub fn classic_successors(
    p: &Program,
    theta0: &InitialMemory,
    s: &ProgramState,
) -> Result<Vec<Successor>, ExecError> {
    if s.loc == p.exit_of(s.loc.func) {
        return match s.stack.last() {
            Some(StackRecord::Frame(fr)) => Ok(vec![return_from(p, theta0, s, fr)]),
            Some(_) => Err(ExecError::MarkerMismatch { location: p.qualified_loc(s.loc) }),
            None => Err(ExecError::Stuck { location: p.qualified_loc(s.loc) }),
        };
    }
    let out = p.out_edges(s.loc);
    if out.is_empty() {
        return Err(ExecError::Stuck { location: p.qualified_loc(s.loc) });
    }
    Ok(out.into_iter().map(|e| along(p, theta0, s, e)).collect())
}
