use std::collections::BTreeMap;

use crate::program::{Loc, Program};
use crate::solver::{SatQuery, SolverBackend, Verdict};
use crate::sym::{Frame, InitialMemory, Param, ProgramState, StackRecord, SymExpr, SymMemory};

use super::closed_form::close_memory_form;
use super::part::{build_part_program, build_return_part_program, run_part};
use super::{
    CandidatePart, FailureReason, PartKind, RecursionReturn, Template, TemplateExit,
    TemplateFailure, TemplateSet,
};

fn closed(p: &Program, theta0: &InitialMemory, theta: &SymMemory, kappa: Param) -> Result<SymMemory, FailureReason> {
    close_memory_form(p, theta0, theta, kappa)
        .map_err(|v| FailureReason::NotClosedForm { variable: p.var(v).name.clone() })
}

fn solver_failure(e: crate::solver::SolverError) -> FailureReason {
    FailureReason::Solver { message: e.to_string() }
}

/// (θ⟨κ⟩ ∘ θ̂, 0 ≤ κ ∧ ∀τ(0 ≤ τ < κ → θ⟨τ⟩⟦φ⟧) ∧ θ⟨κ⟩⟦φ̂⟧, θ⟨κ⟩ ∘ Ξ̂)
fn exit_of(
    closed_kappa: &SymMemory,
    closed_tau: &SymMemory,
    kappa: Param,
    tau: Param,
    cycle_pc: &SymExpr,
    hat: &ProgramState,
    loc: Loc,
) -> TemplateExit {
    let stack = hat
        .stack
        .iter()
        .map(|r| match r {
            StackRecord::Frame(fr) => StackRecord::Frame(Frame {
                values: fr.values.iter().map(|e| closed_kappa.apply(e)).collect(),
                ..fr.clone()
            }),
            other => other.clone(),
        })
        .collect();
    let pc = SymExpr::and([
        SymExpr::le(SymExpr::Int(0), SymExpr::Param(kappa)),
        SymExpr::forall(tau, SymExpr::Int(0), SymExpr::Param(kappa), closed_tau.apply(cycle_pc)),
        closed_kappa.apply(&hat.pc),
    ]);
    TemplateExit { memory: closed_kappa.compose(&hat.memory), pc, stack, loc }
}

/// Drops exits whose condition is unsatisfiable and rejects overlapping
/// exit conditions.
fn check_exits(
    p: &Program,
    exits: Vec<TemplateExit>,
    solver: &mut dyn SolverBackend,
) -> Result<Vec<TemplateExit>, FailureReason> {
    let mut kept = Vec::new();
    for x in exits {
        match solver.check_sat(&SatQuery::new(x.pc.clone())).map_err(solver_failure)?.verdict {
            Verdict::Sat => kept.push(x),
            Verdict::Unsat => {}
            Verdict::Unknown => {
                return Err(FailureReason::SolverUnknown {
                    what: format!("exit condition at {}", p.qualified_loc(x.loc)),
                })
            }
        }
    }
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            let both = SymExpr::and([kept[i].pc.clone(), kept[j].pc.clone()]);
            match solver.check_sat(&SatQuery::new(both)).map_err(solver_failure)?.verdict {
                Verdict::Unsat => {}
                Verdict::Sat => return Err(FailureReason::ExitOverlap { first: i, second: j }),
                Verdict::Unknown => {
                    return Err(FailureReason::SolverUnknown { what: format!("overlap of exits {i} and {j}") })
                }
            }
        }
    }
    if kept.is_empty() {
        return Err(FailureReason::NoExits);
    }
    Ok(kept)
}

/// Template of a cycle with its exits, recursion parts included: for those
/// the cycle is closed by re-entering the function.
pub fn compute_loop_template(
    p: &Program,
    part: &CandidatePart,
    solver: &mut dyn SolverBackend,
) -> Result<Template, FailureReason> {
    if part.exits.is_empty() {
        return Err(FailureReason::NoExits);
    }
    let theta0 = InitialMemory::new(p);
    let kappa = Param::kappa(0);
    let tau = Param::tau(0);
    let mut cycle: Option<ProgramState> = None;
    let mut hats = Vec::new();
    for i in 0..part.exits.len() {
        let pp = build_part_program(p, part, i)?;
        let run = run_part(&pp, solver)?;
        let Some(c) = run.cycle_state else {
            return Err(FailureReason::InfeasibleCycle);
        };
        if !c.stack.is_empty() {
            return Err(FailureReason::CycleBranches);
        }
        cycle.get_or_insert(c);
        if let Some(hat) = run.exit_state {
            let loc = pp.origin_of(hat.loc).ok_or(FailureReason::CycleBranches)?;
            hats.push((hat, loc));
        }
    }
    let cycle = cycle.ok_or(FailureReason::InfeasibleCycle)?;
    let closed_kappa = closed(p, &theta0, &cycle.memory, kappa)?;
    let to_tau: BTreeMap<Param, SymExpr> = [(kappa, SymExpr::Param(tau))].into_iter().collect();
    let closed_tau = closed_kappa.map(|e| e.subst_params(&to_tau));
    let exits = hats
        .iter()
        .map(|(hat, loc)| exit_of(&closed_kappa, &closed_tau, kappa, tau, &cycle.pc, hat, *loc))
        .collect();
    let exits = check_exits(p, exits, solver)?;
    Ok(Template {
        kind: part.kind,
        entry: part.entry(),
        param: kappa,
        exits,
        recursion: None,
        cycle_memory: cycle.memory,
        closed_memory: closed_kappa,
        part: part.clone(),
    })
}

/// Call phase from the cycle through the recursive call; return phase from
/// the straight path after the call, restricted to globals and `ret_f`.
pub fn compute_recursion_template(
    p: &Program,
    part: &CandidatePart,
    solver: &mut dyn SolverBackend,
) -> Result<Template, FailureReason> {
    let back = build_return_part_program(p, part)?;
    let mut t = compute_loop_template(p, part, solver)?;
    let theta0 = InitialMemory::new(p);
    let run = run_part(&back, solver)?;
    let cycle = run.cycle_state.ok_or(FailureReason::ReturnPathStuck)?;
    let mut step = theta0.memory();
    for v in p.var_ids().filter(|v| p.var(*v).is_global()) {
        step.set(v, cycle.memory.get(v).clone());
    }
    let memory = closed(p, &theta0, &step, t.param)?;
    t.recursion = Some(RecursionReturn { memory, loc: p.exit_of(part.function), step_memory: step });
    Ok(t)
}

/// Templates for every part that admits one, in part order, and the
/// reasons the others do not.
pub fn build_templates(
    p: &Program,
    parts: &[CandidatePart],
    solver: &mut dyn SolverBackend,
) -> (TemplateSet, Vec<TemplateFailure>) {
    let mut templates = Vec::new();
    let mut failures = Vec::new();
    for part in parts {
        let r = match part.kind {
            PartKind::Loop => compute_loop_template(p, part, solver),
            PartKind::Recursion => compute_recursion_template(p, part, solver),
        };
        match r {
            Ok(t) => templates.push(t),
            Err(reason) => failures.push(TemplateFailure { part: part.clone(), reason }),
        }
    }
    (TemplateSet::new(templates), failures)
}

