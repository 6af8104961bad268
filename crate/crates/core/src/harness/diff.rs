//! Classic and compact runs checked against each other.
//!
//! Soundness: every final classic leaf equals some final compact leaf under
//! a valuation with parameters in `0..=bound`. Completeness: for every final
//! compact leaf and every such valuation that keeps it feasible, the classic
//! path selected by a model of the instantiated condition ends in an
//! equivalent state. That path is extended past the classic tree's cut
//! leaves when needed.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::exec::{classic_successors, execute, is_final, ExecConfig, ExecError, Mode, SymExecTree, VertexStatus};
use crate::program::Program;
use crate::solver::{Model, SatQuery, SolverBackend, SolverError, Verdict};
use crate::sym::eval::evaluate_bool;
use crate::sym::{
    apply_valuation, states_equivalent, EquivalenceMode, InitialMemory, Param, ProgramState, SymExpr,
    Valuation,
};
use crate::templates::TemplateSet;

/// Classic steps taken past the classic tree while following one model.
const EXTENSION_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffConfig {
    pub bound: u32,
    pub classic_budget: usize,
    pub compact_budget: usize,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig { bound: 3, classic_budget: 500, compact_budget: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundMatch {
    pub classic_leaf: usize,
    pub compact_leaf: usize,
    pub valuation: Valuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompleteMatch {
    pub compact_leaf: usize,
    pub valuation: Valuation,
    /// The matching classic leaf when it lies inside the classic tree.
    pub classic_leaf: Option<usize>,
    /// Classic steps taken beyond the tree to reach the leaf.
    pub extension: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unmatched {
    pub compact_leaf: usize,
    pub valuation: Valuation,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffReport {
    pub bound: u32,
    pub classic_leaves: usize,
    pub compact_leaves: usize,
    /// Set when either tree was truncated by its budget or visit bound.
    pub partial: bool,
    pub sound: Vec<SoundMatch>,
    pub complete: Vec<CompleteMatch>,
    pub unmatched_classic: Vec<usize>,
    pub unmatched_compact: Vec<Unmatched>,
    /// Valuations skipped because the solver could not decide feasibility.
    pub undecided: usize,
}

impl DiffReport {
    pub fn passed(&self) -> bool {
        self.unmatched_classic.is_empty() && self.unmatched_compact.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DiffError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn finals(tree: &SymExecTree) -> Vec<usize> {
    tree.vertices.iter().filter(|v| v.status == VertexStatus::Final).map(|v| v.id).collect()
}

fn truncated(tree: &SymExecTree) -> bool {
    tree.vertices
        .iter()
        .any(|v| matches!(v.status, VertexStatus::Cut | VertexStatus::Frontier))
}

/// Every valuation of `params` into `0..=bound`, in lexicographic order.
pub fn valuations(params: &[Param], bound: u32) -> Vec<Valuation> {
    let mut out = vec![Valuation::new()];
    for p in params {
        out = out
            .into_iter()
            .flat_map(|nu| {
                (0..=bound as i64).map(move |v| {
                    let mut n = nu.clone();
                    n.insert(*p, v);
                    n
                })
            })
            .collect();
    }
    out
}

fn bounded_params(params: &BTreeSet<Param>, bound: u32) -> Vec<SymExpr> {
    params
        .iter()
        .map(|p| SymExpr::le(SymExpr::Param(*p), SymExpr::Int(bound as i64)))
        .collect()
}

fn equivalent_under(
    p: &Program,
    classic: &ProgramState,
    compact: &ProgramState,
    nu: &Valuation,
    solver: &mut dyn SolverBackend,
) -> Result<bool, DiffError> {
    let Ok(inst) = apply_valuation(compact, nu) else {
        return Ok(false);
    };
    Ok(states_equivalent(p, classic, &inst, EquivalenceMode::Full, solver)?)
}

/// A valuation making `compact` equivalent to `classic`, found by asking
/// for models of both path conditions and blocking each failed candidate.
fn sound_valuation(
    p: &Program,
    classic: &ProgramState,
    compact: &ProgramState,
    bound: u32,
    solver: &mut dyn SolverBackend,
) -> Result<Option<Valuation>, DiffError> {
    if classic.loc != compact.loc {
        return Ok(None);
    }
    let params = compact.params();
    if params.is_empty() {
        let nu = Valuation::new();
        return Ok(equivalent_under(p, classic, compact, &nu, solver)?.then_some(nu));
    }
    let mut conj = vec![classic.pc.clone(), compact.pc.clone()];
    conj.extend(bounded_params(&params, bound));
    let limit = (bound as usize + 1).pow(params.len().min(8) as u32);
    for _ in 0..limit {
        let r = solver.check_sat(&SatQuery::new(SymExpr::and(conj.clone())))?;
        match (r.verdict, r.model) {
            (Verdict::Sat, Some(m)) => {
                let nu: Valuation =
                    params.iter().map(|q| (*q, m.params.get(q).copied().unwrap_or(0))).collect();
                if equivalent_under(p, classic, compact, &nu, solver)? {
                    return Ok(Some(nu));
                }
                let same = SymExpr::and(nu.iter().map(|(q, v)| SymExpr::eq(SymExpr::Param(*q), SymExpr::Int(*v))));
                conj.push(SymExpr::not(same));
            }
            (Verdict::Unsat, _) => return Ok(None),
            _ => break,
        }
    }
    let ordered: Vec<Param> = params.into_iter().collect();
    for nu in valuations(&ordered, bound) {
        if equivalent_under(p, classic, compact, &nu, solver)? {
            return Ok(Some(nu));
        }
    }
    Ok(None)
}

/// The unique successor whose condition holds under `m`.
fn follow(
    p: &Program,
    theta0: &InitialMemory,
    s: &ProgramState,
    m: &Model,
) -> Result<Option<ProgramState>, DiffError> {
    for succ in classic_successors(p, theta0, s)? {
        if evaluate_bool(&succ.label, m) == Some(true) {
            return Ok(Some(succ.state));
        }
    }
    Ok(None)
}

/// The final classic state on the path selected by `m`, with its tree
/// vertex when it has one.
fn classic_leaf_for(
    p: &Program,
    theta0: &InitialMemory,
    tree: &SymExecTree,
    m: &Model,
) -> Result<Option<(ProgramState, Option<usize>, usize)>, DiffError> {
    let mut u = 0;
    loop {
        let v = &tree.vertices[u];
        if v.status == VertexStatus::Final {
            return Ok(Some((v.state.clone(), Some(u), 0)));
        }
        if v.children.is_empty() {
            break;
        }
        match v.children.iter().find(|c| evaluate_bool(&tree.vertices[**c].label, m) == Some(true)) {
            Some(c) => u = *c,
            None => return Ok(None),
        }
    }
    let mut s = tree.vertices[u].state.clone();
    for steps in 1..=EXTENSION_LIMIT {
        match follow(p, theta0, &s, m)? {
            Some(next) if is_final(p, &next) => return Ok(Some((next, None, steps))),
            Some(next) => s = next,
            None => return Ok(None),
        }
    }
    Ok(None)
}

/// Runs both modes with the visit bound `bound + 1` and matches their final
/// leaves in both directions.
pub fn differential_check(
    p: &Program,
    templates: &TemplateSet,
    cfg: &DiffConfig,
    solver: &mut dyn SolverBackend,
) -> Result<DiffReport, DiffError> {
    let visit = Some(cfg.bound + 1);
    let classic_cfg = ExecConfig::new(Mode::Classic).budget(cfg.classic_budget).visit_bound(visit);
    let compact_cfg = ExecConfig::new(Mode::Compact).budget(cfg.compact_budget).visit_bound(visit);
    let classic = execute(p, &classic_cfg, &TemplateSet::default(), solver)?.tree.expect("tree requested");
    let compact = execute(p, &compact_cfg, templates, solver)?.tree.expect("tree requested");
    let classic_finals = finals(&classic);
    let compact_finals = finals(&compact);
    let mut report = DiffReport {
        bound: cfg.bound,
        classic_leaves: classic_finals.len(),
        compact_leaves: compact_finals.len(),
        partial: truncated(&classic) || truncated(&compact),
        sound: Vec::new(),
        complete: Vec::new(),
        unmatched_classic: Vec::new(),
        unmatched_compact: Vec::new(),
        undecided: 0,
    };

    'leaves: for &e in &classic_finals {
        for &f in &compact_finals {
            let (s, t) = (&classic.vertices[e].state, &compact.vertices[f].state);
            if let Some(nu) = sound_valuation(p, s, t, cfg.bound, solver)? {
                report.sound.push(SoundMatch { classic_leaf: e, compact_leaf: f, valuation: nu });
                continue 'leaves;
            }
        }
        report.unmatched_classic.push(e);
    }

    let theta0 = InitialMemory::new(p);
    for &f in &compact_finals {
        let t = &compact.vertices[f].state;
        let params: Vec<Param> = t.params().into_iter().collect();
        for nu in valuations(&params, cfg.bound) {
            let Ok(inst) = apply_valuation(t, &nu) else { continue };
            let r = solver.check_sat(&SatQuery::new(inst.pc.clone()))?;
            let model = match (r.verdict, r.model) {
                (Verdict::Sat, Some(m)) => m,
                (Verdict::Unsat, _) => continue,
                _ => {
                    report.undecided += 1;
                    continue;
                }
            };
            let unmatched = |reason: &str| Unmatched { compact_leaf: f, valuation: nu.clone(), reason: reason.into() };
            match classic_leaf_for(p, &theta0, &classic, &model)? {
                None => report.unmatched_compact.push(unmatched("no classic path under the model")),
                Some((s, leaf, extension)) => {
                    if states_equivalent(p, &s, &inst, EquivalenceMode::Full, solver)? {
                        report.complete.push(CompleteMatch { compact_leaf: f, valuation: nu.clone(), classic_leaf: leaf, extension });
                    } else {
                        report.unmatched_compact.push(unmatched("classic leaf is not equivalent"));
                    }
                }
            }
        }
    }
    Ok(report)
}
