//! Breadth-first symbolic execution, classic or compact.
//!
//! Both modes share one work queue and one tree. Compact mode differs only
//! in how the successors of a state are produced: a pending recursion return
//! is completed first, then a template at the current location is
//! instantiated, and only otherwise is a single classic step taken.

mod choose;
mod step;
mod tree;

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::{EdgeId, Loc, Program};
use crate::solver::{SatQuery, SolverBackend, SolverError, Verdict};
use crate::sym::{
    compose_states, InitialMemory, Param, ParamGen, ProgramState, StackRecord, SymExpr,
    TemplateId,
};
use crate::templates::{Template, TemplateSet};

pub use choose::{ChooserRegistry, FirstChooser, RandomChooser, TemplateChooser};
pub use step::{classic_successors, initial_state, is_final};
pub use tree::{SymExecTree, Vertex, VertexStatus};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Root,
    Edge(EdgeId),
    Return { from: Loc },
    Template { template: TemplateId, exit: usize, param: Param },
    RecursionReturn { template: TemplateId, param: Param },
}

/// A candidate successor with the condition it adds to the path.
#[derive(Debug, Clone)]
pub struct Successor {
    pub state: ProgramState,
    pub label: SymExpr,
    pub step: Step,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("no way to continue from non-final location {location}")]
    Stuck { location: String },
    #[error("recursion marker on top of the stack does not belong to {location}")]
    MarkerMismatch { location: String },
    #[error("template entry {template} does not match location {location}")]
    LocationMismatch { template: TemplateId, location: String },
    #[error("unknown template chooser `{0}`")]
    UnknownChooser(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Classic,
    Compact,
}

#[derive(Debug, Clone)]
pub struct ExecConfig {
    pub mode: Mode,
    /// Maximum number of processed states.
    pub budget: usize,
    pub build_tree: bool,
    /// A vertex whose location already occurs this many times on its path
    /// (itself included) is kept as a cut leaf and not expanded. Function
    /// exits are exempt: each is revisited once per return, and returns are
    /// bounded by the entries.
    pub visit_bound: Option<u32>,
    pub chooser: String,
    pub seed: u64,
}

impl ExecConfig {
    pub fn new(mode: Mode) -> ExecConfig {
        ExecConfig {
            mode,
            budget: 1000,
            build_tree: true,
            visit_bound: None,
            chooser: "first".to_string(),
            seed: 0,
        }
    }

    pub fn budget(mut self, budget: usize) -> ExecConfig {
        self.budget = budget;
        self
    }

    pub fn visit_bound(mut self, bound: Option<u32>) -> ExecConfig {
        self.visit_bound = bound;
        self
    }

    pub fn chooser(mut self, name: &str, seed: u64) -> ExecConfig {
        self.chooser = name.to_string();
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExecStats {
    pub processed: usize,
    pub vertices: usize,
    pub solver_calls: usize,
    pub unknown: usize,
    pub cut: usize,
    pub budget_exhausted: bool,
    pub instantiations: BTreeMap<TemplateId, usize>,
}

#[derive(Debug, Clone)]
pub struct ExecResult {
    /// E, in the order states became final.
    pub finals: Vec<ProgramState>,
    pub final_vertices: Vec<usize>,
    pub tree: Option<SymExecTree>,
    pub stats: ExecStats,
}

/// Renames the template parameter to `kappa` and gives every quantifier a
/// fresh binder.
fn rename_exit(t: &Template, i: usize, kappa: Param, gen: &mut ParamGen) -> ProgramState {
    let map: BTreeMap<Param, SymExpr> = [(t.param, SymExpr::Param(kappa))].into_iter().collect();
    let x = &t.exits[i];
    let stack = x
        .stack
        .iter()
        .map(|r| match r {
            StackRecord::Frame(fr) => StackRecord::Frame(crate::sym::Frame {
                values: fr.values.iter().map(|e| e.subst_params(&map)).collect(),
                ..fr.clone()
            }),
            other => other.clone(),
        })
        .collect();
    ProgramState {
        memory: x.memory.map(|e| e.subst_params(&map)),
        pc: x.pc.subst_params(&map).freshen_binders(gen),
        stack,
        loc: x.loc,
    }
}

/// s ∘ (θᵢ, φᵢ, Ξᵢ, lᵢ)⟨κ⟩ for each exit, with the marker `(t, κ)` placed
/// under Ξᵢ for a recursion template.
pub fn instantiate_template(
    p: &Program,
    s: &ProgramState,
    id: TemplateId,
    t: &Template,
    kappa: Param,
    gen: &mut ParamGen,
) -> Result<Vec<Successor>, ExecError> {
    if s.loc != t.entry {
        return Err(ExecError::LocationMismatch { template: id, location: p.qualified_loc(s.loc) });
    }
    Ok((0..t.exits.len())
        .map(|i| {
            let mut x = rename_exit(t, i, kappa, gen);
            if t.recursion.is_some() {
                x.stack.insert(0, StackRecord::RecMarker { template: id, param: kappa });
            }
            let label = s.memory.apply(&x.pc);
            Successor {
                state: compose_states(s, &x),
                label,
                step: Step::Template { template: id, exit: i, param: kappa },
            }
        })
        .collect())
}

/// (s.θ ∘ θ_ret⟨κ⟩, s.φ, pop(s.Ξ), l′) for the marker on top of the stack.
pub fn instantiate_recursion_return(
    p: &Program,
    s: &ProgramState,
    templates: &TemplateSet,
) -> Result<Successor, ExecError> {
    let mismatch = || ExecError::MarkerMismatch { location: p.qualified_loc(s.loc) };
    let Some(StackRecord::RecMarker { template, param }) = s.stack.last() else {
        return Err(mismatch());
    };
    let t = templates.get(*template);
    let ret = t.recursion.as_ref().filter(|r| r.loc == s.loc).ok_or_else(mismatch)?;
    let map: BTreeMap<Param, SymExpr> = [(t.param, SymExpr::Param(*param))].into_iter().collect();
    let theta = ret.memory.map(|e| e.subst_params(&map));
    let mut stack = s.stack.clone();
    stack.pop();
    Ok(Successor {
        state: ProgramState {
            memory: s.memory.compose(&theta),
            pc: s.pc.clone(),
            stack,
            loc: ret.loc,
        },
        label: SymExpr::TRUE,
        step: Step::RecursionReturn { template: *template, param: *param },
    })
}

struct Engine<'a> {
    p: &'a Program,
    theta0: InitialMemory,
    templates: &'a TemplateSet,
    chooser: Box<dyn TemplateChooser>,
    gen: ParamGen,
    stats: ExecStats,
}

impl Engine<'_> {
    fn successors(&mut self, mode: Mode, s: &ProgramState) -> Result<Vec<Successor>, ExecError> {
        if mode == Mode::Compact {
            let at_exit = s.loc == self.p.exit_of(s.loc.func);
            if at_exit && matches!(s.stack.last(), Some(StackRecord::RecMarker { .. })) {
                return Ok(vec![instantiate_recursion_return(self.p, s, self.templates)?]);
            }
            let candidates = self.templates.at(s.loc);
            if !candidates.is_empty() {
                let id = self.chooser.choose(&candidates);
                let kappa = self.gen.kappa();
                *self.stats.instantiations.entry(id).or_default() += 1;
                return instantiate_template(self.p, s, id, self.templates.get(id), kappa, &mut self.gen);
            }
        }
        classic_successors(self.p, &self.theta0, s)
    }
}

/// Runs the work-queue algorithm from the initial state of `p`.
pub fn execute(
    p: &Program,
    cfg: &ExecConfig,
    templates: &TemplateSet,
    solver: &mut dyn SolverBackend,
) -> Result<ExecResult, ExecError> {
    let chooser = ChooserRegistry::default()
        .create(&cfg.chooser, cfg.seed)
        .ok_or_else(|| ExecError::UnknownChooser(cfg.chooser.clone()))?;
    let mut engine = Engine {
        p,
        theta0: InitialMemory::new(p),
        templates,
        chooser,
        gen: ParamGen::starting_at(1),
        stats: ExecStats::default(),
    };
    let mut tree = SymExecTree::new(initial_state(p));
    let mut queue = VecDeque::from([0usize]);
    let mut finals = Vec::new();
    let mut final_vertices = Vec::new();

    while let Some(u) = queue.pop_front() {
        if engine.stats.processed >= cfg.budget {
            engine.stats.budget_exhausted = true;
            tree.vertices[u].status = VertexStatus::Frontier;
            for v in queue.drain(..) {
                tree.vertices[v].status = VertexStatus::Frontier;
            }
            break;
        }
        engine.stats.processed += 1;
        let s = tree.vertices[u].state.clone();
        if is_final(p, &s) {
            tree.vertices[u].status = VertexStatus::Final;
            finals.push(s);
            final_vertices.push(u);
            continue;
        }
        tree.vertices[u].status = VertexStatus::Interior;
        for succ in engine.successors(cfg.mode, &s)? {
            let verdict = if succ.state.pc != s.pc {
                engine.stats.solver_calls += 1;
                let r = solver.check_sat(&SatQuery::new(succ.state.pc.clone()))?;
                Some(r.verdict)
            } else {
                None
            };
            if verdict == Some(Verdict::Unsat) {
                continue;
            }
            if verdict == Some(Verdict::Unknown) {
                engine.stats.unknown += 1;
            }
            let v = tree.add(u, succ, verdict);
            let loc = tree.vertices[v].state.loc;
            let cut = cfg.visit_bound.is_some_and(|b| tree.visits(v) >= b as usize)
                && loc != p.exit_of(loc.func)
                && !is_final(p, &tree.vertices[v].state);
            if cut {
                tree.vertices[v].status = VertexStatus::Cut;
                engine.stats.cut += 1;
            } else {
                queue.push_back(v);
            }
        }
    }
    engine.stats.vertices = tree.len();
    Ok(ExecResult {
        finals,
        final_vertices,
        tree: cfg.build_tree.then_some(tree),
        stats: engine.stats,
    })
}
