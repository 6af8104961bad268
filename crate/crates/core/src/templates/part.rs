use std::collections::{BTreeMap, BTreeSet};

use crate::exec::{execute, ExecConfig, ExecError, Mode};
use crate::program::{Action, Edge, Expr, FuncId, Loc, Program};
use crate::solver::SolverBackend;
use crate::sym::ProgramState;

use super::{CandidatePart, CycleStep, FailureReason, PartKind, TemplateSet};

/// Processed-state budget for one part run. Part programs are loop-free
/// unless a called function loops.
pub const PART_RUN_BUDGET: usize = 10_000;

/// P′: a standalone program made of one cycle and at most one exit edge.
///
/// The part function keeps its original locations, so every original
/// location index is valid in both programs; locations appended after them
/// are listed in `origin`.
#[derive(Debug, Clone)]
pub struct PartProgram {
    pub program: Program,
    /// e′, where the broken cycle ends.
    pub new_exit: Loc,
    /// Error location standing for the chosen exit.
    pub exit: Option<Loc>,
    /// Error location collecting every other escape.
    pub sink: Option<Loc>,
    pub origin: BTreeMap<Loc, Loc>,
    original_len: u32,
}

impl PartProgram {
    /// The location of the source program a part location stands for;
    /// `None` for the sink.
    pub fn origin_of(&self, l: Loc) -> Option<Loc> {
        if l.func != self.program.start || l.idx < self.original_len {
            Some(l)
        } else {
            self.origin.get(&l).copied()
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartRun {
    /// (θ, φ, [], e′): one trip around the cycle.
    pub cycle_state: Option<ProgramState>,
    /// (θ̂, φ̂, Ξ̂, x)
    pub exit_state: Option<ProgramState>,
}

fn fresh_name(names: &[String], base: &str) -> String {
    let mut name = format!("{base}'");
    while names.contains(&name) {
        name.push('\'');
    }
    name
}

/// Functions reachable through call edges of `actions`, transitively.
fn callees<'a>(p: &Program, actions: impl Iterator<Item = &'a Action>) -> BTreeSet<FuncId> {
    let mut todo: Vec<FuncId> = actions.filter_map(|a| a.callee()).collect();
    let mut seen = BTreeSet::new();
    while let Some(f) = todo.pop() {
        if seen.insert(f) {
            todo.extend(p.func(f).edges.iter().filter_map(|e| e.action.callee()));
        }
    }
    seen
}

struct Builder {
    program: Program,
    f: FuncId,
    edges: Vec<Edge>,
    origin: BTreeMap<Loc, Loc>,
    original_len: u32,
}

impl Builder {
    /// Copies `p`, keeping the functions called from `actions` and reducing
    /// every other function to a single `skip` edge.
    fn new<'a>(
        p: &Program,
        f: FuncId,
        actions: impl Iterator<Item = &'a Action>,
    ) -> Result<Builder, FailureReason> {
        let keep = callees(p, actions);
        if keep.contains(&f) {
            return Err(FailureReason::CallsCycleFunction);
        }
        let mut program = p.clone();
        for g in p.func_ids() {
            if g != f && !keep.contains(&g) {
                let func = &mut program.functions[g.0 as usize];
                func.edges = vec![Edge { src: func.entry, dst: func.exit, action: Action::Skip }];
            }
        }
        program.start = f;
        let original_len = p.func(f).locations.len() as u32;
        Ok(Builder { program, f, edges: Vec::new(), origin: BTreeMap::new(), original_len })
    }

    fn add_location(&mut self, base: &str, origin: Option<Loc>) -> Loc {
        let func = &mut self.program.functions[self.f.0 as usize];
        let name = fresh_name(&func.locations, base);
        func.locations.push(name);
        let l = Loc { func: self.f, idx: func.locations.len() as u32 - 1 };
        if let Some(o) = origin {
            self.origin.insert(l, o);
        }
        l
    }

    fn edge(&mut self, src: Loc, dst: Loc, action: Action) {
        self.edges.push(Edge { src: src.idx, dst: dst.idx, action });
    }

    fn error_location(&mut self, l: Loc) {
        self.edge(l, l, Action::Skip);
    }

    fn finish(mut self, entry: Loc, new_exit: Loc, exit: Option<Loc>, sink: Option<Loc>) -> PartProgram {
        let func = &mut self.program.functions[self.f.0 as usize];
        func.entry = entry.idx;
        func.exit = new_exit.idx;
        func.edges = self.edges;
        PartProgram {
            program: self.program,
            new_exit,
            exit,
            sink,
            origin: self.origin,
            original_len: self.original_len,
        }
    }
}

fn step_action<'a>(p: &'a Program, s: &'a CycleStep) -> &'a Action {
    match s {
        CycleStep::Edge(e) => &p.edge(*e).action,
        CycleStep::Meta(a) => a,
    }
}

/// P′ for `part` and its exit number `exit`: the cycle broken at its entry
/// into e′, the chosen exit edge into an error location, and every other
/// escape into a shared sink.
pub fn build_part_program(p: &Program, part: &CandidatePart, exit: usize) -> Result<PartProgram, FailureReason> {
    let f = part.function;
    let chosen = part.exits.get(exit).ok_or(FailureReason::NoExits)?;
    let actions = part
        .steps
        .iter()
        .map(|s| step_action(p, s))
        .chain(part.exits.iter().map(|x| &p.edge(x.edge).action));
    // The meta edge re-enters the part function without a call.
    let actions: Vec<&Action> = actions.filter(|a| !matches!(a, Action::Enter { .. })).collect();
    let mut b = Builder::new(p, f, actions.into_iter())?;
    let entry = part.entry();
    let new_exit = b.add_location(p.loc_name(entry), Some(entry));
    let n = part.cycle.len();
    for (i, step) in part.steps.iter().enumerate() {
        let dst = if i + 1 == n { new_exit } else { part.cycle[i + 1] };
        b.edge(part.cycle[i], dst, step_action(p, step).clone());
    }
    let target = if part.cycle.contains(&chosen.target) {
        b.add_location(p.loc_name(chosen.target), Some(chosen.target))
    } else {
        chosen.target
    };
    let mut sink = None;
    for (j, x) in part.exits.iter().enumerate() {
        let dst = if j == exit {
            target
        } else {
            *sink.get_or_insert_with(|| b.add_location("sink", None))
        };
        b.edge(p.edge_src(x.edge), dst, p.edge(x.edge).action.clone());
    }
    b.error_location(target);
    if let Some(s) = sink {
        b.error_location(s);
    }
    Ok(b.finish(entry, new_exit, Some(target), sink))
}

/// The return path of a recursion part: from the function exit `x` through
/// the effect of a return to `v`, then along `v`'s straight path back to
/// `x`, which is broken into e′.
pub fn build_return_part_program(p: &Program, part: &CandidatePart) -> Result<PartProgram, FailureReason> {
    let h = match (part.kind, part.call) {
        (PartKind::Recursion, Some(h)) => h,
        _ => return Err(FailureReason::ReturnPathStuck),
    };
    let f = part.function;
    let x = p.exit_of(f);
    let v = p.edge_dst(h);
    let mut path = Vec::new();
    let mut at = v;
    let mut seen = BTreeSet::from([v]);
    while at != x {
        let out = p.out_edges(at);
        match out.len() {
            1 => {}
            2 => return Err(FailureReason::ReturnPathBranches),
            _ => return Err(FailureReason::ReturnPathStuck),
        }
        path.push(out[0]);
        at = p.edge_dst(out[0]);
        if !seen.insert(at) {
            return Err(FailureReason::ReturnPathStuck);
        }
    }
    let meta = match &p.edge(h).action {
        Action::CallAssign { dest, .. } => Action::Assign {
            dest: *dest,
            value: Expr::Var(p.func(f).ret_var),
        },
        _ => Action::Skip,
    };
    let mut b = Builder::new(p, f, path.iter().map(|e| &p.edge(*e).action))?;
    let new_exit = b.add_location(p.loc_name(x), Some(x));
    let close = |l: Loc| if l == x { new_exit } else { l };
    b.edge(x, close(v), meta);
    for e in &path {
        b.edge(p.edge_src(*e), close(p.edge_dst(*e)), p.edge(*e).action.clone());
    }
    Ok(b.finish(x, new_exit, None, None))
}

/// Runs P′ classically and picks out the cycle and exit states.
pub fn run_part(pp: &PartProgram, solver: &mut dyn SolverBackend) -> Result<PartRun, FailureReason> {
    let cfg = ExecConfig { build_tree: false, ..ExecConfig::new(Mode::Classic).budget(PART_RUN_BUDGET) };
    let r = execute(&pp.program, &cfg, &TemplateSet::default(), solver).map_err(|e| match e {
        ExecError::Solver(e) => FailureReason::Solver { message: e.to_string() },
        other => FailureReason::Solver { message: other.to_string() },
    })?;
    if r.stats.budget_exhausted {
        return Err(FailureReason::PartRunBudget);
    }
    if r.stats.unknown > 0 {
        return Err(FailureReason::SolverUnknown { what: "part run".to_string() });
    }
    let pick = |l: Option<Loc>| -> Result<Option<ProgramState>, FailureReason> {
        let mut found = r.finals.iter().filter(|s| Some(s.loc) == l);
        let first = found.next().cloned();
        if found.next().is_some() {
            return Err(FailureReason::CycleBranches);
        }
        Ok(first)
    };
    Ok(PartRun { cycle_state: pick(Some(pp.new_exit))?, exit_state: pick(pp.exit)? })
}
