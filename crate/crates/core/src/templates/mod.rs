//! Loop and recursion templates.
//!
//! A candidate part is an elementary cycle together with the edges leaving
//! it. Running the cycle once in isolation yields a memory `θ`; if every
//! variable evolves as `Θ(a)` or `Θ(a) + c`, the κ-fold iteration has a
//! closed form and the part becomes a template with one exit state per
//! leaving edge.

mod closed_form;
mod compute;
mod detect;
mod part;

use std::fmt::Write;

use serde::Serialize;

use crate::program::{Action, EdgeId, FuncId, Loc, Program};
use crate::sym::{CallStack, Param, ProgramState, SymExpr, SymMemory};

pub use closed_form::{close_memory_form, iterate_memory};
pub use compute::{build_templates, compute_loop_template, compute_recursion_template};
pub use detect::{
    detect_candidate_parts, DetectorLimits, DetectorRegistry, LoopDetector, PartDetector,
    RecursionDetector,
};
pub use part::{build_part_program, build_return_part_program, run_part, PartProgram, PartRun};
pub use crate::sym::TemplateId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PartKind {
    Loop,
    Recursion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycleStep {
    Edge(EdgeId),
    /// The edge closing a recursion cycle: re-enter the function with the
    /// arguments of the recursive call.
    Meta(Action),
}

/// An edge leaving the cycle and the location it reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartExit {
    pub edge: EdgeId,
    pub target: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePart {
    pub kind: PartKind,
    pub function: FuncId,
    /// Cycle locations, entry first; `steps[i]` leaves `cycle[i]`.
    pub cycle: Vec<Loc>,
    pub steps: Vec<CycleStep>,
    pub exits: Vec<PartExit>,
    /// The recursive call edge a recursion part summarizes.
    pub call: Option<EdgeId>,
}

impl CandidatePart {
    pub fn entry(&self) -> Loc {
        self.cycle[0]
    }

    pub fn exit_locations(&self) -> Vec<Loc> {
        self.exits.iter().map(|e| e.target).collect()
    }

    pub fn describe(&self, p: &Program) -> String {
        let names: Vec<&str> = self.cycle.iter().map(|l| p.loc_name(*l)).collect();
        let kind = match self.kind {
            PartKind::Loop => "loop",
            PartKind::Recursion => "recursion",
        };
        format!(
            "{kind} {}:{},{}",
            p.func(self.function).name,
            names.join(","),
            names[0]
        )
    }
}

/// (θᵢ, φᵢ, Ξᵢ, lᵢ) over the template parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateExit {
    pub memory: SymMemory,
    pub pc: SymExpr,
    pub stack: CallStack,
    pub loc: Loc,
}

impl TemplateExit {
    pub fn as_state(&self) -> ProgramState {
        ProgramState {
            memory: self.memory.clone(),
            pc: self.pc.clone(),
            stack: self.stack.clone(),
            loc: self.loc,
        }
    }
}

/// The return half of a recursion template: κ returns applied at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecursionReturn {
    pub memory: SymMemory,
    /// Exit location of the recursive function.
    pub loc: Loc,
    /// One return step, before closing.
    pub step_memory: SymMemory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub kind: PartKind,
    pub entry: Loc,
    pub param: Param,
    pub exits: Vec<TemplateExit>,
    pub recursion: Option<RecursionReturn>,
    /// One iteration of the cycle.
    pub cycle_memory: SymMemory,
    /// `cycle_memory` iterated κ times.
    pub closed_memory: SymMemory,
    pub part: CandidatePart,
}

impl Template {
    pub fn render(&self, p: &Program, id: TemplateId) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "template {id} ({}) at {}, {} exits, parameter {}",
            self.part.describe(p),
            p.qualified_loc(self.entry),
            self.exits.len(),
            self.param
        );
        let _ = writeln!(out, "  cycle θ: {}", self.cycle_memory.render(p));
        let _ = writeln!(out, "  θ⟨{}⟩: {}", self.param, self.closed_memory.render(p));
        for (i, x) in self.exits.iter().enumerate() {
            let _ = writeln!(out, "  exit {} -> {}", i + 1, p.qualified_loc(x.loc));
            let _ = writeln!(out, "    θ: {}", x.memory.render(p));
            let _ = writeln!(out, "    φ: {}", x.pc);
            let _ = writeln!(out, "    Ξ: {}", x.as_state().render_stack(p));
        }
        if let Some(r) = &self.recursion {
            let _ = writeln!(out, "  return at {}", p.qualified_loc(r.loc));
            let _ = writeln!(out, "    step θ: {}", r.step_memory.render(p));
            let _ = writeln!(out, "    θ_ret⟨{}⟩: {}", self.param, r.memory.render(p));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FailureReason {
    InfeasibleCycle,
    NotClosedForm { variable: String },
    NoExits,
    ExitOverlap { first: usize, second: usize },
    SolverUnknown { what: String },
    Solver { message: String },
    ReturnPathBranches,
    ReturnPathStuck,
    CycleBranches,
    PartRunBudget,
    CallsCycleFunction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateFailure {
    pub part: CandidatePart,
    pub reason: FailureReason,
}

/// Templates usable by one run; a template's id is its index.
#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    pub templates: Vec<Template>,
}

impl TemplateSet {
    pub fn new(templates: Vec<Template>) -> TemplateSet {
        TemplateSet { templates }
    }

    pub fn get(&self, id: TemplateId) -> &Template {
        &self.templates[id.0 as usize]
    }

    /// Templates whose entry is exactly `l`, in set order.
    pub fn at(&self, l: Loc) -> Vec<TemplateId> {
        self.templates
            .iter()
            .enumerate()
            .filter(|(_, t)| t.entry == l)
            .map(|(i, _)| TemplateId(i as u32))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn render(&self, p: &Program) -> String {
        self.templates
            .iter()
            .enumerate()
            .map(|(i, t)| t.render(p, TemplateId(i as u32)))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
