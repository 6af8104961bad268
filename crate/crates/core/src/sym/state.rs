use std::fmt;

use serde::{Deserialize, Serialize};

use crate::program::{FuncId, Loc, Program, Type, VarId};
use crate::solver::SolverError;

use super::expr::{Param, SymExpr, Valuation};
use super::memory::SymMemory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TemplateId(pub u32);

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Saved caller context. `values` follows the caller's `frame_vars` order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub func: FuncId,
    pub values: Vec<SymExpr>,
    pub ret_loc: Loc,
    /// Receives the callee's return value on return.
    pub dest: Option<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StackRecord {
    Frame(Frame),
    /// Stands for `param` frames of recursive calls summarized by a template.
    RecMarker { template: TemplateId, param: Param },
    Wildcard,
}

impl StackRecord {
    fn compose_under(&self, theta: &SymMemory) -> StackRecord {
        match self {
            StackRecord::Frame(fr) => StackRecord::Frame(Frame {
                values: fr.values.iter().map(|e| theta.apply(e)).collect(),
                ..fr.clone()
            }),
            other => other.clone(),
        }
    }
}

/// Ξ, bottom first.
pub type CallStack = Vec<StackRecord>;

/// (θ, φ, Ξ, l)
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramState {
    pub memory: SymMemory,
    pub pc: SymExpr,
    pub stack: CallStack,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValuationError {
    #[error("valuation does not bind parameter {0}")]
    UnboundParameter(Param),
}

impl ProgramState {
    pub fn params(&self) -> std::collections::BTreeSet<Param> {
        let mut out = self.pc.free_params();
        for (_, e) in self.memory.iter() {
            out.extend(e.free_params());
        }
        for r in &self.stack {
            match r {
                StackRecord::Frame(fr) => fr.values.iter().for_each(|e| out.extend(e.free_params())),
                StackRecord::RecMarker { param, .. } => {
                    out.insert(*param);
                }
                StackRecord::Wildcard => {}
            }
        }
        out
    }

    pub fn render_stack(&self, p: &Program) -> String {
        let parts: Vec<String> = self
            .stack
            .iter()
            .map(|r| match r {
                StackRecord::Frame(fr) => {
                    let f = p.func(fr.func);
                    let vals: Vec<String> = f
                        .frame_vars()
                        .zip(&fr.values)
                        .filter(|(v, e)| !matches!(e, SymExpr::Sym(s) if s.id == v.0))
                        .map(|(v, e)| format!("{} ↦ {}", p.var(v).name, e))
                        .collect();
                    format!("frame({}, {{{}}})", p.qualified_loc(fr.ret_loc), vals.join(", "))
                }
                StackRecord::RecMarker { template, param } => format!("rec({template}, {param})"),
                StackRecord::Wildcard => "*".to_string(),
            })
            .collect();
        format!("[{}]", parts.join(", "))
    }
}

/// s ∘ s′ = (θ∘θ′, φ ∧ θ⟦φ′⟧, Ξ ++ θ∘Ξ′, l′)
pub fn compose_states(s: &ProgramState, s2: &ProgramState) -> ProgramState {
    let mut stack = s.stack.clone();
    stack.extend(s2.stack.iter().map(|r| r.compose_under(&s.memory)));
    ProgramState {
        memory: s.memory.compose(&s2.memory),
        pc: SymExpr::and([s.pc.clone(), s.memory.apply(&s2.pc)]),
        stack,
        loc: s2.loc,
    }
}

/// s⟨ν⟩. A marker whose count is zero disappears; a count of `n` becomes
/// `n` wildcards.
pub fn apply_valuation(s: &ProgramState, nu: &Valuation) -> Result<ProgramState, ValuationError> {
    if let Some(p) = s.params().into_iter().find(|p| !nu.contains_key(p)) {
        return Err(ValuationError::UnboundParameter(p));
    }
    let mut stack = Vec::new();
    for r in &s.stack {
        match r {
            StackRecord::Frame(fr) => stack.push(StackRecord::Frame(Frame {
                values: fr.values.iter().map(|e| e.apply_valuation(nu)).collect(),
                ..fr.clone()
            })),
            StackRecord::RecMarker { param, .. } => {
                let n = nu[param].max(0) as usize;
                stack.extend(std::iter::repeat_n(StackRecord::Wildcard, n));
            }
            StackRecord::Wildcard => stack.push(StackRecord::Wildcard),
        }
    }
    Ok(ProgramState {
        memory: s.memory.map(|e| e.apply_valuation(nu)),
        pc: s.pc.apply_valuation(nu),
        stack,
        loc: s.loc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquivalenceMode {
    Full,
    GlobalsOnly,
}

/// Decides validity of a formula; parameters are read universally.
pub trait Validity {
    fn is_valid(&mut self, formula: &SymExpr) -> Result<bool, SolverError>;
}

/// Collects the value pairs two states must agree on; `None` when they
/// already differ structurally.
fn obligations(
    p: &Program,
    s: &ProgramState,
    t: &ProgramState,
    mode: EquivalenceMode,
) -> Option<Vec<SymExpr>> {
    if s.loc != t.loc || s.stack.len() != t.stack.len() {
        return None;
    }
    let mut out = Vec::new();
    let mut push = |ty: Type, a: &SymExpr, b: &SymExpr| -> bool {
        if a == b {
            return true;
        }
        if ty == Type::IntArray {
            return false;
        }
        out.push(SymExpr::eq(a.clone(), b.clone()));
        true
    };
    for v in p.var_ids() {
        let info = p.var(v);
        if mode == EquivalenceMode::GlobalsOnly && !info.is_global() {
            continue;
        }
        if !push(info.ty, s.memory.get(v), t.memory.get(v)) {
            return None;
        }
    }
    for (a, b) in s.stack.iter().zip(&t.stack) {
        match (a, b) {
            (StackRecord::Wildcard, _) | (_, StackRecord::Wildcard) => {}
            (StackRecord::Frame(x), StackRecord::Frame(y)) => {
                if x.func != y.func || x.ret_loc != y.ret_loc || x.dest != y.dest {
                    return None;
                }
                let f = p.func(x.func);
                for ((v, ea), eb) in f.frame_vars().zip(&x.values).zip(&y.values) {
                    if !push(p.var(v).ty, ea, eb) {
                        return None;
                    }
                }
            }
            (a, b) if a == b => {}
            _ => return None,
        }
    }
    if !push(Type::Bool, &s.pc, &t.pc) {
        return None;
    }
    Some(out)
}

/// s ≡ s′: same location, matching stacks, and pointwise-equivalent memory
/// and path condition.
pub fn states_equivalent(
    p: &Program,
    s: &ProgramState,
    t: &ProgramState,
    mode: EquivalenceMode,
    eqv: &mut dyn Validity,
) -> Result<bool, SolverError> {
    match obligations(p, s, t, mode) {
        None => Ok(false),
        Some(obl) if obl.is_empty() => Ok(true),
        Some(obl) => eqv.is_valid(&SymExpr::and(obl)),
    }
}
