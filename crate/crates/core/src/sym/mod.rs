//! Symbolic values, memories, stacks and program states.

pub mod eval;
mod expr;
mod memory;
mod state;

pub use expr::{
    LinearAtom, LinearForm, Param, ParamGen, ParamKind, Sort, SymExpr, Symbol, Valuation,
};
pub use memory::{InitialMemory, SymMemory};
pub use state::{
    apply_valuation, compose_states, states_equivalent, CallStack, EquivalenceMode, Frame,
    ProgramState, StackRecord, TemplateId, Validity, ValuationError,
};
