//! Symbolic execution of CFG programs with loop and recursion templates.
//!
//! Classic symbolic execution unrolls every loop and recursive call. The
//! compact mode replaces each supported cycle by a template: a closed-form
//! summary of any number of its iterations, expressed with a fresh natural
//! parameter. See the crate README for the input format and the CLI.

pub mod exec;
pub mod harness;
pub mod program;
pub mod solver;
pub mod sym;
pub mod templates;
