//! Satisfiability checking behind a common backend trait.
//!
//! Backends are registered by name in a [`BackendRegistry`] and picked at
//! run time: `external` drives an SMT-LIB2 process, `bounded` enumerates a
//! finite domain, and `auto` uses the first and falls back to the second.

mod bounded;
mod external;
mod instrument;
pub mod smtlib;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sym::eval::{Assignment, Value};
use crate::sym::{Param, Sort, SymExpr, Symbol, Validity};

pub use bounded::{BoundedDomain, BoundedSolver};
pub use external::{ExternalSolver, SolverCommand};
pub use instrument::{Instrumented, QueryRecord, SolverStats};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("solver could not be started: {0}")]
    Unavailable(String),
    #[error("solver process error: {0}")]
    Process(String),
    #[error("bounded domain exceeds {limit} search nodes")]
    DomainTooLarge { limit: u64 },
    #[error("unknown solver backend `{0}`")]
    UnknownBackend(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Satisfiability of a closed formula; free parameters are existential and
/// range over naturals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SatQuery {
    pub formula: SymExpr,
}

impl SatQuery {
    pub fn new(formula: SymExpr) -> SatQuery {
        SatQuery { formula }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct SatResult {
    pub verdict: Verdict,
    pub model: Option<Model>,
    /// Set by backends that searched their whole domain before answering
    /// `Unknown`.
    pub exhaustive: bool,
}

impl SatResult {
    pub fn plain(verdict: Verdict) -> SatResult {
        SatResult { verdict, model: None, exhaustive: false }
    }
}

#[derive(Debug, Clone)]
pub enum ArrayModel {
    Table { entries: BTreeMap<i64, i64>, default: i64 },
    /// A function defined in a solver model.
    Smt { fun: String, defs: Arc<smtlib::SmtDefs> },
}

/// A total assignment: anything not listed reads as zero or `false`.
#[derive(Debug, Clone, Default)]
pub struct Model {
    pub scalars: BTreeMap<Symbol, Value>,
    pub params: BTreeMap<Param, i64>,
    pub arrays: BTreeMap<Symbol, ArrayModel>,
}

impl Model {
    pub fn valuation(&self) -> BTreeMap<Param, i64> {
        self.params.clone()
    }
}

impl Assignment for Model {
    fn scalar(&self, s: Symbol) -> Option<Value> {
        Some(self.scalars.get(&s).copied().unwrap_or(match s.sort {
            Sort::Bool => Value::Bool(false),
            _ => Value::Int(0),
        }))
    }

    fn param(&self, p: Param) -> Option<i64> {
        Some(self.params.get(&p).copied().unwrap_or(0))
    }

    fn cell(&self, array: Symbol, index: i64) -> Option<i64> {
        match self.arrays.get(&array) {
            None => Some(0),
            Some(ArrayModel::Table { entries, default }) => {
                Some(entries.get(&index).copied().unwrap_or(*default))
            }
            Some(ArrayModel::Smt { fun, defs }) => {
                let arg = if index < 0 {
                    smtlib::SExp::List(vec![
                        smtlib::SExp::Atom("-".into()),
                        smtlib::SExp::Atom(index.unsigned_abs().to_string()),
                    ])
                } else {
                    smtlib::SExp::Atom(index.to_string())
                };
                let call = smtlib::SExp::List(vec![smtlib::SExp::Atom(fun.clone()), arg]);
                match smtlib::eval_model_term(&call, defs, &mut Vec::new()) {
                    Some(Value::Int(v)) => Some(v),
                    _ => None,
                }
            }
        }
    }
}

pub trait SolverBackend: Validity + Send {
    fn name(&self) -> &str;
    fn check_sat(&mut self, q: &SatQuery) -> Result<SatResult, SolverError>;
}

/// `f` is valid when `¬f` has no model. An exhaustive `Unknown` counts as
/// no model.
pub fn is_valid(backend: &mut (impl SolverBackend + ?Sized), f: &SymExpr) -> Result<bool, SolverError> {
    let r = backend.check_sat(&SatQuery::new(SymExpr::not(f.clone())))?;
    Ok(match r.verdict {
        Verdict::Unsat => true,
        Verdict::Unknown => r.exhaustive,
        Verdict::Sat => false,
    })
}

impl<T: SolverBackend + ?Sized> Validity for T {
    fn is_valid(&mut self, formula: &SymExpr) -> Result<bool, SolverError> {
        is_valid(self, formula)
    }
}

/// a ≡ b
pub fn formulas_equivalent(
    a: &SymExpr,
    b: &SymExpr,
    backend: &mut (impl SolverBackend + ?Sized),
) -> Result<bool, SolverError> {
    is_valid(backend, &SymExpr::eq(a.clone(), b.clone()))
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub command: SolverCommand,
    pub timeout: Duration,
    pub domain: BoundedDomain,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: SolverCommand::default(),
            timeout: Duration::from_secs(5),
            domain: BoundedDomain::default(),
        }
    }
}

/// External first; bounded when the process is unavailable or undecided.
pub struct AutoSolver {
    external: ExternalSolver,
    external_ok: bool,
    bounded: BoundedSolver,
}

impl AutoSolver {
    pub fn new(cfg: &SolverConfig) -> AutoSolver {
        AutoSolver {
            external: ExternalSolver::new(cfg.command.clone(), cfg.timeout),
            external_ok: true,
            bounded: BoundedSolver::new(cfg.domain.clone()),
        }
    }

    fn bounded_or_unknown(&mut self, q: &SatQuery) -> SatResult {
        match self.bounded.check_sat(q) {
            Ok(r) if r.verdict == Verdict::Sat => r,
            _ => SatResult::plain(Verdict::Unknown),
        }
    }
}

impl SolverBackend for AutoSolver {
    fn name(&self) -> &str {
        "auto"
    }

    fn check_sat(&mut self, q: &SatQuery) -> Result<SatResult, SolverError> {
        if self.external_ok {
            match self.external.check_sat(q) {
                Ok(r) if r.verdict != Verdict::Unknown => return Ok(r),
                Ok(_) => return Ok(self.bounded_or_unknown(q)),
                Err(SolverError::Unavailable(_)) => self.external_ok = false,
                Err(e) => return Err(e),
            }
        }
        match self.bounded.check_sat(q) {
            Err(SolverError::DomainTooLarge { .. }) => Ok(SatResult::plain(Verdict::Unknown)),
            other => other,
        }
    }
}

pub type BackendFactory = fn(&SolverConfig) -> Box<dyn SolverBackend>;

/// Solver backends by name, in registration order.
pub struct BackendRegistry {
    entries: Vec<(&'static str, BackendFactory)>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = BackendRegistry { entries: Vec::new() };
        r.register("external", |c| Box::new(ExternalSolver::new(c.command.clone(), c.timeout)));
        r.register("bounded", |c| Box::new(BoundedSolver::new(c.domain.clone())));
        r.register("auto", |c| Box::new(AutoSolver::new(c)));
        r
    }
}

impl BackendRegistry {
    /// Later registrations under an existing name replace it.
    pub fn register(&mut self, name: &'static str, factory: BackendFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn create(&self, name: &str, cfg: &SolverConfig) -> Result<Box<dyn SolverBackend>, SolverError> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f(cfg))
            .ok_or_else(|| SolverError::UnknownBackend(name.to_string()))
    }
}
