use std::collections::BTreeMap;

use crate::sym::eval::{evaluate, Assignment, Atom, Eval, Value};
use crate::sym::{Param, Sort, Symbol};

use super::{ArrayModel, Model, SatQuery, SatResult, SolverBackend, SolverError, Verdict};

/// Finite search space: parameters in `0..=param_max`, integer symbols and
/// array cells in `int_min..=int_max`, array cells only at indices
/// `0..=max_index` (every other cell reads 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedDomain {
    pub param_max: i64,
    pub int_min: i64,
    pub int_max: i64,
    pub max_index: i64,
    pub node_limit: u64,
}

impl Default for BoundedDomain {
    fn default() -> Self {
        BoundedDomain { param_max: 3, int_min: -4, int_max: 4, max_index: 4, node_limit: 2_000_000 }
    }
}

/// Enumerates assignments lazily: only atoms the formula actually reads are
/// branched on, and a branch stops as soon as the formula is decided.
pub struct BoundedSolver {
    domain: BoundedDomain,
}

#[derive(Default)]
struct Partial {
    scalars: BTreeMap<Symbol, Value>,
    params: BTreeMap<Param, i64>,
    cells: BTreeMap<(Symbol, i64), i64>,
}

impl Partial {
    fn in_index_range(&self, idx: i64, max: i64) -> bool {
        (0..=max).contains(&idx)
    }
}

struct Search<'a> {
    domain: &'a BoundedDomain,
    nodes: u64,
}

struct View<'a> {
    partial: &'a Partial,
    max_index: i64,
}

impl Assignment for View<'_> {
    fn scalar(&self, s: Symbol) -> Option<Value> {
        self.partial.scalars.get(&s).copied()
    }

    fn param(&self, p: Param) -> Option<i64> {
        self.partial.params.get(&p).copied()
    }

    fn cell(&self, array: Symbol, index: i64) -> Option<i64> {
        if !self.partial.in_index_range(index, self.max_index) {
            return Some(0);
        }
        self.partial.cells.get(&(array, index)).copied()
    }
}

impl Search<'_> {
    fn values(&self, atom: Atom) -> Vec<Value> {
        let d = self.domain;
        match atom {
            Atom::Param(_) => (0..=d.param_max).map(Value::Int).collect(),
            Atom::Scalar(s) if s.sort == Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Atom::Scalar(_) | Atom::Cell(..) => (d.int_min..=d.int_max).map(Value::Int).collect(),
        }
    }

    fn assign(p: &mut Partial, atom: Atom, v: Option<Value>) {
        match (atom, v) {
            (Atom::Scalar(s), Some(v)) => {
                p.scalars.insert(s, v);
            }
            (Atom::Scalar(s), None) => {
                p.scalars.remove(&s);
            }
            (Atom::Param(q), Some(Value::Int(v))) => {
                p.params.insert(q, v);
            }
            (Atom::Param(q), _) => {
                p.params.remove(&q);
            }
            (Atom::Cell(a, i), Some(Value::Int(v))) => {
                p.cells.insert((a, i), v);
            }
            (Atom::Cell(a, i), _) => {
                p.cells.remove(&(a, i));
            }
        }
    }

    /// `Ok(true)` once `p` satisfies the formula.
    fn run(&mut self, q: &SatQuery, p: &mut Partial) -> Result<bool, SolverError> {
        self.nodes += 1;
        if self.nodes > self.domain.node_limit {
            return Err(SolverError::DomainTooLarge { limit: self.domain.node_limit });
        }
        let view = View { partial: p, max_index: self.domain.max_index };
        match evaluate(&q.formula, &view) {
            Eval::Known(Value::Bool(true)) => Ok(true),
            Eval::Known(_) | Eval::Undefined => Ok(false),
            Eval::Blocked(atom) => {
                for v in self.values(atom) {
                    Self::assign(p, atom, Some(v));
                    if self.run(q, p)? {
                        return Ok(true);
                    }
                }
                Self::assign(p, atom, None);
                Ok(false)
            }
        }
    }
}

impl BoundedSolver {
    pub fn new(domain: BoundedDomain) -> BoundedSolver {
        BoundedSolver { domain }
    }

    pub fn domain(&self) -> &BoundedDomain {
        &self.domain
    }
}

impl SolverBackend for BoundedSolver {
    fn name(&self) -> &str {
        "bounded"
    }

    fn check_sat(&mut self, q: &SatQuery) -> Result<SatResult, SolverError> {
        let mut search = Search { domain: &self.domain, nodes: 0 };
        let mut p = Partial::default();
        if !search.run(q, &mut p)? {
            return Ok(SatResult { verdict: Verdict::Unknown, model: None, exhaustive: true });
        }
        let mut model = Model { scalars: p.scalars, params: p.params, arrays: BTreeMap::new() };
        for ((a, i), v) in p.cells {
            match model
                .arrays
                .entry(a)
                .or_insert(ArrayModel::Table { entries: BTreeMap::new(), default: 0 })
            {
                ArrayModel::Table { entries, .. } => {
                    entries.insert(i, v);
                }
                ArrayModel::Smt { .. } => unreachable!(),
            }
        }
        Ok(SatResult { verdict: Verdict::Sat, model: Some(model), exhaustive: false })
    }
}
