use crate::program::{Expr, Program, Type, VarId};

use super::expr::{Sort, Symbol, SymExpr};

fn sort_of(t: Type) -> Sort {
    match t {
        Type::Int => Sort::Int,
        Type::Bool => Sort::Bool,
        Type::IntArray => Sort::Array,
    }
}

/// Θ: one fresh symbol per program variable, numbered by variable index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialMemory {
    symbols: Vec<Symbol>,
}

impl InitialMemory {
    pub fn new(p: &Program) -> InitialMemory {
        let symbols = p
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| Symbol { id: i as u32, sort: sort_of(v.ty) })
            .collect();
        InitialMemory { symbols }
    }

    pub fn symbol(&self, v: VarId) -> Symbol {
        self.symbols[v.0 as usize]
    }

    pub fn value(&self, v: VarId) -> SymExpr {
        SymExpr::Sym(self.symbol(v))
    }

    /// Θ⁻¹
    pub fn var_of(&self, s: Symbol) -> VarId {
        VarId(s.id)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn memory(&self) -> SymMemory {
        SymMemory { values: self.symbols.iter().map(|s| SymExpr::Sym(*s)).collect() }
    }
}

/// θ: a total map from program variables to symbolic values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymMemory {
    values: Vec<SymExpr>,
}

impl SymMemory {
    pub fn get(&self, v: VarId) -> &SymExpr {
        &self.values[v.0 as usize]
    }

    pub fn set(&mut self, v: VarId, e: SymExpr) {
        self.values[v.0 as usize] = e;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &SymExpr)> {
        self.values.iter().enumerate().map(|(i, e)| (VarId(i as u32), e))
    }

    pub fn is_identity_at(&self, v: VarId) -> bool {
        matches!(self.get(v), SymExpr::Sym(s) if s.id == v.0)
    }

    /// The array symbol an array-typed variable currently holds.
    fn array_symbol(&self, v: VarId) -> Symbol {
        match self.get(v) {
            SymExpr::Sym(s) => *s,
            other => panic!("array variable {} holds non-symbol {other}", v.0),
        }
    }

    /// θ⟦e⟧ for a program expression.
    pub fn eval(&self, e: &Expr) -> SymExpr {
        match e {
            Expr::Int(v) => SymExpr::Int(*v),
            Expr::Bool(b) => SymExpr::Bool(*b),
            Expr::Var(v) => self.get(*v).clone(),
            Expr::Index(a, idx) => SymExpr::select(self.array_symbol(*a), self.eval(idx)),
            Expr::Unary(op, inner) => SymExpr::unary(*op, self.eval(inner)),
            Expr::Binary(op, l, r) => SymExpr::binary(*op, self.eval(l), self.eval(r)),
        }
    }

    /// θ⟦φ⟧ for a symbolic expression: every `α` becomes `θ(Θ⁻¹(α))`.
    pub fn apply(&self, e: &SymExpr) -> SymExpr {
        e.subst_symbols(&|s| self.values[s.id as usize].clone())
    }

    /// θ ∘ θ′
    pub fn compose(&self, other: &SymMemory) -> SymMemory {
        SymMemory { values: other.values.iter().map(|e| self.apply(e)).collect() }
    }

    pub fn map(&self, f: impl Fn(&SymExpr) -> SymExpr) -> SymMemory {
        SymMemory { values: self.values.iter().map(f).collect() }
    }

    /// Non-identity entries as `name ↦ value`, in variable order.
    pub fn render(&self, p: &Program) -> String {
        let parts: Vec<String> = self
            .iter()
            .filter(|(v, _)| !self.is_identity_at(*v))
            .map(|(v, e)| format!("{} ↦ {}", p.var(v).name, e))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}
