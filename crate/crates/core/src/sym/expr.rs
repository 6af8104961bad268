use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::program::{BinOp, UnOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Int,
    Bool,
    Array,
}

/// An initial-value symbol. Its `id` equals the index of the variable whose
/// initial value it denotes, so a memory can substitute it by lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    pub id: u32,
    pub sort: Sort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamKind {
    /// Free iteration count; ranges over naturals.
    Kappa,
    /// Quantifier-bound variable.
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Param {
    pub kind: ParamKind,
    pub id: u32,
}

impl Param {
    pub fn kappa(id: u32) -> Param {
        Param { kind: ParamKind::Kappa, id }
    }

    pub fn tau(id: u32) -> Param {
        Param { kind: ParamKind::Tau, id }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ParamKind::Kappa => write!(f, "κ{}", self.id),
            ParamKind::Tau => write!(f, "τ{}", self.id),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "α{}", self.id)
    }
}

/// Hands out fresh parameters; one generator per run keeps names stable.
#[derive(Debug, Clone, Default)]
pub struct ParamGen {
    next_kappa: u32,
    next_tau: u32,
}

impl ParamGen {
    pub fn starting_at(n: u32) -> ParamGen {
        ParamGen { next_kappa: n, next_tau: n }
    }

    pub fn kappa(&mut self) -> Param {
        self.next_kappa += 1;
        Param::kappa(self.next_kappa - 1)
    }

    pub fn tau(&mut self) -> Param {
        self.next_tau += 1;
        Param::tau(self.next_tau - 1)
    }
}

/// Symbolic expression. Built only through the folding constructors, which
/// keep it normalized: operations on constants are evaluated and
/// conjunctions are flattened without `true` members.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymExpr {
    Int(i64),
    Bool(bool),
    Sym(Symbol),
    Param(Param),
    /// Read of an array symbol, treated as an uninterpreted function.
    Select(Symbol, Box<SymExpr>),
    Unary(UnOp, Box<SymExpr>),
    /// Never carries `BinOp::And`.
    Binary(BinOp, Box<SymExpr>, Box<SymExpr>),
    /// At least two conjuncts, none of them a conjunction or a constant.
    And(Vec<SymExpr>),
    /// `∀var (lo ≤ var < hi → body)`.
    Forall {
        var: Param,
        lo: Box<SymExpr>,
        hi: Box<SymExpr>,
        body: Box<SymExpr>,
    },
}

pub type Valuation = BTreeMap<Param, i64>;

fn fold_arith(op: BinOp, a: i64, b: i64) -> Option<i64> {
    match op {
        BinOp::Add => a.checked_add(b),
        BinOp::Sub => a.checked_sub(b),
        BinOp::Mul => a.checked_mul(b),
        BinOp::Div if b != 0 => a.checked_div_euclid(b),
        BinOp::Mod if b != 0 => a.checked_rem_euclid(b),
        _ => None,
    }
}

pub(crate) fn compare(op: BinOp, a: i64, b: i64) -> bool {
    match op {
        BinOp::Eq => a == b,
        BinOp::Ne => a != b,
        BinOp::Lt => a < b,
        BinOp::Le => a <= b,
        BinOp::Gt => a > b,
        BinOp::Ge => a >= b,
        _ => unreachable!("not a comparison"),
    }
}

pub(crate) fn arith(op: BinOp, a: i64, b: i64) -> Option<i64> {
    fold_arith(op, a, b)
}

impl SymExpr {
    pub const TRUE: SymExpr = SymExpr::Bool(true);
    pub const FALSE: SymExpr = SymExpr::Bool(false);

    pub fn sym(s: Symbol) -> SymExpr {
        SymExpr::Sym(s)
    }

    pub fn param(p: Param) -> SymExpr {
        SymExpr::Param(p)
    }

    pub fn select(a: Symbol, idx: SymExpr) -> SymExpr {
        SymExpr::Select(a, Box::new(idx))
    }

    pub fn unary(op: UnOp, e: SymExpr) -> SymExpr {
        match (op, &e) {
            (UnOp::Neg, SymExpr::Int(v)) if v.checked_neg().is_some() => SymExpr::Int(-v),
            (UnOp::Not, SymExpr::Bool(b)) => SymExpr::Bool(!b),
            _ => SymExpr::Unary(op, Box::new(e)),
        }
    }

    pub fn not(e: SymExpr) -> SymExpr {
        SymExpr::unary(UnOp::Not, e)
    }

    pub fn binary(op: BinOp, l: SymExpr, r: SymExpr) -> SymExpr {
        match op {
            BinOp::And => return SymExpr::and([l, r]),
            BinOp::Or => {
                return match (&l, &r) {
                    (SymExpr::Bool(true), _) | (_, SymExpr::Bool(true)) => SymExpr::TRUE,
                    (SymExpr::Bool(false), _) => r,
                    (_, SymExpr::Bool(false)) => l,
                    _ => SymExpr::Binary(op, Box::new(l), Box::new(r)),
                }
            }
            _ => {}
        }
        match (&l, &r) {
            (SymExpr::Int(a), SymExpr::Int(b)) if op.is_comparison() => {
                SymExpr::Bool(compare(op, *a, *b))
            }
            (SymExpr::Int(a), SymExpr::Int(b)) => match fold_arith(op, *a, *b) {
                Some(v) => SymExpr::Int(v),
                None => SymExpr::Binary(op, Box::new(l), Box::new(r)),
            },
            (SymExpr::Bool(a), SymExpr::Bool(b)) if op == BinOp::Eq => SymExpr::Bool(a == b),
            (SymExpr::Bool(a), SymExpr::Bool(b)) if op == BinOp::Ne => SymExpr::Bool(a != b),
            _ => SymExpr::Binary(op, Box::new(l), Box::new(r)),
        }
    }

    pub fn add(l: SymExpr, r: SymExpr) -> SymExpr {
        SymExpr::binary(BinOp::Add, l, r)
    }

    pub fn eq(l: SymExpr, r: SymExpr) -> SymExpr {
        SymExpr::binary(BinOp::Eq, l, r)
    }

    pub fn le(l: SymExpr, r: SymExpr) -> SymExpr {
        SymExpr::binary(BinOp::Le, l, r)
    }

    pub fn or(l: SymExpr, r: SymExpr) -> SymExpr {
        SymExpr::binary(BinOp::Or, l, r)
    }

    pub fn implies(l: SymExpr, r: SymExpr) -> SymExpr {
        SymExpr::or(SymExpr::not(l), r)
    }

    pub fn and<I: IntoIterator<Item = SymExpr>>(items: I) -> SymExpr {
        let mut out = Vec::new();
        for e in items {
            match e {
                SymExpr::Bool(true) => {}
                SymExpr::Bool(false) => return SymExpr::FALSE,
                SymExpr::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => SymExpr::TRUE,
            1 => out.pop().unwrap(),
            _ => SymExpr::And(out),
        }
    }

    pub fn forall(var: Param, lo: SymExpr, hi: SymExpr, body: SymExpr) -> SymExpr {
        if body == SymExpr::TRUE {
            return SymExpr::TRUE;
        }
        if let (SymExpr::Int(a), SymExpr::Int(b)) = (&lo, &hi) {
            if b <= a {
                return SymExpr::TRUE;
            }
        }
        SymExpr::Forall { var, lo: Box::new(lo), hi: Box::new(hi), body: Box::new(body) }
    }

    pub fn is_true(&self) -> bool {
        *self == SymExpr::TRUE
    }

    pub fn conjuncts(&self) -> Vec<&SymExpr> {
        match self {
            SymExpr::And(items) => items.iter().collect(),
            SymExpr::Bool(true) => Vec::new(),
            other => vec![other],
        }
    }

    /// Rebuilds bottom-up with `leaf` applied to symbols and parameters;
    /// `bound` lists quantifier variables in scope, which are left alone.
    fn rebuild(
        &self,
        leaf: &mut dyn FnMut(&SymExpr, &[Param]) -> Option<SymExpr>,
        bound: &mut Vec<Param>,
    ) -> SymExpr {
        if let Some(r) = leaf(self, bound) {
            return r;
        }
        match self {
            SymExpr::Int(_) | SymExpr::Bool(_) | SymExpr::Sym(_) | SymExpr::Param(_) => self.clone(),
            SymExpr::Select(a, idx) => {
                let idx = idx.rebuild(leaf, bound);
                match leaf(&SymExpr::Sym(*a), bound) {
                    Some(SymExpr::Sym(b)) => SymExpr::select(b, idx),
                    Some(other) => panic!("array symbol {a} substituted by non-symbol {other}"),
                    None => SymExpr::select(*a, idx),
                }
            }
            SymExpr::Unary(op, e) => SymExpr::unary(*op, e.rebuild(leaf, bound)),
            SymExpr::Binary(op, l, r) => {
                SymExpr::binary(*op, l.rebuild(leaf, bound), r.rebuild(leaf, bound))
            }
            SymExpr::And(items) => SymExpr::and(items.iter().map(|e| e.rebuild(leaf, bound))),
            SymExpr::Forall { var, lo, hi, body } => {
                let lo = lo.rebuild(leaf, bound);
                let hi = hi.rebuild(leaf, bound);
                bound.push(*var);
                let body = body.rebuild(leaf, bound);
                bound.pop();
                SymExpr::forall(*var, lo, hi, body)
            }
        }
    }

    /// Replaces every symbol `α` by `f(α)`.
    pub fn subst_symbols(&self, f: &dyn Fn(Symbol) -> SymExpr) -> SymExpr {
        self.rebuild(
            &mut |e, _| match e {
                SymExpr::Sym(s) => Some(f(*s)),
                _ => None,
            },
            &mut Vec::new(),
        )
    }

    /// Replaces free parameters found in `map`.
    pub fn subst_params(&self, map: &BTreeMap<Param, SymExpr>) -> SymExpr {
        self.rebuild(
            &mut |e, bound| match e {
                SymExpr::Param(p) if !bound.contains(p) => map.get(p).cloned(),
                _ => None,
            },
            &mut Vec::new(),
        )
    }

    /// Substitutes the valuation and expands quantifiers whose bounds became
    /// constant.
    pub fn apply_valuation(&self, nu: &Valuation) -> SymExpr {
        let map = nu.iter().map(|(p, v)| (*p, SymExpr::Int(*v))).collect();
        self.subst_params(&map).expand_constant_quantifiers()
    }

    pub fn expand_constant_quantifiers(&self) -> SymExpr {
        match self {
            SymExpr::Int(_) | SymExpr::Bool(_) | SymExpr::Sym(_) | SymExpr::Param(_) => self.clone(),
            SymExpr::Select(a, idx) => SymExpr::select(*a, idx.expand_constant_quantifiers()),
            SymExpr::Unary(op, e) => SymExpr::unary(*op, e.expand_constant_quantifiers()),
            SymExpr::Binary(op, l, r) => SymExpr::binary(
                *op,
                l.expand_constant_quantifiers(),
                r.expand_constant_quantifiers(),
            ),
            SymExpr::And(items) => SymExpr::and(items.iter().map(|e| e.expand_constant_quantifiers())),
            SymExpr::Forall { var, lo, hi, body } => {
                let lo = lo.expand_constant_quantifiers();
                let hi = hi.expand_constant_quantifiers();
                let body = body.expand_constant_quantifiers();
                match (&lo, &hi) {
                    (SymExpr::Int(a), SymExpr::Int(b)) => SymExpr::and((*a..*b).map(|v| {
                        let mut m = BTreeMap::new();
                        m.insert(*var, SymExpr::Int(v));
                        body.subst_params(&m).expand_constant_quantifiers()
                    })),
                    _ => SymExpr::forall(*var, lo, hi, body),
                }
            }
        }
    }

    /// Renames every quantifier binder to a fresh parameter from `gen`.
    pub fn freshen_binders(&self, gen: &mut ParamGen) -> SymExpr {
        match self {
            SymExpr::Int(_) | SymExpr::Bool(_) | SymExpr::Sym(_) | SymExpr::Param(_) => self.clone(),
            SymExpr::Select(a, idx) => SymExpr::select(*a, idx.freshen_binders(gen)),
            SymExpr::Unary(op, e) => SymExpr::unary(*op, e.freshen_binders(gen)),
            SymExpr::Binary(op, l, r) => {
                SymExpr::binary(*op, l.freshen_binders(gen), r.freshen_binders(gen))
            }
            SymExpr::And(items) => SymExpr::and(items.iter().map(|e| e.freshen_binders(gen))),
            SymExpr::Forall { var, lo, hi, body } => {
                let fresh = gen.tau();
                let mut m = BTreeMap::new();
                m.insert(*var, SymExpr::Param(fresh));
                let body = body.freshen_binders(gen).subst_params(&m);
                SymExpr::forall(fresh, lo.freshen_binders(gen), hi.freshen_binders(gen), body)
            }
        }
    }

    fn walk(&self, f: &mut dyn FnMut(&SymExpr, &[Param]), bound: &mut Vec<Param>) {
        f(self, bound);
        match self {
            SymExpr::Int(_) | SymExpr::Bool(_) | SymExpr::Sym(_) | SymExpr::Param(_) => {}
            SymExpr::Select(_, idx) => idx.walk(f, bound),
            SymExpr::Unary(_, e) => e.walk(f, bound),
            SymExpr::Binary(_, l, r) => {
                l.walk(f, bound);
                r.walk(f, bound);
            }
            SymExpr::And(items) => items.iter().for_each(|e| e.walk(f, bound)),
            SymExpr::Forall { var, lo, hi, body } => {
                lo.walk(f, bound);
                hi.walk(f, bound);
                bound.push(*var);
                body.walk(f, bound);
                bound.pop();
            }
        }
    }

    pub fn free_params(&self) -> BTreeSet<Param> {
        let mut out = BTreeSet::new();
        self.walk(
            &mut |e, bound| {
                if let SymExpr::Param(p) = e {
                    if !bound.contains(p) {
                        out.insert(*p);
                    }
                }
            },
            &mut Vec::new(),
        );
        out
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.walk(
            &mut |e, _| match e {
                SymExpr::Sym(s) | SymExpr::Select(s, _) => {
                    out.insert(*s);
                }
                _ => {}
            },
            &mut Vec::new(),
        );
        out
    }

    pub fn has_quantifier(&self) -> bool {
        let mut found = false;
        self.walk(
            &mut |e, _| found |= matches!(e, SymExpr::Forall { .. }),
            &mut Vec::new(),
        );
        found
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_, _| n += 1, &mut Vec::new());
        n
    }

    /// Exact affine view over symbols and parameters, if the expression is
    /// affine with constant coefficients.
    pub fn linear_form(&self) -> Option<LinearForm> {
        match self {
            SymExpr::Int(v) => Some(LinearForm { terms: BTreeMap::new(), constant: *v }),
            SymExpr::Sym(s) if s.sort == Sort::Int => Some(LinearForm::atom(LinearAtom::Sym(*s))),
            SymExpr::Param(p) => Some(LinearForm::atom(LinearAtom::Param(*p))),
            SymExpr::Unary(UnOp::Neg, e) => e.linear_form()?.scale(-1),
            SymExpr::Binary(BinOp::Add, l, r) => l.linear_form()?.plus(&r.linear_form()?),
            SymExpr::Binary(BinOp::Sub, l, r) => l.linear_form()?.plus(&r.linear_form()?.scale(-1)?),
            SymExpr::Binary(BinOp::Mul, l, r) => {
                let (a, b) = (l.linear_form()?, r.linear_form()?);
                match (a.terms.is_empty(), b.terms.is_empty()) {
                    (true, _) => b.scale(a.constant),
                    (_, true) => a.scale(b.constant),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinearAtom {
    Sym(Symbol),
    Param(Param),
}

/// `Σ coeff·atom + constant` with no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForm {
    pub terms: BTreeMap<LinearAtom, i64>,
    pub constant: i64,
}

impl LinearForm {
    fn atom(a: LinearAtom) -> LinearForm {
        LinearForm { terms: [(a, 1)].into_iter().collect(), constant: 0 }
    }

    fn scale(&self, k: i64) -> Option<LinearForm> {
        let mut terms = BTreeMap::new();
        for (a, c) in &self.terms {
            let v = c.checked_mul(k)?;
            if v != 0 {
                terms.insert(*a, v);
            }
        }
        Some(LinearForm { terms, constant: self.constant.checked_mul(k)? })
    }

    fn plus(&self, o: &LinearForm) -> Option<LinearForm> {
        let mut terms = self.terms.clone();
        for (a, c) in &o.terms {
            let v = terms.get(a).copied().unwrap_or(0).checked_add(*c)?;
            if v == 0 {
                terms.remove(a);
            } else {
                terms.insert(*a, v);
            }
        }
        Some(LinearForm { terms, constant: self.constant.checked_add(o.constant)? })
    }
}

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
    }
}

fn op_text(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Mod => "%",
        BinOp::Eq => "=",
        BinOp::Ne => "≠",
        BinOp::Lt => "<",
        BinOp::Le => "≤",
        BinOp::Gt => ">",
        BinOp::Ge => "≥",
        BinOp::And => "∧",
        BinOp::Or => "∨",
    }
}

fn write_sym(e: &SymExpr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        SymExpr::Int(v) if *v < 0 && min > 4 => write!(f, "({v})"),
        SymExpr::Int(v) => write!(f, "{v}"),
        SymExpr::Bool(b) => write!(f, "{b}"),
        SymExpr::Sym(s) => write!(f, "{s}"),
        SymExpr::Param(p) => write!(f, "{p}"),
        SymExpr::Select(a, idx) => {
            write!(f, "{a}(")?;
            write_sym(idx, 0, f)?;
            f.write_str(")")
        }
        SymExpr::Unary(op, inner) => {
            f.write_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "¬",
            })?;
            write_sym(inner, 6, f)
        }
        SymExpr::Binary(op, l, r) => {
            let q = prec(*op);
            if q < min {
                f.write_str("(")?;
            }
            write_sym(l, if op.is_comparison() { q + 1 } else { q }, f)?;
            write!(f, " {} ", op_text(*op))?;
            write_sym(r, q + 1, f)?;
            if q < min {
                f.write_str(")")?;
            }
            Ok(())
        }
        SymExpr::And(items) => {
            if min > 2 {
                f.write_str("(")?;
            }
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ∧ ")?;
                }
                write_sym(it, 3, f)?;
            }
            if min > 2 {
                f.write_str(")")?;
            }
            Ok(())
        }
        SymExpr::Forall { var, lo, hi, body } => {
            write!(f, "∀{var}(")?;
            write_sym(lo, 4, f)?;
            write!(f, " ≤ {var} < ")?;
            write_sym(hi, 4, f)?;
            f.write_str(" → ")?;
            write_sym(body, 0, f)?;
            f.write_str(")")
        }
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_sym(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: u32) -> SymExpr {
        SymExpr::Param(Param::kappa(n))
    }

    #[test]
    fn constants_fold_but_zero_plus_parameter_stays() {
        assert_eq!(SymExpr::add(SymExpr::Int(2), SymExpr::Int(3)), SymExpr::Int(5));
        assert_eq!(SymExpr::le(SymExpr::Int(2), SymExpr::Int(1)), SymExpr::FALSE);
        let kept = SymExpr::add(SymExpr::Int(0), k(1));
        assert!(matches!(kept, SymExpr::Binary(BinOp::Add, _, _)));
        assert_eq!(kept.to_string(), "0 + κ1");
    }

    #[test]
    fn division_by_zero_is_not_folded() {
        let e = SymExpr::binary(BinOp::Div, SymExpr::Int(1), SymExpr::Int(0));
        assert!(matches!(e, SymExpr::Binary(BinOp::Div, _, _)));
    }

    #[test]
    fn conjunctions_flatten() {
        let a = SymExpr::le(SymExpr::Int(0), k(1));
        let b = SymExpr::le(SymExpr::Int(0), k(2));
        let c = SymExpr::le(SymExpr::Int(0), k(3));
        let nested = SymExpr::and([SymExpr::and([a.clone(), b.clone()]), SymExpr::TRUE, c.clone()]);
        assert_eq!(nested, SymExpr::And(vec![a.clone(), b, c]));
        assert_eq!(SymExpr::and([a.clone(), SymExpr::FALSE]), SymExpr::FALSE);
        assert_eq!(SymExpr::and([a.clone()]), a);
        assert_eq!(SymExpr::and(Vec::new()), SymExpr::TRUE);
    }

    #[test]
    fn empty_quantifier_ranges_are_true() {
        let body = SymExpr::le(SymExpr::Param(Param::tau(0)), k(1));
        assert_eq!(SymExpr::forall(Param::tau(0), SymExpr::Int(3), SymExpr::Int(3), body.clone()), SymExpr::TRUE);
        assert!(matches!(SymExpr::forall(Param::tau(0), SymExpr::Int(0), k(2), body), SymExpr::Forall { .. }));
    }

    #[test]
    fn binders_are_not_free() {
        let tau = Param::tau(0);
        let e = SymExpr::forall(tau, SymExpr::Int(0), k(1), SymExpr::le(SymExpr::Param(tau), k(2)));
        assert_eq!(e.free_params(), [Param::kappa(1), Param::kappa(2)].into_iter().collect());
        let mut gen = ParamGen::starting_at(7);
        let fresh = e.freshen_binders(&mut gen);
        assert!(matches!(&fresh, SymExpr::Forall { var, .. } if *var == Param::tau(7)));
        assert_eq!(fresh.free_params(), e.free_params());
    }

    #[test]
    fn valuation_substitutes_free_parameters_only() {
        let tau = Param::tau(0);
        let e = SymExpr::forall(tau, SymExpr::Int(0), k(1), SymExpr::le(SymExpr::Param(tau), k(1)));
        let nu: Valuation = [(Param::kappa(1), 2)].into_iter().collect();
        let inst = e.apply_valuation(&nu);
        assert!(inst.free_params().is_empty());
    }
}
