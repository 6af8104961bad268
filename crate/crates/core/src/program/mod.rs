//! Control-flow-graph programs.
//!
//! A [`Program`] owns a flat variable table shared by every function, so a
//! [`VarId`] names the same variable in every memory built over the program.
//! Each function additionally owns a synthetic global `ret_<name>` that
//! receives its return value.

mod parse;
mod render;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use parse::{parse_program, ParseError};
pub use render::{render_expr, render_program};
pub use validate::{validate_program, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Int,
    Bool,
    IntArray,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Int => "int",
            Type::Bool => "bool",
            Type::IntArray => "int[]",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FuncId(pub u32);

/// A location, scoped to its function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Loc {
    pub func: FuncId,
    pub idx: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    pub func: FuncId,
    pub idx: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    Global,
    Param(FuncId),
    Local(FuncId),
    /// The `ret_<f>` global of a function.
    Return(FuncId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarInfo {
    pub name: String,
    pub ty: Type,
    pub scope: Scope,
}

impl VarInfo {
    pub fn is_global(&self) -> bool {
        matches!(self.scope, Scope::Global | Scope::Return(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod
        )
    }

    /// The comparison whose truth value is always the opposite.
    pub fn complement(self) -> Option<BinOp> {
        Some(match self {
            BinOp::Eq => BinOp::Ne,
            BinOp::Ne => BinOp::Eq,
            BinOp::Lt => BinOp::Ge,
            BinOp::Ge => BinOp::Lt,
            BinOp::Le => BinOp::Gt,
            BinOp::Gt => BinOp::Le,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

/// Side-effect-free program expression over program variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(VarId),
    /// `A[e]`; arrays are only ever read through a variable.
    Index(VarId, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    /// Negation that flips comparisons and strips a leading `!` instead of
    /// stacking another one.
    pub fn negated(&self) -> Expr {
        match self {
            Expr::Bool(b) => Expr::Bool(!b),
            Expr::Unary(UnOp::Not, inner) => (**inner).clone(),
            Expr::Binary(op, l, r) if op.complement().is_some() => {
                Expr::Binary(op.complement().unwrap(), l.clone(), r.clone())
            }
            other => Expr::not(other.clone()),
        }
    }

    /// True when `self` and `other` are syntactic negations of each other.
    pub fn is_negation_of(&self, other: &Expr) -> bool {
        *self == other.negated()
            || *other == self.negated()
            || matches!(self, Expr::Unary(UnOp::Not, inner) if **inner == *other)
            || matches!(other, Expr::Unary(UnOp::Not, inner) if **inner == *self)
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Index(a, i) => {
                f(*a);
                i.visit_vars(f);
            }
            Expr::Unary(_, e) => e.visit_vars(f),
            Expr::Binary(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Assign { dest: VarId, value: Expr },
    CallAssign { dest: VarId, callee: FuncId, args: Vec<Expr> },
    CallVoid { callee: FuncId, args: Vec<Expr> },
    Ret(Expr),
    Skip,
    Guard(Expr),
    /// Re-enters `callee` without pushing a frame: resets its locals and binds
    /// its parameters. Only part programs contain it.
    Enter { callee: FuncId, args: Vec<Expr> },
}

impl Action {
    pub fn is_call(&self) -> bool {
        matches!(self, Action::CallAssign { .. } | Action::CallVoid { .. })
    }

    pub fn callee(&self) -> Option<FuncId> {
        match self {
            Action::CallAssign { callee, .. } | Action::CallVoid { callee, .. } => Some(*callee),
            _ => None,
        }
    }

    pub fn guard(&self) -> Option<&Expr> {
        match self {
            Action::Guard(g) => Some(g),
            _ => None,
        }
    }
}

/// An edge between two locations of the same function, by local index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: Vec<VarId>,
    pub locals: Vec<VarId>,
    pub ret_var: VarId,
    pub return_type: Type,
    pub locations: Vec<String>,
    pub entry: u32,
    pub exit: u32,
    pub edges: Vec<Edge>,
}

impl Function {
    /// Parameters followed by locals: the domain of a call frame.
    pub fn frame_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.params.iter().chain(self.locals.iter()).copied()
    }

    pub fn location_index(&self, name: &str) -> Option<u32> {
        self.locations.iter().position(|l| l == name).map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub vars: Vec<VarInfo>,
    /// Declared globals in declaration order; `ret_<f>` globals are not listed.
    pub globals: Vec<VarId>,
    pub functions: Vec<Function>,
    pub start: FuncId,
}

impl Program {
    pub fn var(&self, v: VarId) -> &VarInfo {
        &self.vars[v.0 as usize]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .map(|i| VarId(i as u32))
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len() as u32).map(VarId)
    }

    pub fn func(&self, f: FuncId) -> &Function {
        &self.functions[f.0 as usize]
    }

    pub fn func_ids(&self) -> impl Iterator<Item = FuncId> {
        (0..self.functions.len() as u32).map(FuncId)
    }

    pub fn func_by_name(&self, name: &str) -> Option<FuncId> {
        self.functions
            .iter()
            .position(|f| f.name == name)
            .map(|i| FuncId(i as u32))
    }

    pub fn start_function(&self) -> &Function {
        self.func(self.start)
    }

    pub fn entry_of(&self, f: FuncId) -> Loc {
        Loc { func: f, idx: self.func(f).entry }
    }

    pub fn exit_of(&self, f: FuncId) -> Loc {
        Loc { func: f, idx: self.func(f).exit }
    }

    /// Resolves `function` and `location` names.
    pub fn location(&self, function: &str, location: &str) -> Option<Loc> {
        let func = self.func_by_name(function)?;
        let idx = self.func(func).location_index(location)?;
        Some(Loc { func, idx })
    }

    pub fn loc_name(&self, l: Loc) -> &str {
        &self.func(l.func).locations[l.idx as usize]
    }

    /// `function:location`, the form used in every rendering of a state.
    pub fn qualified_loc(&self, l: Loc) -> String {
        format!("{}:{}", self.func(l.func).name, self.loc_name(l))
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.func(e.func).edges[e.idx as usize]
    }

    pub fn edge_src(&self, e: EdgeId) -> Loc {
        Loc { func: e.func, idx: self.edge(e).src }
    }

    pub fn edge_dst(&self, e: EdgeId) -> Loc {
        Loc { func: e.func, idx: self.edge(e).dst }
    }

    /// Out-edges in declaration order.
    pub fn out_edges(&self, l: Loc) -> Vec<EdgeId> {
        self.func(l.func)
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.src == l.idx)
            .map(|(i, _)| EdgeId { func: l.func, idx: i as u32 })
            .collect()
    }

    pub fn in_edges(&self, l: Loc) -> Vec<EdgeId> {
        self.func(l.func)
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.dst == l.idx)
            .map(|(i, _)| EdgeId { func: l.func, idx: i as u32 })
            .collect()
    }

    pub fn edge_ids(&self, f: FuncId) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.func(f).edges.len() as u32).map(move |idx| EdgeId { func: f, idx })
    }

    /// A location whose only out-edge is a `skip` self-loop.
    pub fn is_error_location(&self, l: Loc) -> bool {
        let out = self.out_edges(l);
        out.len() == 1 && {
            let e = self.edge(out[0]);
            e.dst == l.idx && e.action == Action::Skip
        }
    }

    /// Every variable a function may read or write: its frame, then globals.
    pub fn is_visible_in(&self, v: VarId, f: FuncId) -> bool {
        match self.var(v).scope {
            Scope::Global | Scope::Return(_) => true,
            Scope::Param(g) | Scope::Local(g) => g == f,
        }
    }

    pub fn render_edge(&self, e: EdgeId) -> String {
        let edge = self.edge(e);
        let f = self.func(e.func);
        format!(
            "{} -> {} : {}",
            f.locations[edge.src as usize],
            f.locations[edge.dst as usize],
            render::render_action(self, &edge.action)
        )
    }
}
