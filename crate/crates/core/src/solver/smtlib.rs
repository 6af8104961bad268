//! SMT-LIB2 emission, s-expression reading and model interpretation.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::sync::Arc;

use crate::program::{BinOp, UnOp};
use crate::sym::eval::Value;
use crate::sym::{Param, ParamKind, Sort, Symbol, SymExpr};

use super::{ArrayModel, Model, SatQuery};

pub fn symbol_name(s: Symbol) -> String {
    format!("a{}", s.id)
}

pub fn param_name(p: Param) -> String {
    match p.kind {
        ParamKind::Kappa => format!("k{}", p.id),
        ParamKind::Tau => format!("t{}", p.id),
    }
}

fn write_int(v: i64, out: &mut String) {
    if v < 0 {
        let _ = write!(out, "(- {})", v.unsigned_abs());
    } else {
        let _ = write!(out, "{v}");
    }
}

fn op_name(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "div",
        BinOp::Mod => "mod",
        BinOp::Eq => "=",
        BinOp::Ne => "distinct",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::And => "and",
        BinOp::Or => "or",
    }
}

fn write_term(e: &SymExpr, out: &mut String) {
    match e {
        SymExpr::Int(v) => write_int(*v, out),
        SymExpr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        SymExpr::Sym(s) => out.push_str(&symbol_name(*s)),
        SymExpr::Param(p) => out.push_str(&param_name(*p)),
        SymExpr::Select(a, idx) => {
            let _ = write!(out, "({} ", symbol_name(*a));
            write_term(idx, out);
            out.push(')');
        }
        SymExpr::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Neg => "(- ",
                UnOp::Not => "(not ",
            });
            write_term(inner, out);
            out.push(')');
        }
        SymExpr::Binary(op, l, r) => {
            let _ = write!(out, "({} ", op_name(*op));
            write_term(l, out);
            out.push(' ');
            write_term(r, out);
            out.push(')');
        }
        SymExpr::And(items) => {
            out.push_str("(and");
            for it in items {
                out.push(' ');
                write_term(it, out);
            }
            out.push(')');
        }
        SymExpr::Forall { var, lo, hi, body } => {
            let v = param_name(*var);
            let _ = write!(out, "(forall (({v} Int)) (=> (and (<= ");
            write_term(lo, out);
            let _ = write!(out, " {v}) (< {v} ");
            write_term(hi, out);
            out.push_str(")) ");
            write_term(body, out);
            out.push_str("))");
        }
    }
}

pub fn term(e: &SymExpr) -> String {
    let mut out = String::new();
    write_term(e, &mut out);
    out
}

/// Declarations and assertions for a query, without logic or commands.
pub fn query_body(q: &SatQuery) -> String {
    let mut out = String::new();
    for s in q.formula.symbols() {
        let _ = match s.sort {
            Sort::Int => writeln!(out, "(declare-fun {} () Int)", symbol_name(s)),
            Sort::Bool => writeln!(out, "(declare-fun {} () Bool)", symbol_name(s)),
            Sort::Array => writeln!(out, "(declare-fun {} (Int) Int)", symbol_name(s)),
        };
    }
    let params = q.formula.free_params();
    for p in &params {
        let _ = writeln!(out, "(declare-fun {} () Int)", param_name(*p));
    }
    for p in &params {
        let _ = writeln!(out, "(assert (>= {} 0))", param_name(*p));
    }
    let _ = writeln!(out, "(assert {})", term(&q.formula));
    out
}

/// A standalone script deciding the query.
pub fn to_smtlib(q: &SatQuery) -> String {
    format!("(set-logic ALL)\n{}(check-sat)\n", query_body(q))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExp {
    Atom(String),
    List(Vec<SExp>),
}

impl SExp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExp::Atom(a) => Some(a),
            SExp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExp]> {
        match self {
            SExp::List(items) => Some(items),
            SExp::Atom(_) => None,
        }
    }
}

/// Reads every top-level s-expression in `text`.
pub fn parse_sexps(text: &str) -> Result<Vec<SExp>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut stack: Vec<Vec<SExp>> = vec![Vec::new()];
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(SExp::List(done));
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '|' | '"' => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i] != c {
                    i += 1;
                }
                i += 1;
                let raw: String = chars[start..i.min(chars.len())].iter().collect();
                let text = if c == '|' { raw.trim_matches('|').to_string() } else { raw };
                stack.last_mut().unwrap().push(SExp::Atom(text));
            }
            _ => {
                let start = i;
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '(' | ')' | ';')
                {
                    i += 1;
                }
                stack.last_mut().unwrap().push(SExp::Atom(chars[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

/// Net parenthesis depth of a chunk of solver output.
pub fn paren_balance(text: &str) -> i64 {
    let mut depth = 0;
    let mut in_quote = None;
    for c in text.chars() {
        match (in_quote, c) {
            (Some(q), c) if c == q => in_quote = None,
            (Some(_), _) => {}
            (None, '|') | (None, '"') => in_quote = Some(c),
            (None, '(') => depth += 1,
            (None, ')') => depth -= 1,
            _ => {}
        }
    }
    depth
}

fn parse_name(name: &str, sorts: &BTreeMap<String, Sort>) -> Option<SymExpr> {
    if let Some(sort) = sorts.get(name) {
        let id = name.strip_prefix('a')?.parse().ok()?;
        return Some(SymExpr::Sym(Symbol { id, sort: *sort }));
    }
    let (kind, rest) = match name.chars().next()? {
        'k' => (ParamKind::Kappa, &name[1..]),
        't' => (ParamKind::Tau, &name[1..]),
        _ => return None,
    };
    Some(SymExpr::Param(Param { kind, id: rest.parse().ok()? }))
}

/// Reads back a term produced by [`term`]. `sorts` maps declared symbol
/// names to their sorts.
pub fn parse_term(s: &SExp, sorts: &BTreeMap<String, Sort>) -> Option<SymExpr> {
    match s {
        SExp::Atom(a) => match a.as_str() {
            "true" => Some(SymExpr::TRUE),
            "false" => Some(SymExpr::FALSE),
            _ => match a.parse::<i64>() {
                Ok(v) => Some(SymExpr::Int(v)),
                Err(_) => parse_name(a, sorts),
            },
        },
        SExp::List(items) => {
            let head = items.first()?.atom()?;
            let args = &items[1..];
            let sub = |i: usize| parse_term(&args[i], sorts);
            match (head, args.len()) {
                ("-", 1) => {
                    if let Some(Ok(v)) = args[0].atom().map(|a| a.parse::<i64>()) {
                        return Some(SymExpr::Int(-v));
                    }
                    Some(SymExpr::Unary(UnOp::Neg, Box::new(sub(0)?)))
                }
                ("not", 1) => Some(SymExpr::Unary(UnOp::Not, Box::new(sub(0)?))),
                ("and", _) => Some(SymExpr::And(
                    args.iter().map(|a| parse_term(a, sorts)).collect::<Option<_>>()?,
                )),
                ("forall", 2) => {
                    let binder = args[0].list()?.first()?.list()?.first()?.atom()?;
                    let SymExpr::Param(var) = parse_name(binder, sorts)? else { return None };
                    let imp = args[1].list()?;
                    let guard = imp.get(1)?.list()?;
                    let lo = parse_term(guard.get(1)?.list()?.get(1)?, sorts)?;
                    let hi = parse_term(guard.get(2)?.list()?.get(2)?, sorts)?;
                    let body = parse_term(imp.get(2)?, sorts)?;
                    Some(SymExpr::Forall {
                        var,
                        lo: Box::new(lo),
                        hi: Box::new(hi),
                        body: Box::new(body),
                    })
                }
                (h, 1) if sorts.get(h) == Some(&Sort::Array) => {
                    let SymExpr::Sym(a) = parse_name(h, sorts)? else { return None };
                    Some(SymExpr::Select(a, Box::new(sub(0)?)))
                }
                (h, 2) => {
                    let op = match h {
                        "+" => BinOp::Add,
                        "-" => BinOp::Sub,
                        "*" => BinOp::Mul,
                        "div" => BinOp::Div,
                        "mod" => BinOp::Mod,
                        "=" => BinOp::Eq,
                        "distinct" => BinOp::Ne,
                        "<" => BinOp::Lt,
                        "<=" => BinOp::Le,
                        ">" => BinOp::Gt,
                        ">=" => BinOp::Ge,
                        "or" => BinOp::Or,
                        _ => return None,
                    };
                    Some(SymExpr::Binary(op, Box::new(sub(0)?), Box::new(sub(1)?)))
                }
                _ => None,
            }
        }
    }
}

/// Symbol sorts declared by a script produced by [`to_smtlib`].
pub fn declared_sorts(script: &[SExp]) -> BTreeMap<String, Sort> {
    let mut out = BTreeMap::new();
    for s in script {
        let Some(items) = s.list() else { continue };
        if items.first().and_then(SExp::atom) != Some("declare-fun") || items.len() != 4 {
            continue;
        }
        let Some(name) = items[1].atom() else { continue };
        if !name.starts_with('a') {
            continue;
        }
        let arity = items[2].list().map_or(0, |l| l.len());
        let sort = match (arity, items[3].atom()) {
            (1, _) => Sort::Array,
            (_, Some("Bool")) => Sort::Bool,
            _ => Sort::Int,
        };
        out.insert(name.to_string(), sort);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtDef {
    pub params: Vec<String>,
    pub body: SExp,
}

pub type SmtDefs = BTreeMap<String, SmtDef>;

fn value_of_int(v: i64) -> Value {
    Value::Int(v)
}

/// Evaluates a model term; `None` when it uses anything unsupported.
pub fn eval_model_term(t: &SExp, defs: &SmtDefs, env: &mut Vec<(String, Value)>) -> Option<Value> {
    match t {
        SExp::Atom(a) => {
            if let Some((_, v)) = env.iter().rev().find(|(n, _)| n == a) {
                return Some(*v);
            }
            match a.as_str() {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => match a.parse::<i64>() {
                    Ok(v) => Some(value_of_int(v)),
                    Err(_) => {
                        let def = defs.get(a)?;
                        if !def.params.is_empty() {
                            return None;
                        }
                        eval_model_term(&def.body, defs, &mut Vec::new())
                    }
                },
            }
        }
        SExp::List(items) => {
            let head = items.first()?.atom()?;
            let args = &items[1..];
            if head == "let" {
                let bindings = args.first()?.list()?;
                let mut vals = Vec::new();
                for b in bindings {
                    let b = b.list()?;
                    vals.push((b.first()?.atom()?.to_string(), eval_model_term(b.get(1)?, defs, env)?));
                }
                let n = vals.len();
                env.extend(vals);
                let r = eval_model_term(args.get(1)?, defs, env);
                env.truncate(env.len() - n);
                return r;
            }
            if head == "ite" {
                return match eval_model_term(args.first()?, defs, env)? {
                    Value::Bool(true) => eval_model_term(args.get(1)?, defs, env),
                    Value::Bool(false) => eval_model_term(args.get(2)?, defs, env),
                    Value::Int(_) => None,
                };
            }
            let vals = args
                .iter()
                .map(|a| eval_model_term(a, defs, env))
                .collect::<Option<Vec<_>>>()?;
            let ints = || -> Option<Vec<i64>> {
                vals.iter()
                    .map(|v| match v {
                        Value::Int(i) => Some(*i),
                        Value::Bool(_) => None,
                    })
                    .collect()
            };
            let bools = || -> Option<Vec<bool>> {
                vals.iter()
                    .map(|v| match v {
                        Value::Bool(b) => Some(*b),
                        Value::Int(_) => None,
                    })
                    .collect()
            };
            let chain = |f: fn(i64, i64) -> bool| -> Option<Value> {
                let xs = ints()?;
                Some(Value::Bool(xs.windows(2).all(|w| f(w[0], w[1]))))
            };
            match head {
                "-" if vals.len() == 1 => Some(Value::Int(ints()?[0].checked_neg()?)),
                "-" => {
                    let xs = ints()?;
                    xs[1..].iter().try_fold(xs[0], |a, b| a.checked_sub(*b)).map(Value::Int)
                }
                "+" => ints()?.iter().try_fold(0i64, |a, b| a.checked_add(*b)).map(Value::Int),
                "*" => ints()?.iter().try_fold(1i64, |a, b| a.checked_mul(*b)).map(Value::Int),
                "div" => {
                    let xs = ints()?;
                    xs.first()?.checked_div_euclid(*xs.get(1)?).map(Value::Int)
                }
                "mod" => {
                    let xs = ints()?;
                    xs.first()?.checked_rem_euclid(*xs.get(1)?).map(Value::Int)
                }
                "abs" => Some(Value::Int(ints()?[0].checked_abs()?)),
                "<" => chain(|a, b| a < b),
                "<=" => chain(|a, b| a <= b),
                ">" => chain(|a, b| a > b),
                ">=" => chain(|a, b| a >= b),
                "=" => Some(Value::Bool(vals.windows(2).all(|w| w[0] == w[1]))),
                "distinct" => Some(Value::Bool(vals[0] != vals[1])),
                "not" => Some(Value::Bool(!bools()?[0])),
                "and" => Some(Value::Bool(bools()?.iter().all(|b| *b))),
                "or" => Some(Value::Bool(bools()?.iter().any(|b| *b))),
                "=>" => {
                    let bs = bools()?;
                    Some(Value::Bool(!bs[0] || bs[1]))
                }
                name => {
                    let def = defs.get(name)?;
                    if def.params.len() != vals.len() {
                        return None;
                    }
                    let mut inner: Vec<(String, Value)> =
                        def.params.iter().cloned().zip(vals.iter().copied()).collect();
                    eval_model_term(&def.body, defs, &mut inner)
                }
            }
        }
    }
}

/// Interprets a `(get-model)` response for the symbols of `q`.
pub fn parse_model(text: &str, q: &SatQuery) -> Option<Model> {
    let sexps = parse_sexps(text).ok()?;
    let top = sexps.first()?.list()?;
    let mut defs = SmtDefs::new();
    for d in top {
        let items = d.list()?;
        if items.first()?.atom()? != "define-fun" {
            continue;
        }
        let name = items.get(1)?.atom()?.to_string();
        let params = items
            .get(2)?
            .list()?
            .iter()
            .map(|p| p.list().and_then(|l| l.first()).and_then(SExp::atom).map(str::to_string))
            .collect::<Option<Vec<_>>>()?;
        defs.insert(name, SmtDef { params, body: items.get(4)?.clone() });
    }
    let defs = Arc::new(defs);
    let mut model = Model::default();
    for s in q.formula.symbols() {
        let name = symbol_name(s);
        if !defs.contains_key(&name) {
            continue;
        }
        match s.sort {
            Sort::Array => {
                model.arrays.insert(s, ArrayModel::Smt { fun: name, defs: defs.clone() });
            }
            _ => {
                let v = eval_model_term(&SExp::Atom(name), &defs, &mut Vec::new())?;
                model.scalars.insert(s, v);
            }
        }
    }
    for p in q.formula.free_params() {
        let name = param_name(p);
        if defs.contains_key(&name) {
            match eval_model_term(&SExp::Atom(name), &defs, &mut Vec::new())? {
                Value::Int(v) => {
                    model.params.insert(p, v);
                }
                Value::Bool(_) => return None,
            }
        }
    }
    Some(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym::{Param, Symbol};

    #[test]
    fn scripts_declare_what_they_use() {
        let a = Symbol { id: 0, sort: Sort::Array };
        let n = Symbol { id: 1, sort: Sort::Int };
        let k = Param::kappa(1);
        let f = SymExpr::and([
            SymExpr::binary(crate::program::BinOp::Lt, SymExpr::Param(k), SymExpr::Sym(n)),
            SymExpr::eq(SymExpr::select(a, SymExpr::Param(k)), SymExpr::Int(-1)),
        ]);
        let script = to_smtlib(&SatQuery::new(f));
        assert!(script.starts_with("(set-logic ALL)\n"));
        assert!(script.contains(&format!("(declare-fun {} (Int) Int)", symbol_name(a))));
        assert!(script.contains(&format!("(declare-fun {} () Int)", symbol_name(n))));
        assert!(script.contains(&format!("(assert (>= {} 0))", param_name(k))));
        assert!(script.ends_with("(check-sat)\n"));
        assert_eq!(paren_balance(&script), 0);
    }

    #[test]
    fn sexps_parse_nested_lists() {
        let parsed = parse_sexps("(a (b c) d) e").unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].list().unwrap().len(), 3);
        assert_eq!(parsed[1].atom(), Some("e"));
        assert!(parse_sexps("(a").is_err());
    }
}
