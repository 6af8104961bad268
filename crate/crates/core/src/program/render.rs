use std::fmt::Write;

use super::{Action, BinOp, Expr, Program, UnOp};

fn prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
    }
}

const UNARY_PREC: u8 = 6;

fn write_expr(p: &Program, e: &Expr, min: u8, out: &mut String) {
    match e {
        Expr::Int(v) if *v < 0 && min > 4 => {
            let _ = write!(out, "({v})");
        }
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Var(v) => out.push_str(&p.var(*v).name),
        Expr::Index(a, i) => {
            out.push_str(&p.var(*a).name);
            out.push('[');
            write_expr(p, i, 0, out);
            out.push(']');
        }
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            write_expr(p, inner, UNARY_PREC, out);
        }
        Expr::Binary(op, l, r) => {
            let q = prec(*op);
            let wrap = q < min;
            if wrap {
                out.push('(');
            }
            // Comparisons do not chain, so both sides bind tighter.
            let left_min = if op.is_comparison() { q + 1 } else { q };
            write_expr(p, l, left_min, out);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(p, r, q + 1, out);
            if wrap {
                out.push(')');
            }
        }
    }
}

pub fn render_expr(p: &Program, e: &Expr) -> String {
    let mut out = String::new();
    write_expr(p, e, 0, &mut out);
    out
}

fn render_args(p: &Program, args: &[Expr]) -> String {
    args.iter().map(|a| render_expr(p, a)).collect::<Vec<_>>().join(", ")
}

pub(crate) fn render_action(p: &Program, a: &Action) -> String {
    match a {
        Action::Assign { dest, value } => format!("{} := {}", p.var(*dest).name, render_expr(p, value)),
        Action::CallAssign { dest, callee, args } => format!(
            "{} := {}({})",
            p.var(*dest).name,
            p.func(*callee).name,
            render_args(p, args)
        ),
        Action::CallVoid { callee, args } => {
            format!("{}({})", p.func(*callee).name, render_args(p, args))
        }
        Action::Ret(e) => format!("ret {}", render_expr(p, e)),
        Action::Skip => "skip".to_string(),
        Action::Guard(g) => render_expr(p, g),
        Action::Enter { callee, args } => {
            format!("enter {}({})", p.func(*callee).name, render_args(p, args))
        }
    }
}

/// Canonical text; parsing it yields a structurally identical program.
pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    for g in &p.globals {
        let v = p.var(*g);
        let _ = writeln!(out, "global {} : {};", v.name, v.ty);
    }
    if !p.globals.is_empty() {
        out.push('\n');
    }
    for (i, fid) in p.func_ids().enumerate() {
        let f = p.func(fid);
        if i > 0 {
            out.push('\n');
        }
        let params = f
            .params
            .iter()
            .map(|v| format!("{}: {}", p.var(*v).name, p.var(*v).ty))
            .collect::<Vec<_>>()
            .join(", ");
        let start = if fid == p.start { " start" } else { "" };
        let _ = writeln!(out, "fn {}({}) -> {}{} {{", f.name, params, f.return_type, start);
        let _ = writeln!(out, "  entry {};", f.locations[f.entry as usize]);
        let _ = writeln!(out, "  exit {};", f.locations[f.exit as usize]);
        if !f.locals.is_empty() {
            let locals = f
                .locals
                .iter()
                .map(|v| format!("{}: {}", p.var(*v).name, p.var(*v).ty))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "  locals {locals};");
        }
        for e in &f.edges {
            let _ = writeln!(
                out,
                "  {} -> {} : {};",
                f.locations[e.src as usize],
                f.locations[e.dst as usize],
                render_action(p, &e.action)
            );
        }
        out.push_str("}\n");
    }
    out
}
