use crate::program::{BinOp, Program, Type, VarId};
use crate::sym::{InitialMemory, LinearAtom, Param, SymExpr, SymMemory};

/// θ⟨κ⟩ with θ⟨κ⟩ ≡ θ^κ for every κ ≥ 0.
///
/// A variable left at `Θ(a)` stays there; an integer variable advanced to
/// `Θ(a) + c` becomes `Θ(a) + c·κ`. Any other value has no closed form and
/// its variable is returned as the error.
pub fn close_memory_form(
    p: &Program,
    theta0: &InitialMemory,
    theta: &SymMemory,
    kappa: Param,
) -> Result<SymMemory, VarId> {
    let mut out = theta0.memory();
    for (v, e) in theta.iter() {
        if theta.is_identity_at(v) {
            continue;
        }
        if p.var(v).ty != Type::Int {
            return Err(v);
        }
        let own = LinearAtom::Sym(theta0.symbol(v));
        let lf = e.linear_form().ok_or(v)?;
        if lf.terms.len() != 1 || lf.terms.get(&own) != Some(&1) {
            return Err(v);
        }
        let step = match lf.constant {
            1 => SymExpr::Param(kappa),
            c => SymExpr::binary(BinOp::Mul, SymExpr::Int(c), SymExpr::Param(kappa)),
        };
        out.set(v, SymExpr::add(theta0.value(v), step));
    }
    Ok(out)
}

/// θⁿ, with θ⁰ = Θ.
pub fn iterate_memory(theta0: &InitialMemory, theta: &SymMemory, n: usize) -> SymMemory {
    (0..n).fold(theta0.memory(), |acc, _| acc.compose(theta))
}
