//! Acceptance criteria 1 to 8, one line each.
//!
//! Runs as a plain binary so the lines are printed even when every
//! criterion passes. Criteria 1 to 6 share one recording wrapper around the
//! external solver; criterion 8 replays its log against the bounded oracle.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use cse_core::exec::{execute, ExecConfig, Mode, Step, SymExecTree, VertexStatus};
use cse_core::harness::diff::{differential_check, DiffConfig};
use cse_core::program::Program;
use cse_core::solver::{
    formulas_equivalent, BoundedDomain, BoundedSolver, Instrumented, SatQuery, SolverBackend,
    SolverError, Verdict,
};
use cse_core::sym::{states_equivalent, EquivalenceMode, InitialMemory, Param, SymExpr};
use cse_core::templates::{iterate_memory, Template, TemplateSet};

use common::{backend, corpus, templates_for, CORPUS};

const CRIT1_LIMIT: Duration = Duration::from_secs(5);
const CRIT2_LIMIT: Duration = Duration::from_secs(10);
const CRIT3_LIMIT: Duration = Duration::from_secs(60);

/// Compact vertices of lin_srch.
const LIN_SRCH_COMPACT_VERTICES: usize = 6;
/// Loop iterations explored on count_if.
const COUNT_IF_ITERATIONS: u32 = 6;
const CLASSIC_LEAVES_MIN: usize = 1 << 5;
const COMPACT_VERTICES_MAX: usize = 4 * COUNT_IF_ITERATIONS as usize + 3;
/// Largest iteration count compared against the closed form.
const CLOSED_FORM_MAX: i64 = 8;
const KING_BUDGET: usize = 300;
const DIFF_PROGRAMS: [&str; 3] = ["lin_srch", "count_if", "lin_srch_rec"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Solver = Instrumented;
type Mutation = fn(&mut TemplateSet) -> bool;
type Criterion = fn(&mut Solver) -> Outcome;

fn run(p: &Program, cfg: &ExecConfig, set: &TemplateSet, s: &mut Solver) -> SymExecTree {
    execute(p, cfg, set, s).expect("execution succeeds").tree.expect("tree requested")
}

fn criterion_1(s: &mut Solver) -> Outcome {
    let p = corpus("lin_srch");
    let started = Instant::now();
    let (set, _) = templates_for(&p, s);
    let r = execute(&p, &ExecConfig::new(Mode::Compact), &set, s).expect("compact run");
    let compact_time = started.elapsed();
    let classic = execute(&p, &ExecConfig::new(Mode::Classic).budget(200), &TemplateSet::default(), s)
        .expect("classic run");
    let pass = r.stats.vertices == LIN_SRCH_COMPACT_VERTICES
        && !r.stats.budget_exhausted
        && classic.stats.budget_exhausted
        && compact_time < CRIT1_LIMIT;
    outcome(
        pass,
        format!(
            "compact lin_srch: {} vertices, terminated {}, {:.2?}; classic at budget 200: exhausted {}",
            r.stats.vertices, !r.stats.budget_exhausted, compact_time, classic.stats.budget_exhausted
        ),
    )
}

fn criterion_2(s: &mut Solver) -> Outcome {
    let p = corpus("count_if");
    let started = Instant::now();
    let bound = Some(COUNT_IF_ITERATIONS + 1);
    let classic = run(&p, &ExecConfig::new(Mode::Classic).budget(10_000).visit_bound(bound), &TemplateSet::default(), s);
    let (set, _) = templates_for(&p, s);
    let compact = run(&p, &ExecConfig::new(Mode::Compact).budget(10_000).visit_bound(bound), &set, s);
    let elapsed = started.elapsed();
    let finals = classic.vertices.iter().filter(|v| v.status == VertexStatus::Final).count();
    let instantiations: Vec<usize> = compact
        .vertices
        .iter()
        .filter(|v| v.children.iter().any(|c| matches!(compact.vertices[*c].step, Step::Template { .. })))
        .map(|v| v.children.len())
        .collect();
    let chain = !instantiations.is_empty() && instantiations.iter().all(|n| *n == 2);
    let pass = finals >= CLASSIC_LEAVES_MIN && compact.len() <= COMPACT_VERTICES_MAX && chain && elapsed < CRIT2_LIMIT;
    outcome(
        pass,
        format!(
            "count_if at {COUNT_IF_ITERATIONS} iterations: classic {} final leaves (need ≥ {CLASSIC_LEAVES_MIN}), \
             compact {} vertices (need ≤ {COMPACT_VERTICES_MAX}), {} instantiations with 2 children each {chain}, {:.2?}",
            finals,
            compact.len(),
            instantiations.len(),
            elapsed
        ),
    )
}

fn diff_all(
    mutate: &dyn Fn(&mut TemplateSet) -> bool,
    s: &mut dyn SolverBackend,
) -> Vec<(&'static str, Option<bool>)> {
    DIFF_PROGRAMS
        .iter()
        .map(|name| {
            let p = corpus(name);
            let (mut set, _) = templates_for(&p, s);
            if !mutate(&mut set) {
                return (*name, None);
            }
            let report = differential_check(&p, &set, &DiffConfig::default(), s).expect("diff runs");
            (*name, Some(report.passed()))
        })
        .collect()
}

fn criterion_3(s: &mut Solver) -> Outcome {
    let started = Instant::now();
    let results = diff_all(&|_| true, s);
    let elapsed = started.elapsed();
    let pass = results.iter().all(|(_, r)| *r == Some(true)) && elapsed < CRIT3_LIMIT;
    let shown: Vec<String> = results
        .iter()
        .map(|(n, r)| format!("{n} {}", if *r == Some(true) { "pass" } else { "fail" }))
        .collect();
    outcome(pass, format!("diff at bound 3, budgets 500/100: {}, {:.2?}", shown.join(", "), elapsed))
}

fn closed_form_agrees(
    p: &Program,
    closed: &cse_core::sym::SymMemory,
    step: &cse_core::sym::SymMemory,
    param: Param,
    s: &mut Solver,
) -> Result<bool, SolverError> {
    let theta0 = InitialMemory::new(p);
    for n in 0..=CLOSED_FORM_MAX {
        let nu: BTreeMap<Param, i64> = [(param, n)].into_iter().collect();
        let iterated = iterate_memory(&theta0, step, n as usize);
        for (v, e) in closed.iter() {
            let inst = e.apply_valuation(&nu);
            let it = iterated.get(v);
            if &inst != it && !formulas_equivalent(&inst, it, s)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn check_template(p: &Program, t: &Template, s: &mut Solver) -> Result<Vec<String>, SolverError> {
    let mut problems = Vec::new();
    for (i, x) in t.exits.iter().enumerate() {
        let v = s.check_sat(&SatQuery::new(x.pc.clone()))?.verdict;
        if v != Verdict::Sat {
            problems.push(format!("exit {} is {v:?}", i + 1));
        }
    }
    for i in 0..t.exits.len() {
        for j in i + 1..t.exits.len() {
            let both = SymExpr::and([t.exits[i].pc.clone(), t.exits[j].pc.clone()]);
            let v = s.check_sat(&SatQuery::new(both))?.verdict;
            if v != Verdict::Unsat {
                problems.push(format!("exits {} and {} overlap ({v:?})", i + 1, j + 1));
            }
        }
    }
    if !closed_form_agrees(p, &t.closed_memory, &t.cycle_memory, t.param, s)? {
        problems.push("closed form differs from iteration".into());
    }
    if let Some(r) = &t.recursion {
        if !closed_form_agrees(p, &r.memory, &r.step_memory, t.param, s)? {
            problems.push("return closed form differs from iteration".into());
        }
    }
    Ok(problems)
}

fn criterion_4(s: &mut Solver) -> Outcome {
    let mut checked = 0;
    let mut problems = Vec::new();
    for name in CORPUS {
        let p = corpus(name);
        let (set, _) = templates_for(&p, s);
        for (i, t) in set.templates.iter().enumerate() {
            checked += 1;
            match check_template(&p, t, s) {
                Ok(found) => problems.extend(found.into_iter().map(|m| format!("{name} t{i}: {m}"))),
                Err(e) => problems.push(format!("{name} t{i}: {e}")),
            }
        }
    }
    outcome(
        problems.is_empty() && checked > 0,
        format!("{checked} templates, {} problems {:?}", problems.len(), problems),
    )
}

#[derive(Default)]
struct KingCount {
    vertices: usize,
    unsat: usize,
    unknown: usize,
    sibling_pairs: usize,
    overlapping: usize,
    not_monotone: usize,
}

fn king(tree: &SymExecTree, s: &mut Solver, c: &mut KingCount) -> Result<(), SolverError> {
    for v in tree.vertices.iter().skip(1) {
        c.vertices += 1;
        match s.check_sat(&SatQuery::new(v.state.pc.clone()))?.verdict {
            Verdict::Unsat => c.unsat += 1,
            Verdict::Unknown => c.unknown += 1,
            Verdict::Sat => {}
        }
        let parent = &tree.vertices[v.parent.expect("non-root")];
        let expected = SymExpr::and([parent.state.pc.clone(), v.label.clone()]);
        if expected != v.state.pc && !formulas_equivalent(&expected, &v.state.pc, s)? {
            c.not_monotone += 1;
        }
    }
    for u in &tree.vertices {
        for (i, a) in u.children.iter().enumerate() {
            for b in &u.children[i + 1..] {
                c.sibling_pairs += 1;
                let both = SymExpr::and([
                    u.state.pc.clone(),
                    tree.vertices[*a].label.clone(),
                    tree.vertices[*b].label.clone(),
                ]);
                if s.check_sat(&SatQuery::new(both))?.verdict != Verdict::Unsat {
                    c.overlapping += 1;
                }
            }
        }
    }
    Ok(())
}

fn criterion_5(s: &mut Solver) -> Outcome {
    let mut c = KingCount::default();
    for name in CORPUS {
        let p = corpus(name);
        let tree = run(&p, &ExecConfig::new(Mode::Classic).budget(KING_BUDGET), &TemplateSet::default(), s);
        if let Err(e) = king(&tree, s, &mut c) {
            return outcome(false, format!("{name}: {e}"));
        }
    }
    let pass = c.unsat == 0 && c.unknown == 0 && c.overlapping == 0 && c.not_monotone == 0;
    outcome(
        pass,
        format!(
            "{} vertices: {} unsat, {} unknown, {} not monotone; {} sibling pairs, {} overlapping",
            c.vertices, c.unsat, c.unknown, c.not_monotone, c.sibling_pairs, c.overlapping
        ),
    )
}

fn isomorphic(p: &Program, a: &SymExecTree, b: &SymExecTree, s: &mut Solver) -> Result<bool, SolverError> {
    if a.len() != b.len() {
        return Ok(false);
    }
    for (u, v) in a.vertices.iter().zip(&b.vertices) {
        if u.parent != v.parent || u.children != v.children || u.state.loc != v.state.loc || u.status != v.status {
            return Ok(false);
        }
        if u.label != v.label && !formulas_equivalent(&u.label, &v.label, s)? {
            return Ok(false);
        }
        if !states_equivalent(p, &u.state, &v.state, EquivalenceMode::Full, s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn criterion_6(s: &mut Solver) -> Outcome {
    let mut failed = Vec::new();
    let mut vertices = 0;
    for name in CORPUS {
        let p = corpus(name);
        let none = TemplateSet::default();
        let classic = run(&p, &ExecConfig::new(Mode::Classic).budget(KING_BUDGET), &none, s);
        let compact = run(&p, &ExecConfig::new(Mode::Compact).budget(KING_BUDGET), &none, s);
        vertices += classic.len();
        match isomorphic(&p, &classic, &compact, s) {
            Ok(true) => {}
            Ok(false) => failed.push(name.to_string()),
            Err(e) => failed.push(format!("{name}: {e}")),
        }
    }
    outcome(
        failed.is_empty(),
        format!("{} programs, {vertices} vertices compared, not isomorphic: {failed:?}", CORPUS.len()),
    )
}

fn weaken_condition(set: &mut TemplateSet) -> bool {
    match set.templates.first_mut() {
        Some(t) => {
            t.exits[0].pc = SymExpr::TRUE;
            true
        }
        None => false,
    }
}

/// κ becomes 2κ in the first exit memory that mentions it.
fn perturb_coefficient(set: &mut TemplateSet) -> bool {
    let Some(t) = set.templates.first_mut() else { return false };
    let kappa = t.param;
    let doubled: BTreeMap<Param, SymExpr> =
        [(kappa, SymExpr::add(SymExpr::Param(kappa), SymExpr::Param(kappa)))].into_iter().collect();
    for x in &mut t.exits {
        if x.memory.iter().any(|(_, e)| e.free_params().contains(&kappa)) {
            x.memory = x.memory.map(|e| e.subst_params(&doubled));
            return true;
        }
    }
    false
}

fn swap_exits(set: &mut TemplateSet) -> bool {
    match set.templates.first_mut() {
        Some(t) if t.exits.len() >= 2 => {
            let (a, b) = (t.exits[0].loc, t.exits[1].loc);
            t.exits[0].loc = b;
            t.exits[1].loc = a;
            true
        }
        _ => false,
    }
}

fn criterion_7(s: &mut dyn SolverBackend) -> Outcome {
    let mutations: [(&str, Mutation); 3] = [
        ("weaken φ", weaken_condition),
        ("perturb θ", perturb_coefficient),
        ("swap exits", swap_exits),
    ];
    let mut detected = 0;
    let mut lines = Vec::new();
    for (name, m) in mutations {
        let results = diff_all(&m, s);
        let caught: Vec<&str> = results.iter().filter(|(_, r)| *r == Some(false)).map(|(n, _)| *n).collect();
        if !caught.is_empty() {
            detected += 1;
        }
        lines.push(format!("{name} caught on {caught:?}"));
    }
    outcome(detected == mutations.len(), format!("{detected}/3 mutations detected: {}", lines.join("; ")))
}

fn criterion_8(log: &[cse_core::solver::QueryRecord]) -> Outcome {
    let mut oracle = BoundedSolver::new(BoundedDomain::default());
    let (mut oracle_sat, mut skipped, mut disagreements) = (0, 0, 0);
    for r in log {
        match oracle.check_sat(&r.query) {
            Ok(o) if o.verdict == Verdict::Sat => {
                oracle_sat += 1;
                if r.verdict != Verdict::Sat {
                    disagreements += 1;
                }
            }
            Ok(_) => {}
            Err(_) => skipped += 1,
        }
    }
    outcome(
        disagreements == 0 && !log.is_empty(),
        format!(
            "{} queries, oracle sat on {oracle_sat}, {skipped} outside the oracle domain, {disagreements} disagreements",
            log.len()
        ),
    )
}

fn main() {
    let mut s = Instrumented::new(backend("external")).recording();
    let criteria: [(u32, Criterion); 6] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
    ];
    let mut results: Vec<(u32, Outcome)> = criteria.iter().map(|(n, f)| (*n, f(&mut s))).collect();
    let mut plain = backend("external");
    results.push((7, criterion_7(plain.as_mut())));
    results.push((8, criterion_8(&s.log)));
    let mut failed = 0;
    for (n, o) in &results {
        println!("criterion {n} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
