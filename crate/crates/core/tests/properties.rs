//! Property tests over expressions, memories, states, the solvers and the
//! executor.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use cse_core::exec::{execute, ExecConfig, Mode, Step};
use cse_core::harness::diff::valuations;
use cse_core::harness::export::{export_dot, export_json, parse_tree_json, TreeExport};
use cse_core::program::{parse_program, render_program, validate_program, BinOp, FuncId, Loc, Program, Type, VarId};
use cse_core::solver::{BoundedDomain, BoundedSolver, Model, SatQuery, SolverBackend, Verdict};
use cse_core::sym::eval::{evaluate, Value};
use cse_core::sym::{
    apply_valuation, states_equivalent, EquivalenceMode, Frame, InitialMemory, Param, ProgramState,
    StackRecord, SymExpr, SymMemory, Symbol,
};
use cse_core::templates::{close_memory_form, iterate_memory, TemplateSet};

use common::{backend, corpus, templates_for};

/// The int variables of count_if: n, x, i, k and its return global.
fn int_vars(p: &Program) -> Vec<VarId> {
    p.var_ids().filter(|v| p.var(*v).ty == Type::Int).collect()
}

fn linear(syms: Vec<Symbol>, params: Vec<Param>) -> impl Strategy<Value = SymExpr> {
    let leaf = prop_oneof![
        (-5i64..=5).prop_map(SymExpr::Int),
        proptest::sample::select(syms).prop_map(SymExpr::Sym),
        proptest::sample::select(params).prop_map(SymExpr::Param),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SymExpr::binary(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SymExpr::binary(BinOp::Sub, a, b)),
            (-3i64..=3, inner).prop_map(|(c, a)| SymExpr::binary(BinOp::Mul, SymExpr::Int(c), a)),
        ]
    })
}

fn count_if_setup() -> (Program, InitialMemory, Vec<VarId>) {
    let p = corpus("count_if");
    let theta0 = InitialMemory::new(&p);
    let ints = int_vars(&p);
    (p, theta0, ints)
}

fn memory_strategy() -> impl Strategy<Value = SymMemory> {
    let (_, theta0, ints) = count_if_setup();
    let syms: Vec<Symbol> = ints.iter().map(|v| theta0.symbol(*v)).collect();
    let params = vec![Param::kappa(1), Param::kappa(2)];
    proptest::collection::vec(proptest::option::of(linear(syms, params)), ints.len()).prop_map(move |vals| {
        let mut m = theta0.memory();
        for (v, e) in ints.iter().zip(vals) {
            if let Some(e) = e {
                m.set(*v, e);
            }
        }
        m
    })
}

fn model_strategy() -> impl Strategy<Value = Model> {
    let (_, theta0, ints) = count_if_setup();
    (proptest::collection::vec(-20i64..=20, ints.len()), 0i64..=6, 0i64..=6).prop_map(move |(vals, k1, k2)| {
        let mut m = Model::default();
        for (v, x) in ints.iter().zip(vals) {
            m.scalars.insert(theta0.symbol(*v), Value::Int(x));
        }
        m.params.insert(Param::kappa(1), k1);
        m.params.insert(Param::kappa(2), k2);
        m
    })
}

fn same_values(a: &SymMemory, b: &SymMemory, vars: &[VarId], m: &Model) -> bool {
    vars.iter().all(|v| evaluate(a.get(*v), m) == evaluate(b.get(*v), m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn composition_is_associative(a in memory_strategy(), b in memory_strategy(), c in memory_strategy(), m in model_strategy()) {
        let (_, _, ints) = count_if_setup();
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        prop_assert!(same_values(&left, &right, &ints, &m));
    }

    #[test]
    fn initial_memory_is_a_unit(a in memory_strategy()) {
        let (_, theta0, _) = count_if_setup();
        prop_assert_eq!(theta0.memory().compose(&a), a.clone());
        prop_assert_eq!(a.compose(&theta0.memory()), a);
    }

    #[test]
    fn closed_form_matches_iteration(steps in proptest::collection::vec(proptest::option::of(-3i64..=3), 4), m in model_strategy(), n in 0i64..10) {
        let (p, theta0, ints) = count_if_setup();
        let mut theta = theta0.memory();
        for (v, c) in ints.iter().zip(&steps) {
            if let Some(c) = c {
                theta.set(*v, SymExpr::add(theta0.value(*v), SymExpr::Int(*c)));
            }
        }
        let kappa = Param::kappa(0);
        let closed = close_memory_form(&p, &theta0, &theta, kappa).expect("increments close");
        let nu = [(kappa, n)].into_iter().collect();
        let inst = closed.map(|e| e.apply_valuation(&nu));
        prop_assert!(same_values(&inst, &iterate_memory(&theta0, &theta, n as usize), &ints, &m));
    }

    #[test]
    fn scaling_updates_have_no_closed_form(c in 2i64..5) {
        let (p, theta0, ints) = count_if_setup();
        let mut theta = theta0.memory();
        let v = ints[0];
        theta.set(v, SymExpr::binary(BinOp::Mul, SymExpr::Int(c), theta0.value(v)));
        prop_assert_eq!(close_memory_form(&p, &theta0, &theta, Param::kappa(0)), Err(v));
    }

    #[test]
    fn markers_expand_into_wildcards(counts in proptest::collection::vec(0i64..5, 1..4), frames in 0usize..3) {
        let (p, theta0, _) = count_if_setup();
        let f = FuncId(0);
        let mut stack = Vec::new();
        for _ in 0..frames {
            stack.push(StackRecord::Frame(Frame {
                func: f,
                values: p.func(f).frame_vars().map(|v| theta0.value(v)).collect(),
                ret_loc: p.exit_of(f),
                dest: None,
            }));
        }
        let mut nu = cse_core::sym::Valuation::new();
        for (i, c) in counts.iter().enumerate() {
            let k = Param::kappa(i as u32 + 1);
            nu.insert(k, *c);
            stack.push(StackRecord::RecMarker { template: cse_core::sym::TemplateId(0), param: k });
        }
        let s = ProgramState { memory: theta0.memory(), pc: SymExpr::TRUE, stack, loc: p.entry_of(f) };
        let inst = apply_valuation(&s, &nu).expect("all parameters bound");
        let wildcards = inst.stack.iter().filter(|r| matches!(r, StackRecord::Wildcard)).count();
        prop_assert_eq!(wildcards as i64, counts.iter().sum::<i64>());
        prop_assert_eq!(inst.stack.len(), frames + wildcards);
        prop_assert!(inst.params().is_empty());
    }

    #[test]
    fn valuations_cover_the_grid(n in 0usize..4, bound in 0u32..4) {
        let params: Vec<Param> = (0..n as u32).map(Param::kappa).collect();
        let all = valuations(&params, bound);
        prop_assert_eq!(all.len(), (bound as usize + 1).pow(n as u32));
        let distinct: BTreeSet<_> = all.iter().cloned().collect();
        prop_assert_eq!(distinct.len(), all.len());
        prop_assert!(all.iter().all(|nu| nu.values().all(|v| (0..=bound as i64).contains(v))));
    }

    #[test]
    fn equivalence_is_reflexive_and_symmetric(a in memory_strategy(), b in memory_strategy()) {
        let (p, _, _) = count_if_setup();
        let mut oracle = BoundedSolver::new(BoundedDomain { int_min: -2, int_max: 2, param_max: 2, ..BoundedDomain::default() });
        let loc = Loc { func: FuncId(0), idx: 0 };
        let s = ProgramState { memory: a, pc: SymExpr::TRUE, stack: vec![], loc };
        let t = ProgramState { memory: b, ..s.clone() };
        prop_assert!(states_equivalent(&p, &s, &s, EquivalenceMode::Full, &mut oracle).unwrap());
        let st = states_equivalent(&p, &s, &t, EquivalenceMode::Full, &mut oracle).unwrap();
        let ts = states_equivalent(&p, &t, &s, EquivalenceMode::Full, &mut oracle).unwrap();
        prop_assert_eq!(st, ts);
    }
}

fn formula(syms: Vec<Symbol>) -> impl Strategy<Value = SymExpr> {
    let cmp = (linear(syms.clone(), vec![Param::kappa(1)]), linear(syms, vec![Param::kappa(1)]), 0usize..4).prop_map(
        |(a, b, op)| {
            let op = [BinOp::Lt, BinOp::Le, BinOp::Eq, BinOp::Ne][op];
            SymExpr::binary(op, a, b)
        },
    );
    cmp.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(SymExpr::and),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SymExpr::or(a, b)),
            inner.prop_map(SymExpr::not),
        ]
    })
}

fn formula_strategy() -> impl Strategy<Value = SymExpr> {
    let (_, theta0, ints) = count_if_setup();
    formula(ints.iter().take(2).map(|v| theta0.symbol(*v)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_models_satisfy_the_query(f in formula_strategy()) {
        let mut oracle = BoundedSolver::new(BoundedDomain::default());
        let r = oracle.check_sat(&SatQuery::new(f.clone())).unwrap();
        if r.verdict == Verdict::Sat {
            let m = r.model.expect("sat comes with a model");
            prop_assert_eq!(evaluate(&f, &m), cse_core::sym::eval::Eval::Known(Value::Bool(true)));
        }
    }

    #[test]
    fn oracle_sat_implies_external_sat(f in formula_strategy()) {
        let mut oracle = BoundedSolver::new(BoundedDomain::default());
        let mut external = backend("external");
        let bounded = oracle.check_sat(&SatQuery::new(f.clone())).unwrap().verdict;
        let full = external.check_sat(&SatQuery::new(f.clone())).unwrap();
        if bounded == Verdict::Sat {
            prop_assert_eq!(full.verdict, Verdict::Sat);
        }
        if full.verdict == Verdict::Sat {
            let m = full.model.expect("sat comes with a model");
            prop_assert_eq!(evaluate(&f, &m), cse_core::sym::eval::Eval::Known(Value::Bool(true)));
        }
    }
}

/// A straight-line function with optional two-way branches joined again.
fn program_text() -> impl Strategy<Value = String> {
    let expr = prop_oneof![
        (-9i64..=9).prop_map(|c| c.to_string()),
        Just("a".to_string()),
        Just("b".to_string()),
        Just("t".to_string()),
    ];
    let expr = expr.prop_recursive(2, 6, 2, |inner| {
        (inner.clone(), inner, 0usize..3).prop_map(|(l, r, op)| format!("({l} {} {r})", ["+", "-", "*"][op]))
    });
    let step = (proptest::bool::ANY, expr.clone(), expr, 0usize..3);
    proptest::collection::vec(step, 1..6).prop_map(|steps| {
        let mut body = String::new();
        for (i, (branch, e1, e2, op)) in steps.iter().enumerate() {
            let (here, next) = (format!("l{i}"), format!("l{}", i + 1));
            if *branch && i > 0 {
                let (pos, neg) = [("<", ">="), ("==", "!="), ("<=", ">")][*op];
                body += &format!("  {here} -> m{i} : {e1} {pos} {e2};\n");
                body += &format!("  {here} -> {next} : {e1} {neg} {e2};\n");
                body += &format!("  m{i} -> {next} : t := {e2};\n");
            } else {
                body += &format!("  {here} -> {next} : t := {e1};\n");
            }
        }
        let n = steps.len();
        format!("fn f(a: int, b: int) -> int start {{\n  entry l0;\n  exit x;\n  locals t: int;\n{body}  l{n} -> x : ret t;\n}}\n")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rendering_parses_back(text in program_text()) {
        let p = parse_program(&text).unwrap();
        prop_assert!(validate_program(&p).is_empty());
        let once = render_program(&p);
        let q = parse_program(&once).unwrap();
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(render_program(&q), once);
    }

    #[test]
    fn acyclic_programs_terminate_with_satisfiable_leaves(text in program_text()) {
        let p = parse_program(&text).unwrap();
        let mut s = backend("external");
        let r = execute(&p, &ExecConfig::new(Mode::Classic), &TemplateSet::default(), s.as_mut()).unwrap();
        prop_assert!(!r.stats.budget_exhausted);
        let branches = text.matches(" -> m").count();
        prop_assert!(!r.finals.is_empty() && r.finals.len() <= 1 << branches);
        for f in &r.finals {
            prop_assert_eq!(s.check_sat(&SatQuery::new(f.pc.clone())).unwrap().verdict, Verdict::Sat);
        }
    }
}

fn corpus_case() -> impl Strategy<Value = (&'static str, bool, usize)> {
    (proptest::sample::select(common::CORPUS.to_vec()), proptest::bool::ANY, 1usize..80)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn json_export_round_trips((name, compact, budget) in corpus_case()) {
        let p = corpus(name);
        let mut s = backend("auto");
        let set = if compact { templates_for(&p, s.as_mut()).0 } else { TemplateSet::default() };
        let mode = if compact { Mode::Compact } else { Mode::Classic };
        let tree = execute(&p, &ExecConfig::new(mode).budget(budget), &set, s.as_mut()).unwrap().tree.unwrap();
        let text = export_json(&p, &tree);
        let back = parse_tree_json(&text).unwrap();
        prop_assert!(back.is_well_formed());
        prop_assert_eq!(&back, &TreeExport::from_tree(&p, &tree));
        prop_assert_eq!(export_json(&p, &tree), text);
        let dot = export_dot(&p, &tree);
        prop_assert_eq!(dot.matches(" -> ").count(), tree.edge_count());
        prop_assert_eq!(export_dot(&p, &tree), dot);
    }

    #[test]
    fn random_choice_is_reproducible_and_parameters_fresh(seed in any::<u64>(), name in proptest::sample::select(vec!["count_if", "count_if_rec_b", "lin_srch_rec"])) {
        let p = corpus(name);
        let mut s = backend("auto");
        let (set, _) = templates_for(&p, s.as_mut());
        let cfg = ExecConfig::new(Mode::Compact).budget(60).visit_bound(Some(4)).chooser("random", seed);
        let a = execute(&p, &cfg, &set, s.as_mut()).unwrap().tree.unwrap();
        let b = execute(&p, &cfg, &set, s.as_mut()).unwrap().tree.unwrap();
        prop_assert_eq!(export_json(&p, &a), export_json(&p, &b));

        let mut events: Vec<(usize, Param)> = Vec::new();
        for v in &a.vertices {
            if let Step::Template { param, .. } = v.step {
                events.push((v.parent.unwrap(), param));
            }
        }
        events.sort();
        events.dedup();
        let params: BTreeSet<Param> = events.iter().map(|(_, k)| *k).collect();
        prop_assert_eq!(params.len(), events.len(), "one fresh parameter per instantiation");

        for v in &a.vertices {
            let adjacent = v.state.stack.windows(2).any(|w| {
                matches!(w[0], StackRecord::RecMarker { .. }) && matches!(w[1], StackRecord::RecMarker { .. })
            });
            prop_assert!(!adjacent, "adjacent markers at vertex {}", v.id);
        }
    }
}
