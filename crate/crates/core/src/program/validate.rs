use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{Action, Loc, Program};

/// A broken well-formedness rule. Locations are rendered `function:location`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    DuplicateName { name: String },
    EntryHasInEdge { location: String },
    ExitHasOutEdge { location: String },
    DeadEnd { location: String },
    OutDegree { location: String, degree: usize },
    MixedOutEdges { location: String },
    GuardCount { location: String, count: usize },
    GuardsNotNegated { location: String },
    CallAtEntryOrExit { location: String, edge: String },
    StartFunctionCalled { edge: String },
    RetNotToExit { edge: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateName { name } => write!(f, "name `{name}` is declared more than once"),
            Violation::EntryHasInEdge { location } => write!(f, "entry location {location} has an in-edge"),
            Violation::ExitHasOutEdge { location } => write!(f, "exit location {location} has an out-edge"),
            Violation::DeadEnd { location } => write!(f, "location {location} has no out-edge"),
            Violation::OutDegree { location, degree } => write!(
                f,
                "location {location} has {degree} out-edges but no guards"
            ),
            Violation::MixedOutEdges { location } => {
                write!(f, "location {location} mixes guards with other actions")
            }
            Violation::GuardCount { location, count } => {
                write!(f, "location {location} has {count} guarded out-edges, expected 2")
            }
            Violation::GuardsNotNegated { location } => {
                write!(f, "guards at {location} are not negations of each other")
            }
            Violation::CallAtEntryOrExit { location, edge } => {
                write!(f, "call edge `{edge}` touches entry or exit location {location}")
            }
            Violation::StartFunctionCalled { edge } => write!(f, "edge `{edge}` calls the start function"),
            Violation::RetNotToExit { edge } => write!(f, "return edge `{edge}` does not end at the exit"),
        }
    }
}

/// Checks the structural rules every executable program must satisfy.
/// Returns every violation found, in function and edge order.
pub fn validate_program(p: &Program) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for name in p.vars.iter().map(|v| &v.name).chain(p.functions.iter().map(|f| &f.name)) {
        if !seen.insert(name) {
            out.push(Violation::DuplicateName { name: name.clone() });
        }
    }
    for fid in p.func_ids() {
        let f = p.func(fid);
        let entry = p.entry_of(fid);
        let exit = p.exit_of(fid);
        if !p.in_edges(entry).is_empty() {
            out.push(Violation::EntryHasInEdge { location: p.qualified_loc(entry) });
        }
        if !p.out_edges(exit).is_empty() {
            out.push(Violation::ExitHasOutEdge { location: p.qualified_loc(exit) });
        }
        for idx in 0..f.locations.len() as u32 {
            let l = Loc { func: fid, idx };
            if l == exit {
                continue;
            }
            let out_edges = p.out_edges(l);
            let used = l == entry || !p.in_edges(l).is_empty();
            if out_edges.is_empty() {
                if used {
                    out.push(Violation::DeadEnd { location: p.qualified_loc(l) });
                }
                continue;
            }
            let guards: Vec<_> = out_edges.iter().filter_map(|e| p.edge(*e).action.guard()).collect();
            if guards.is_empty() {
                if out_edges.len() != 1 {
                    out.push(Violation::OutDegree {
                        location: p.qualified_loc(l),
                        degree: out_edges.len(),
                    });
                }
            } else if guards.len() != out_edges.len() {
                out.push(Violation::MixedOutEdges { location: p.qualified_loc(l) });
            } else if guards.len() != 2 {
                out.push(Violation::GuardCount { location: p.qualified_loc(l), count: guards.len() });
            } else if !guards[0].is_negation_of(guards[1]) {
                out.push(Violation::GuardsNotNegated { location: p.qualified_loc(l) });
            }
        }
        for eid in p.edge_ids(fid) {
            let e = p.edge(eid);
            if let Some(callee) = e.action.callee() {
                for end in [p.edge_src(eid), p.edge_dst(eid)] {
                    if end == entry || end == exit {
                        out.push(Violation::CallAtEntryOrExit {
                            location: p.qualified_loc(end),
                            edge: p.render_edge(eid),
                        });
                    }
                }
                if callee == p.start {
                    out.push(Violation::StartFunctionCalled { edge: p.render_edge(eid) });
                }
            }
            if matches!(e.action, Action::Ret(_)) && e.dst != f.exit {
                out.push(Violation::RetNotToExit { edge: p.render_edge(eid) });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse_program;

    fn violations(body: &str) -> Vec<Violation> {
        let src = format!("fn helper(v: int) -> int {{\n  entry h0;\n  exit h1;\n  h0 -> h1 : ret v;\n}}\n\nfn f(a: int) -> int start {{\n  entry l0;\n  exit x;\n  locals t: int;\n{body}}}\n");
        validate_program(&parse_program(&src).unwrap())
    }

    #[test]
    fn well_formed_function() {
        assert_eq!(violations("  l0 -> l1 : a < 0;\n  l0 -> x : a >= 0;\n  l1 -> x : ret a;\n"), []);
    }

    #[test]
    fn guards_must_come_in_negated_pairs() {
        let v = violations("  l0 -> l1 : a < 0;\n  l0 -> x : a > 0;\n  l1 -> x : ret a;\n");
        assert_eq!(v, [Violation::GuardsNotNegated { location: "f:l0".into() }]);
        let v = violations("  l0 -> l1 : a < 0;\n  l0 -> x : ret a;\n  l1 -> x : ret a;\n");
        assert_eq!(v, [Violation::MixedOutEdges { location: "f:l0".into() }]);
    }

    #[test]
    fn unguarded_branching_and_dead_ends() {
        let v = violations("  l0 -> l1 : t := 1;\n  l0 -> l2 : t := 2;\n  l1 -> x : ret t;\n  l2 -> l3 : skip;\n");
        assert!(v.contains(&Violation::OutDegree { location: "f:l0".into(), degree: 2 }));
        assert!(v.contains(&Violation::DeadEnd { location: "f:l3".into() }));
    }

    #[test]
    fn calls_stay_off_entry_and_exit() {
        let v = violations("  l0 -> l1 : t := helper(a);\n  l1 -> x : ret t;\n");
        assert_eq!(v.len(), 1);
        assert!(matches!(&v[0], Violation::CallAtEntryOrExit { location, .. } if location == "f:l0"));
    }

    #[test]
    fn returns_end_at_the_exit() {
        let v = violations("  l0 -> l1 : ret a;\n  l1 -> x : skip;\n");
        assert!(matches!(&v[..], [Violation::RetNotToExit { .. }]));
    }

    #[test]
    fn error_locations_are_allowed() {
        assert_eq!(violations("  l0 -> err : a < 0;\n  l0 -> l1 : a >= 0;\n  err -> err : skip;\n  l1 -> x : ret a;\n"), []);
    }
}
