//! Tree export as Graphviz DOT or versioned JSON.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::exec::{Step, SymExecTree, VertexStatus};
use crate::program::Program;
use crate::solver::Verdict;

pub const TREE_FORMAT: &str = "cse-tree";
pub const TREE_VERSION: u32 = 1;

/// Longest path condition shown in a DOT vertex label.
const DOT_PC_CHARS: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexExport {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub location: String,
    pub status: VertexStatus,
    pub verdict: Option<Verdict>,
    pub step: String,
    pub label: String,
    pub memory: String,
    pub pc: String,
    pub stack: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeExport {
    pub format: String,
    pub version: u32,
    pub root: usize,
    pub vertices: Vec<VertexExport>,
}

pub fn render_step(p: &Program, step: &Step) -> String {
    match step {
        Step::Root => "root".to_string(),
        Step::Edge(e) => format!("edge {}: {}", p.func(e.func).name, p.render_edge(*e)),
        Step::Return { from } => format!("return from {}", p.qualified_loc(*from)),
        Step::Template { template, exit, param } => format!("template {template} exit {} with {param}", exit + 1),
        Step::RecursionReturn { template, param } => format!("recursion return {template} with {param}"),
    }
}

impl TreeExport {
    pub fn from_tree(p: &Program, tree: &SymExecTree) -> TreeExport {
        let vertices = tree
            .vertices
            .iter()
            .map(|v| VertexExport {
                id: v.id,
                parent: v.parent,
                children: v.children.clone(),
                location: p.qualified_loc(v.state.loc),
                status: v.status,
                verdict: v.verdict,
                step: render_step(p, &v.step),
                label: v.label.to_string(),
                memory: v.state.memory.render(p),
                pc: v.state.pc.to_string(),
                stack: v.state.render_stack(p),
            })
            .collect();
        TreeExport { format: TREE_FORMAT.to_string(), version: TREE_VERSION, root: 0, vertices }
    }

    /// Parent and child links agree and every vertex descends from the root.
    pub fn is_well_formed(&self) -> bool {
        let n = self.vertices.len();
        self.vertices.iter().enumerate().all(|(i, v)| {
            v.id == i
                && match v.parent {
                    None => i == self.root,
                    Some(q) => q < i && self.vertices[q].children.contains(&i),
                }
                && v.children.iter().all(|c| *c < n && self.vertices[*c].parent == Some(i))
        })
    }
}

pub fn export_json(p: &Program, tree: &SymExecTree) -> String {
    serde_json::to_string_pretty(&TreeExport::from_tree(p, tree)).expect("tree export serializes") + "\n"
}

pub fn parse_tree_json(text: &str) -> Result<TreeExport, serde_json::Error> {
    serde_json::from_str(text)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn summary(pc: &str) -> String {
    if pc.chars().count() <= DOT_PC_CHARS {
        pc.to_string()
    } else {
        pc.chars().take(DOT_PC_CHARS).collect::<String>() + "…"
    }
}

pub fn export_dot(p: &Program, tree: &SymExecTree) -> String {
    let mut out = String::from("digraph tree {\n  node [shape=box, fontname=\"monospace\"];\n");
    for v in &tree.vertices {
        let style = match v.status {
            VertexStatus::Final => ", peripheries=2",
            VertexStatus::Cut | VertexStatus::Frontier => ", style=dashed",
            _ => "",
        };
        let label = format!("{} | {}", p.qualified_loc(v.state.loc), summary(&v.state.pc.to_string()));
        let _ = writeln!(out, "  v{} [label=\"{}\"{}];", v.id, escape(&label), style);
    }
    for v in &tree.vertices {
        if let Some(q) = v.parent {
            let _ = writeln!(out, "  v{} -> v{} [label=\"{}\"];", q, v.id, escape(&v.label.to_string()));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::initial_state;
    use crate::program::parse_program;

    #[test]
    fn single_vertex_tree() {
        let p = parse_program("fn f(a: int) -> int start {\n  entry l0;\n  exit x;\n  l0 -> x : ret a;\n}\n").unwrap();
        let t = SymExecTree::new(initial_state(&p));
        let dot = export_dot(&p, &t);
        assert_eq!(dot.matches(" [label=").count(), 1);
        assert!(!dot.contains("->"));
        let back = parse_tree_json(&export_json(&p, &t)).unwrap();
        assert!(back.is_well_formed());
        assert_eq!(back.vertices[0].step, "root");
    }

    #[test]
    fn long_conditions_are_shortened() {
        let long = "x".repeat(DOT_PC_CHARS + 5);
        let short = summary(&long);
        assert_eq!(short.chars().count(), DOT_PC_CHARS + 1);
        assert!(short.ends_with('…'));
        assert_eq!(summary("a < b"), "a < b");
        assert_eq!(escape("a \"b\""), "a \\\"b\\\"");
    }
}
