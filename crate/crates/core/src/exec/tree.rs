use serde::{Deserialize, Serialize};

use crate::solver::Verdict;
use crate::sym::{ProgramState, SymExpr};

use super::{Step, Successor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexStatus {
    /// Waiting in the queue; only seen while a run is in progress.
    Pending,
    Interior,
    Final,
    /// Left in the queue when the budget ran out.
    Frontier,
    /// Not expanded because its location hit the visit bound.
    Cut,
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub state: ProgramState,
    /// Condition on the edge from the parent; `true` for the root.
    pub label: SymExpr,
    pub step: Step,
    /// Verdict of the satisfiability check of `state.pc`; `None` when the
    /// path condition was inherited unchanged.
    pub verdict: Option<Verdict>,
    pub status: VertexStatus,
}

/// Vertices in creation order; the root is vertex 0 and every parent id is
/// smaller than its child's.
#[derive(Debug, Clone)]
pub struct SymExecTree {
    pub vertices: Vec<Vertex>,
}

impl SymExecTree {
    pub fn new(root: ProgramState) -> SymExecTree {
        SymExecTree {
            vertices: vec![Vertex {
                id: 0,
                parent: None,
                children: Vec::new(),
                state: root,
                label: SymExpr::TRUE,
                step: Step::Root,
                verdict: None,
                status: VertexStatus::Pending,
            }],
        }
    }

    pub fn add(&mut self, parent: usize, succ: Successor, verdict: Option<Verdict>) -> usize {
        let id = self.vertices.len();
        self.vertices.push(Vertex {
            id,
            parent: Some(parent),
            children: Vec::new(),
            state: succ.state,
            label: succ.label,
            step: succ.step,
            verdict,
            status: VertexStatus::Pending,
        });
        self.vertices[parent].children.push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn root(&self) -> &Vertex {
        &self.vertices[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter().filter(|v| v.children.is_empty())
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    /// Vertex ids from the root down to `v`.
    pub fn path_to(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut cur = v;
        while let Some(p) = self.vertices[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Occurrences of `v`'s location on its root path, `v` included.
    pub fn visits(&self, v: usize) -> usize {
        let loc = self.vertices[v].state.loc;
        self.path_to(v).into_iter().filter(|u| self.vertices[*u].state.loc == loc).count()
    }
}
