use std::collections::{BTreeSet, VecDeque};

use crate::program::{Action, EdgeId, FuncId, Loc, Program};

use super::{CandidatePart, CycleStep, PartExit, PartKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorLimits {
    /// Longest cycle, in edges, that is enumerated.
    pub max_cycle_len: usize,
    /// Parts reported per detector and function.
    pub max_parts: usize,
}

impl Default for DetectorLimits {
    fn default() -> Self {
        DetectorLimits { max_cycle_len: 16, max_parts: 64 }
    }
}

pub trait PartDetector {
    fn name(&self) -> &str;
    fn detect(&self, p: &Program, limits: &DetectorLimits) -> Vec<CandidatePart>;
}

/// Edges usable by a cycle: everything but the `skip` self-loops of error
/// locations.
fn cycle_edges(p: &Program, f: FuncId) -> Vec<EdgeId> {
    p.edge_ids(f)
        .filter(|e| {
            let edge = p.edge(*e);
            !(edge.src == edge.dst && edge.action == Action::Skip)
        })
        .collect()
}

/// Elementary cycles as edge lists, each reported once from its lowest
/// location index.
fn elementary_cycles(p: &Program, f: FuncId, max_len: usize) -> Vec<Vec<EdgeId>> {
    let edges = cycle_edges(p, f);
    let n = p.func(f).locations.len() as u32;
    let mut out = Vec::new();
    for start in 0..n {
        let mut path: Vec<EdgeId> = Vec::new();
        let mut on_path = vec![false; n as usize];
        on_path[start as usize] = true;
        search(p, &edges, start, start, max_len, &mut path, &mut on_path, &mut out);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn search(
    p: &Program,
    edges: &[EdgeId],
    start: u32,
    at: u32,
    max_len: usize,
    path: &mut Vec<EdgeId>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<EdgeId>>,
) {
    if path.len() >= max_len {
        return;
    }
    for &e in edges {
        let edge = p.edge(e);
        if edge.src != at || edge.dst < start {
            continue;
        }
        if edge.dst == start {
            let mut cycle = path.clone();
            cycle.push(e);
            out.push(cycle);
        } else if !on_path[edge.dst as usize] {
            on_path[edge.dst as usize] = true;
            path.push(e);
            search(p, edges, start, edge.dst, max_len, path, on_path, out);
            path.pop();
            on_path[edge.dst as usize] = false;
        }
    }
}

/// BFS distance of every location from the function entry.
fn distances(p: &Program, f: FuncId) -> Vec<Option<usize>> {
    let func = p.func(f);
    let mut dist = vec![None; func.locations.len()];
    dist[func.entry as usize] = Some(0);
    let mut queue = VecDeque::from([func.entry]);
    while let Some(l) = queue.pop_front() {
        let d = dist[l as usize].unwrap();
        for e in &func.edges {
            if e.src == l && dist[e.dst as usize].is_none() {
                dist[e.dst as usize] = Some(d + 1);
                queue.push_back(e.dst);
            }
        }
    }
    dist
}

/// Out-edges of cycle locations other than the cycle's own steps, ordered
/// by target name and then edge index.
fn exits_of(p: &Program, cycle: &[Loc], taken: &[Option<EdgeId>]) -> Vec<PartExit> {
    let mut exits: Vec<PartExit> = cycle
        .iter()
        .zip(taken)
        .flat_map(|(l, step)| {
            p.out_edges(*l)
                .into_iter()
                .filter(move |e| Some(*e) != *step)
                .map(|e| PartExit { edge: e, target: p.edge_dst(e) })
        })
        .collect();
    exits.sort_by(|a, b| {
        (p.loc_name(a.target), a.edge.idx).cmp(&(p.loc_name(b.target), b.edge.idx))
    });
    exits
}

/// Elementary cycles of one function, entered where the cycle is first
/// reachable from the function entry.
pub struct LoopDetector;

impl LoopDetector {
    fn part(p: &Program, f: FuncId, cycle: Vec<EdgeId>, dist: &[Option<usize>]) -> Option<CandidatePart> {
        let func = p.func(f);
        let members: BTreeSet<u32> = cycle.iter().map(|e| p.edge(*e).src).collect();
        if members.contains(&func.entry) || members.contains(&func.exit) {
            return None;
        }
        let entered = |l: u32| {
            func.edges.iter().any(|e| e.dst == l && !members.contains(&e.src))
        };
        let rot = (0..cycle.len())
            .filter(|i| entered(p.edge(cycle[*i]).src))
            .filter_map(|i| {
                let l = p.edge(cycle[i]).src;
                dist[l as usize].map(|d| (d, func.locations[l as usize].clone(), i))
            })
            .min()?
            .2;
        let mut edges = cycle;
        edges.rotate_left(rot);
        let locs: Vec<Loc> = edges.iter().map(|e| p.edge_src(*e)).collect();
        let taken: Vec<Option<EdgeId>> = edges.iter().map(|e| Some(*e)).collect();
        let exits = exits_of(p, &locs, &taken);
        if exits.iter().any(|x| x.target.idx == func.entry || x.target.idx == func.exit) {
            return None;
        }
        Some(CandidatePart {
            kind: PartKind::Loop,
            function: f,
            cycle: locs,
            steps: edges.into_iter().map(CycleStep::Edge).collect(),
            exits,
            call: None,
        })
    }
}

impl PartDetector for LoopDetector {
    fn name(&self) -> &str {
        "loop"
    }

    fn detect(&self, p: &Program, limits: &DetectorLimits) -> Vec<CandidatePart> {
        let mut out = Vec::new();
        for f in p.func_ids() {
            let dist = distances(p, f);
            let parts = elementary_cycles(p, f, limits.max_cycle_len)
                .into_iter()
                .filter_map(|c| LoopDetector::part(p, f, c, &dist))
                .take(limits.max_parts);
            out.extend(parts);
        }
        out
    }
}

/// For each call edge `h = (u, v)` of a function to itself: the paths from
/// the function entry to `u`, closed by re-entering the function.
pub struct RecursionDetector;

fn simple_paths(p: &Program, f: FuncId, from: u32, to: u32, max_len: usize) -> Vec<Vec<EdgeId>> {
    fn go(
        p: &Program,
        edges: &[EdgeId],
        at: u32,
        to: u32,
        max_len: usize,
        path: &mut Vec<EdgeId>,
        seen: &mut [bool],
        out: &mut Vec<Vec<EdgeId>>,
    ) {
        if at == to {
            out.push(path.clone());
            return;
        }
        if path.len() >= max_len {
            return;
        }
        for &e in edges {
            let edge = p.edge(e);
            if edge.src == at && !seen[edge.dst as usize] {
                seen[edge.dst as usize] = true;
                path.push(e);
                go(p, edges, edge.dst, to, max_len, path, seen, out);
                path.pop();
                seen[edge.dst as usize] = false;
            }
        }
    }
    let edges = cycle_edges(p, f);
    let mut seen = vec![false; p.func(f).locations.len()];
    seen[from as usize] = true;
    let mut out = Vec::new();
    go(p, &edges, from, to, max_len, &mut Vec::new(), &mut seen, &mut out);
    out
}

impl PartDetector for RecursionDetector {
    fn name(&self) -> &str {
        "recursion"
    }

    fn detect(&self, p: &Program, limits: &DetectorLimits) -> Vec<CandidatePart> {
        let mut out = Vec::new();
        for f in p.func_ids() {
            let func = p.func(f);
            let mut parts = Vec::new();
            for h in p.edge_ids(f) {
                let (callee, args) = match &p.edge(h).action {
                    Action::CallAssign { callee, args, .. } | Action::CallVoid { callee, args } => {
                        (*callee, args)
                    }
                    _ => continue,
                };
                if callee != f {
                    continue;
                }
                let u = p.edge(h).src;
                for path in simple_paths(p, f, func.entry, u, limits.max_cycle_len.saturating_sub(1)) {
                    let mut locs: Vec<Loc> = path.iter().map(|e| p.edge_src(*e)).collect();
                    locs.push(Loc { func: f, idx: u });
                    let mut taken: Vec<Option<EdgeId>> = path.iter().map(|e| Some(*e)).collect();
                    taken.push(Some(h));
                    let exits = exits_of(p, &locs, &taken);
                    let mut steps: Vec<CycleStep> = path.into_iter().map(CycleStep::Edge).collect();
                    steps.push(CycleStep::Meta(Action::Enter { callee: f, args: args.clone() }));
                    parts.push(CandidatePart {
                        kind: PartKind::Recursion,
                        function: f,
                        cycle: locs,
                        steps,
                        exits,
                        call: Some(h),
                    });
                }
            }
            out.extend(parts.into_iter().take(limits.max_parts));
        }
        out
    }
}

pub type DetectorFactory = fn() -> Box<dyn PartDetector>;

/// Part detectors by name, in registration order.
pub struct DetectorRegistry {
    entries: Vec<(&'static str, DetectorFactory)>,
}

impl Default for DetectorRegistry {
    fn default() -> Self {
        let mut r = DetectorRegistry { entries: Vec::new() };
        r.register("loop", || Box::new(LoopDetector));
        r.register("recursion", || Box::new(RecursionDetector));
        r
    }
}

impl DetectorRegistry {
    pub fn register(&mut self, name: &'static str, factory: DetectorFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn create(&self, name: &str) -> Option<Box<dyn PartDetector>> {
        self.entries.iter().find(|(n, _)| *n == name).map(|(_, f)| f())
    }

    /// Parts found by the named detectors, deduplicated and sorted by
    /// function name, location sequence, then kind.
    pub fn detect(&self, names: &[&str], p: &Program, limits: &DetectorLimits) -> Option<Vec<CandidatePart>> {
        let mut parts = Vec::new();
        for name in names {
            parts.extend(self.create(name)?.detect(p, limits));
        }
        let key = |c: &CandidatePart| {
            let names: Vec<String> = c.cycle.iter().map(|l| p.loc_name(*l).to_string()).collect();
            (p.func(c.function).name.clone(), names, c.kind, c.call.map(|e| e.idx))
        };
        parts.sort_by_key(|c| key(c));
        parts.dedup();
        Some(parts)
    }
}

/// Parts found by every registered detector.
pub fn detect_candidate_parts(p: &Program, limits: &DetectorLimits) -> Vec<CandidatePart> {
    let reg = DetectorRegistry::default();
    reg.detect(&reg.names(), p, limits).unwrap_or_default()
}
