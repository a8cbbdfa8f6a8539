//! Dependency digraph over objects: arc `(i, j)` means object `j` has to
//! leave its start before object `i` can be placed at its goal.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Result, ToroError};
use crate::geometry::discs_overlap;
use crate::model::Instance;

/// Default cap on enumerated simple cycles.
pub const DEFAULT_CYCLE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
    /// Objects whose own start overlaps their own goal.
    forced: Vec<bool>,
}

impl DepGraph {
    pub fn empty(n: usize) -> Self {
        DepGraph { out: vec![Vec::new(); n], inc: vec![Vec::new(); n], forced: vec![false; n] }
    }

    /// Builds a graph from an arc list. Duplicate arcs collapse; self-loops
    /// and out-of-range endpoints are rejected.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut g = DepGraph::empty(n);
        for &(i, j) in arcs {
            if i >= n || j >= n {
                return Err(ToroError::InvalidParameter(format!("arc ({i}, {j}) out of range 0..{n}")));
            }
            if i == j {
                return Err(ToroError::InvalidParameter(format!("self-loop at {i}")));
            }
            g.out[i].push(j);
            g.inc[j].push(i);
        }
        for list in g.out.iter_mut().chain(g.inc.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    pub fn arc_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
            .collect()
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.out[i].binary_search(&j).is_ok()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.inc[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out[v].len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.inc[v].len()
    }

    pub fn is_forced(&self, v: usize) -> bool {
        self.forced[v]
    }

    pub fn forced_vertices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.forced[v]).collect()
    }

    pub fn set_forced(&mut self, v: usize, forced: bool) {
        self.forced[v] = forced;
    }

    /// Same vertex set with every arc touching a removed vertex dropped.
    pub fn without(&self, removed: &[usize]) -> DepGraph {
        let mut gone = vec![false; self.n()];
        for &v in removed {
            gone[v] = true;
        }
        let keep = |v: &usize| !gone[*v];
        let mut g = DepGraph::empty(self.n());
        for v in (0..self.n()).filter(|v| keep(v)) {
            g.out[v] = self.out[v].iter().copied().filter(keep).collect();
            g.inc[v] = self.inc[v].iter().copied().filter(keep).collect();
        }
        g.forced = self.forced.clone();
        g
    }

    /// Induced subgraph on `vertices` (sorted), relabeled `0..k`.
    pub fn induced(&self, vertices: &[usize]) -> DepGraph {
        let mut index = vec![usize::MAX; self.n()];
        for (k, &v) in vertices.iter().enumerate() {
            index[v] = k;
        }
        let arcs: Vec<(usize, usize)> = vertices
            .iter()
            .flat_map(|&v| {
                let index = &index;
                self.out[v]
                    .iter()
                    .filter(move |&&w| index[w] != usize::MAX)
                    .map(move |&w| (index[v], index[w]))
            })
            .collect();
        let mut g = DepGraph::from_arcs(vertices.len(), &arcs).expect("induced arcs are valid");
        for (k, &v) in vertices.iter().enumerate() {
            g.forced[k] = self.forced[v];
        }
        g
    }

    /// Parses the fixture format: `n m` followed by `m` lines `i j`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let parse_pair = |lineno: usize, line: &str| -> Result<(usize, usize)> {
            let nums: Vec<&str> = line.split_whitespace().collect();
            if nums.len() != 2 {
                return Err(ToroError::Parse(format!("line {lineno}: expected two integers")));
            }
            let a = nums[0]
                .parse()
                .map_err(|_| ToroError::Parse(format!("line {lineno}: bad integer {:?}", nums[0])))?;
            let b = nums[1]
                .parse()
                .map_err(|_| ToroError::Parse(format!("line {lineno}: bad integer {:?}", nums[1])))?;
            Ok((a, b))
        };
        let (lineno, header) = lines.next().ok_or_else(|| ToroError::Parse("empty graph file".into()))?;
        let (n, m) = parse_pair(lineno, header)?;
        let mut arcs = Vec::with_capacity(m);
        for _ in 0..m {
            let (lineno, line) = lines
                .next()
                .ok_or_else(|| ToroError::Parse(format!("expected {m} arcs, found {}", arcs.len())))?;
            arcs.push(parse_pair(lineno, line)?);
        }
        if let Some((lineno, _)) = lines.next() {
            return Err(ToroError::Parse(format!("line {lineno}: trailing content")));
        }
        DepGraph::from_arcs(n, &arcs)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n(), self.arc_count());
        for (i, j) in self.arcs() {
            writeln!(s, "{i} {j}").unwrap();
        }
        s
    }
}

/// Dependency graph of a labeled instance.
pub fn build_dep_graph(inst: &Instance) -> Result<DepGraph> {
    if !inst.labeled {
        return Err(ToroError::Unlabeled);
    }
    let n = inst.n();
    let r = inst.radius();
    let mut arcs = Vec::new();
    let mut forced = vec![false; n];
    for i in 0..n {
        if inst.is_stationary(i) {
            continue;
        }
        for j in 0..n {
            // A stationary object never vacates its start, but its start
            // is its goal and goals never overlap, so no arc can appear.
            if discs_overlap(inst.goal_pose(i), inst.start_pose(j), r)? {
                if i == j {
                    forced[i] = true;
                } else {
                    arcs.push((i, j));
                }
            }
        }
    }
    let mut g = DepGraph::from_arcs(n, &arcs)?;
    g.forced = forced;
    Ok(g)
}

/// Strongly connected components (Tarjan), each sorted ascending, listed in
/// order of their smallest vertex.
pub fn sccs(g: &DepGraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    // explicit call stack of (vertex, next successor position)
    let mut calls: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        calls.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
            if let Some(&w) = g.out[v].get(*pos) {
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Components that contain at least one cycle.
pub fn cyclic_sccs(g: &DepGraph) -> Vec<Vec<usize>> {
    sccs(g).into_iter().filter(|c| c.len() > 1).collect()
}

pub fn is_acyclic(g: &DepGraph) -> bool {
    topological_order(g).is_some()
}

/// Kahn's algorithm; smallest available vertex first.
pub fn topological_order(g: &DepGraph) -> Option<Vec<usize>> {
    let n = g.n();
    let mut indeg: Vec<usize> = (0..n).map(|v| g.in_degree(v)).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &w in g.successors(v) {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Result of a capped cycle enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleEnumeration {
    /// Each cycle starts at its smallest vertex.
    pub cycles: Vec<Vec<usize>>,
    /// More cycles exist than were returned.
    pub capped: bool,
}

/// Johnson's elementary circuit enumeration.
pub fn simple_cycles(g: &DepGraph, cap: usize) -> Result<CycleEnumeration> {
    if cap == 0 {
        return Err(ToroError::InvalidParameter("cycle cap must be positive".into()));
    }
    let n = g.n();
    let mut search = Johnson {
        g,
        allowed: vec![false; n],
        blocked: vec![false; n],
        b_sets: vec![Vec::new(); n],
        path: Vec::new(),
        cycles: Vec::new(),
        cap,
        capped: false,
    };
    for s in 0..n {
        // SCC of s in the subgraph induced by vertices >= s
        let sub_vertices: Vec<usize> = (s..n).collect();
        let sub = g.induced(&sub_vertices);
        let comp = sccs(&sub).into_iter().find(|c| c[0] == 0).unwrap();
        if comp.len() < 2 {
            continue;
        }
        for v in 0..n {
            search.allowed[v] = false;
            search.blocked[v] = false;
            search.b_sets[v].clear();
        }
        for &k in &comp {
            search.allowed[k + s] = true;
        }
        search.circuit(s, s);
        if search.capped {
            break;
        }
    }
    Ok(CycleEnumeration { cycles: search.cycles, capped: search.capped })
}

struct Johnson<'a> {
    g: &'a DepGraph,
    allowed: Vec<bool>,
    blocked: Vec<bool>,
    b_sets: Vec<Vec<usize>>,
    path: Vec<usize>,
    cycles: Vec<Vec<usize>>,
    cap: usize,
    capped: bool,
}

impl Johnson<'_> {
    fn unblock(&mut self, u: usize) {
        let mut work = vec![u];
        while let Some(x) = work.pop() {
            if !self.blocked[x] {
                continue;
            }
            self.blocked[x] = false;
            work.append(&mut self.b_sets[x]);
        }
    }

    fn circuit(&mut self, v: usize, s: usize) -> bool {
        let mut found = false;
        self.path.push(v);
        self.blocked[v] = true;
        for &w in self.g.successors(v) {
            if self.capped {
                break;
            }
            if !self.allowed[w] {
                continue;
            }
            if w == s {
                if self.cycles.len() == self.cap {
                    self.capped = true;
                    break;
                }
                self.cycles.push(self.path.clone());
                found = true;
            } else if !self.blocked[w] && self.circuit(w, s) {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &w in self.g.successors(v) {
                if self.allowed[w] && !self.b_sets[w].contains(&v) {
                    self.b_sets[w].push(v);
                }
            }
        }
        self.path.pop();
        found
    }
}
