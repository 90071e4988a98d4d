//! Directed multigraphs whose edges carry similarities.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{Orthogonal, Similarity};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Relative slack on ratio-window boundaries. Products of the same ratios
/// taken in different orders differ in the last bits; the slack makes window
/// membership independent of that.
pub const WINDOW_SLACK: f64 = 1e-12;

/// Transforms closer than this are treated as equal when pruning generators.
pub const GENERATOR_DEDUP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub source: VertexId,
    pub target: VertexId,
    pub map: Similarity,
}

/// A graph-directed system: vertex `i` carries the attractor piece `K_i`
/// with `K_i = ⋃_{e: i→l} S_e(K_l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GdIfs {
    vertex_count: usize,
    dim: usize,
    edges: Vec<Edge>,
    out: Vec<Vec<EdgeId>>,
}

impl GdIfs {
    pub fn new(vertex_count: usize, dim: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::input("a system needs at least one vertex"));
        }
        if dim == 0 {
            return Err(Error::input("ambient dimension must be at least 1"));
        }
        let mut out = vec![Vec::new(); vertex_count];
        for (id, e) in edges.iter().enumerate() {
            if e.source >= vertex_count || e.target >= vertex_count {
                return Err(Error::input(format!(
                    "edge {id} joins {}→{} but there are only {vertex_count} vertices",
                    e.source, e.target
                )));
            }
            if e.map.dim() != dim {
                return Err(Error::input(format!(
                    "edge {id} acts on dimension {} but the system is {dim}-dimensional",
                    e.map.dim()
                )));
            }
            out[e.source].push(id);
        }
        if let Some(v) = out.iter().position(|o| o.is_empty()) {
            return Err(Error::input(format!("vertex {v} has no outgoing edge")));
        }
        Ok(GdIfs { vertex_count, dim, edges, out })
    }

    /// One-vertex system with a self-loop per map.
    pub fn from_maps(maps: &[Similarity]) -> Result<Self> {
        let dim = maps.first().ok_or_else(|| Error::input("no maps given"))?.dim();
        let edges = maps
            .iter()
            .map(|m| Edge { source: 0, target: 0, map: m.clone() })
            .collect();
        Self::new(1, dim, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Outgoing edge ids of `v` in increasing order.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out[v]
    }

    pub fn max_ratio(&self) -> f64 {
        self.edges.iter().map(|e| e.map.ratio()).fold(0.0, f64::max)
    }

    pub fn min_ratio(&self) -> f64 {
        self.edges.iter().map(|e| e.map.ratio()).fold(1.0, f64::min)
    }

    pub fn strongly_connected(&self) -> bool {
        let forward = self.reach(0, false);
        let backward = self.reach(0, true);
        forward.iter().all(|&b| b) && backward.iter().all(|&b| b)
    }

    fn reach(&self, start: VertexId, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                let (from, to) = if reverse { (e.target, e.source) } else { (e.source, e.target) };
                if from == v && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen
    }

    pub(crate) fn require_strongly_connected(&self) -> Result<()> {
        if self.strongly_connected() {
            Ok(())
        } else {
            Err(Error::NotStronglyConnected)
        }
    }

    pub(crate) fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(Error::input(format!("vertex {v} out of range (0..{})", self.vertex_count)))
        }
    }

    /// The path along `edges`, validating composability.
    pub fn path(&self, edges: &[EdgeId]) -> Result<EdgePath> {
        let (&first, rest) = edges.split_first().ok_or_else(|| Error::input("empty edge path"))?;
        if first >= self.edges.len() {
            return Err(Error::input(format!("edge id {first} out of range")));
        }
        let mut p = EdgePath::edge(self, first);
        for &e in rest {
            if e >= self.edges.len() {
                return Err(Error::input(format!("edge id {e} out of range")));
            }
            if self.edges[e].source != p.target {
                return Err(Error::input(format!(
                    "edge {e} starts at {} but the path ends at {}",
                    self.edges[e].source, p.target
                )));
            }
            p.push(self, e);
        }
        Ok(p)
    }
}

/// A nonempty sequence of composable edges with its composite map.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgePath {
    edges: Vec<EdgeId>,
    source: VertexId,
    target: VertexId,
    composite: Similarity,
}

impl EdgePath {
    pub fn edge(g: &GdIfs, e: EdgeId) -> EdgePath {
        let edge = &g.edges[e];
        EdgePath { edges: vec![e], source: edge.source, target: edge.target, composite: edge.map.clone() }
    }

    pub(crate) fn push(&mut self, g: &GdIfs, e: EdgeId) {
        let edge = &g.edges[e];
        debug_assert_eq!(edge.source, self.target);
        self.composite = self.composite.compose_unchecked(&edge.map);
        self.edges.push(e);
        self.target = edge.target;
    }

    pub(crate) fn child(&self, g: &GdIfs, e: EdgeId) -> EdgePath {
        let mut c = self.clone();
        c.push(g, e);
        c
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn target(&self) -> VertexId {
        self.target
    }

    pub fn composite(&self) -> &Similarity {
        &self.composite
    }

    pub fn ratio(&self) -> f64 {
        self.composite.ratio()
    }

    pub fn is_cycle(&self) -> bool {
        self.source == self.target
    }

    pub fn is_prefix_of(&self, other: &EdgePath) -> bool {
        other.edges.starts_with(&self.edges)
    }

    /// `self` repeated `n ≥ 1` times; requires a cycle.
    pub fn repeat(&self, n: u32) -> EdgePath {
        assert!(n >= 1 && self.is_cycle());
        let mut edges = Vec::with_capacity(self.edges.len() * n as usize);
        for _ in 0..n {
            edges.extend_from_slice(&self.edges);
        }
        EdgePath {
            edges,
            source: self.source,
            target: self.target,
            composite: self.composite.power(n),
        }
    }
}

impl fmt::Display for EdgePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.source)?;
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ":{}", self.target)
    }
}

/// `p * q`.
pub fn concat(p: &EdgePath, q: &EdgePath) -> Result<EdgePath> {
    if p.target != q.source {
        return Err(Error::input(format!(
            "cannot concatenate a path ending at {} with one starting at {}",
            p.target, q.source
        )));
    }
    let mut edges = p.edges.clone();
    edges.extend_from_slice(&q.edges);
    Ok(EdgePath {
        edges,
        source: p.source,
        target: q.target,
        composite: p.composite.compose_unchecked(&q.composite),
    })
}

/// `p * q` where either side may be the empty path.
pub(crate) fn concat_opt(p: Option<&EdgePath>, q: Option<&EdgePath>) -> Option<EdgePath> {
    match (p, q) {
        (None, None) => None,
        (Some(p), None) => Some(p.clone()),
        (None, Some(q)) => Some(q.clone()),
        (Some(p), Some(q)) => Some(concat(p, q).expect("composable by construction")),
    }
}

/// Stopping-time enumeration: depth-first over extensions of a root, yielding
/// the first path along each branch whose key drops below `ceil`, provided
/// its key is at least `floor`. The key of a path is its ratio times
/// `weights[target]`.
pub struct PathIter<'a> {
    g: &'a GdIfs,
    lo: f64,
    hi: f64,
    weights: Option<&'a [f64]>,
    stack: Vec<EdgePath>,
    pending_root: Option<EdgePath>,
}

impl<'a> PathIter<'a> {
    fn key(&self, p: &EdgePath) -> f64 {
        match self.weights {
            Some(w) => p.ratio() * w[p.target],
            None => p.ratio(),
        }
    }

    fn push_children(&mut self, p: &EdgePath) {
        for &e in self.g.out_edges(p.target).iter().rev() {
            self.stack.push(p.child(self.g, e));
        }
    }
}

impl Iterator for PathIter<'_> {
    type Item = EdgePath;

    fn next(&mut self) -> Option<EdgePath> {
        if let Some(root) = self.pending_root.take() {
            let k = self.key(&root);
            if k < self.hi {
                if k >= self.lo {
                    return Some(root);
                }
                return None;
            }
            self.push_children(&root);
        }
        while let Some(p) = self.stack.pop() {
            let k = self.key(&p);
            if k >= self.hi {
                self.push_children(&p);
            } else if k >= self.lo {
                return Some(p);
            }
        }
        None
    }
}

fn check_window(ratio_floor: f64, ratio_ceil: f64) -> Result<()> {
    if !(ratio_floor > 0.0 && ratio_floor < ratio_ceil && ratio_ceil <= 1.0) {
        return Err(Error::input(format!(
            "ratio window [{ratio_floor}, {ratio_ceil}) must satisfy 0 < floor < ceil ≤ 1"
        )));
    }
    Ok(())
}

/// Paths from `from` (or extending `prefix`) with ratio in
/// `[ratio_floor, ratio_ceil)` whose proper prefixes all have ratio at least
/// `ratio_ceil`. Depth-first in edge-id order.
pub fn enumerate_paths<'a>(
    g: &'a GdIfs,
    from: VertexId,
    ratio_floor: f64,
    ratio_ceil: f64,
    prefix: Option<&EdgePath>,
) -> Result<PathIter<'a>> {
    check_window(ratio_floor, ratio_ceil)?;
    g.check_vertex(from)?;
    let lo = ratio_floor * (1.0 - WINDOW_SLACK);
    let hi = ratio_ceil * (1.0 - WINDOW_SLACK);
    let mut it = PathIter { g, lo, hi, weights: None, stack: Vec::new(), pending_root: None };
    match prefix {
        Some(p) => {
            if p.source != from {
                return Err(Error::input(format!(
                    "prefix starts at {} but enumeration starts at {from}",
                    p.source
                )));
            }
            it.pending_root = Some(p.clone());
        }
        None => {
            for &e in g.out_edges(from).iter().rev() {
                it.stack.push(EdgePath::edge(g, e));
            }
        }
    }
    Ok(it)
}

/// Stopping-time enumeration below `root` where the key of a path is its
/// ratio times `weights[target]`: yields the minimal extensions of `root`
/// with key in `[floor, ceil)`.
pub(crate) fn enumerate_weighted<'a>(
    g: &'a GdIfs,
    root: &EdgePath,
    floor: f64,
    ceil: f64,
    weights: &'a [f64],
) -> PathIter<'a> {
    PathIter {
        g,
        lo: floor * (1.0 - WINDOW_SLACK),
        hi: ceil * (1.0 - WINDOW_SLACK),
        weights: Some(weights),
        stack: Vec::new(),
        pending_root: Some(root.clone()),
    }
}

/// Fixed connecting paths for a base vertex `j`: `from_base[i]` runs `j → i`
/// and `to_base[i]` runs `i → j`. Both are `None` at `i = j` (empty path).
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnPaths {
    pub base: VertexId,
    pub from_base: Vec<Option<EdgePath>>,
    pub to_base: Vec<Option<EdgePath>>,
}

impl ReturnPaths {
    pub fn to_base(&self, i: VertexId) -> Option<&EdgePath> {
        self.to_base[i].as_ref()
    }

    pub fn from_base(&self, i: VertexId) -> Option<&EdgePath> {
        self.from_base[i].as_ref()
    }
}

/// Distances to `dest` along directed edges.
fn distances_to(g: &GdIfs, dest: VertexId) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.vertex_count];
    dist[dest] = Some(0);
    let mut queue = VecDeque::from([dest]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].expect("queued vertices have distances");
        for e in &g.edges {
            if e.target == v && dist[e.source].is_none() {
                dist[e.source] = Some(dv + 1);
                queue.push_back(e.source);
            }
        }
    }
    dist
}

/// Lexicographically least shortest path `from → dest`, `None` if `from == dest`.
fn shortest_path(g: &GdIfs, from: VertexId, dist: &[Option<usize>]) -> Option<EdgePath> {
    let mut here = from;
    let mut edges = Vec::new();
    while let Some(d) = dist[here].filter(|&d| d > 0) {
        let e = *g
            .out_edges(here)
            .iter()
            .find(|&&e| dist[g.edges[e].target] == Some(d - 1))
            .expect("a distance-decreasing edge exists");
        edges.push(e);
        here = g.edges[e].target;
    }
    if edges.is_empty() {
        None
    } else {
        Some(g.path(&edges).expect("walk is composable"))
    }
}

/// Shortest connecting paths between `j` and every vertex, ties broken by
/// lexicographic edge ids.
pub fn return_paths(g: &GdIfs, j: VertexId) -> Result<ReturnPaths> {
    g.check_vertex(j)?;
    g.require_strongly_connected()?;
    let to_j = distances_to(g, j);
    let to_base = (0..g.vertex_count).map(|i| shortest_path(g, i, &to_j)).collect();
    let from_base = (0..g.vertex_count)
        .map(|i| {
            let to_i = distances_to(g, i);
            shortest_path(g, j, &to_i)
        })
        .collect();
    Ok(ReturnPaths { base: j, from_base, to_base })
}

/// Where a candidate generator cycle came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleOrigin {
    /// `a_i * e * b_l` for the edge `e: i → l`.
    Edge(EdgeId),
    /// `a_i * b_i`.
    Vertex(VertexId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSet {
    pub base: VertexId,
    pub returns: ReturnPaths,
    /// Every candidate cycle in construction order, repeats included; the
    /// empty cycle `a_j * b_j` is omitted.
    pub candidates: Vec<(CycleOrigin, EdgePath)>,
    /// Candidates kept after removing identity and duplicate transforms.
    pub cycles: Vec<EdgePath>,
}

impl GeneratorSet {
    pub fn transforms(&self) -> Vec<Orthogonal> {
        self.cycles.iter().map(|c| c.composite().rotation().clone()).collect()
    }

    fn vertex_cycle(&self, i: VertexId) -> Option<EdgePath> {
        concat_opt(self.returns.from_base(i), self.returns.to_base(i))
    }

    fn edge_cycle(&self, g: &GdIfs, e: EdgeId) -> EdgePath {
        let edge = g.edge(e);
        let mid = EdgePath::edge(g, e);
        let left = concat_opt(self.returns.from_base(edge.source), Some(&mid)).expect("nonempty");
        concat_opt(Some(&left), self.returns.to_base(edge.target)).expect("nonempty")
    }

    /// Rebuilds the orthogonal part of a cycle at the base vertex from the
    /// generator construction:
    /// `T_{e_1…e_n} = G(e_1)·H(i_1)⁻¹·G(e_2)·H(i_2)⁻¹ ⋯ G(e_n)` with
    /// `G(e) = T_{a_i * e * b_l}` and `H(i) = T_{a_i * b_i}`.
    pub fn factorize(&self, g: &GdIfs, cycle: &EdgePath) -> Result<Orthogonal> {
        if cycle.source() != self.base || cycle.target() != self.base {
            return Err(Error::input("factorization needs a cycle at the base vertex"));
        }
        let mut acc = Orthogonal::identity(g.dim());
        let n = cycle.len();
        for (t, &e) in cycle.edges().iter().enumerate() {
            acc = acc.compose(self.edge_cycle(g, e).composite().rotation());
            if t + 1 < n {
                let v = g.edge(e).target;
                if let Some(h) = self.vertex_cycle(v) {
                    acc = acc.compose(&h.composite().rotation().inverse());
                }
            }
        }
        Ok(acc)
    }
}

/// Cycles at `j` whose orthogonal parts generate the `j`-th transformation
/// group: `a_i * e * b_l` for every edge and `a_i * b_i` for every vertex.
pub fn generator_cycles(g: &GdIfs, j: VertexId) -> Result<GeneratorSet> {
    let returns = return_paths(g, j)?;
    let mut set = GeneratorSet { base: j, returns, candidates: Vec::new(), cycles: Vec::new() };
    let mut candidates: Vec<(CycleOrigin, EdgePath)> = Vec::new();
    for e in 0..g.edges.len() {
        candidates.push((CycleOrigin::Edge(e), set.edge_cycle(g, e)));
    }
    for i in 0..g.vertex_count {
        if let Some(c) = set.vertex_cycle(i) {
            candidates.push((CycleOrigin::Vertex(i), c));
        }
    }
    let id = Orthogonal::identity(g.dim());
    let mut kept: Vec<EdgePath> = Vec::new();
    for (_, c) in &candidates {
        let t = c.composite().rotation();
        if t.within(&id, GENERATOR_DEDUP_TOL) {
            continue;
        }
        if kept.iter().any(|k| k.composite().rotation().within(t, GENERATOR_DEDUP_TOL)) {
            continue;
        }
        kept.push(c.clone());
    }
    set.candidates = candidates;
    set.cycles = kept;
    Ok(set)
}

/// A finite set of group elements that are pairwise at least `resolution`
/// apart, produced by breadth-first closure.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonNet {
    pub elements: Vec<Orthogonal>,
    pub resolution: f64,
    /// The element set is closed under multiplication by generators to 1e−8.
    pub finite_group: bool,
    /// The element budget was exhausted before saturation.
    pub truncated: bool,
}

/// Elements of a closed set are matched against products to this accuracy.
pub const CLOSURE_TOL: f64 = 1e-8;

impl EpsilonNet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn nearest(&self, t: &Orthogonal) -> (usize, f64) {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.distance(t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nets contain the identity")
    }

    pub fn contains_within(&self, t: &Orthogonal, r: f64) -> bool {
        self.elements.iter().any(|e| e.within(t, r))
    }

    /// Smallest `‖T − I‖` over non-identity elements.
    pub fn identity_gap(&self) -> Option<f64> {
        let id = Orthogonal::identity(self.elements[0].dim());
        self.elements
            .iter()
            .map(|e| e.distance(&id))
            .filter(|&d| d > CLOSURE_TOL)
            .min_by(f64::total_cmp)
    }

    /// Largest angular gap between consecutive rotations, as an operator
    /// distance; `None` outside d = 2 or when no rotation is present.
    pub fn so2_covering_radius(&self) -> Option<f64> {
        let mut angles: Vec<f64> = self.elements.iter().filter_map(|e| e.angle_2d()).collect();
        if angles.is_empty() {
            return None;
        }
        angles.sort_by(f64::total_cmp);
        let mut gap: f64 = angles[0] + std::f64::consts::TAU - angles[angles.len() - 1];
        for w in angles.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        // A point in the widest gap is half of it from the nearest element.
        Some(2.0 * (gap / 4.0).sin())
    }

    /// Largest distance from an element of `other` to the nearest element of
    /// `self`.
    pub fn covering_distance(&self, other: &EpsilonNet) -> f64 {
        crate::par::map(&other.elements, |t| self.nearest(t).1).into_iter().fold(0.0, f64::max)
    }
}

/// Breadth-first closure of the group generated by `generators` (together
/// with their inverses), deduplicated at `epsilon / 4`.
pub fn group_closure(generators: &[Orthogonal], dim: usize, epsilon: f64, budget: usize) -> Result<EpsilonNet> {
    if !(epsilon > 0.0) || budget == 0 {
        return Err(Error::input("group closure needs epsilon > 0 and budget ≥ 1"));
    }
    for g in generators {
        Error::check_dim(dim, g.dim())?;
    }
    let resolution = epsilon / 4.0;
    let mut moves: Vec<Orthogonal> = Vec::new();
    for g in generators {
        for h in [g.clone(), g.inverse()] {
            if !moves.iter().any(|m| m.within(&h, GENERATOR_DEDUP_TOL)) {
                moves.push(h);
            }
        }
    }
    let mut elements = vec![Orthogonal::identity(dim)];
    let mut queue = VecDeque::from([0usize]);
    let mut truncated = false;
    'bfs: while let Some(idx) = queue.pop_front() {
        let x = elements[idx].clone();
        for m in &moves {
            let y = x.compose(m);
            if elements.iter().any(|e| e.within(&y, resolution)) {
                continue;
            }
            if elements.len() >= budget {
                truncated = true;
                break 'bfs;
            }
            elements.push(y);
            queue.push_back(elements.len() - 1);
        }
    }
    let finite_group = !truncated
        && crate::par::all(&elements, |x| {
            moves.iter().all(|m| {
                let y = x.compose(m);
                elements.iter().any(|e| e.within(&y, CLOSURE_TOL))
            })
        });
    Ok(EpsilonNet { elements, resolution, finite_group, truncated })
}
