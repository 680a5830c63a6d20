//! Weighted undirected graphs and the symmetrized k-nearest-neighbor builder.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
}

/// One slot of a node's incidence list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incidence {
    pub edge: usize,
    pub other: usize,
    pub cost: f64,
}

/// Immutable graph with edges stored as `u < v` and a CSR incidence index.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    incidence: Vec<Incidence>,
}

impl Graph {
    /// Build a graph from an edge list. Endpoints are normalized to `u < v`;
    /// self-loops and repeated pairs are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut list = Vec::new();
        let mut seen = HashSet::new();
        for (id, e) in edges.into_iter().enumerate() {
            for index in [e.u, e.v] {
                if index >= n {
                    return Err(Error::Index { index, len: n });
                }
            }
            if e.u == e.v {
                return Err(Error::Structure(format!("edge {id} is a self-loop at node {}", e.u)));
            }
            if !(e.cost.is_finite() && e.cost >= 0.0) {
                return Err(Error::Structure(format!("edge {id} has invalid cost {}", e.cost)));
            }
            let (u, v) = if e.u < e.v { (e.u, e.v) } else { (e.v, e.u) };
            if !seen.insert((u, v)) {
                return Err(Error::Structure(format!("edge ({u}, {v}) appears twice")));
            }
            list.push(Edge { u, v, cost: e.cost });
        }
        Ok(Self::assemble(n, list))
    }

    fn assemble(n: usize, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut incidence = vec![Incidence { edge: 0, other: 0, cost: 0.0 }; offsets[n]];
        for (id, e) in edges.iter().enumerate() {
            incidence[fill[e.u]] = Incidence { edge: id, other: e.v, cost: e.cost };
            fill[e.u] += 1;
            incidence[fill[e.v]] = Incidence { edge: id, other: e.u, cost: e.cost };
            fill[e.v] += 1;
        }
        Graph { n, edges, offsets, incidence }
    }

    /// Same topology with new per-edge costs.
    pub fn with_costs(&self, costs: &[f64]) -> Result<Self> {
        if costs.len() != self.edges.len() {
            return Err(Error::arg(format!("expected {} costs, got {}", self.edges.len(), costs.len())));
        }
        if let Some(id) = costs.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Structure(format!("edge {id} has invalid cost {}", costs[id])));
        }
        let edges = self.edges.iter().zip(costs).map(|(e, &cost)| Edge { cost, ..*e }).collect();
        Ok(Self::assemble(self.n, edges))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Result<&Edge> {
        self.edges.get(id).ok_or(Error::Index { index: id, len: self.edges.len() })
    }

    #[inline]
    pub fn incident(&self, v: usize) -> &[Incidence] {
        &self.incidence[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn mean_cost(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        self.edges.iter().map(|e| e.cost).sum::<f64>() / self.edges.len() as f64
    }

    pub fn costs(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.cost).collect()
    }

    /// Debug dump, one `u v cost` line per edge.
    pub fn write_edge_list(&self, mut out: impl Write) -> Result<()> {
        for e in &self.edges {
            writeln!(out, "{} {} {:?}", e.u, e.v, e.cost)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphReport {
    pub min_degree: usize,
    pub max_degree: usize,
    pub edge_count: usize,
}

/// Check the structural requirements of the dual engine: simple graph,
/// consistent incidence, and every node of degree at least 3.
pub fn validate_graph(graph: &Graph) -> Result<GraphReport> {
    let mut seen = HashSet::with_capacity(graph.edge_count());
    for (id, e) in graph.edges.iter().enumerate() {
        if e.u == e.v {
            return Err(Error::Structure(format!("edge {id} is a self-loop")));
        }
        if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
            return Err(Error::Structure(format!("edge ({}, {}) appears twice", e.u, e.v)));
        }
    }
    for v in 0..graph.n {
        for inc in graph.incident(v) {
            let e = &graph.edges[inc.edge];
            let ok = (e.u == v && e.v == inc.other) || (e.v == v && e.u == inc.other);
            if !ok || e.cost != inc.cost {
                return Err(Error::Structure(format!("incidence of node {v} disagrees with edge {}", inc.edge)));
            }
        }
    }
    let (mut min_degree, mut max_degree) = (usize::MAX, 0);
    for v in 0..graph.n {
        let d = graph.degree(v);
        if d < 3 {
            return Err(Error::MinDegree { node: v, degree: d });
        }
        min_degree = min_degree.min(d);
        max_degree = max_degree.max(d);
    }
    if graph.n == 0 {
        min_degree = 0;
    }
    Ok(GraphReport { min_degree, max_degree, edge_count: graph.edge_count() })
}

fn check_knn_args(instance: &Instance, k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::arg(format!("k must be at least 3, got {k}")));
    }
    if instance.len() < 4 {
        return Err(Error::arg(format!("need at least 4 nodes, got {}", instance.len())));
    }
    Ok(())
}

fn complete_graph(instance: &Instance) -> Graph {
    let n = instance.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            edges.push(Edge { u, v, cost: instance.dist(u, v) });
        }
    }
    Graph::assemble(n, edges)
}

fn symmetrize(instance: &Instance, neighbors: Vec<Vec<usize>>) -> Graph {
    let mut pairs: Vec<(usize, usize)> = neighbors
        .into_iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.into_iter().map(move |j| (i.min(j), i.max(j))))
        .collect();
    pairs.par_sort_unstable();
    pairs.dedup();
    let edges = pairs.into_iter().map(|(u, v)| Edge { u, v, cost: instance.dist(u, v) }).collect();
    Graph::assemble(instance.len(), edges)
}

/// Ordering key for neighbor selection: instance distance, then node index.
#[inline]
fn key_less(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Keeps the `k` smallest keys seen, sorted ascending.
struct NearestSet {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl NearestSet {
    fn new(k: usize) -> Self {
        NearestSet { k, items: Vec::with_capacity(k + 1) }
    }

    fn offer(&mut self, item: (f64, usize)) {
        if self.items.len() == self.k {
            if !key_less(item, self.items[self.k - 1]) {
                return;
            }
            self.items.pop();
        }
        let pos = self.items.partition_point(|&x| key_less(x, item));
        self.items.insert(pos, item);
    }

    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst(&self) -> f64 {
        self.items[self.k - 1].0
    }
}

/// Quadratic-scan k-NN graph. Same output as [`build_knn_graph`].
pub fn build_knn_graph_bruteforce(instance: &Instance, k: usize) -> Result<Graph> {
    check_knn_args(instance, k)?;
    let n = instance.len();
    if k >= n - 1 {
        return Ok(complete_graph(instance));
    }
    let neighbors = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = NearestSet::new(k);
            for j in (0..n).filter(|&j| j != i) {
                best.offer((instance.dist(i, j), j));
            }
            best.items.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(symmetrize(instance, neighbors))
}

struct Grid {
    min_x: f64,
    min_y: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl Grid {
    fn new(instance: &Instance) -> Self {
        let pts = instance.points();
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let (w, h) = ((max_x - min_x).max(0.0), (max_y - min_y).max(0.0));
        let n = pts.len() as f64;
        // About two points per cell on average; never more cells than ~3n.
        let mut cell = (2.0 * w * h / n).sqrt().max(w.max(h) / n);
        if !(cell > 0.0 && cell.is_finite()) {
            cell = 1.0;
        }
        let cols = (w / cell).floor() as usize + 1;
        let rows = (h / cell).floor() as usize + 1;
        let cell = cell.max(w / cols as f64).max(h / rows as f64);

        let mut grid = Grid { min_x, min_y, cell, cols, rows, starts: vec![0; cols * rows + 1], members: Vec::new() };
        let cells: Vec<usize> = pts.iter().map(|p| grid.cell_of(p.x, p.y)).collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for c in 0..cols * rows {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        grid.members = vec![0; pts.len()];
        for (i, &c) in cells.iter().enumerate() {
            grid.members[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn coords(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = (((x - self.min_x) / self.cell) as usize).min(self.cols - 1);
        let cy = (((y - self.min_y) / self.cell) as usize).min(self.rows - 1);
        (cx, cy)
    }

    fn cell_of(&self, x: f64, y: f64) -> usize {
        let (cx, cy) = self.coords(x, y);
        cy * self.cols + cx
    }

    fn members(&self, cx: usize, cy: usize) -> &[usize] {
        let c = cy * self.cols + cx;
        &self.members[self.starts[c]..self.starts[c + 1]]
    }

    /// Visit every cell at Chebyshev distance exactly `r` from `(cx, cy)`.
    fn for_ring(&self, cx: usize, cy: usize, r: usize, mut f: impl FnMut(usize, usize)) {
        let (cx, cy, r) = (cx as isize, cy as isize, r as isize);
        let inside = |x: isize, y: isize| x >= 0 && y >= 0 && (x as usize) < self.cols && (y as usize) < self.rows;
        if r == 0 {
            f(cx as usize, cy as usize);
            return;
        }
        for x in cx - r..=cx + r {
            for y in [cy - r, cy + r] {
                if inside(x, y) {
                    f(x as usize, y as usize);
                }
            }
        }
        for y in cy - r + 1..=cy + r - 1 {
            for x in [cx - r, cx + r] {
                if inside(x, y) {
                    f(x as usize, y as usize);
                }
            }
        }
    }
}

/// Symmetrized k-nearest-neighbor graph: edge `(i, j)` is present when either
/// endpoint is among the other's `k` nearest (ties go to the smaller index).
/// Uses a uniform grid with ring expansion; `k >= n - 1` gives the complete graph.
pub fn build_knn_graph(instance: &Instance, k: usize) -> Result<Graph> {
    check_knn_args(instance, k)?;
    let n = instance.len();
    if k >= n - 1 {
        return Ok(complete_graph(instance));
    }
    let grid = Grid::new(instance);
    let mode = instance.mode();
    let max_ring = grid.cols.max(grid.rows);
    let neighbors = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = instance.points()[i];
            let (cx, cy) = grid.coords(p.x, p.y);
            let mut best = NearestSet::new(k);
            for r in 0..=max_ring {
                grid.for_ring(cx, cy, r, |x, y| {
                    for &j in grid.members(x, y) {
                        if j != i {
                            best.offer((instance.dist(i, j), j));
                        }
                    }
                });
                // Unvisited points are at Euclidean distance >= r * cell.
                if best.full() && best.worst() < mode.apply(r as f64 * grid.cell * (1.0 - 1e-9)) {
                    break;
                }
            }
            best.items.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(symmetrize(instance, neighbors))
}
