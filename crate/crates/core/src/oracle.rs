//! Exact fractional 2-matching by enumeration, for small graphs.
//!
//! Optimal fractional 2-matchings are half-integral, so it suffices to try
//! every edge at 0, 1/2 and 1. The search keeps running degree sums (in half
//! units), pins a node to exactly 2 once its last edge is decided, and cuts
//! branches whose partial cost plus a per-node lower bound cannot beat the
//! incumbent. It shares no code with the dual engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::primal::PrimalSolution;

/// Default edge cap. Covers the complete graph on 10 nodes.
pub const ORACLE_EDGE_LIMIT: usize = 45;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub optimum: f64,
    pub solution: PrimalSolution,
    /// Complete feasible assignments reached by the search.
    pub enumerated: u64,
}

/// Which per-edge values the enumeration may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueGrid {
    /// {0, 1/2, 1}: the fractional relaxation.
    Halves,
    /// {0, 1}: integral 2-matchings.
    Integral,
}

impl ValueGrid {
    fn steps(self) -> &'static [u32] {
        match self {
            ValueGrid::Halves => &[2, 1, 0],
            ValueGrid::Integral => &[2, 0],
        }
    }
}

pub fn brute_force_f2m(graph: &Graph) -> Result<OracleResult> {
    brute_force(graph, ValueGrid::Halves, ORACLE_EDGE_LIMIT)
}

pub fn brute_force(graph: &Graph, grid: ValueGrid, limit: usize) -> Result<OracleResult> {
    let m = graph.edge_count();
    if m > limit {
        return Err(Error::TooLarge { edges: m, limit });
    }
    let n = graph.node_count();

    // Descending cost order.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| graph.edges()[b].cost.total_cmp(&graph.edges()[a].cost).then(a.cmp(&b)));

    let ends: Vec<(usize, usize)> = order.iter().map(|&e| (graph.edges()[e].u, graph.edges()[e].v)).collect();
    let costs: Vec<f64> = order.iter().map(|&e| graph.edges()[e].cost).collect();

    let mut last = vec![usize::MAX; n];
    // suffix_min[v][p]: cheapest edge at v among positions >= p.
    let mut suffix_min = vec![vec![f64::INFINITY; m + 1]; n];
    for (pos, &(a, b)) in ends.iter().enumerate() {
        last[a] = pos;
        last[b] = pos;
    }
    for (v, row) in suffix_min.iter_mut().enumerate() {
        for pos in (0..m).rev() {
            let (a, b) = ends[pos];
            let here = if a == v || b == v { costs[pos] } else { f64::INFINITY };
            row[pos] = row[pos + 1].min(here);
        }
    }
    if last.contains(&usize::MAX) {
        return Err(Error::Infeasible);
    }

    let mut search = Search {
        ends: &ends,
        costs: &costs,
        last: &last,
        suffix_min: &suffix_min,
        steps: grid.steps(),
        sum: vec![0; n],
        current: vec![0; m],
        best_cost: f64::INFINITY,
        best: None,
        enumerated: 0,
    };
    search.descend(0, 0.0);

    let halves = search.best.ok_or(Error::Infeasible)?;
    let mut values = vec![0.0; m];
    for (pos, &e) in order.iter().enumerate() {
        values[e] = halves[pos] as f64 * 0.5;
    }
    let solution = PrimalSolution::from_values(graph, values)?;
    Ok(OracleResult { optimum: solution.objective(), solution, enumerated: search.enumerated })
}

struct Search<'a> {
    ends: &'a [(usize, usize)],
    costs: &'a [f64],
    last: &'a [usize],
    suffix_min: &'a [Vec<f64>],
    steps: &'static [u32],
    sum: Vec<u32>,
    current: Vec<u32>,
    best_cost: f64,
    best: Option<Vec<u32>>,
    enumerated: u64,
}

const TARGET: u32 = 4;

impl Search<'_> {
    /// Every node still short of 2 must draw the rest from its remaining
    /// edges; each edge serves two nodes, hence the quarter.
    fn bound(&self, pos: usize) -> f64 {
        let mut total = 0.0;
        for (v, &s) in self.sum.iter().enumerate() {
            if s < TARGET {
                total += (TARGET - s) as f64 * self.suffix_min[v][pos];
            }
        }
        total * 0.25
    }

    fn descend(&mut self, pos: usize, cost: f64) {
        if pos == self.ends.len() {
            self.enumerated += 1;
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best = Some(self.current.clone());
            }
            return;
        }
        let lower = cost + self.bound(pos);
        if !lower.is_finite() || lower >= self.best_cost * (1.0 + 1e-12) + 1e-12 {
            return;
        }
        let (a, b) = self.ends[pos];
        for &h in self.steps {
            let (sa, sb) = (self.sum[a] + h, self.sum[b] + h);
            if sa > TARGET || sb > TARGET {
                continue;
            }
            if (self.last[a] == pos && sa != TARGET) || (self.last[b] == pos && sb != TARGET) {
                continue;
            }
            self.sum[a] = sa;
            self.sum[b] = sb;
            self.current[pos] = h;
            self.descend(pos + 1, cost + self.costs[pos] * h as f64 * 0.5);
            self.sum[a] -= h;
            self.sum[b] -= h;
        }
        self.current[pos] = 0;
    }
}
