//! Reading the primal fractional 2-matching off a converged dual state.
//!
//! Edges with clearly negative adjusted length are taken at 1, clearly
//! positive ones at 0. Whatever is left sits in the zero band; those edges
//! form small components that are completed by exhaustive search so that
//! every node ends up with incident sum exactly 2.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{dual_objective, DualState};
use crate::error::{DegenerateReason, Error, Result};
use crate::graph::Graph;

/// Largest zero-band component searched exhaustively.
pub const COMPONENT_EDGE_LIMIT: usize = 20;

const RHS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeSign {
    Neg,
    Zero,
    Pos,
}

pub fn classify_edges(graph: &Graph, state: &DualState, tol: f64) -> Result<Vec<EdgeSign>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::arg(format!("classification tolerance must be positive, got {tol}")));
    }
    let lambda = state.values();
    Ok(graph
        .edges()
        .par_iter()
        .map(|e| {
            let r = e.cost - lambda[e.u] - lambda[e.v];
            if r < -tol {
                EdgeSign::Neg
            } else if r > tol {
                EdgeSign::Pos
            } else {
                EdgeSign::Zero
            }
        })
        .collect())
}

/// Per-edge values with their objective. Values produced by extraction are
/// exactly 0, 0.5 or 1; arbitrary values are accepted so that
/// [`verify_solution`] can report them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalSolution {
    values: Vec<f64>,
    objective: f64,
}

impl PrimalSolution {
    pub fn from_values(graph: &Graph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.edge_count() {
            return Err(Error::arg(format!("expected {} edge values, got {}", graph.edge_count(), values.len())));
        }
        let objective = graph.edges().iter().zip(&values).map(|(e, x)| e.cost * x).sum();
        Ok(PrimalSolution { values, objective })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Same values priced with another graph's costs (same topology).
    pub fn repriced(&self, graph: &Graph) -> Result<Self> {
        PrimalSolution::from_values(graph, self.values.clone())
    }

    /// `(edge id, value)` for every nonzero edge.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().copied().enumerate().filter(|&(_, x)| x != 0.0)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Exhaustive search over one zero-band component, values in half units.
struct ComponentSearch {
    ends: Vec<(usize, usize)>,
    costs: Vec<f64>,
    /// Edge position after which each local node has no more edges.
    last: Vec<usize>,
    need: Vec<u32>,
    sum: Vec<u32>,
    current: Vec<u32>,
    best: Option<(f64, Vec<u32>)>,
}

impl ComponentSearch {
    fn new(graph: &Graph, edge_ids: &[usize], need_of: &[u32]) -> Self {
        let mut local = std::collections::HashMap::new();
        let mut nodes = Vec::new();
        let mut id = |v: usize, nodes: &mut Vec<usize>| {
            *local.entry(v).or_insert_with(|| {
                nodes.push(v);
                nodes.len() - 1
            })
        };
        let ends: Vec<(usize, usize)> = edge_ids
            .iter()
            .map(|&e| {
                let edge = &graph.edges()[e];
                (id(edge.u, &mut nodes), id(edge.v, &mut nodes))
            })
            .collect();
        let mut last = vec![0; nodes.len()];
        for (pos, &(a, b)) in ends.iter().enumerate() {
            last[a] = pos;
            last[b] = pos;
        }
        ComponentSearch {
            costs: edge_ids.iter().map(|&e| graph.edges()[e].cost).collect(),
            need: nodes.iter().map(|&v| need_of[v]).collect(),
            sum: vec![0; nodes.len()],
            current: vec![0; ends.len()],
            ends,
            last,
            best: None,
        }
    }

    fn run(mut self) -> Option<Vec<u32>> {
        self.descend(0, 0.0);
        self.best.map(|(_, v)| v)
    }

    fn descend(&mut self, pos: usize, cost: f64) {
        if let Some((best, _)) = &self.best {
            if cost >= *best {
                return;
            }
        }
        if pos == self.ends.len() {
            self.best = Some((cost, self.current.clone()));
            return;
        }
        let (a, b) = self.ends[pos];
        for halves in 0..=2u32 {
            let (sa, sb) = (self.sum[a] + halves, self.sum[b] + halves);
            if sa > self.need[a] || sb > self.need[b] {
                break;
            }
            if (self.last[a] == pos && sa != self.need[a]) || (self.last[b] == pos && sb != self.need[b]) {
                continue;
            }
            self.sum[a] = sa;
            self.sum[b] = sb;
            self.current[pos] = halves;
            self.descend(pos + 1, cost + self.costs[pos] * halves as f64);
            self.sum[a] -= halves;
            self.sum[b] -= halves;
        }
        self.current[pos] = 0;
    }
}

/// Order component edges breadth-first so nodes complete early in the search.
fn bfs_order(graph: &Graph, edge_ids: &[usize], is_member: &dyn Fn(usize) -> bool) -> Vec<usize> {
    let start = graph.edges()[edge_ids[0]].u;
    let mut order = Vec::with_capacity(edge_ids.len());
    let mut seen_edge = std::collections::HashSet::new();
    let mut seen_node = std::collections::HashSet::from([start]);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for inc in graph.incident(v) {
            if is_member(inc.edge) && seen_edge.insert(inc.edge) {
                order.push(inc.edge);
                if seen_node.insert(inc.other) {
                    queue.push_back(inc.other);
                }
            }
        }
    }
    order
}

/// Extract a {0, 1/2, 1}-valued solution using zero band `tol` (absolute).
pub fn extract_primal(graph: &Graph, state: &DualState, tol: f64) -> Result<PrimalSolution> {
    extract_with_limit(graph, state, tol, COMPONENT_EDGE_LIMIT)
}

pub fn extract_with_limit(graph: &Graph, state: &DualState, tol: f64, limit: usize) -> Result<PrimalSolution> {
    let signs = classify_edges(graph, state, tol)?;
    let n = graph.node_count();
    let degenerate = |reason| Err(Error::DegenerateExtraction(reason));

    let mut neg = vec![0u32; n];
    for (e, s) in graph.edges().iter().zip(&signs) {
        if *s == EdgeSign::Neg {
            neg[e.u] += 1;
            neg[e.v] += 1;
        }
    }
    if let Some(node) = (0..n).find(|&v| neg[v] > RHS) {
        return degenerate(DegenerateReason::ExcessNegative { node, count: neg[node] as usize });
    }
    let need: Vec<u32> = neg.iter().map(|&k| 2 * (RHS - k)).collect();

    let mut uf = UnionFind::new(n);
    let mut touches_zero = vec![false; n];
    for (e, s) in graph.edges().iter().zip(&signs) {
        if *s == EdgeSign::Zero {
            uf.union(e.u, e.v);
            touches_zero[e.u] = true;
            touches_zero[e.v] = true;
        }
    }
    if let Some(node) = (0..n).find(|&v| !touches_zero[v] && need[v] != 0) {
        return degenerate(DegenerateReason::NoFeasibleAssignment { node });
    }

    let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (id, (e, s)) in graph.edges().iter().zip(&signs).enumerate() {
        if *s == EdgeSign::Zero {
            by_root.entry(uf.find(e.u)).or_default().push(id);
        }
    }
    let components: Vec<(usize, Vec<usize>)> = by_root.into_iter().collect();
    if let Some((_, c)) = components.iter().find(|(_, c)| c.len() > limit) {
        return degenerate(DegenerateReason::ComponentTooLarge { edges: c.len(), limit });
    }

    let member = {
        let mut m = vec![false; graph.edge_count()];
        for (_, c) in &components {
            for &e in c {
                m[e] = true;
            }
        }
        m
    };
    let solved: Vec<std::result::Result<Vec<(usize, u32)>, usize>> = components
        .par_iter()
        .map(|(root, ids)| {
            let order = bfs_order(graph, ids, &|e| member[e]);
            match ComponentSearch::new(graph, &order, &need).run() {
                Some(halves) => Ok(order.into_iter().zip(halves).collect()),
                None => Err(*root),
            }
        })
        .collect();

    let mut values: Vec<f64> = signs.iter().map(|s| if *s == EdgeSign::Neg { 1.0 } else { 0.0 }).collect();
    for result in solved {
        match result {
            Ok(assignment) => {
                for (e, halves) in assignment {
                    values[e] = halves as f64 * 0.5;
                }
            }
            Err(node) => return degenerate(DegenerateReason::NoFeasibleAssignment { node }),
        }
    }
    PrimalSolution::from_values(graph, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub feasible: bool,
    /// `(node, incident value sum)` for every node whose sum is not exactly 2.
    pub violated_nodes: Vec<(usize, f64)>,
    pub duality_gap: f64,
    /// Edges whose value is not exactly 0, 0.5 or 1.
    pub value_violations: Vec<usize>,
    pub objective: f64,
    pub dual_value: f64,
}

impl VerificationReport {
    /// Feasible and `gap <= rel_tol * max(1, |objective|)`.
    pub fn certifies(&self, rel_tol: f64) -> bool {
        self.feasible && self.duality_gap <= rel_tol * self.objective.abs().max(1.0)
    }
}

pub fn verify_solution(graph: &Graph, solution: &PrimalSolution, state: &DualState) -> VerificationReport {
    let values = solution.values();
    let value_violations: Vec<usize> =
        values.par_iter().enumerate().filter(|(_, &x)| !(x == 0.0 || x == 0.5 || x == 1.0)).map(|(e, _)| e).collect();
    let violated_nodes: Vec<(usize, f64)> = (0..graph.node_count())
        .into_par_iter()
        .filter_map(|v| {
            let sum: f64 = graph.incident(v).iter().map(|inc| values[inc.edge]).sum();
            (sum != RHS as f64).then_some((v, sum))
        })
        .collect();
    let dual_value = dual_objective(graph, state);
    VerificationReport {
        feasible: violated_nodes.is_empty() && value_violations.is_empty(),
        violated_nodes,
        duality_gap: solution.objective() - dual_value,
        value_violations,
        objective: solution.objective(),
        dual_value,
    }
}

/// Solution file: one `u v value` line per nonzero edge, then
/// `objective <value> gap <value>`.
pub fn write_solution(graph: &Graph, solution: &PrimalSolution, gap: f64, mut out: impl Write) -> Result<()> {
    for (e, x) in solution.support() {
        let edge = &graph.edges()[e];
        let value = if x == 0.5 { "0.5".to_string() } else { format!("{x}") };
        writeln!(out, "{} {} {}", edge.u, edge.v, value)?;
    }
    writeln!(out, "objective {:?} gap {:?}", solution.objective(), gap)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub edges: Vec<(usize, usize, f64)>,
    pub objective: f64,
    pub gap: f64,
}

pub fn read_solution(input: impl BufRead) -> Result<SolutionFile> {
    let mut edges = Vec::new();
    let mut trailer = None;
    for (no, line) in input.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::parse(Some(no + 1), format!("bad solution line '{line}'"));
        match fields.as_slice() {
            [] => continue,
            ["objective", obj, "gap", gap] => {
                trailer = Some((obj.parse().map_err(|_| bad())?, gap.parse().map_err(|_| bad())?));
            }
            [u, v, x] if trailer.is_none() => {
                edges.push((
                    u.parse().map_err(|_| bad())?,
                    v.parse().map_err(|_| bad())?,
                    x.parse().map_err(|_| bad())?,
                ));
            }
            _ => return Err(bad()),
        }
    }
    let (objective, gap) = trailer.ok_or_else(|| Error::parse(None, "missing objective trailer"))?;
    Ok(SolutionFile { edges, objective, gap })
}
