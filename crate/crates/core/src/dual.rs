//! Node multipliers and the sweeps that drive them.
//!
//! Every node `v` carries a multiplier `lambda[v]`. The adjusted length of an
//! edge `e = (u, w)` is `c_e - lambda[u] - lambda[w]`. A node update looks at
//! the adjusted lengths around `v`, picks the values at sorted positions `b`
//! and `b + 1` (1-based), and shifts `lambda[v]` by their midpoint so the pair
//! straddles zero symmetrically. That shift maximizes the Lagrangian bound
//!
//! ```text
//! g(lambda) = b * sum_v lambda[v] + sum_e min(0, c_e - lambda[u] - lambda[w])
//! ```
//!
//! along coordinate `v`. When no node wants to move, at most `b` edges around
//! each node are strictly negative and at most `degree - b` strictly positive,
//! which is what lets [`crate::primal`] read the primal solution off the signs.
//!
//! Two sweep orders are provided. [`jacobi_sweep`] computes every shift from a
//! frozen snapshot and applies them in a second phase (data-parallel, damped);
//! [`gauss_seidel_sweep`] updates in index order in place (sequential, exact
//! coordinate ascent, so `g` never decreases).

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    lambda: Vec<f64>,
    sweeps: usize,
}

impl DualState {
    pub fn zeros(n: usize) -> Self {
        DualState { lambda: vec![0.0; n], sweeps: 0 }
    }

    pub fn from_values(lambda: Vec<f64>) -> Result<Self> {
        if let Some(i) = lambda.iter().position(|l| !l.is_finite()) {
            return Err(Error::arg(format!("multiplier {i} is not finite")));
        }
        Ok(DualState { lambda, sweeps: 0 })
    }

    /// One raw-cost node update from zero: `lambda[v]` is the midpoint of the
    /// `b`-th and `(b+1)`-th smallest incident costs.
    pub fn warm_start(graph: &Graph, b: usize) -> Result<Self> {
        let zero = DualState::zeros(graph.node_count());
        let lambda = (0..graph.node_count())
            .into_par_iter()
            .map(|v| node_update_delta(graph, &zero, v, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(DualState { lambda, sweeps: 0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Number of sweeps applied to this state.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn into_values(self) -> Vec<f64> {
        self.lambda
    }

    /// Shift one multiplier by `delta`.
    pub fn shift(&mut self, v: usize, delta: f64) {
        self.lambda[v] += delta;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    Jacobi,
    GaussSeidel,
}

/// How the per-node shift is computed from the sorted pair `(s_b, s_{b+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateRule {
    /// `(s_b + s_{b+1}) / 2`, the exact coordinate maximizer.
    Midpoint,
    /// `(s_b - s_{b+1}) / 2` taken literally as printed. Experimental: it is
    /// never zero unless the pair coincides, so it does not converge in general.
    LiteralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Initialization {
    Zero,
    /// See [`DualState::warm_start`].
    RawMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Right-hand side of every degree row; 2 for fractional 2-matching.
    pub b: usize,
    /// Damping applied to Jacobi shifts. Gauss-Seidel always uses 1.
    pub eta: f64,
    /// Convergence threshold on `max |shift|`, relative to the mean edge cost.
    pub eps: f64,
    pub max_sweeps: usize,
    pub mode: SweepMode,
    pub rule: UpdateRule,
    pub init: Initialization,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig::jacobi()
    }
}

impl EngineConfig {
    pub fn jacobi() -> Self {
        EngineConfig {
            b: 2,
            eta: 0.5,
            eps: 1e-9,
            max_sweeps: 1_000_000,
            mode: SweepMode::Jacobi,
            rule: UpdateRule::Midpoint,
            init: Initialization::RawMidpoint,
        }
    }

    pub fn gauss_seidel() -> Self {
        EngineConfig { eta: 1.0, mode: SweepMode::GaussSeidel, ..EngineConfig::jacobi() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::arg(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::arg(format!("eps must be positive, got {}", self.eps)));
        }
        if self.b < 1 {
            return Err(Error::arg("b must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub max_abs_delta: f64,
    pub dual_value: f64,
    pub sweep_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub sweeps: usize,
    pub final_max_abs_delta: f64,
    pub dual_value: f64,
    /// Seconds.
    pub wall_time: f64,
}

#[inline]
fn reduced(cost: f64, a: f64, b: f64) -> f64 {
    cost - a - b
}

pub fn adjusted_length(graph: &Graph, state: &DualState, e: usize) -> Result<f64> {
    let edge = graph.edge(e)?;
    Ok(reduced(edge.cost, state.lambda[edge.u], state.lambda[edge.v]))
}

/// Sorted adjusted lengths at 1-based positions `b` and `b + 1` around `v`,
/// read against `lambda`. Keeps only the `b + 1` smallest values.
#[inline]
fn straddle_pair(graph: &Graph, lambda: &[f64], v: usize, b: usize) -> (f64, f64) {
    const STACK: usize = 8;
    let own = lambda[v];
    let values = graph.incident(v).iter().map(|inc| {
        let other = lambda[inc.other];
        if v < inc.other {
            reduced(inc.cost, own, other)
        } else {
            reduced(inc.cost, other, own)
        }
    });
    if b < STACK {
        let keep = b + 1;
        let mut buf = [f64::INFINITY; STACK];
        for x in values {
            if x < buf[keep - 1] {
                let mut i = keep - 1;
                while i > 0 && buf[i - 1] > x {
                    buf[i] = buf[i - 1];
                    i -= 1;
                }
                buf[i] = x;
            }
        }
        (buf[b - 1], buf[b])
    } else {
        let mut all: Vec<f64> = values.collect();
        all.sort_unstable_by(f64::total_cmp);
        (all[b - 1], all[b])
    }
}

#[inline]
fn shift_for(graph: &Graph, lambda: &[f64], v: usize, b: usize, rule: UpdateRule) -> f64 {
    let (lo, hi) = straddle_pair(graph, lambda, v, b);
    match rule {
        UpdateRule::Midpoint => 0.5 * (lo + hi),
        UpdateRule::LiteralDifference => 0.5 * (lo - hi),
    }
}

fn check_degree(graph: &Graph, v: usize, b: usize) -> Result<()> {
    let degree = graph.degree(v);
    if degree <= b {
        return Err(Error::Degree { node: v, degree, b });
    }
    Ok(())
}

fn check_all_degrees(graph: &Graph, state: &DualState, b: usize) -> Result<()> {
    if state.len() != graph.node_count() {
        return Err(Error::arg(format!("dual state has {} entries for {} nodes", state.len(), graph.node_count())));
    }
    match (0..graph.node_count()).find(|&v| graph.degree(v) <= b) {
        Some(v) => check_degree(graph, v, b),
        None => Ok(()),
    }
}

/// Midpoint shift for node `v`: applying `lambda[v] += delta` leaves the
/// sorted incident values at positions `b` and `b + 1` at `-d` and `+d`.
pub fn node_update_delta(graph: &Graph, state: &DualState, v: usize, b: usize) -> Result<f64> {
    if v >= graph.node_count() {
        return Err(Error::Index { index: v, len: graph.node_count() });
    }
    if b < 1 {
        return Err(Error::arg("b must be at least 1"));
    }
    check_degree(graph, v, b)?;
    Ok(shift_for(graph, &state.lambda, v, b, UpdateRule::Midpoint))
}

const SUM_BLOCK: usize = 4096;

/// Fixed-block summation: the partition does not depend on the thread count,
/// so the result is bit-identical for any pool size.
fn block_sum(len: usize, term: impl Fn(usize) -> f64 + Sync) -> f64 {
    let partials: Vec<f64> = (0..len.div_ceil(SUM_BLOCK))
        .into_par_iter()
        .map(|blk| {
            let start = blk * SUM_BLOCK;
            (start..(start + SUM_BLOCK).min(len)).map(&term).sum()
        })
        .collect();
    partials.iter().sum()
}

/// Lagrangian bound with right-hand side `b` on every node.
pub fn dual_objective_with_rhs(graph: &Graph, state: &DualState, b: usize) -> f64 {
    let lambda = &state.lambda;
    let edges = graph.edges();
    let node_part = block_sum(lambda.len(), |v| lambda[v]);
    let edge_part = block_sum(edges.len(), |e| {
        let edge = &edges[e];
        reduced(edge.cost, lambda[edge.u], lambda[edge.v]).min(0.0)
    });
    b as f64 * node_part + edge_part
}

/// `g(lambda) = 2 * sum_v lambda[v] + sum_e min(0, adjusted length)`, a lower
/// bound on every feasible fractional 2-matching.
pub fn dual_objective(graph: &Graph, state: &DualState) -> f64 {
    dual_objective_with_rhs(graph, state, 2)
}

/// Simultaneous update from a frozen snapshot. Phase one computes every shift
/// read-only; phase two writes `lambda[v] += eta * shift[v]`. The result does
/// not depend on the thread count.
pub fn jacobi_sweep(graph: &Graph, state: &mut DualState, config: &EngineConfig) -> Result<SweepStats> {
    config.validate()?;
    check_all_degrees(graph, state, config.b)?;
    let (b, rule, eta) = (config.b, config.rule, config.eta);

    let shifts: Vec<f64> = {
        let snapshot = &state.lambda;
        (0..graph.node_count())
            .into_par_iter()
            .with_min_len(256)
            .map(|v| shift_for(graph, snapshot, v, b, rule))
            .collect()
    };
    state.lambda.par_iter_mut().with_min_len(1024).zip(shifts.par_iter()).for_each(|(l, d)| *l += eta * d);
    let max_abs_delta = shifts.par_iter().map(|d| d.abs()).reduce(|| 0.0, f64::max);

    state.sweeps += 1;
    Ok(SweepStats { max_abs_delta, dual_value: dual_objective_with_rhs(graph, state, b), sweep_index: state.sweeps })
}

/// In-place update in node index order, each shift applied in full.
pub fn gauss_seidel_sweep(graph: &Graph, state: &mut DualState, config: &EngineConfig) -> Result<SweepStats> {
    config.validate()?;
    check_all_degrees(graph, state, config.b)?;
    let mut max_abs_delta: f64 = 0.0;
    for v in 0..graph.node_count() {
        let d = shift_for(graph, &state.lambda, v, config.b, config.rule);
        state.lambda[v] += d;
        max_abs_delta = max_abs_delta.max(d.abs());
    }
    state.sweeps += 1;
    Ok(SweepStats {
        max_abs_delta,
        dual_value: dual_objective_with_rhs(graph, state, config.b),
        sweep_index: state.sweeps,
    })
}

pub fn sweep(graph: &Graph, state: &mut DualState, config: &EngineConfig) -> Result<SweepStats> {
    match config.mode {
        SweepMode::Jacobi => jacobi_sweep(graph, state, config),
        SweepMode::GaussSeidel => gauss_seidel_sweep(graph, state, config),
    }
}

/// Sweep until `max |shift| <= eps * mean edge cost` or `max_sweeps` is hit.
pub fn solve_duals(
    graph: &Graph,
    config: &EngineConfig,
    initial: Option<DualState>,
) -> Result<(DualState, ConvergenceReport)> {
    config.validate()?;
    let start = Instant::now();
    let mut state = match initial {
        Some(s) => s,
        None => match config.init {
            Initialization::Zero => DualState::zeros(graph.node_count()),
            Initialization::RawMidpoint => {
                check_all_degrees(graph, &DualState::zeros(graph.node_count()), config.b)?;
                DualState::warm_start(graph, config.b)?
            }
        },
    };
    check_all_degrees(graph, &state, config.b)?;

    let threshold = config.eps * graph.mean_cost();
    let mut last = f64::INFINITY;
    let mut converged = false;
    let mut done = 0;
    while done < config.max_sweeps {
        let stats = sweep(graph, &mut state, config)?;
        done += 1;
        last = stats.max_abs_delta;
        if last <= threshold {
            converged = true;
            break;
        }
    }
    let report = ConvergenceReport {
        converged,
        sweeps: done,
        final_max_abs_delta: last,
        dual_value: dual_objective_with_rhs(graph, &state, config.b),
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_knn_graph, Edge};
    use crate::instance::{DistanceMode, Instance, Point};

    fn square_graph() -> Graph {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(x, y)| Point::new(x, y)).to_vec();
        let inst = Instance::new("square", pts, DistanceMode::Euc2dExact).unwrap();
        build_knn_graph(&inst, 3).unwrap()
    }

    const HUB: f64 = 10.0;

    /// Star whose hub (node 0) sees the given adjusted lengths under the
    /// returned state: costs are shifted up by `HUB` and the hub carries `HUB`.
    fn star(adjusted: &[f64]) -> (Graph, DualState) {
        let edges = adjusted.iter().enumerate().map(|(i, &a)| Edge { u: 0, v: i + 1, cost: a + HUB });
        let g = Graph::from_edges(adjusted.len() + 1, edges).unwrap();
        let mut lambda = vec![0.0; adjusted.len() + 1];
        lambda[0] = HUB;
        (g, DualState::from_values(lambda).unwrap())
    }

    #[test]
    fn adjusted_length_arithmetic() {
        let g = Graph::from_edges(2, [Edge { u: 0, v: 1, cost: 10.0 }]).unwrap();
        let s = DualState::from_values(vec![3.0, 4.0]).unwrap();
        assert_eq!(adjusted_length(&g, &s, 0).unwrap(), 3.0);
        assert_eq!(adjusted_length(&g, &DualState::zeros(2), 0).unwrap(), 10.0);
        assert!(matches!(adjusted_length(&g, &s, 1), Err(Error::Index { .. })));
    }

    #[test]
    fn shifting_a_multiplier_moves_only_its_edges() {
        let g = square_graph();
        let mut s = DualState::from_values(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let before: Vec<f64> = (0..6).map(|e| adjusted_length(&g, &s, e).unwrap()).collect();
        s.shift(2, 0.25);
        for (e, edge) in g.edges().iter().enumerate() {
            let after = adjusted_length(&g, &s, e).unwrap();
            let expect = if edge.u == 2 || edge.v == 2 { before[e] - 0.25 } else { before[e] };
            assert!((after - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn midpoint_delta_examples() {
        let (g, s) = star(&[-2.0, -1.0, 3.0, 5.0]);
        assert_eq!(node_update_delta(&g, &s, 0, 2).unwrap(), 1.0);

        let (g2, s2) = star(&[4.0, -1.0, 1.0, -3.0]);
        assert_eq!(node_update_delta(&g2, &s2, 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn applying_the_delta_centers_the_pair() {
        let (g, mut s) = star(&[-2.0, -1.0, 3.0, 5.0]);
        let d = node_update_delta(&g, &s, 0, 2).unwrap();
        s.shift(0, d);
        let mut vals: Vec<f64> = (0..4).map(|e| adjusted_length(&g, &s, e).unwrap()).collect();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, vec![-3.0, -2.0, 2.0, 4.0]);
    }

    #[test]
    fn low_degree_is_rejected() {
        let (g, s) = star(&[1.0, 2.0]);
        assert!(matches!(node_update_delta(&g, &s, 0, 2), Err(Error::Degree { degree: 2, .. })));
        let g = square_graph();
        assert!(matches!(node_update_delta(&g, &DualState::zeros(4), 7, 2), Err(Error::Index { .. })));
    }

    #[test]
    fn large_b_uses_the_sorting_path() {
        let costs: Vec<f64> = (0..12).map(|i| ((i * 7) % 12) as f64).collect();
        let (g, s) = star(&costs);
        // Sorted values are 0..=11, so positions 9 and 10 hold 8 and 9.
        assert_eq!(node_update_delta(&g, &s, 0, 9).unwrap(), 8.5);
    }

    #[test]
    fn dual_objective_examples() {
        let g = square_graph();
        assert_eq!(dual_objective(&g, &DualState::zeros(4)), 0.0);
        let half = DualState::from_values(vec![0.5; 4]).unwrap();
        assert!((dual_objective(&g, &half) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn config_guards() {
        let g = square_graph();
        let mut s = DualState::zeros(4);
        let bad = EngineConfig { eta: 0.0, ..EngineConfig::jacobi() };
        assert!(matches!(jacobi_sweep(&g, &mut s, &bad), Err(Error::Argument(_))));
        let bad = EngineConfig { eps: 0.0, ..EngineConfig::jacobi() };
        assert!(matches!(solve_duals(&g, &bad, None), Err(Error::Argument(_))));
        let bad = EngineConfig { eta: 1.5, ..EngineConfig::jacobi() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fixed_point_is_left_alone() {
        let g = square_graph();
        let mut s = DualState::from_values(vec![0.5; 4]).unwrap();
        // Each node sees {0, 0, sqrt2-1}: positions 2 and 3 are 0 and sqrt2-1,
        // so this is not yet a fixed point. Converge first, then check.
        let cfg = EngineConfig::gauss_seidel();
        for _ in 0..200 {
            gauss_seidel_sweep(&g, &mut s, &cfg).unwrap();
        }
        let frozen = s.clone();
        let stats = gauss_seidel_sweep(&g, &mut s, &cfg).unwrap();
        assert!(stats.max_abs_delta < 1e-12);
        for (a, b) in frozen.values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_fixed_point_on_the_square() {
        // With lambda = (1 + sqrt2) / 4 every node sees sides at (1 - sqrt2) / 2
        // and the diagonal at (sqrt2 - 1) / 2: already centered.
        let g = square_graph();
        let a = (1.0 + 2f64.sqrt()) / 4.0;
        let mut s = DualState::from_values(vec![a; 4]).unwrap();
        let stats = jacobi_sweep(&g, &mut s, &EngineConfig::jacobi()).unwrap();
        assert!(stats.max_abs_delta < 1e-15);
        assert!(s.values().iter().all(|&l| (l - a).abs() < 1e-15));
        assert!((stats.dual_value - 4.0).abs() < 1e-12);
        assert_eq!(stats.sweep_index, 1);
    }

    #[test]
    fn gauss_seidel_raises_the_bound_on_the_square() {
        let g = square_graph();
        let mut s = DualState::zeros(4);
        let before = dual_objective(&g, &s);
        let cfg = EngineConfig { init: Initialization::Zero, ..EngineConfig::gauss_seidel() };
        let stats = gauss_seidel_sweep(&g, &mut s, &cfg).unwrap();
        assert!(stats.dual_value > before);
        assert_eq!(stats.dual_value, dual_objective(&g, &s));
    }

    #[test]
    fn square_converges_to_four() {
        let g = square_graph();
        for cfg in [EngineConfig::jacobi(), EngineConfig::gauss_seidel()] {
            let (_, report) = solve_duals(&g, &cfg, None).unwrap();
            assert!(report.converged, "{cfg:?}");
            assert!((report.dual_value - 4.0).abs() < 1e-6, "{report:?}");
            assert!(report.final_max_abs_delta <= cfg.eps * g.mean_cost());
        }
    }

    #[test]
    fn zero_sweeps_returns_the_initial_state() {
        let g = square_graph();
        let cfg = EngineConfig { max_sweeps: 0, ..EngineConfig::jacobi() };
        let init = DualState::from_values(vec![0.25; 4]).unwrap();
        let (s, report) = solve_duals(&g, &cfg, Some(init.clone())).unwrap();
        assert_eq!(s, init);
        assert!(!report.converged);
        assert_eq!(report.sweeps, 0);
    }

    #[test]
    fn literal_rule_is_selectable() {
        let (g, s) = star(&[-2.0, -1.0, 3.0, 5.0]);
        assert_eq!(shift_for(&g, s.values(), 0, 2, UpdateRule::LiteralDifference), -2.0);
    }
}
