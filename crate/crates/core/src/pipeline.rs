//! End-to-end solve: graph, duals, extraction, certification, and the
//! jitter-and-restart loop for degenerate cases.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dual::{solve_duals, ConvergenceReport, DualState, EngineConfig};
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, validate_graph, Graph};
use crate::instance::Instance;
use crate::primal::{extract_primal, verify_solution, PrimalSolution, VerificationReport};
use crate::rng::UniformStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Neighbors per node in the k-NN graph.
    pub k: usize,
    pub engine: EngineConfig,
    /// Zero-band half-width, relative to the mean edge cost.
    pub tol: f64,
    pub max_restarts: usize,
    /// Upper end of the per-edge cost jitter, relative to the mean edge cost.
    pub perturb_scale: f64,
    pub seed: u64,
    /// Certification threshold: `gap <= gap_tol * max(1, |objective|)`.
    pub gap_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 10,
            engine: EngineConfig::jacobi(),
            tol: 1e-7,
            max_restarts: 5,
            perturb_scale: 1e-7,
            seed: 0,
            gap_tol: 1e-6,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.engine.validate()?;
        if self.engine.b != 2 {
            return Err(Error::arg("fractional 2-matching needs b = 2"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::arg("tol must be positive"));
        }
        if !(self.perturb_scale >= 0.0 && self.perturb_scale.is_finite()) {
            return Err(Error::arg("perturb_scale must be non-negative"));
        }
        if self.gap_tol.is_nan() || self.gap_tol < 0.0 {
            return Err(Error::arg("gap_tol must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub graph: Graph,
    pub solution: PrimalSolution,
    pub verification: VerificationReport,
    pub convergence: ConvergenceReport,
    pub duals: DualState,
    pub restarts: usize,
    /// Sweeps summed over every attempt.
    pub total_sweeps: usize,
    /// Seconds for the whole solve, graph construction included.
    pub seconds: f64,
}

/// Costs plus independent uniform jitter in `[0, scale * mean cost)`. A pure
/// function of `(graph, scale, seed, restart)`.
pub fn perturbed_costs(graph: &Graph, scale: f64, seed: u64, restart: u64) -> Vec<f64> {
    let width = scale * graph.mean_cost();
    let mut stream = UniformStream::new(seed, restart);
    graph.edges().iter().map(|e| e.cost + width * stream.next_unit()).collect()
}

pub fn full_solve(instance: &Instance, config: &RunConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let start = Instant::now();
    let graph = build_knn_graph(instance, config.k)?;
    let mut outcome = solve_graph(graph, config)?;
    outcome.seconds = start.elapsed().as_secs_f64();
    Ok(outcome)
}

/// Solve a prebuilt graph. Attempt 0 uses the true costs; attempt `r >= 1`
/// re-solves on jittered costs, warm-started from the previous duals. The
/// returned solution, objective and gap are always measured on the true costs.
pub fn solve_graph(graph: Graph, config: &RunConfig) -> Result<SolveOutcome> {
    config.validate()?;
    validate_graph(&graph)?;
    let start = Instant::now();
    let scale = graph.mean_cost();
    let tol = (config.tol * scale).max(f64::MIN_POSITIVE);

    let mut duals: Option<DualState> = None;
    let mut total_sweeps = 0;
    let mut last_failure = String::new();

    for attempt in 0..=config.max_restarts {
        let working = if attempt == 0 {
            None
        } else {
            let costs = perturbed_costs(&graph, config.perturb_scale, config.seed, attempt as u64);
            Some(graph.with_costs(&costs)?)
        };
        let target = working.as_ref().unwrap_or(&graph);
        let (state, convergence) = solve_duals(target, &config.engine, duals.take())?;
        total_sweeps += convergence.sweeps;

        match extract_primal(target, &state, tol) {
            Ok(found) => {
                let solution = found.repriced(&graph)?;
                let verification = verify_solution(&graph, &solution, &state);
                if verification.certifies(config.gap_tol) {
                    return Ok(SolveOutcome {
                        graph,
                        solution,
                        verification,
                        convergence,
                        duals: state,
                        restarts: attempt,
                        total_sweeps,
                        seconds: start.elapsed().as_secs_f64(),
                    });
                }
                last_failure =
                    format!("not certified (feasible {}, gap {:e})", verification.feasible, verification.duality_gap);
            }
            Err(Error::DegenerateExtraction(reason)) => last_failure = reason.to_string(),
            Err(other) => return Err(other),
        }
        duals = Some(state);
    }
    Err(Error::SolveFailed { restarts: config.max_restarts, last: last_failure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::SweepMode;
    use crate::instance::{DistanceMode, Point};

    fn square(mode: DistanceMode) -> Instance {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(x, y)| Point::new(x, y)).to_vec();
        Instance::new("square", pts, mode).unwrap()
    }

    #[test]
    fn unit_square_end_to_end() {
        let cfg = RunConfig { k: 3, ..RunConfig::default() };
        let out = full_solve(&square(DistanceMode::Euc2dExact), &cfg).unwrap();
        assert!(out.verification.feasible);
        assert!((out.solution.objective() - 4.0).abs() < 1e-9);
        assert!(out.verification.duality_gap.abs() <= 1e-9);
        assert_eq!(out.restarts, 0);
    }

    #[test]
    fn rounded_square_has_all_ties_and_still_solves() {
        // Rounded diagonals equal the sides: every edge costs 1.
        for engine in [EngineConfig::jacobi(), EngineConfig::gauss_seidel()] {
            let cfg = RunConfig { k: 3, engine, ..RunConfig::default() };
            let out = full_solve(&square(DistanceMode::Euc2dRounded), &cfg).unwrap();
            assert!(out.restarts <= 5);
            assert_eq!(out.solution.objective(), 4.0);
        }
    }

    #[test]
    fn jitter_is_reproducible() {
        let inst = crate::instance::generate_instance(30, 2, 100.0).unwrap();
        let g = build_knn_graph(&inst, 5).unwrap();
        let a = perturbed_costs(&g, 1e-3, 7, 2);
        assert_eq!(a, perturbed_costs(&g, 1e-3, 7, 2));
        assert_ne!(a, perturbed_costs(&g, 1e-3, 7, 3));
        let width = 1e-3 * g.mean_cost();
        for (c, e) in a.iter().zip(g.edges()) {
            assert!(*c >= e.cost && *c < e.cost + width);
        }
    }

    #[test]
    fn zero_restarts_matches_single_pass() {
        let inst = crate::instance::generate_instance(40, 9, 1000.0).unwrap();
        let cfg = RunConfig { k: 8, max_restarts: 0, ..RunConfig::default() };
        let out = full_solve(&inst, &cfg).unwrap();

        let g = build_knn_graph(&inst, 8).unwrap();
        let (state, _) = solve_duals(&g, &cfg.engine, None).unwrap();
        let sol = extract_primal(&g, &state, cfg.tol * g.mean_cost()).unwrap();
        assert_eq!(out.solution, sol);
        assert_eq!(out.duals, state);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let inst = square(DistanceMode::Euc2dExact);
        let bad = RunConfig { k: 3, perturb_scale: -1.0, ..RunConfig::default() };
        assert!(matches!(full_solve(&inst, &bad), Err(Error::Argument(_))));
        let bad = RunConfig { k: 3, engine: EngineConfig { b: 3, ..EngineConfig::jacobi() }, ..RunConfig::default() };
        assert!(matches!(full_solve(&inst, &bad), Err(Error::Argument(_))));
    }

    #[test]
    fn exhausted_restarts_report_failure() {
        let inst = crate::instance::generate_instance(12, 4, 100.0).unwrap();
        // A zero band wider than every adjusted length lumps all 66 edges together.
        let engine = EngineConfig { max_sweeps: 50, mode: SweepMode::GaussSeidel, ..EngineConfig::gauss_seidel() };
        let cfg = RunConfig { k: 11, engine, max_restarts: 1, tol: 100.0, ..RunConfig::default() };
        assert!(matches!(full_solve(&inst, &cfg), Err(Error::SolveFailed { restarts: 1, .. })));
    }
}
