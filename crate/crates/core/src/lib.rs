//! Fractional 2-matching relaxation of the traveling salesman problem, solved
//! by driving per-node dual multipliers until the sign pattern of the
//! adjusted edge lengths spells out the optimal {0, 1/2, 1} solution.
//!
//! The pipeline is: [`instance`] (TSPLIB / synthetic points) →
//! [`graph`] (symmetrized k-NN graph) → [`dual`] (Jacobi or Gauss-Seidel
//! sweeps) → [`primal`] (extraction and certification). [`pipeline`] ties it
//! together with a jitter-and-restart loop, [`oracle`] is an exhaustive exact
//! solver for cross-checking small graphs, and [`lp`] / [`bench`] cover
//! exports and batch reports.

pub mod bench;
pub mod dual;
pub mod error;
pub mod graph;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod pipeline;
pub mod primal;
pub mod rng;

pub use dual::{
    adjusted_length, dual_objective, gauss_seidel_sweep, jacobi_sweep, node_update_delta, solve_duals,
    ConvergenceReport, DualState, EngineConfig, SweepMode, SweepStats,
};
pub use error::{DegenerateReason, Error, Result};
pub use graph::{build_knn_graph, validate_graph, Edge, Graph, GraphReport};
pub use instance::{generate_instance, parse_tsplib, DistanceMode, Instance, Point};
pub use lp::write_lp;
pub use oracle::{brute_force_f2m, OracleResult};
pub use pipeline::{full_solve, solve_graph, RunConfig, SolveOutcome};
pub use primal::{classify_edges, extract_primal, verify_solution, EdgeSign, PrimalSolution, VerificationReport};
