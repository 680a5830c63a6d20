use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use f2m::bench::{write_csv, write_json, BenchRow, InstanceSource};
use f2m::dual::EngineConfig;
use f2m::oracle::{brute_force_f2m, ORACLE_EDGE_LIMIT};
use f2m::pipeline::{full_solve, RunConfig, SolveOutcome};
use f2m::primal::write_solution;
use f2m::{build_knn_graph, write_lp, DistanceMode, Error, Instance};

const EXIT_SOLVE_FAILED: u8 = 2;
const EXIT_INPUT_ERROR: u8 = 3;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Jacobi,
    GaussSeidel,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Distance {
    Rounded,
    Exact,
}

/// Solve the fractional 2-matching relaxation of TSP instances.
#[derive(Debug, Parser)]
#[command(name = "f2m", version)]
struct Args {
    /// TSPLIB EUC_2D file (repeatable)
    #[arg(long, value_name = "FILE")]
    input: Vec<PathBuf>,
    /// Synthetic uniform instance N,SEED (repeatable)
    #[arg(long, value_name = "N,SEED")]
    synthetic: Vec<String>,
    /// Neighbors per node in the k-NN graph
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_enum, default_value = "jacobi")]
    mode: Mode,
    /// Jacobi damping in (0, 1]; defaults to 0.5 (Gauss-Seidel always uses 1)
    #[arg(long)]
    eta: Option<f64>,
    /// Convergence threshold relative to mean edge cost
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_sweeps: usize,
    /// Zero-band tolerance relative to mean edge cost
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 5)]
    max_restarts: usize,
    /// Cost jitter on restarts, relative to mean edge cost
    #[arg(long, default_value_t = 1e-7)]
    perturb_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the distance convention of every instance
    #[arg(long, value_enum)]
    distance: Option<Distance>,
    /// Write the relaxation as a CPLEX-LP file
    #[arg(long, value_name = "FILE")]
    export_lp: Option<PathBuf>,
    /// Write the solution edges (value 1 and 0.5)
    #[arg(long, value_name = "FILE")]
    solution: Option<PathBuf>,
    /// Write the k-NN graph as "u v cost" lines
    #[arg(long, value_name = "FILE")]
    dump_graph: Option<PathBuf>,
    /// Write one row per instance
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Cross-check against exhaustive enumeration on small graphs
    #[arg(long)]
    verify: bool,
    /// Worker threads for the sweeps (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Input(String),
    Solve(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SolveFailed { .. } | Error::DegenerateExtraction(_) | Error::Infeasible => {
                Failure::Solve(e.to_string())
            }
            other => Failure::Input(other.to_string()),
        }
    }
}

impl Args {
    fn run_config(&self) -> RunConfig {
        let engine = match self.mode {
            Mode::Jacobi => EngineConfig::jacobi(),
            Mode::GaussSeidel => EngineConfig::gauss_seidel(),
        };
        let eta = match self.mode {
            Mode::Jacobi => self.eta.unwrap_or(engine.eta),
            Mode::GaussSeidel => 1.0,
        };
        RunConfig {
            k: self.k,
            engine: EngineConfig { eta, eps: self.eps, max_sweeps: self.max_sweeps, ..engine },
            tol: self.tol,
            max_restarts: self.max_restarts,
            perturb_scale: self.perturb_scale,
            seed: self.seed,
            ..RunConfig::default()
        }
    }

    fn sources(&self) -> Result<Vec<InstanceSource>, Failure> {
        let mut sources: Vec<InstanceSource> = self.input.iter().cloned().map(InstanceSource::File).collect();
        for spec in &self.synthetic {
            sources.push(spec.parse().map_err(|e: Error| Failure::Input(e.to_string()))?);
        }
        if sources.is_empty() {
            return Err(Failure::Input("give at least one --input or --synthetic".into()));
        }
        if sources.len() > 1 && (self.solution.is_some() || self.export_lp.is_some() || self.dump_graph.is_some()) {
            return Err(Failure::Input("--solution, --export-lp and --dump-graph need a single instance".into()));
        }
        Ok(sources)
    }

    fn load(&self, source: &InstanceSource) -> Result<Instance, Failure> {
        let inst = source.load()?;
        Ok(match self.distance {
            Some(Distance::Rounded) => inst.with_mode(DistanceMode::Euc2dRounded),
            Some(Distance::Exact) => inst.with_mode(DistanceMode::Euc2dExact),
            None => inst,
        })
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn solve_one(args: &Args, config: &RunConfig, source: &InstanceSource) -> Result<SolveOutcome, Failure> {
    let instance = args.load(source)?;
    if args.export_lp.is_some() || args.dump_graph.is_some() {
        let graph = build_knn_graph(&instance, config.k)?;
        if let Some(path) = &args.export_lp {
            write_lp(&graph, create(path)?)?;
        }
        if let Some(path) = &args.dump_graph {
            graph.write_edge_list(create(path)?)?;
        }
    }
    let outcome = full_solve(&instance, config)?;
    if let Some(path) = &args.solution {
        write_solution(&outcome.graph, &outcome.solution, outcome.verification.duality_gap, create(path)?)?;
    }
    if args.verify {
        if outcome.graph.edge_count() <= ORACLE_EDGE_LIMIT {
            let oracle = brute_force_f2m(&outcome.graph)?;
            let rel = (outcome.solution.objective() - oracle.optimum).abs() / oracle.optimum.abs().max(1.0);
            eprintln!("oracle optimum {} (relative difference {rel:.2e})", oracle.optimum);
            if rel > 1e-6 {
                return Err(Failure::Solve(format!(
                    "objective {} disagrees with oracle {}",
                    outcome.solution.objective(),
                    oracle.optimum
                )));
            }
        } else {
            eprintln!(
                "--verify skipped: {} edges exceeds the enumeration limit {ORACLE_EDGE_LIMIT}",
                outcome.graph.edge_count()
            );
        }
    }
    Ok(outcome)
}

fn run(args: &Args) -> Result<bool, Failure> {
    let config = args.run_config();
    config.validate()?;
    let sources = args.sources()?;

    let mut rows = Vec::with_capacity(sources.len());
    let mut input_error = false;
    for source in &sources {
        let label = source.label();
        let row = match solve_one(args, &config, source) {
            Ok(out) => {
                let c = &out.convergence;
                eprintln!(
                    "{label}: nodes {} edges {} objective {} gap {:.3e} sweeps {} restarts {} converged {} {:.3}s",
                    out.graph.node_count(),
                    out.graph.edge_count(),
                    out.solution.objective(),
                    out.verification.duality_gap,
                    out.total_sweeps,
                    out.restarts,
                    c.converged,
                    out.seconds
                );
                BenchRow {
                    instance: label,
                    nodes: out.graph.node_count(),
                    edges: out.graph.edge_count(),
                    sweeps: out.total_sweeps,
                    seconds: out.seconds,
                    gap: out.verification.duality_gap,
                    restarts: out.restarts,
                    status: "ok".into(),
                }
            }
            Err(failure) => {
                let msg = match failure {
                    Failure::Input(m) => {
                        input_error = true;
                        m
                    }
                    Failure::Solve(m) => m,
                };
                eprintln!("{label}: {msg}");
                BenchRow {
                    instance: label,
                    nodes: 0,
                    edges: 0,
                    sweeps: 0,
                    seconds: 0.0,
                    gap: f64::NAN,
                    restarts: 0,
                    status: msg,
                }
            }
        };
        rows.push(row);
    }

    if let Some(path) = &args.report {
        let out = create(path)?;
        match args.format {
            Format::Csv => write_csv(&rows, out)?,
            Format::Json => write_json(&rows, out)?,
        }
    } else if rows.len() > 1 {
        let mut stdout = std::io::stdout().lock();
        for row in &rows {
            let _ = writeln!(stdout, "{row}");
        }
    }

    if input_error {
        return Err(Failure::Input("one or more instances could not be loaded".into()));
    }
    Ok(rows.iter().all(BenchRow::ok))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads.unwrap_or(0)).build().expect("thread pool");
    match pool.install(|| run(&args)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_SOLVE_FAILED),
        Err(Failure::Solve(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_SOLVE_FAILED)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
    }
}
