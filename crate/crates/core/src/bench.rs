//! Batch runs over several instances with CSV/JSON reports.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{generate_instance, read_tsplib, Instance};
use crate::pipeline::{full_solve, RunConfig, SolveOutcome};

/// Side length of the square synthetic points are drawn from.
pub const SYNTHETIC_BOX: f64 = 1_000_000.0;

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    File(PathBuf),
    Synthetic { n: usize, seed: u64 },
    Loaded(Instance),
}

impl InstanceSource {
    pub fn load(&self) -> Result<Instance> {
        match self {
            InstanceSource::File(path) => read_tsplib(path),
            InstanceSource::Synthetic { n, seed } => generate_instance(*n, *seed, SYNTHETIC_BOX),
            InstanceSource::Loaded(inst) => Ok(inst.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            InstanceSource::File(path) => {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
            }
            InstanceSource::Synthetic { n, seed } => format!("synthetic{n}_s{seed}"),
            InstanceSource::Loaded(inst) => inst.name().to_string(),
        }
    }
}

/// `N,SEED` as accepted by `--synthetic`.
impl FromStr for InstanceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, seed) = s.split_once(',').ok_or_else(|| Error::arg(format!("expected N,SEED, got '{s}'")))?;
        let n = n.trim().parse().map_err(|_| Error::arg(format!("bad node count '{n}'")))?;
        let seed = seed.trim().parse().map_err(|_| Error::arg(format!("bad seed '{seed}'")))?;
        Ok(InstanceSource::Synthetic { n, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub nodes: usize,
    pub edges: usize,
    pub sweeps: usize,
    pub seconds: f64,
    pub gap: f64,
    pub restarts: usize,
    /// `ok` or the failure message.
    pub status: String,
}

impl BenchRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn from_outcome(label: String, out: &SolveOutcome) -> Self {
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

    fn failed(label: String, nodes: usize, err: &Error) -> Self {
        BenchRow {
            instance: label,
            nodes,
            edges: 0,
            sweeps: 0,
            seconds: 0.0,
            gap: f64::NAN,
            restarts: 0,
            status: err.to_string(),
        }
    }
}

impl fmt::Display for BenchRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<24} {:>8} {:>9} {:>7} {:>10.3} {:>11.3e} {:>3} {}",
            self.instance, self.nodes, self.edges, self.sweeps, self.seconds, self.gap, self.restarts, self.status
        )
    }
}

/// Solve every source in order. Failures become rows; the run continues.
pub fn run_benchmark(sources: &[InstanceSource], config: &RunConfig) -> Vec<BenchRow> {
    sources
        .iter()
        .map(|src| {
            let label = src.label();
            let instance = match src.load() {
                Ok(inst) => inst,
                Err(e) => return BenchRow::failed(label, 0, &e),
            };
            match full_solve(&instance, config) {
                Ok(out) => BenchRow::from_outcome(label, &out),
                Err(e) => BenchRow::failed(label, instance.len(), &e),
            }
        })
        .collect()
}

/// Header: `instance,nodes,edges,sweeps,seconds,gap,restarts`. The failure
/// message lives in the JSON report only; failed CSV rows have gap `NaN`.
pub fn write_csv(rows: &[BenchRow], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["instance", "nodes", "edges", "sweeps", "seconds", "gap", "restarts"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.nodes.to_string(),
            r.edges.to_string(),
            r.sweeps.to_string(),
            r.seconds.to_string(),
            r.gap.to_string(),
            r.restarts.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(rows: &[BenchRow], out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(out, rows).map_err(|e| Error::Io(e.into()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
