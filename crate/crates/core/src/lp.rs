//! CPLEX-LP export of the fractional 2-matching relaxation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::Graph;

const TERMS_PER_LINE: usize = 8;

fn var(u: usize, v: usize) -> String {
    format!("x_{u}_{v}")
}

/// Write `min sum c_e x_e` subject to one `= 2` row per node and
/// `0 <= x_e <= 1`, in edge order then node order. Output depends only on
/// the graph.
pub fn write_lp(graph: &Graph, mut out: impl Write) -> Result<()> {
    if graph.edge_count() == 0 {
        return Err(Error::arg("cannot export a graph without edges"));
    }
    writeln!(out, "\\ fractional 2-matching: {} nodes, {} edges", graph.node_count(), graph.edge_count())?;
    writeln!(out, "Minimize")?;
    write!(out, " obj:")?;
    for (i, e) in graph.edges().iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            write!(out, "\n    ")?;
        }
        let sign = if i == 0 { "" } else { " +" };
        write!(out, "{sign} {:?} {}", e.cost, var(e.u, e.v))?;
    }
    writeln!(out)?;

    writeln!(out, "Subject To")?;
    for v in 0..graph.node_count() {
        let mut ids: Vec<usize> = graph.incident(v).iter().map(|inc| inc.edge).collect();
        if ids.is_empty() {
            continue;
        }
        ids.sort_unstable();
        write!(out, " deg_{v}:")?;
        for (i, &id) in ids.iter().enumerate() {
            if i > 0 && i % TERMS_PER_LINE == 0 {
                write!(out, "\n    ")?;
            }
            let e = &graph.edges()[id];
            let sign = if i == 0 { "" } else { " +" };
            write!(out, "{sign} {}", var(e.u, e.v))?;
        }
        writeln!(out, " = 2")?;
    }

    writeln!(out, "Bounds")?;
    for e in graph.edges() {
        writeln!(out, " 0 <= {} <= 1", var(e.u, e.v))?;
    }
    writeln!(out, "End")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_knn_graph, Edge};
    use crate::instance::{DistanceMode, Instance, Point};

    fn square_graph() -> Graph {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(x, y)| Point::new(x, y)).to_vec();
        build_knn_graph(&Instance::new("sq", pts, DistanceMode::Euc2dExact).unwrap(), 3).unwrap()
    }

    #[test]
    fn square_export_layout() {
        let mut buf = Vec::new();
        write_lp(&square_graph(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let section = |name: &str| -> Vec<&str> {
            text.lines().skip_while(|l| *l != name).skip(1).take_while(|l| l.starts_with(' ')).collect()
        };
        assert_eq!(section("Subject To").len(), 4);
        assert!(section("Subject To").iter().all(|l| l.ends_with("= 2")));
        assert_eq!(section("Bounds").len(), 6);
        assert!(text.contains(" obj: 1.0 x_0_1 + 1.4142135623730951 x_0_2"));
        assert!(text.trim_end().ends_with("End"));
    }

    #[test]
    fn long_rows_wrap() {
        let edges: Vec<Edge> = (1..20).map(|v| Edge { u: 0, v, cost: v as f64 }).collect();
        let g = Graph::from_edges(20, edges).unwrap();
        let mut buf = Vec::new();
        write_lp(&g, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().all(|l| l.len() < 255));
    }

    #[test]
    fn empty_graph_is_rejected() {
        let g = Graph::from_edges(3, []).unwrap();
        assert!(matches!(write_lp(&g, Vec::new()), Err(Error::Argument(_))));
    }
}
