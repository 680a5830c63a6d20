//! Planar instances: TSPLIB `EUC_2D` reading and writing, distances, and
//! seeded synthetic generation.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::UniformStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// How edge costs are derived from coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceMode {
    /// TSPLIB `nint(sqrt(dx^2 + dy^2))`.
    Euc2dRounded,
    /// Unrounded Euclidean distance.
    Euc2dExact,
}

impl DistanceMode {
    #[inline]
    pub fn apply(self, euclid: f64) -> f64 {
        match self {
            DistanceMode::Euc2dRounded => (euclid + 0.5).floor(),
            DistanceMode::Euc2dExact => euclid,
        }
    }
}

impl fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMode::Euc2dRounded => "rounded",
            DistanceMode::Euc2dExact => "exact",
        })
    }
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rounded" | "euc2d_rounded" => Ok(DistanceMode::Euc2dRounded),
            "exact" | "euc2d_exact" => Ok(DistanceMode::Euc2dExact),
            other => Err(Error::arg(format!("unknown distance mode '{other}'"))),
        }
    }
}

/// A named, non-empty list of points. Node `i` is `points[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    name: String,
    points: Vec<Point>,
    mode: DistanceMode,
}

impl Instance {
    pub fn new(name: impl Into<String>, points: Vec<Point>, mode: DistanceMode) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("instance needs at least one point"));
        }
        if let Some(i) = points.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::arg(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Instance { name: name.into(), points, mode })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: DistanceMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let len = self.points.len();
        for index in [i, j] {
            if index >= len {
                return Err(Error::Index { index, len });
            }
        }
        Ok(self.dist(i, j))
    }

    #[inline]
    pub(crate) fn euclid(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.points[i], self.points[j]);
        (a.x - b.x).hypot(a.y - b.y)
    }

    #[inline]
    pub(crate) fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        // Order the pair so the value is bit-identical in both directions.
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.mode.apply(self.euclid(i, j))
    }
}

fn split_keyword(line: &str) -> Option<(String, &str)> {
    let (key, value) = match line.find(':') {
        Some(p) => (&line[..p], &line[p + 1..]),
        None => (line, ""),
    };
    let key = key.trim();
    if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    Some((key.to_ascii_uppercase(), value.trim()))
}

/// Parse a TSPLIB `EUC_2D` file. Costs default to the rounded TSPLIB convention.
pub fn parse_tsplib(text: &str) -> Result<Instance> {
    let mut name = String::from("unnamed");
    let mut dimension: Option<usize> = None;
    let mut lines = text.lines().enumerate();
    let mut in_coords = false;

    for (no, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = split_keyword(line) else {
            return Err(Error::parse(Some(no + 1), format!("unexpected line '{line}'")));
        };
        match key.as_str() {
            "NAME" => name = value.to_string(),
            "DIMENSION" => {
                let d = value
                    .parse::<usize>()
                    .map_err(|_| Error::parse(Some(no + 1), format!("bad DIMENSION '{value}'")))?;
                dimension = Some(d);
            }
            "EDGE_WEIGHT_TYPE" => {
                if !value.eq_ignore_ascii_case("EUC_2D") {
                    return Err(Error::parse(Some(no + 1), format!("unsupported EDGE_WEIGHT_TYPE '{value}'")));
                }
            }
            "NODE_COORD_SECTION" => {
                in_coords = true;
                break;
            }
            "EOF" => break,
            _ => {}
        }
    }

    let dimension = dimension.ok_or_else(|| Error::parse(None, "missing DIMENSION"))?;
    if !in_coords {
        return Err(Error::parse(None, "missing NODE_COORD_SECTION"));
    }
    if dimension == 0 {
        return Err(Error::parse(None, "DIMENSION must be positive"));
    }

    let mut slots: Vec<Option<Point>> = vec![None; dimension];
    let mut count = 0usize;
    for (no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.eq_ignore_ascii_case("EOF") || line.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let mut fields = line.split_whitespace();
        let (Some(idx), Some(x), Some(y)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(Some(no + 1), "coordinate line needs 'index x y'"));
        };
        let idx: usize = idx.parse().map_err(|_| Error::parse(Some(no + 1), format!("bad node index '{idx}'")))?;
        let coord = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(Some(no + 1), format!("non-numeric coordinate '{s}'")))
        };
        let p = Point::new(coord(x)?, coord(y)?);
        if idx == 0 || idx > dimension {
            return Err(Error::parse(Some(no + 1), format!("node index {idx} outside 1..={dimension}")));
        }
        if slots[idx - 1].replace(p).is_some() {
            return Err(Error::parse(Some(no + 1), format!("duplicate node index {idx}")));
        }
        count += 1;
    }

    if count != dimension {
        return Err(Error::parse(None, format!("DIMENSION is {dimension} but {count} coordinates were read")));
    }
    let points = slots.into_iter().map(|p| p.expect("all slots filled")).collect();
    Instance::new(name, points, DistanceMode::Euc2dRounded)
}

pub fn read_tsplib(path: impl AsRef<Path>) -> Result<Instance> {
    parse_tsplib(&std::fs::read_to_string(path)?)
}

/// Write `instance` as TSPLIB. Coordinates use the shortest round-trip
/// representation, so re-parsing yields bit-identical points.
pub fn write_tsplib(instance: &Instance, mut out: impl Write) -> Result<()> {
    writeln!(out, "NAME : {}", instance.name)?;
    writeln!(out, "TYPE : TSP")?;
    writeln!(out, "DIMENSION : {}", instance.len())?;
    writeln!(out, "EDGE_WEIGHT_TYPE : EUC_2D")?;
    writeln!(out, "NODE_COORD_SECTION")?;
    for (i, p) in instance.points.iter().enumerate() {
        writeln!(out, "{} {:?} {:?}", i + 1, p.x, p.y)?;
    }
    writeln!(out, "EOF")?;
    Ok(())
}

/// `n` points uniform in `[0, box_side]^2`, a pure function of `(n, seed, box_side)`.
pub fn generate_instance(n: usize, seed: u64, box_side: f64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    if !(box_side > 0.0 && box_side.is_finite()) {
        return Err(Error::arg("box side must be positive"));
    }
    let mut stream = UniformStream::new(seed, 0);
    let points = (0..n)
        .map(|_| {
            let x = stream.next_unit() * box_side;
            let y = stream.next_unit() * box_side;
            Point::new(x, y)
        })
        .collect();
    Instance::new(format!("synthetic{n}_s{seed}"), points, DistanceMode::Euc2dExact)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "NAME : tri\nTYPE : TSP\nCOMMENT : three points\nDIMENSION : 3\n\
        EDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n";

    #[test]
    fn parses_points_in_order() {
        let inst = parse_tsplib(TRIANGLE).unwrap();
        assert_eq!(inst.name(), "tri");
        assert_eq!(inst.points(), &[Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(0.0, 4.0)]);
        assert_eq!(inst.mode(), DistanceMode::Euc2dRounded);
    }

    #[test]
    fn indices_are_remapped_regardless_of_line_order() {
        let text = "DIMENSION: 3\nNODE_COORD_SECTION\n3 5 5\n1 1 1\n2 2.5e1 -3\n";
        let inst = parse_tsplib(text).unwrap();
        assert_eq!(inst.points()[0], Point::new(1.0, 1.0));
        assert_eq!(inst.points()[1], Point::new(25.0, -3.0));
        assert_eq!(inst.points()[2], Point::new(5.0, 5.0));
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let text = "DIMENSION : 5\nNODE_COORD_SECTION\n1 0 0\n2 1 0\n3 2 0\n4 3 0\nEOF\n";
        assert!(matches!(parse_tsplib(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_sections_are_rejected() {
        assert!(matches!(parse_tsplib("NAME : x\nNODE_COORD_SECTION\n1 0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_tsplib("DIMENSION : 1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_coordinates_and_weight_types_are_rejected() {
        let text = "DIMENSION : 2\nNODE_COORD_SECTION\n1 0 0\n2 abc 0\n";
        assert!(matches!(parse_tsplib(text), Err(Error::Parse { .. })));
        let text = "DIMENSION : 2\nEDGE_WEIGHT_TYPE : GEO\nNODE_COORD_SECTION\n1 0 0\n2 1 0\n";
        assert!(matches!(parse_tsplib(text), Err(Error::Parse { .. })));
        let text = "DIMENSION : 2\nNODE_COORD_SECTION\n1 0 0\n1 1 0\n";
        assert!(matches!(parse_tsplib(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn distances() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(3.0, 4.0), Point::new(1.0, 1.0)];
        let exact = Instance::new("d", pts.clone(), DistanceMode::Euc2dExact).unwrap();
        let rounded = Instance::new("d", pts, DistanceMode::Euc2dRounded).unwrap();
        assert_eq!(exact.distance(0, 1).unwrap(), 5.0);
        assert_eq!(rounded.distance(0, 1).unwrap(), 5.0);
        assert_eq!(rounded.distance(0, 2).unwrap(), 1.0);
        assert!((exact.distance(0, 2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(exact.distance(1, 1).unwrap(), 0.0);
        assert!(matches!(exact.distance(0, 3), Err(Error::Index { index: 3, len: 3 })));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(5, 42, 1000.0).unwrap();
        let b = generate_instance(5, 42, 1000.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mode(), DistanceMode::Euc2dExact);
        assert_ne!(a.points(), generate_instance(5, 43, 1000.0).unwrap().points());
        assert!(a.points().iter().all(|p| (0.0..=1000.0).contains(&p.x) && (0.0..=1000.0).contains(&p.y)));
        assert_eq!(generate_instance(1, 0, 1.0).unwrap().len(), 1);
    }

    #[test]
    fn generation_rejects_bad_arguments() {
        assert!(matches!(generate_instance(0, 0, 1.0), Err(Error::Argument(_))));
        assert!(matches!(generate_instance(3, 0, 0.0), Err(Error::Argument(_))));
        assert!(matches!(generate_instance(3, 0, -2.0), Err(Error::Argument(_))));
    }

    #[test]
    fn written_files_reparse_exactly() {
        let inst = generate_instance(50, 3, 777.7).unwrap();
        let mut buf = Vec::new();
        write_tsplib(&inst, &mut buf).unwrap();
        let back = parse_tsplib(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.points(), inst.points());
        assert_eq!(back.name(), inst.name());
    }
}
