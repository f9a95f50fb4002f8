//! JSON problem files.
//!
//! ```json
//! {
//!   "n": 2,
//!   "A": [[-1.0, 0.0], [0.0, -2.0]],
//!   "candidates": [{"id": "e1", "b": [1.0, 0.0]}, {"id": "e2", "b": [0.0, 1.0]}],
//!   "weight": {"kind": "weighted_trace", "matrix": [[1.0, 0.0], [0.0, 0.0]]}
//! }
//! ```
//!
//! A `grid` block may replace `A` and `candidates`; the dynamics are then the
//! linearized swing equations and the candidates are all bus-pair links.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{build_swing_matrix, hvdc_candidates, Bus, GridModel, GridParams, Line, LinearizedGrid};
use crate::error::{Error, Result};
use crate::metrics::{MetricKind, MetricSpec};
use crate::numerics::{Matrix, Vector};
use crate::placement::{Candidate, CandidateSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    pub id: String,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Trace,
    WeightedTrace,
    H2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightEntry {
    pub kind: WeightKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BusList {
    Count(usize),
    Explicit(Vec<Bus>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Ring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    pub buses: BusList,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub chords: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<GridParams>,
}

/// On-disk layout of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<CandidateEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridEntry>,
}

/// A loaded, validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub set: CandidateSet,
    /// Present when the problem was generated from a `grid` block.
    pub grid: Option<LinearizedGrid>,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
        return Err(Error::Dimension(format!(
            "{what}: row {i} has {} entries, row 0 has {c}",
            row.len()
        )));
    }
    let m = Matrix::from_fn(r, c, |i, j| rows[i][j]);
    if let Some(idx) = m.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "{what}: non-finite entry at ({}, {})",
            idx % r.max(1),
            idx / r.max(1)
        )));
    }
    Ok(m)
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl WeightEntry {
    pub fn to_metric(&self) -> Result<MetricSpec> {
        let need = |kind: &str| {
            self.matrix
                .as_ref()
                .ok_or_else(|| Error::Parse(format!("weight kind {kind} needs a `matrix` field")))
        };
        Ok(match self.kind {
            WeightKind::Trace => MetricSpec::Trace,
            WeightKind::WeightedTrace => MetricSpec::WeightedTrace(rows_to_matrix(need("weighted_trace")?, "weight")?),
            WeightKind::H2 => MetricSpec::H2(rows_to_matrix(need("h2")?, "weight")?),
        })
    }

    pub fn from_metric(metric: &MetricSpec) -> Self {
        let kind = match metric.kind() {
            MetricKind::Trace => WeightKind::Trace,
            MetricKind::WeightedTrace => WeightKind::WeightedTrace,
            MetricKind::H2 => WeightKind::H2,
        };
        WeightEntry {
            kind,
            matrix: metric.weight().map(matrix_to_rows),
        }
    }
}

impl GridEntry {
    pub fn ring(buses: usize, chords: usize, seed: u64, params: GridParams) -> Self {
        GridEntry {
            topology: Some(Topology::Ring),
            buses: BusList::Count(buses),
            lines: Vec::new(),
            chords,
            seed,
            params: Some(params),
        }
    }

    pub fn to_model(&self) -> Result<GridModel> {
        let params = self.params.unwrap_or_default();
        match (&self.topology, &self.buses) {
            (Some(Topology::Ring), BusList::Count(n)) => {
                if !self.lines.is_empty() {
                    return Err(Error::Parse("ring topology does not take explicit `lines`".into()));
                }
                GridModel::ring_with_chords(*n, self.chords, self.seed, params)
            }
            (Some(Topology::Ring), BusList::Explicit(_)) => {
                Err(Error::Parse("ring topology takes a bus count, not a bus list".into()))
            }
            (None, BusList::Explicit(buses)) => GridModel::new(buses.clone(), self.lines.clone()),
            (None, BusList::Count(_)) => Err(Error::Parse(
                "a bus count needs `topology`; give an explicit bus list with `lines` otherwise".into(),
            )),
        }
    }
}

impl ProblemFile {
    pub fn from_parts(a: &Matrix, candidates: &[Candidate], metric: Option<&MetricSpec>) -> Self {
        ProblemFile {
            n: Some(a.nrows()),
            a: Some(matrix_to_rows(a)),
            candidates: Some(
                candidates
                    .iter()
                    .map(|c| CandidateEntry {
                        id: c.id.clone(),
                        b: c.column.iter().copied().collect(),
                    })
                    .collect(),
            ),
            weight: metric.map(WeightEntry::from_metric),
            grid: None,
        }
    }

    pub fn from_grid(grid: GridEntry, metric: Option<&MetricSpec>) -> Self {
        ProblemFile {
            grid: Some(grid),
            weight: metric.map(WeightEntry::from_metric),
            ..Default::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files are always serializable")
    }

    /// Validates and builds the problem. Missing `weight` means trace.
    pub fn build(&self) -> Result<Problem> {
        let metric = match &self.weight {
            Some(w) => w.to_metric()?,
            None => MetricSpec::Trace,
        };
        if let Some(grid) = &self.grid {
            if self.a.is_some() || self.candidates.is_some() {
                return Err(Error::Parse(
                    "`grid` replaces `A` and `candidates`; give one or the other".into(),
                ));
            }
            let lin = build_swing_matrix(&grid.to_model()?)?;
            if let Some(n) = self.n {
                if n != lin.a.nrows() {
                    return Err(Error::Dimension(format!(
                        "n = {n} but the grid has {} states",
                        lin.a.nrows()
                    )));
                }
            }
            let set = CandidateSet::new(lin.a.clone(), hvdc_candidates(&lin), metric)?;
            return Ok(Problem { set, grid: Some(lin) });
        }
        let rows = self
            .a
            .as_ref()
            .ok_or_else(|| Error::Parse("missing field `A`".into()))?;
        let a = rows_to_matrix(rows, "A")?;
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if let Some(n) = self.n {
            if n != a.nrows() {
                return Err(Error::Dimension(format!(
                    "n = {n} but A is {}x{}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        let entries = self
            .candidates
            .as_ref()
            .ok_or_else(|| Error::Parse("missing field `candidates`".into()))?;
        let candidates = entries
            .iter()
            .map(|c| Candidate::new(c.id.clone(), Vector::from_column_slice(&c.b)))
            .collect();
        let set = CandidateSet::new(a, candidates, metric)?;
        Ok(Problem { set, grid: None })
    }
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    ProblemFile::parse(text)?.build()
}

/// Reads and validates a problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<Problem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&text)
}

/// Writes `a`, `candidates` and `metric` as an explicit problem file.
pub fn save_problem(path: impl AsRef<Path>, a: &Matrix, candidates: &[Candidate], metric: &MetricSpec) -> Result<()> {
    let file = ProblemFile::from_parts(a, candidates, Some(metric));
    std::fs::write(path, file.to_json())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::candidate_weights;

    #[test]
    fn minimal_file_loads() {
        let p = parse_problem(r#"{"n": 1, "A": [[-1]], "candidates": [{"id": "u", "b": [1]}]}"#).unwrap();
        assert_eq!(*p.set.metric(), MetricSpec::Trace);
        let w = candidate_weights(&p.set).unwrap();
        assert!((w["u"] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wrong_column_length_names_candidate() {
        let text = r#"{"n": 2, "A": [[-1, 0], [0, -1]], "candidates": [{"id": "ok", "b": [1, 0]}, {"id": "short", "b": [1]}]}"#;
        match parse_problem(text) {
            Err(Error::Dimension(msg)) => assert!(msg.contains("short"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_problem("{\n  \"n\": 1,\n  \"A\": [[-1]]\n  \"candidates\": []\n}") {
            Err(Error::Parse(msg)) => assert!(msg.contains("line 4"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_problem(r#"{"n": 1, "A": [[-1]], "candidatez": []}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_problem(r#"{"A": [[-1, 0], [0]], "candidates": []}"#),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            parse_problem(r#"{"n": 3, "A": [[-1]], "candidates": []}"#),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn weight_block() {
        let text = r#"{"A": [[-1, 0], [0, -2]],
            "candidates": [{"id": "a", "b": [1, 0]}, {"id": "b", "b": [0, 1]}],
            "weight": {"kind": "weighted_trace", "matrix": [[0, 0], [0, 1]]}}"#;
        let p = parse_problem(text).unwrap();
        let w = candidate_weights(&p.set).unwrap();
        assert_eq!(w["a"], 0.0);
        assert!((w["b"] - 0.25).abs() < 1e-15);
        let missing = r#"{"A": [[-1]], "candidates": [], "weight": {"kind": "h2"}}"#;
        assert!(matches!(parse_problem(missing), Err(Error::Parse(_))));
    }

    #[test]
    fn ring_grid_block() {
        let p = parse_problem(r#"{"grid": {"topology": "ring", "buses": 6, "chords": 2, "seed": 4}}"#).unwrap();
        assert_eq!(p.set.dim(), 12);
        assert_eq!(p.set.len(), 15);
        assert!(p.grid.is_some());
        let explicit = r#"{"grid": {"buses": [
            {"id": "x", "inertia": 1, "damping": 1, "grounding": 0.5},
            {"id": "y", "inertia": 2, "damping": 1, "grounding": 0.5}],
            "lines": [{"from": "x", "to": "y", "susceptance": 3}]}}"#;
        let p = parse_problem(explicit).unwrap();
        assert_eq!(p.set.candidates()[0].id, "x-y");
        assert_eq!(p.set.candidates()[0].column.as_slice(), &[0.0, 1.0, 0.0, -0.5]);
    }

    #[test]
    fn save_then_load_is_bitwise() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0 / 3.0, 0.1 + 0.2, 1e-300, -std::f64::consts::PI]);
        let cands = vec![
            Candidate::new("p", Vector::from_vec(vec![0.7, -1.0 / 7.0])),
            Candidate::new("q", Vector::from_vec(vec![f64::MIN_POSITIVE, 2.5e17])),
        ];
        let metric = MetricSpec::H2(Matrix::from_row_slice(1, 2, &[1.0 / 9.0, 3.0]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        save_problem(&path, &a, &cands, &metric).unwrap();
        let p = load_problem(&path).unwrap();
        assert_eq!(p.set.a(), &a);
        assert_eq!(p.set.candidates(), cands.as_slice());
        assert_eq!(p.set.metric(), &metric);
    }
}
