//! CSV and JSON readers and writers for run directories.
//!
//! Floats are written in Rust's shortest round-trip form, so every value read
//! back from a CSV or JSON file equals the value that was written.

use std::fs;
use std::path::Path;

use ramify_core::geometry::{CandidateGraph, RoiSet, Shell, System, Tensor2};
use ramify_core::nalgebra::DMatrix;
use ramify_core::transport::{CostKind, FlowSolution};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| Error::Json { path: path.into(), source })?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingInput(path.into()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json { path: path.into(), source })
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// A CSV file held in memory: a header row and string cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv { path: path.into(), source };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.into()));
        }
        let csv_err = |source| Error::Csv { path: path.into(), source };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(String::from).collect());
        }
        Ok(Self { header, rows })
    }

    /// Parses column `name` as floats.
    pub fn floats(&self, name: &str, path: &Path) -> Result<Vec<f64>> {
        let c = self
            .column(name)
            .ok_or_else(|| Error::Malformed { path: path.into(), message: format!("no column `{name}`") })?;
        self.rows
            .iter()
            .map(|r| {
                r[c].parse::<f64>().map_err(|_| Error::Malformed {
                    path: path.into(),
                    message: format!("`{}` in column `{name}` is not a number", r[c]),
                })
            })
            .collect()
    }
}

/// Matrix with one labelled row per matrix row: `corner, col_labels...`.
pub fn matrix_table(corner: &str, row_labels: &[String], col_labels: &[String], m: &DMatrix<f64>) -> Table {
    let mut t = Table::new(std::iter::once(corner.to_string()).chain(col_labels.iter().cloned()));
    for (i, label) in row_labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..m.ncols()).map(|j| num(m[(i, j)])));
        t.push(row);
    }
    t
}

/// Time series with one row per sample: `index, time, col_labels...`.
pub fn series_table(index_name: &str, times: &[f64], col_labels: &[String], samples: &DMatrix<f64>) -> Table {
    let mut t = Table::new(
        [index_name.to_string(), "time".to_string()].into_iter().chain(col_labels.iter().cloned()),
    );
    for (k, time) in times.iter().enumerate() {
        let mut row = vec![k.to_string(), num(*time)];
        row.extend(samples.row(k).iter().map(|v| num(*v)));
        t.push(row);
    }
    t
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub index: usize,
    pub label: String,
    pub system: System,
    pub shell: Shell,
    pub position: [f64; 2],
    pub tensor: Tensor2,
    pub fa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcDoc {
    pub index: usize,
    pub tail: usize,
    pub head: usize,
    pub tail_label: String,
    pub head_label: String,
    pub length: f64,
}

/// Regions and candidate arcs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub n_nodes: usize,
    pub outer_radii: [f64; 2],
    pub inner_radii: [f64; 2],
    pub nodes: Vec<NodeDoc>,
    pub arcs: Vec<ArcDoc>,
}

impl GraphDoc {
    pub fn new(rois: &RoiSet, graph: &CandidateGraph) -> Self {
        let nodes = rois
            .rois
            .iter()
            .map(|r| NodeDoc {
                index: r.index,
                label: r.label.clone(),
                system: r.system,
                shell: r.shell,
                position: r.position,
                tensor: r.tensor,
                fa: r.tensor.fractional_anisotropy(),
            })
            .collect();
        let arcs = graph
            .arcs
            .iter()
            .zip(&graph.lengths)
            .enumerate()
            .map(|(index, (a, &length))| ArcDoc {
                index,
                tail: a.tail,
                head: a.head,
                tail_label: rois.rois[a.tail].label.clone(),
                head_label: rois.rois[a.head].label.clone(),
                length,
            })
            .collect();
        Self { n_nodes: graph.n_nodes, outer_radii: rois.outer_radii, inner_radii: rois.inner_radii, nodes, arcs }
    }

    pub fn graph(&self) -> Result<CandidateGraph> {
        let arcs = self.arcs.iter().map(|a| (a.tail, a.head)).collect();
        let lengths = self.arcs.iter().map(|a| a.length).collect();
        Ok(CandidateGraph::from_arcs(self.n_nodes, arcs, Some(lengths))?)
    }

    pub fn labels(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.label.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowArcDoc {
    pub arc: usize,
    pub tail: usize,
    pub head: usize,
    pub tail_label: String,
    pub head_label: String,
    pub w: f64,
    pub beta: f64,
    pub support: bool,
}

/// One flow on the candidate graph, from the solver, a baseline or the oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDoc {
    pub method: String,
    pub cost_kind: Option<CostKind>,
    pub alpha: f64,
    pub objective: f64,
    pub feasibility_residual: f64,
    pub support: Vec<usize>,
    pub arcs: Vec<FlowArcDoc>,
}

impl FlowDoc {
    pub fn new(
        method: &str,
        cost_kind: Option<CostKind>,
        graph: &CandidateGraph,
        labels: &[String],
        beta: &[f64],
        sol: &FlowSolution,
    ) -> Self {
        let arcs = graph
            .arcs
            .iter()
            .enumerate()
            .map(|(e, a)| FlowArcDoc {
                arc: e,
                tail: a.tail,
                head: a.head,
                tail_label: labels[a.tail].clone(),
                head_label: labels[a.head].clone(),
                w: sol.w[e],
                beta: beta[e],
                support: sol.support.binary_search(&e).is_ok(),
            })
            .collect();
        Self {
            method: method.to_string(),
            cost_kind,
            alpha: sol.alpha,
            objective: sol.objective,
            feasibility_residual: sol.feasibility_residual,
            support: sol.support.clone(),
            arcs,
        }
    }

    pub fn solution(&self) -> FlowSolution {
        FlowSolution {
            w: self.arcs.iter().map(|a| a.w).collect(),
            objective: self.objective,
            alpha: self.alpha,
            support: self.support.clone(),
            feasibility_residual: self.feasibility_residual,
        }
    }

    pub fn beta(&self) -> Vec<f64> {
        self.arcs.iter().map(|a| a.beta).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip_through_csv(values in proptest::collection::vec(any::<f64>(), 1..20)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            let mut t = Table::new(["x"]);
            for v in &values {
                t.push(vec![num(*v)]);
            }
            t.write(&path).unwrap();
            let back = Table::read(&path).unwrap().floats("x", &path).unwrap();
            for (a, b) in values.iter().zip(&back) {
                prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
            }
        }

        #[test]
        fn finite_floats_round_trip_through_json(values in proptest::collection::vec(-1e300f64..1e300, 1..20)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.json");
            write_json(&path, &values).unwrap();
            let back: Vec<f64> = read_json(&path).unwrap();
            prop_assert_eq!(back, values);
        }
    }

    #[test]
    fn graph_doc_round_trip() {
        let rois = ramify_core::geometry::default_rois();
        let graph = ramify_core::geometry::build_knn_graph(&rois, 5).unwrap();
        let doc = GraphDoc::new(&rois, &graph);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        write_json(&path, &doc).unwrap();
        let back: GraphDoc = read_json(&path).unwrap();
        assert_eq!(back.graph().unwrap(), graph);
        assert_eq!(back.labels(), rois.labels());
    }

    #[test]
    fn missing_file_is_named() {
        let err = read_json::<GraphDoc>(Path::new("/nonexistent/graph.json")).unwrap_err();
        assert!(matches!(err, Error::MissingInput(_)));
        assert!(err.to_string().contains("graph.json"));
    }

    #[test]
    fn sha256_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abc");
        fs::write(&path, b"abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
