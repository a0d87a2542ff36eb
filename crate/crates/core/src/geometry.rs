//! Synthetic cortical support: region layout, diffusion tensors and the
//! k-nearest-neighbour candidate graph.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Functional system tag of a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Visual,
    Auditory,
    Sensorimotor,
    DorsalAttention,
    SalienceVentralAttention,
    Limbic,
    Frontoparietal,
    DefaultMode,
    Thalamic,
}

impl System {
    pub const ALL: [System; 9] = [
        System::Visual,
        System::Auditory,
        System::Sensorimotor,
        System::DorsalAttention,
        System::SalienceVentralAttention,
        System::Limbic,
        System::Frontoparietal,
        System::DefaultMode,
        System::Thalamic,
    ];

    /// Systems that carry high anisotropy in the default tensor field.
    pub const RELAY: [System; 4] = [
        System::DorsalAttention,
        System::SalienceVentralAttention,
        System::Frontoparietal,
        System::Thalamic,
    ];

    pub fn abbrev(self) -> &'static str {
        match self {
            System::Visual => "Vis",
            System::Auditory => "Aud",
            System::Sensorimotor => "SomMot",
            System::DorsalAttention => "DorsAttn",
            System::SalienceVentralAttention => "SalVentAttn",
            System::Limbic => "Limbic",
            System::Frontoparietal => "FrontPar",
            System::DefaultMode => "DMN",
            System::Thalamic => "Thal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shell {
    Outer,
    Inner,
}

/// Symmetric 2x2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Tensor2 {
    pub const IDENTITY: Tensor2 = Tensor2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self { xx: a, xy: 0.0, yy: b }
    }

    /// `major * u uᵀ + minor * (I - u uᵀ)` for a unit vector `u`.
    pub fn from_principal_axis(axis: [f64; 2], major: f64, minor: f64) -> Self {
        let norm = libm::hypot(axis[0], axis[1]);
        let (ux, uy) = if norm > 0.0 { (axis[0] / norm, axis[1] / norm) } else { (1.0, 0.0) };
        let gap = major - minor;
        Self {
            xx: minor + gap * ux * ux,
            xy: gap * ux * uy,
            yy: minor + gap * uy * uy,
        }
    }

    /// Rotation of `diag(major, minor)` so that the major axis points at `angle`.
    pub fn rotated(major: f64, minor: f64, angle: f64) -> Self {
        Self::from_principal_axis([libm::cos(angle), libm::sin(angle)], major, minor)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_trace = 0.5 * self.trace();
        let radius = libm::hypot(0.5 * (self.xx - self.yy), self.xy);
        [half_trace + radius, half_trace - radius]
    }

    /// Unit eigenvector of the largest eigenvalue.
    pub fn principal_axis(&self) -> [f64; 2] {
        let theta = 0.5 * libm::atan2(2.0 * self.xy, self.xx - self.yy);
        [libm::cos(theta), libm::sin(theta)]
    }

    /// Fractional anisotropy `|l1 - l2| / sqrt(l1² + l2²)`.
    pub fn fractional_anisotropy(&self) -> f64 {
        let [l1, l2] = self.eigenvalues();
        let denom = libm::sqrt(l1 * l1 + l2 * l2);
        if denom == 0.0 {
            0.0
        } else {
            libm::fabs(l1 - l2) / denom
        }
    }

    pub fn is_spd(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    pub fn add_identity(&self, eps: f64) -> Self {
        Self { xx: self.xx + eps, xy: self.xy, yy: self.yy + eps }
    }

    pub fn midpoint(a: &Tensor2, b: &Tensor2) -> Self {
        Self {
            xx: 0.5 * (a.xx + b.xx),
            xy: 0.5 * (a.xy + b.xy),
            yy: 0.5 * (a.yy + b.yy),
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self { xx: self.yy / det, xy: -self.xy / det, yy: self.xx / det })
    }

    /// `vᵀ T v`.
    pub fn quadratic_form(&self, v: [f64; 2]) -> f64 {
        self.xx * v[0] * v[0] + 2.0 * self.xy * v[0] * v[1] + self.yy * v[1] * v[1]
    }
}

/// Minor/major eigenvalue ratio that realises a target 2-D FA.
///
/// Solves `(1 - r) / sqrt(1 + r²) = fa` for `r ∈ (0, 1]`.
pub fn eigen_ratio_for_fa(fa: f64) -> f64 {
    let q = 1.0 - fa * fa;
    (1.0 - libm::sqrt(1.0 - q * q)) / q
}

/// SPD tensor with unit mean diffusivity, the given FA and principal axis.
pub fn tensor_with_fa(fa: f64, axis: [f64; 2]) -> Tensor2 {
    let ratio = eigen_ratio_for_fa(fa);
    let major = 2.0 / (1.0 + ratio);
    Tensor2::from_principal_axis(axis, major, major * ratio)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub index: usize,
    pub label: String,
    pub position: [f64; 2],
    pub system: System,
    pub shell: Shell,
    pub tensor: Tensor2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiSet {
    pub rois: Vec<Roi>,
    pub outer_radii: [f64; 2],
    pub inner_radii: [f64; 2],
}

pub const DEFAULT_OUTER_RADII: [f64; 2] = [1.0, 0.75];
pub const DEFAULT_INNER_RADII: [f64; 2] = [0.45, 0.35];

// Slot order follows angle: outer slots at 15° + 30°k, inner slots at 60°k.
const DEFAULT_OUTER_PLAN: [(System, &str); 12] = [
    (System::SalienceVentralAttention, "R"),
    (System::DefaultMode, "R"),
    (System::Sensorimotor, "R"),
    (System::Sensorimotor, "L"),
    (System::DefaultMode, "L"),
    (System::SalienceVentralAttention, "L"),
    (System::Auditory, "L"),
    (System::Limbic, "L"),
    (System::Visual, "L"),
    (System::Visual, "R"),
    (System::Limbic, "R"),
    (System::Auditory, "R"),
];
const DEFAULT_INNER_PLAN: [(System, &str); 6] = [
    (System::Thalamic, "R"),
    (System::Frontoparietal, "R"),
    (System::Frontoparietal, "L"),
    (System::Thalamic, "L"),
    (System::DorsalAttention, "L"),
    (System::DorsalAttention, "R"),
];

impl RoiSet {
    pub fn len(&self) -> usize {
        self.rois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rois.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.rois.iter().map(|r| r.label.clone()).collect()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.rois.iter().map(|r| r.position).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.rois.iter().position(|r| r.label == label)
    }

    pub fn indices_in(&self, systems: &[System]) -> Vec<usize> {
        self.rois
            .iter()
            .filter(|r| systems.contains(&r.system))
            .map(|r| r.index)
            .collect()
    }

    /// Unit tangent of the region's shell ellipse at its position.
    pub fn shell_tangent(&self, roi: &Roi) -> [f64; 2] {
        let [a, b] = match roi.shell {
            Shell::Outer => self.outer_radii,
            Shell::Inner => self.inner_radii,
        };
        let [x, y] = roi.position;
        // d/dθ (a cos θ, b sin θ) = (-a sin θ, b cos θ)
        let tx = -a * (y / b);
        let ty = b * (x / a);
        let norm = libm::hypot(tx, ty);
        if norm > 0.0 {
            [tx / norm, ty / norm]
        } else {
            [1.0, 0.0]
        }
    }

    pub fn max_radius(&self) -> f64 {
        self.rois
            .iter()
            .map(|r| libm::hypot(r.position[0], r.position[1]))
            .fold(0.0, f64::max)
    }
}

fn generic_label(slot: usize) -> (System, String) {
    let pair = slot / 2;
    let system = System::ALL[pair % System::ALL.len()];
    let side = if slot % 2 == 0 { "L" } else { "R" };
    let round = pair / System::ALL.len();
    let label = if round == 0 {
        format!("{}-{}", system.abbrev(), side)
    } else {
        format!("{}-{}{}", system.abbrev(), side, round + 1)
    };
    (system, label)
}

/// Places `n_outer` regions on the outer ellipse and `n_inner` on the inner one.
///
/// Outer regions sit at angles `π/n_outer + 2πk/n_outer`, inner regions at
/// `2πk/n_inner`. The 12 + 6 layout uses a fixed left/right label plan; other
/// sizes cycle through the nine systems in L/R pairs.
pub fn build_roi_layout(
    n_outer: usize,
    n_inner: usize,
    outer_radii: [f64; 2],
    inner_radii: [f64; 2],
) -> Result<RoiSet> {
    if n_outer + n_inner == 0 {
        return Err(invalid("layout needs at least one region"));
    }
    if outer_radii.iter().chain(inner_radii.iter()).any(|r| !(*r > 0.0)) {
        return Err(invalid("ellipse radii must be positive"));
    }
    let default_plan = n_outer == 12 && n_inner == 6;
    let mut rois = Vec::with_capacity(n_outer + n_inner);
    let mut push = |shell: Shell, angle: f64, radii: [f64; 2], system: System, label: String| {
        let index = rois.len();
        rois.push(Roi {
            index,
            label,
            position: [radii[0] * libm::cos(angle), radii[1] * libm::sin(angle)],
            system,
            shell,
            tensor: Tensor2::IDENTITY,
        });
    };
    for k in 0..n_outer {
        let angle = PI / n_outer as f64 + 2.0 * PI * k as f64 / n_outer as f64;
        let (system, label) = if default_plan {
            let (s, side) = DEFAULT_OUTER_PLAN[k];
            (s, format!("{}-{}", s.abbrev(), side))
        } else {
            generic_label(k)
        };
        push(Shell::Outer, angle, outer_radii, system, label);
    }
    for k in 0..n_inner {
        let angle = 2.0 * PI * k as f64 / n_inner as f64;
        let (system, label) = if default_plan {
            let (s, side) = DEFAULT_INNER_PLAN[k];
            (s, format!("{}-{}", s.abbrev(), side))
        } else {
            generic_label(n_outer + k)
        };
        push(Shell::Inner, angle, inner_radii, system, label);
    }
    Ok(RoiSet { rois, outer_radii, inner_radii })
}

/// Default 18-region layout with the default tensor field.
pub fn default_rois() -> RoiSet {
    let rois = build_roi_layout(12, 6, DEFAULT_OUTER_RADII, DEFAULT_INNER_RADII)
        .expect("default layout is valid");
    assign_tensor_field(rois, &System::RELAY, DEFAULT_FA_HIGH, DEFAULT_FA_LOW)
        .expect("default FA levels are valid")
}

pub const DEFAULT_FA_HIGH: f64 = 0.75;
pub const DEFAULT_FA_LOW: f64 = 0.2;

/// Gives every region a unit-mean-diffusivity tensor whose principal axis is
/// the shell tangent and whose FA is `fa_high` for `high_fa_systems`, `fa_low`
/// otherwise.
pub fn assign_tensor_field(
    mut rois: RoiSet,
    high_fa_systems: &[System],
    fa_high: f64,
    fa_low: f64,
) -> Result<RoiSet> {
    if !(0.0 <= fa_low && fa_low < fa_high && fa_high < 1.0) {
        return Err(invalid(format!(
            "need 0 <= fa_low < fa_high < 1, got fa_low={fa_low}, fa_high={fa_high}"
        )));
    }
    let tangents: Vec<[f64; 2]> = rois.rois.iter().map(|r| rois.shell_tangent(r)).collect();
    for (roi, axis) in rois.rois.iter_mut().zip(tangents) {
        let fa = if high_fa_systems.contains(&roi.system) { fa_high } else { fa_low };
        roi.tensor = tensor_with_fa(fa, axis);
    }
    Ok(rois)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
}

/// Directed candidate graph. Arcs built from undirected edges come in
/// opposite pairs at indices `2e` and `2e + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateGraph {
    pub n_nodes: usize,
    pub arcs: Vec<Arc>,
    pub lengths: Vec<f64>,
}

impl CandidateGraph {
    /// Graph from an explicit arc list; lengths default to 1.
    pub fn from_arcs(n_nodes: usize, arcs: Vec<(usize, usize)>, lengths: Option<Vec<f64>>) -> Result<Self> {
        let lengths = lengths.unwrap_or_else(|| vec![1.0; arcs.len()]);
        if lengths.len() != arcs.len() {
            return Err(invalid("one length per arc required"));
        }
        for &(t, h) in &arcs {
            if t >= n_nodes || h >= n_nodes {
                return Err(invalid(format!("arc ({t}, {h}) out of range")));
            }
            if t == h {
                return Err(invalid(format!("self-loop at node {t}")));
            }
        }
        Ok(Self {
            n_nodes,
            arcs: arcs.into_iter().map(|(tail, head)| Arc { tail, head }).collect(),
            lengths,
        })
    }

    /// Both orientations of each undirected edge, `2e` forward and `2e + 1` back.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)], lengths: Option<&[f64]>) -> Result<Self> {
        let mut arcs = Vec::with_capacity(2 * edges.len());
        let mut lens = Vec::with_capacity(2 * edges.len());
        for (e, &(i, j)) in edges.iter().enumerate() {
            let l = lengths.map_or(1.0, |ls| ls[e]);
            arcs.push((i, j));
            arcs.push((j, i));
            lens.push(l);
            lens.push(l);
        }
        Self::from_arcs(n_nodes, arcs, Some(lens))
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// Dense node × arc incidence matrix, +1 at the tail and -1 at the head.
    pub fn incidence_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_nodes, self.arcs.len());
        for (e, arc) in self.arcs.iter().enumerate() {
            a[(arc.tail, e)] = 1.0;
            a[(arc.head, e)] = -1.0;
        }
        a
    }

    /// `A w`: net outflow per node.
    pub fn net_outflow(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes];
        for (arc, &flow) in self.arcs.iter().zip(w) {
            out[arc.tail] += flow;
            out[arc.head] -= flow;
        }
        out
    }

    /// `‖A w − b‖∞`.
    pub fn balance_residual(&self, w: &[f64], b: &[f64]) -> f64 {
        self.net_outflow(w)
            .iter()
            .zip(b)
            .map(|(x, y)| libm::fabs(x - y))
            .fold(0.0, f64::max)
    }

    /// Sorted undirected node pairs `(min, max)` touched by at least one arc.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .arcs
            .iter()
            .map(|a| (a.tail.min(a.head), a.tail.max(a.head)))
            .collect();
        set.into_iter().collect()
    }

    /// Index of an arc running opposite to `e`, if any.
    pub fn reverse_arc(&self, e: usize) -> Option<usize> {
        let arc = self.arcs[e];
        let partner = e ^ 1;
        if partner < self.arcs.len() {
            let p = self.arcs[partner];
            if p.tail == arc.head && p.head == arc.tail {
                return Some(partner);
            }
        }
        self.arcs
            .iter()
            .position(|p| p.tail == arc.head && p.head == arc.tail)
    }

    /// Weak connectivity ignoring arc direction.
    pub fn is_connected(&self) -> bool {
        if self.n_nodes == 0 {
            return true;
        }
        let comp = self.weak_components();
        comp.iter().all(|&c| c == comp[0])
    }

    /// Weak component id per node (ids are the smallest member index).
    pub fn weak_components(&self) -> Vec<usize> {
        let mut dsu = crate::transport::dsu::Dsu::new(self.n_nodes);
        for a in &self.arcs {
            dsu.union(a.tail, a.head);
        }
        let mut smallest = vec![usize::MAX; self.n_nodes];
        for v in 0..self.n_nodes {
            let r = dsu.find(v);
            smallest[r] = smallest[r].min(v);
        }
        (0..self.n_nodes).map(|v| smallest[dsu.find(v)]).collect()
    }
}

fn distance(p: [f64; 2], q: [f64; 2]) -> f64 {
    libm::hypot(p[0] - q[0], p[1] - q[1])
}

/// Undirected kNN edges (union rule), sorted; ties broken by lower index.
pub fn knn_edges(positions: &[[f64; 2]], k: usize) -> Result<Vec<(usize, usize)>> {
    let n = positions.len();
    if k == 0 || k >= n {
        return Err(invalid(format!("k must lie in 1..={} for {n} nodes, got {k}", n.saturating_sub(1))));
    }
    let mut edges = BTreeSet::new();
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (distance(positions[i], positions[j]), j)),
        );
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in order.iter().take(k) {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    Ok(edges.into_iter().collect())
}

/// Adds the closest node pair between the component of node 0 and the rest
/// until the edge set is connected; keeps `edges` sorted.
pub fn bridge_components(positions: &[[f64; 2]], edges: &mut Vec<(usize, usize)>) {
    let n = positions.len();
    loop {
        let mut dsu = crate::transport::dsu::Dsu::new(n);
        for &(i, j) in edges.iter() {
            dsu.union(i, j);
        }
        let root = dsu.find(0);
        let inside: Vec<bool> = (0..n).map(|v| dsu.find(v) == root).collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..n).filter(|&i| inside[i]) {
            for j in (0..n).filter(|&j| !inside[j]) {
                let d = distance(positions[i], positions[j]);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, i.min(j), i.max(j)));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        edges.push((i, j));
    }
    edges.sort_unstable();
}

fn graph_from_edges(positions: &[[f64; 2]], edges: &[(usize, usize)]) -> Result<CandidateGraph> {
    let lengths: Vec<f64> = edges
        .iter()
        .map(|&(i, j)| distance(positions[i], positions[j]))
        .collect();
    if let Some(e) = lengths.iter().position(|&l| !(l > 0.0)) {
        let (i, j) = edges[e];
        return Err(invalid(format!("regions {i} and {j} coincide")));
    }
    CandidateGraph::from_edges(positions.len(), edges, Some(&lengths))
}

/// kNN candidate graph over region positions with Euclidean arc lengths.
pub fn build_knn_graph(rois: &RoiSet, k: usize) -> Result<CandidateGraph> {
    let positions = rois.positions();
    graph_from_edges(&positions, &knn_edges(&positions, k)?)
}

/// kNN graph plus the bridging edges of [`bridge_components`], for layouts
/// whose kNN graph splits into several components.
pub fn build_connected_knn_graph(rois: &RoiSet, k: usize) -> Result<CandidateGraph> {
    let positions = rois.positions();
    let mut edges = knn_edges(&positions, k)?;
    bridge_components(&positions, &mut edges);
    graph_from_edges(&positions, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol
    }

    #[test]
    fn default_layout_has_eighteen_unique_labels() {
        let rois = default_rois();
        assert_eq!(rois.len(), 18);
        let outer = rois.rois.iter().filter(|r| r.shell == Shell::Outer).count();
        assert_eq!(outer, 12);
        let labels: BTreeSet<String> = rois.labels().into_iter().collect();
        assert_eq!(labels.len(), 18);
        for s in System::ALL {
            assert_eq!(rois.indices_in(&[s]).len(), 2, "{s:?}");
        }
        for i in 0..18 {
            for j in 0..i {
                assert!(distance(rois.rois[i].position, rois.rois[j].position) > 1e-6);
            }
        }
    }

    #[test]
    fn single_inner_region_sits_at_angle_zero() {
        let rois = build_roi_layout(0, 1, [1.0, 1.0], [0.4, 0.3]).unwrap();
        assert_eq!(rois.len(), 1);
        assert!(close(rois.rois[0].position[0], 0.4, 1e-15));
        assert!(close(rois.rois[0].position[1], 0.0, 1e-15));
    }

    #[test]
    fn four_outer_regions_form_a_square() {
        let rois = build_roi_layout(4, 0, [1.0, 1.0], [0.5, 0.5]).unwrap();
        // offset of half a step (45°), so points are (±1/√2, ±1/√2)
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let expect = [[h, h], [-h, h], [-h, -h], [h, -h]];
        for (roi, e) in rois.rois.iter().zip(expect) {
            assert!(close(roi.position[0], e[0], 1e-12) && close(roi.position[1], e[1], 1e-12));
        }
    }

    #[test]
    fn empty_layout_is_rejected() {
        assert!(build_roi_layout(0, 0, [1.0, 1.0], [0.5, 0.5]).is_err());
        assert!(build_roi_layout(3, 0, [0.0, 1.0], [0.5, 0.5]).is_err());
    }

    #[test]
    fn tensor_field_realises_requested_fa() {
        let rois = default_rois();
        for roi in &rois.rois {
            let want = if System::RELAY.contains(&roi.system) { DEFAULT_FA_HIGH } else { DEFAULT_FA_LOW };
            assert!(close(roi.tensor.fractional_anisotropy(), want, 1e-9), "{}", roi.label);
            let [l1, l2] = roi.tensor.eigenvalues();
            assert!(l1 > 0.0 && l2 > 0.0);
            // principal axis along the shell tangent
            let t = rois.shell_tangent(roi);
            let u = roi.tensor.principal_axis();
            assert!(close(libm::fabs(t[0] * u[0] + t[1] * u[1]), 1.0, 1e-9));
        }
    }

    #[test]
    fn zero_low_fa_gives_isotropic_tensors() {
        let layout = build_roi_layout(12, 6, DEFAULT_OUTER_RADII, DEFAULT_INNER_RADII).unwrap();
        let rois = assign_tensor_field(layout, &[System::Thalamic], 0.5, 0.0).unwrap();
        for roi in rois.rois.iter().filter(|r| r.system != System::Thalamic) {
            assert!(close(roi.tensor.xy, 0.0, 1e-15));
            assert!(close(roi.tensor.xx, roi.tensor.yy, 1e-15));
        }
    }

    #[test]
    fn invalid_fa_range_is_rejected() {
        let layout = build_roi_layout(4, 2, [1.0, 1.0], [0.5, 0.5]).unwrap();
        assert!(assign_tensor_field(layout.clone(), &[], 0.3, 0.3).is_err());
        assert!(assign_tensor_field(layout.clone(), &[], 1.0, 0.3).is_err());
        assert!(assign_tensor_field(layout, &[], 0.5, -0.1).is_err());
    }

    #[test]
    fn smallest_knn_graph_has_two_arcs() {
        let rois = build_roi_layout(2, 0, [1.0, 1.0], [0.5, 0.5]).unwrap();
        let g = build_knn_graph(&rois, 1).unwrap();
        assert_eq!(g.arcs, vec![Arc { tail: 0, head: 1 }, Arc { tail: 1, head: 0 }]);
        assert!(build_knn_graph(&rois, 2).is_err());
        assert!(build_knn_graph(&rois, 0).is_err());
    }

    #[test]
    fn incidence_columns_have_one_plus_and_one_minus() {
        let g = build_knn_graph(&default_rois(), 5).unwrap();
        let a = g.incidence_matrix();
        for e in 0..g.n_arcs() {
            let col = a.column(e);
            assert_eq!(col.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|&&x| x == -1.0).count(), 1);
            assert_eq!(col.iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn knn_ties_prefer_lower_index() {
        // node 0 is equidistant from 1 and 2; 2 and 3 are each other's nearest
        let pos = [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [-1.5, 0.0]];
        let edges = knn_edges(&pos, 1).unwrap();
        assert_eq!(edges, vec![(0, 1), (2, 3)]);
    }
}
