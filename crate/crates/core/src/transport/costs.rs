//! Per-arc transport costs.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{CandidateGraph, RoiSet, Tensor2};

pub const DEFAULT_TENSOR_EPS: f64 = 0.05;
pub const DEFAULT_C_ISO: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    Isotropic,
    Anisotropic,
}

impl CostKind {
    pub fn tag(self) -> &'static str {
        match self {
            CostKind::Isotropic => "iso",
            CostKind::Anisotropic => "aniso",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcCosts {
    pub beta: Vec<f64>,
    pub kind: CostKind,
}

/// `ℓ sqrt(τᵀ (D_mid + εI)⁻¹ τ)` for a unit direction `tau`.
pub fn anisotropic_cost_for_tensor(length: f64, tau: [f64; 2], d_mid: &Tensor2, eps: f64) -> Result<f64> {
    let metric = d_mid
        .add_identity(eps)
        .inverse()
        .ok_or_else(|| invalid("midpoint tensor plus εI is singular"))?;
    let q = metric.quadratic_form(tau);
    if !(q > 0.0) {
        return Err(invalid("midpoint tensor is not positive definite"));
    }
    Ok(length * libm::sqrt(q))
}

/// Anisotropic cost of the arc from region `i` to region `j`, with the metric
/// taken at the midpoint tensor `(D_i + D_j) / 2`.
pub fn anisotropic_arc_cost(
    pos_i: [f64; 2],
    pos_j: [f64; 2],
    d_i: &Tensor2,
    d_j: &Tensor2,
    eps: f64,
) -> Result<f64> {
    let (dx, dy) = (pos_j[0] - pos_i[0], pos_j[1] - pos_i[1]);
    let length = libm::hypot(dx, dy);
    if !(length > 0.0) {
        return Err(invalid("arc endpoints coincide"));
    }
    anisotropic_cost_for_tensor(length, [dx / length, dy / length], &Tensor2::midpoint(d_i, d_j), eps)
}

/// `ℓ (1 + c_iso (1 − wm_mid))` with `wm_mid` the mean white-matter score.
pub fn isotropic_arc_cost(pos_i: [f64; 2], pos_j: [f64; 2], wm_i: f64, wm_j: f64, c_iso: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&wm_i) || !(0.0..=1.0).contains(&wm_j) {
        return Err(invalid(format!("white-matter scores must lie in [0, 1], got {wm_i}, {wm_j}")));
    }
    let length = libm::hypot(pos_j[0] - pos_i[0], pos_j[1] - pos_i[1]);
    if !(length > 0.0) {
        return Err(invalid("arc endpoints coincide"));
    }
    Ok(length * (1.0 + c_iso * (1.0 - 0.5 * (wm_i + wm_j))))
}

/// Costs for every arc of `graph`. The isotropic variant uses each region's
/// fractional anisotropy as its white-matter score.
pub fn build_arc_costs(
    graph: &CandidateGraph,
    rois: &RoiSet,
    kind: CostKind,
    eps: f64,
    c_iso: f64,
) -> Result<ArcCosts> {
    let beta = graph
        .arcs
        .iter()
        .map(|arc| {
            let (ri, rj) = (&rois.rois[arc.tail], &rois.rois[arc.head]);
            match kind {
                CostKind::Anisotropic => anisotropic_arc_cost(ri.position, rj.position, &ri.tensor, &rj.tensor, eps),
                CostKind::Isotropic => isotropic_arc_cost(
                    ri.position,
                    rj.position,
                    ri.tensor.fractional_anisotropy(),
                    rj.tensor.fractional_anisotropy(),
                    c_iso,
                ),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ArcCosts { beta, kind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_knn_graph, default_rois};
    use core::f64::consts::PI;

    #[test]
    fn identity_metric_gives_euclidean_length() {
        let c = anisotropic_arc_cost([0.0, 0.0], [3.0, 4.0], &Tensor2::IDENTITY, &Tensor2::IDENTITY, 0.0).unwrap();
        assert!(libm::fabs(c - 5.0) < 1e-12);
    }

    #[test]
    fn along_fiber_travel_is_four_times_cheaper() {
        let d = Tensor2::diag(4.0, 0.25);
        let along = anisotropic_cost_for_tensor(2.0, [1.0, 0.0], &d, 0.0).unwrap();
        let across = anisotropic_cost_for_tensor(2.0, [0.0, 1.0], &d, 0.0).unwrap();
        assert!(libm::fabs(along - 1.0) < 1e-12);
        assert!(libm::fabs(across - 4.0) < 1e-12);
        assert!(libm::fabs(across / along - 4.0) < 1e-12);
    }

    #[test]
    fn coincident_endpoints_are_rejected() {
        assert!(anisotropic_arc_cost([1.0, 1.0], [1.0, 1.0], &Tensor2::IDENTITY, &Tensor2::IDENTITY, 0.05).is_err());
        assert!(isotropic_arc_cost([1.0, 1.0], [1.0, 1.0], 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn isotropic_formula_cases() {
        let (p, q) = ([0.0, 0.0], [0.0, 2.0]);
        assert!(libm::fabs(isotropic_arc_cost(p, q, 0.3, 0.1, 0.0).unwrap() - 2.0) < 1e-15);
        assert!(libm::fabs(isotropic_arc_cost(p, q, 1.0, 1.0, 7.0).unwrap() - 2.0) < 1e-15);
        assert!(libm::fabs(isotropic_arc_cost(p, q, 0.0, 0.0, 1.0).unwrap() - 4.0) < 1e-15);
        assert!(isotropic_arc_cost(p, q, 1.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn opposite_arcs_share_anisotropic_cost() {
        let rois = default_rois();
        let g = build_knn_graph(&rois, 5).unwrap();
        let c = build_arc_costs(&g, &rois, CostKind::Anisotropic, DEFAULT_TENSOR_EPS, DEFAULT_C_ISO).unwrap();
        for e in (0..g.n_arcs()).step_by(2) {
            assert!(libm::fabs(c.beta[e] - c.beta[e + 1]) < 1e-14);
            assert!(c.beta[e] > 0.0);
        }
    }

    #[test]
    fn rotating_axis_away_from_edge_raises_cost() {
        let (major, minor) = (1.6, 0.4);
        let mut last = 0.0;
        for k in 0..=20 {
            let angle = 0.5 * PI * k as f64 / 20.0;
            let d = Tensor2::rotated(major, minor, angle);
            let c = anisotropic_cost_for_tensor(1.0, [1.0, 0.0], &d, DEFAULT_TENSOR_EPS).unwrap();
            if k > 0 {
                assert!(c > last, "angle {angle}");
            }
            last = c;
        }
    }
}
