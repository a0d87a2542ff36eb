//! Linear stochastic dynamics induced by a flow graph, bridge control toward a
//! terminal profile and the Monte Carlo control cost.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::geometry::CandidateGraph;
use crate::rng::{indexed_stream, standard_normal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostWeighting {
    /// `½ Σ uᵀ (C Cᵀ)⁻¹ u dt`
    Inverse,
    /// `½ Σ ‖u‖² dt`
    Unweighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsParams {
    pub kappa: f64,
    pub beta_dyn: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub eps_bridge: f64,
    pub stim_gain: f64,
    pub stim_duration: f64,
    pub weighting: CostWeighting,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            kappa: 0.8,
            beta_dyn: 0.4,
            sigma0: 0.08,
            sigma1: 0.04,
            horizon: 3.0,
            dt: 0.005,
            n_paths: 80,
            eps_bridge: 0.05,
            stim_gain: 1.0,
            stim_duration: 0.3,
            weighting: CostWeighting::Inverse,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphOperators {
    /// `W[i][j]` = total flux on arcs `i → j`.
    pub w: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub degree: Vec<f64>,
    pub laplacian: DMatrix<f64>,
    pub a_dyn: DMatrix<f64>,
    /// Diagonal of `C`.
    pub c_diag: Vec<f64>,
    pub kappa: f64,
    pub beta_dyn: f64,
}

impl GraphOperators {
    pub fn n(&self) -> usize {
        self.degree.len()
    }

    pub fn c(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.c_diag))
    }

    /// Eigenvalues of the symmetric drift matrix, ascending.
    pub fn a_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.a_dyn.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn laplacian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.laplacian.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

pub fn graph_operators(
    graph: &CandidateGraph,
    flux: &[f64],
    kappa: f64,
    beta_dyn: f64,
    sigma0: f64,
    sigma1: f64,
) -> Result<GraphOperators> {
    if flux.len() != graph.n_arcs() {
        return Err(shape(format!("{} arc fluxes", graph.n_arcs()), format!("{}", flux.len())));
    }
    if flux.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(invalid("fluxes must be finite and nonnegative"));
    }
    let n = graph.n_nodes;
    let mut w = DMatrix::zeros(n, n);
    for (arc, &x) in graph.arcs.iter().zip(flux) {
        w[(arc.tail, arc.head)] += x;
    }
    let s = (&w + w.transpose()) * 0.5;
    let degree: Vec<f64> = (0..n).map(|i| s.row(i).sum()).collect();
    let mut laplacian = -s.clone();
    for i in 0..n {
        laplacian[(i, i)] += degree[i];
    }
    let mut a_dyn = &laplacian * (-beta_dyn);
    for i in 0..n {
        a_dyn[(i, i)] -= kappa;
    }
    let c_diag = degree.iter().map(|d| sigma0 + sigma1 * libm::sqrt(*d)).collect();
    Ok(GraphOperators { w, s, degree, laplacian, a_dyn, c_diag, kappa, beta_dyn })
}

/// Constant input `pattern` applied over steps whose midpoint precedes `until`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimInput {
    pub pattern: Vec<f64>,
    pub until: f64,
}

impl StimInput {
    pub fn active_at_step(&self, step: usize, dt: f64) -> bool {
        (step as f64 + 0.5) * dt < self.until
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Control<'a> {
    None,
    Bridge { target: &'a [f64], eps: f64 },
}

/// `C Cᵀ (m_T − x) / (T − t + ε)`.
pub fn bridge_control(ops: &GraphOperators, x: &[f64], t: f64, target: &[f64], horizon: f64, eps: f64) -> Vec<f64> {
    let scale = 1.0 / (horizon - t + eps);
    ops.c_diag
        .iter()
        .zip(x)
        .zip(target)
        .map(|((c, xi), m)| c * c * (m - xi) * scale)
        .collect()
}

/// Trajectories stored path-major as flat arrays: state `(p, k, i)` lives at
/// `(p (n_steps + 1) + k) n + i`, control `(p, k, i)` at `(p n_steps + k) n + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub n_paths: usize,
    pub n_steps: usize,
    pub n_nodes: usize,
    pub dt: f64,
    pub controlled: bool,
    pub states: Vec<f64>,
    pub controls: Option<Vec<f64>>,
}

impl PathEnsemble {
    pub fn state(&self, path: usize, step: usize) -> &[f64] {
        let start = (path * (self.n_steps + 1) + step) * self.n_nodes;
        &self.states[start..start + self.n_nodes]
    }

    pub fn control(&self, path: usize, step: usize) -> Option<&[f64]> {
        let start = (path * self.n_steps + step) * self.n_nodes;
        self.controls.as_ref().map(|c| &c[start..start + self.n_nodes])
    }

    pub fn mean_at(&self, step: usize) -> Vec<f64> {
        let mut mean = vec![0.0; self.n_nodes];
        for p in 0..self.n_paths {
            for (m, x) in mean.iter_mut().zip(self.state(p, step)) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= self.n_paths as f64;
        }
        mean
    }

    pub fn terminal_mean(&self) -> Vec<f64> {
        self.mean_at(self.n_steps)
    }

    /// Per-node standard error of the ensemble mean at `step`.
    pub fn std_error_at(&self, step: usize) -> Vec<f64> {
        let mean = self.mean_at(step);
        if self.n_paths < 2 {
            return vec![0.0; self.n_nodes];
        }
        let mut var = vec![0.0; self.n_nodes];
        for p in 0..self.n_paths {
            for ((v, x), m) in var.iter_mut().zip(self.state(p, step)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter()
            .map(|v| libm::sqrt(v / (self.n_paths - 1) as f64 / self.n_paths as f64))
            .collect()
    }
}

/// Number of steps for `horizon / dt`, which must be integral.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(invalid(format!("need dt > 0 and horizon > 0, got dt {dt}, horizon {horizon}")));
    }
    let steps = libm::round(horizon / dt);
    if libm::fabs(steps * dt - horizon) > 1e-9 * horizon {
        return Err(invalid(format!("horizon {horizon} is not a whole number of {dt} steps")));
    }
    Ok(steps as usize)
}

/// Euler–Maruyama ensemble; path `p` draws its noise from substream `path-p`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ensemble(
    ops: &GraphOperators,
    x0: &[f64],
    stim: Option<&StimInput>,
    control: Control<'_>,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let n = ops.n();
    let n_steps = step_count(horizon, dt)?;
    if x0.len() != n {
        return Err(shape(format!("{n} initial states"), format!("{}", x0.len())));
    }
    if let Some(s) = stim {
        if s.pattern.len() != n {
            return Err(shape(format!("{n} stimulus entries"), format!("{}", s.pattern.len())));
        }
    }
    if let Control::Bridge { target, .. } = control {
        if target.len() != n {
            return Err(shape(format!("{n} target entries"), format!("{}", target.len())));
        }
    }
    if n_paths == 0 {
        return Err(invalid("need at least one path"));
    }
    let controlled = matches!(control, Control::Bridge { .. });
    let mut states = Vec::with_capacity(n_paths * (n_steps + 1) * n);
    let mut controls = controlled.then(|| Vec::with_capacity(n_paths * n_steps * n));
    let sqrt_dt = libm::sqrt(dt);
    let mut x = vec![0.0; n];
    let mut drift = vec![0.0; n];
    for p in 0..n_paths {
        let mut rng = indexed_stream(seed, "path", p);
        x.copy_from_slice(x0);
        states.extend_from_slice(&x);
        for k in 0..n_steps {
            let t = k as f64 * dt;
            for i in 0..n {
                drift[i] = (0..n).map(|j| ops.a_dyn[(i, j)] * x[j]).sum();
            }
            if let Some(s) = stim.filter(|s| s.active_at_step(k, dt)) {
                for (d, a) in drift.iter_mut().zip(&s.pattern) {
                    *d += a;
                }
            }
            if let Control::Bridge { target, eps } = control {
                let u = bridge_control(ops, &x, t, target, horizon, eps);
                for (d, ui) in drift.iter_mut().zip(&u) {
                    *d += ui;
                }
                controls.as_mut().expect("controlled run").extend_from_slice(&u);
            }
            for i in 0..n {
                x[i] += drift[i] * dt + ops.c_diag[i] * sqrt_dt * standard_normal(&mut rng);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Blowup { path: p, step: k + 1 });
            }
            states.extend_from_slice(&x);
        }
    }
    Ok(PathEnsemble { n_paths, n_steps, n_nodes: n, dt, controlled, states, controls })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicCost {
    pub mean: f64,
    pub std_error: f64,
    pub per_path: Vec<f64>,
}

/// Monte Carlo mean over paths of `½ Σ_k uᵀ M u dt` with `M = (C Cᵀ)⁻¹` or `I`.
pub fn dynamic_cost(ensemble: &PathEnsemble, ops: &GraphOperators, weighting: CostWeighting) -> Result<DynamicCost> {
    if ensemble.controls.is_none() {
        return Err(invalid("dynamic cost needs a controlled ensemble"));
    }
    if ensemble.n_nodes != ops.n() {
        return Err(shape(format!("{} nodes", ops.n()), format!("{}", ensemble.n_nodes)));
    }
    let weights: Vec<f64> = match weighting {
        CostWeighting::Unweighted => vec![1.0; ops.n()],
        CostWeighting::Inverse => {
            if let Some(i) = ops.c_diag.iter().position(|c| *c == 0.0) {
                return Err(Error::Singular(format!("C Cᵀ has a zero at node {i}")));
            }
            ops.c_diag.iter().map(|c| 1.0 / (c * c)).collect()
        }
    };
    let per_path: Vec<f64> = (0..ensemble.n_paths)
        .map(|p| {
            0.5 * ensemble.dt
                * (0..ensemble.n_steps)
                    .map(|k| {
                        let u = ensemble.control(p, k).expect("controls present");
                        u.iter().zip(&weights).map(|(ui, m)| m * ui * ui).sum::<f64>()
                    })
                    .sum::<f64>()
        })
        .collect();
    let n = per_path.len() as f64;
    let mean = per_path.iter().sum::<f64>() / n;
    let std_error = if per_path.len() < 2 {
        0.0
    } else {
        libm::sqrt(per_path.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) / n)
    };
    Ok(DynamicCost { mean, std_error, per_path })
}

/// Initial state, stimulus and bridge target built from the fused measures:
/// `x0 = μ⁺`, `a = g μ⁺` until `stim_duration`, `m_T = μ⁻ / max μ⁻`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSetup {
    pub x0: Vec<f64>,
    pub stim: StimInput,
    pub target: Vec<f64>,
}

pub fn default_setup(mu_stim: &[f64], mu_react: &[f64], params: &DynamicsParams) -> Result<DynamicsSetup> {
    if mu_stim.len() != mu_react.len() {
        return Err(shape(format!("{} entries", mu_stim.len()), format!("{}", mu_react.len())));
    }
    let max = mu_react.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(invalid("reaction measure has no positive entry"));
    }
    Ok(DynamicsSetup {
        x0: mu_stim.to_vec(),
        stim: StimInput {
            pattern: mu_stim.iter().map(|m| params.stim_gain * m).collect(),
            until: params.stim_duration,
        },
        target: mu_react.iter().map(|m| m / max).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsOutcome {
    pub ops: GraphOperators,
    pub uncontrolled: PathEnsemble,
    pub controlled: PathEnsemble,
    pub cost: DynamicCost,
    pub setup: DynamicsSetup,
    /// `‖mean X(T) − m_T‖` for the uncontrolled and controlled ensembles.
    pub uncontrolled_distance: f64,
    pub controlled_distance: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Operators, both ensembles at the same seed and the dynamic cost for one
/// flow solution.
pub fn analyze_flow(
    graph: &CandidateGraph,
    flux: &[f64],
    mu_stim: &[f64],
    mu_react: &[f64],
    params: &DynamicsParams,
    seed: u64,
) -> Result<DynamicsOutcome> {
    let ops = graph_operators(graph, flux, params.kappa, params.beta_dyn, params.sigma0, params.sigma1)?;
    let setup = default_setup(mu_stim, mu_react, params)?;
    let run = |control| {
        simulate_ensemble(&ops, &setup.x0, Some(&setup.stim), control, params.horizon, params.dt, params.n_paths, seed)
    };
    let uncontrolled = run(Control::None)?;
    let controlled = run(Control::Bridge { target: &setup.target, eps: params.eps_bridge })?;
    let cost = dynamic_cost(&controlled, &ops, params.weighting)?;
    let uncontrolled_distance = distance(&uncontrolled.terminal_mean(), &setup.target);
    let controlled_distance = distance(&controlled.terminal_mean(), &setup.target);
    Ok(DynamicsOutcome { ops, uncontrolled, controlled, cost, setup, uncontrolled_distance, controlled_distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge() -> GraphOperators {
        let g = CandidateGraph::from_edges(2, &[(0, 1)], None).unwrap();
        // unit flux split over both arcs symmetrises to S = [[0, 1], [1, 0]]
        graph_operators(&g, &[1.0, 1.0], 0.8, 0.4, 0.08, 0.04).unwrap()
    }

    #[test]
    fn zero_flow_operators() {
        let g = CandidateGraph::from_edges(3, &[(0, 1), (1, 2)], None).unwrap();
        let ops = graph_operators(&g, &[0.0; 4], 0.8, 0.4, 0.08, 0.04).unwrap();
        assert_eq!(ops.laplacian, DMatrix::zeros(3, 3));
        assert_eq!(ops.a_dyn, DMatrix::identity(3, 3) * -0.8);
        assert_eq!(ops.c_diag, vec![0.08; 3]);
    }

    #[test]
    fn unit_edge_laplacian() {
        let ops = single_edge();
        assert_eq!(ops.degree, vec![1.0, 1.0]);
        assert_eq!(ops.laplacian, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let ev = ops.laplacian_eigenvalues();
        assert!(libm::fabs(ev[0]) < 1e-12 && libm::fabs(ev[1] - 2.0) < 1e-12);
        assert!(libm::fabs(ops.c_diag[0] - 0.12) < 1e-15);
    }

    #[test]
    fn directed_flux_symmetrises_to_half() {
        let g = CandidateGraph::from_arcs(2, vec![(0, 1)], None).unwrap();
        let ops = graph_operators(&g, &[1.0], 0.8, 0.4, 0.08, 0.04).unwrap();
        assert_eq!(ops.s[(0, 1)], 0.5);
        assert_eq!(ops.degree, vec![0.5, 0.5]);
    }

    #[test]
    fn bridge_formula() {
        let mut ops = single_edge();
        let target = [0.5, -1.0];
        assert_eq!(bridge_control(&ops, &target, 1.0, &target, 3.0, 0.05), vec![0.0, 0.0]);
        ops.c_diag = vec![1.0, 1.0];
        let u = bridge_control(&ops, &[0.0, 0.0], 3.0, &target, 3.0, 0.05);
        assert!(libm::fabs(u[0] - 10.0) < 1e-12 && libm::fabs(u[1] + 20.0) < 1e-12);
        ops.c_diag = vec![2.0, 2.0];
        let u2 = bridge_control(&ops, &[0.0, 0.0], 3.0, &target, 3.0, 0.05);
        assert!(libm::fabs(u2[0] - 4.0 * u[0]) < 1e-12);
    }

    #[test]
    fn horizon_must_be_whole_steps() {
        assert_eq!(step_count(3.0, 0.005).unwrap(), 600);
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(1.0, 0.0).is_err());
    }

    #[test]
    fn blowup_reports_step() {
        let mut ops = single_edge();
        ops.a_dyn = DMatrix::identity(2, 2) * 1e300;
        ops.c_diag = vec![0.0, 0.0];
        let err = simulate_ensemble(&ops, &[1.0, 1.0], None, Control::None, 1.0, 0.1, 1, 0).unwrap_err();
        assert!(matches!(err, Error::Blowup { path: 0, step: 2 }));
    }

    #[test]
    fn uncontrolled_ensemble_has_no_cost() {
        let ops = single_edge();
        let e = simulate_ensemble(&ops, &[1.0, 0.0], None, Control::None, 0.1, 0.01, 3, 1).unwrap();
        assert!(dynamic_cost(&e, &ops, CostWeighting::Inverse).is_err());
        assert!(e.control(0, 0).is_none());
    }

    #[test]
    fn stimulus_window_by_step_midpoint() {
        let s = StimInput { pattern: vec![1.0], until: 0.3 };
        let active = (0..100).filter(|&k| s.active_at_step(k, 0.005)).count();
        assert_eq!(active, 60);
    }
}
