mod common;

use ramify_core::dynamics::{
    analyze_flow, default_setup, dynamic_cost, graph_operators, simulate_ensemble, Control, CostWeighting,
    GraphOperators, PathEnsemble, StimInput,
};
use ramify_core::geometry::CandidateGraph;
use ramify_core::nalgebra::{DMatrix, DVector};
use ramify_core::rng::derive_seed;
use proptest::prelude::*;

fn decay_ops(n: usize, kappa: f64) -> GraphOperators {
    let g = CandidateGraph::from_edges(n, &[(0, 1)], None).unwrap();
    graph_operators(&g, &[0.0, 0.0], kappa, 0.4, 0.0, 0.0).unwrap()
}

#[test]
fn noiseless_decay_matches_closed_form() {
    let ops = decay_ops(2, 0.8);
    let x0 = [1.0, -0.5];
    for dt in [0.01, 0.005] {
        let ens = simulate_ensemble(&ops, &x0, None, Control::None, 3.0, dt, 1, 0).unwrap();
        let xt = ens.terminal_mean();
        for (x, x0) in xt.iter().zip(x0) {
            let exact = x0 * (-0.8f64 * 3.0).exp();
            // first-order scheme: |error| ≤ κ²T dt |x0| e^{−κT} / 2 to leading order
            assert!((x - exact).abs() <= 0.8 * 0.8 * 3.0 * dt * x0.abs() * (-2.4f64).exp(), "{x} vs {exact}");
        }
    }
}

#[test]
fn same_seed_gives_identical_ensembles() {
    let run = common::default_run();
    let p = &run.cfg.dynamics;
    let a = analyze_flow(&run.graph, &run.flow.w, &run.measures.mu_stim, &run.measures.mu_react, p, 11).unwrap();
    let b = analyze_flow(&run.graph, &run.flow.w, &run.measures.mu_stim, &run.measures.mu_react, p, 11).unwrap();
    assert_eq!(a.uncontrolled.states, b.uncontrolled.states);
    assert_eq!(a.controlled.controls, b.controlled.controls);
    let c = analyze_flow(&run.graph, &run.flow.w, &run.measures.mu_stim, &run.measures.mu_react, p, 12).unwrap();
    assert_ne!(a.uncontrolled.states, c.uncontrolled.states);
}

/// Mean ODE `m' = A m + a(t)` by classical RK4 on a fine grid, with the
/// stimulus switched off at `until`.
fn mean_ode(a: &DMatrix<f64>, x0: &[f64], stim: &StimInput, horizon: f64, steps: usize) -> Vec<f64> {
    let h = horizon / steps as f64;
    let pattern = DVector::from_column_slice(&stim.pattern);
    let f = |t: f64, m: &DVector<f64>| -> DVector<f64> {
        let mut d = a * m;
        if t < stim.until {
            d += &pattern;
        }
        d
    };
    let mut m = DVector::from_column_slice(x0);
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = f(t, &m);
        let k2 = f(t + h / 2.0, &(&m + &k1 * (h / 2.0)));
        let k3 = f(t + h / 2.0, &(&m + &k2 * (h / 2.0)));
        let k4 = f(t + h, &(&m + &k3 * h));
        m += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    m.iter().copied().collect()
}

#[test]
fn uncontrolled_mean_tracks_the_mean_equation() {
    let run = common::default_run();
    let p = &run.cfg.dynamics;
    let out = analyze_flow(
        &run.graph,
        &run.flow.w,
        &run.measures.mu_stim,
        &run.measures.mu_react,
        p,
        derive_seed(run.cfg.seed, "dynamics"),
    )
    .unwrap();
    // 3000 RK4 steps put the stimulus switch exactly on a grid point
    let reference = mean_ode(&out.ops.a_dyn, &out.setup.x0, &out.setup.stim, p.horizon, 3000);
    let ens = &out.uncontrolled;
    let mean = ens.terminal_mean();
    let se = ens.std_error_at(ens.n_steps);
    for i in 0..mean.len() {
        assert!((mean[i] - reference[i]).abs() <= 3.0 * se[i], "node {i}: {} vs {} (se {})", mean[i], reference[i], se[i]);
    }
}

fn terminal(ops: &GraphOperators, setup_x0: &[f64], stim: &StimInput, dt: f64) -> Vec<f64> {
    simulate_ensemble(ops, setup_x0, Some(stim), Control::None, 3.0, dt, 1, 0).unwrap().terminal_mean()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn euler_error_halves_with_the_step() {
    let run = common::default_run();
    let p = &run.cfg.dynamics;
    let ops = graph_operators(&run.graph, &run.flow.w, p.kappa, p.beta_dyn, 0.0, 0.0).unwrap();
    let setup = default_setup(&run.measures.mu_stim, &run.measures.mu_react, p).unwrap();
    let coarse = 0.01;
    let reference = terminal(&ops, &setup.x0, &setup.stim, coarse / 8.0);
    let errors: Vec<f64> =
        [coarse, coarse / 2.0, coarse / 4.0].iter().map(|&dt| dist(&terminal(&ops, &setup.x0, &setup.stim, dt), &reference)).collect();
    for w in errors.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.3..=0.7).contains(&ratio), "ratio {ratio} from errors {errors:?}");
    }
}

#[test]
fn drift_spectrum_bounds_on_the_default_flow() {
    let run = common::default_run();
    let p = &run.cfg.dynamics;
    let ops = graph_operators(&run.graph, &run.flow.w, p.kappa, p.beta_dyn, p.sigma0, p.sigma1).unwrap();
    let lap = ops.laplacian_eigenvalues();
    let lap_max = *lap.last().unwrap();
    assert!(lap[0].abs() < 1e-10);
    for ev in ops.a_eigenvalues() {
        assert!(ev <= -p.kappa + 1e-10);
        assert!(ev >= -p.kappa - p.beta_dyn * lap_max - 1e-10);
    }
    assert!(ops.c_diag.iter().all(|c| *c > 0.0));
    assert_eq!(ops.s, ops.s.transpose());
}

#[test]
fn constant_control_cost_is_quadratic_in_time() {
    // C = I through σ₀ = 1, σ₁ = 0
    let ops = decay_ops(3, 0.8);
    let ops = GraphOperators { c_diag: vec![1.0; 3], ..ops };
    let c = [0.3, -1.2, 0.5];
    let (n_steps, dt) = (600, 0.005);
    let controls: Vec<f64> = (0..n_steps).flat_map(|_| c).collect();
    let ens = PathEnsemble {
        n_paths: 1,
        n_steps,
        n_nodes: 3,
        dt,
        controlled: true,
        states: vec![0.0; (n_steps + 1) * 3],
        controls: Some(controls),
    };
    let j = dynamic_cost(&ens, &ops, CostWeighting::Inverse).unwrap();
    let norm2: f64 = c.iter().map(|x| x * x).sum();
    assert!((j.mean - 0.5 * norm2 * 3.0).abs() < 1e-10);
    assert_eq!(j.std_error, 0.0);
}

#[test]
fn control_brings_the_default_ensemble_closer() {
    let run = common::default_run();
    let out = analyze_flow(
        &run.graph,
        &run.flow.w,
        &run.measures.mu_stim,
        &run.measures.mu_react,
        &run.cfg.dynamics,
        derive_seed(run.cfg.seed, "dynamics"),
    )
    .unwrap();
    assert!(out.controlled_distance < out.uncontrolled_distance);
    assert!(out.cost.mean > 0.0 && out.cost.std_error > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_kernel_and_drift_bound(
        n in 3usize..9,
        fluxes in proptest::collection::vec(0.0f64..3.0, 72),
    ) {
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let g = CandidateGraph::from_edges(n, &edges, None).unwrap();
        let w = &fluxes[..g.n_arcs()];
        let ops = graph_operators(&g, w, 0.8, 0.4, 0.08, 0.04).unwrap();
        let ones = DVector::from_element(n, 1.0);
        prop_assert!((&ops.laplacian * &ones).amax() <= 1e-10);
        prop_assert!((ones.transpose() * &ops.laplacian).amax() <= 1e-10);
        prop_assert!(*ops.a_eigenvalues().last().unwrap() <= -0.8 + 1e-10);
        prop_assert!(ops.laplacian_eigenvalues()[0] >= -1e-10);
    }
}
