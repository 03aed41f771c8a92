//! Property tests for the time change, level sets, interval algebra, state
//! integration, cost evaluation and serialization.

use std::sync::Arc;

use bolza::intervals::{Interval, IntervalSet};
use bolza::json::{fmt_f64, to_canonical_string};
use bolza::lagrangian::{norm, ExprModel, Model};
use bolza::reparam::{build_phi, compute_level_set_s, reparametrize_pair, select_sigma};
use bolza::trajectory::{dynamics_residual, evaluate_cost, AdmissiblePair, ControlSignal, ProblemSpec, TimeGrid};
use proptest::prelude::*;

fn expr_model(expr: &str) -> Model {
    let json = format!(
        r#"{{"name": "p", "state_dim": 1, "control_dim": 1, "expr": "{expr}",
        "structure": "RadiallyConvex", "linear_growth": {{"alpha": 1, "d": 1}}}}"#
    );
    Arc::new(ExprModel::from_json(&json).unwrap())
}

/// Sorted grid on `[t, 1]` from raw cell weights.
fn grid_from(t: f64, weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut nodes = vec![t];
    let mut acc = 0.0;
    for w in &weights[..weights.len() - 1] {
        acc += w;
        nodes.push(t + (1.0 - t) * acc / total);
    }
    nodes.push(1.0);
    nodes
}

fn interval_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((0.0..1.0f64, 0.0..0.3f64), 0..6)
        .prop_map(|v| IntervalSet::from_intervals(v.into_iter().map(|(a, w)| Interval::new(a, a + w)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn phi_fixes_the_horizon(
        t in 0.0..0.9f64,
        weights in prop::collection::vec(0.01..1.0f64, 1..40),
        raw in prop::collection::vec(0.05..5.0f64, 40),
    ) {
        let nodes = grid_from(t, &weights);
        let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        // rescale the slopes so that the exact image of 1 is 1
        let mass: f64 = h.iter().zip(&raw).map(|(h, v)| h * v).sum();
        let slopes: Vec<f64> = raw[..h.len()].iter().map(|v| v * (1.0 - t) / mass).collect();
        let cov = build_phi(&nodes, &slopes).unwrap();
        prop_assert!(cov.end_defect.abs() <= 1e-12);
        prop_assert_eq!(cov.phi(1.0), 1.0);
        prop_assert_eq!(cov.phi(t), t);
        for &tau in &nodes {
            prop_assert!((cov.psi(cov.phi(tau)) - tau).abs() <= 1e-12);
        }
        prop_assert!(cov.images.windows(2).all(|w| w[1] > w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn excess_is_bounded_by_l1_over_nu(
        weights in prop::collection::vec(0.01..1.0f64, 2..30),
        vals in prop::collection::vec(-20.0..20.0f64, 30),
        nu in 0.1..10.0f64,
    ) {
        let nodes = grid_from(0.0, &weights);
        let n = nodes.len() - 1;
        let u = ControlSignal::new(TimeGrid::new(nodes).unwrap(), vals[..n].iter().map(|&x| vec![x]).collect()).unwrap();
        let (s, eps) = compute_level_set_s(&u, nu);
        prop_assert!(eps >= 0.0);
        prop_assert!(eps <= u.l1_norm() / nu + 1e-12);
        // ε_ν ≥ 0 with equality only off S_ν
        if s.is_empty() {
            prop_assert_eq!(eps, 0.0);
        }
    }

    #[test]
    fn interval_measure_identities(a in interval_set(), b in interval_set()) {
        let (ma, mb) = (a.measure(), b.measure());
        let inter = a.intersect(&b).measure();
        prop_assert!((a.union(&b).measure() + inter - ma - mb).abs() <= 1e-12);
        prop_assert!((a.difference(&b).measure() - (ma - inter)).abs() <= 1e-12);
        prop_assert!(inter <= ma.min(mb) + 1e-12);
        prop_assert!(a.parts().windows(2).all(|w| w[0].b < w[1].a));
    }

    #[test]
    fn leftmost_fill_hits_the_target(a in interval_set(), frac in 0.0..1.0f64) {
        let target = frac * a.measure();
        let fill = a.leftmost_fill(target).unwrap();
        prop_assert!((fill.measure() - target).abs() <= 1e-12);
        prop_assert!((fill.difference(&a).measure()).abs() <= 1e-12);
        prop_assert!(a.leftmost_fill(a.measure() + 1e-3).is_none());
    }

    #[test]
    fn identity_dynamics_increments_are_exact(
        weights in prop::collection::vec(0.01..1.0f64, 1..30),
        vals in prop::collection::vec(-5.0..5.0f64, 30),
        x in -1.0..1.0f64,
    ) {
        let problem = ProblemSpec::new(expr_model("u1^2"), 0.0, 1.0, vec![x]);
        let nodes = grid_from(0.0, &weights);
        let n = nodes.len() - 1;
        let grid = TimeGrid::new(nodes.clone()).unwrap();
        let u = ControlSignal::new(grid, vals[..n].iter().map(|&v| vec![v]).collect()).unwrap();
        let pair = AdmissiblePair::from_control(&problem, u).unwrap();
        for k in 0..n {
            let inc = pair.states[k + 1][0] - pair.states[k][0];
            prop_assert!((inc - vals[k] * (nodes[k + 1] - nodes[k])).abs() <= 1e-12);
        }
    }

    #[test]
    fn cost_is_monotone_under_domination(
        weights in prop::collection::vec(0.01..1.0f64, 1..20),
        vals in prop::collection::vec(-5.0..5.0f64, 20),
    ) {
        let lo = ProblemSpec::new(expr_model("u1^2"), 0.0, 1.0, vec![0.0]);
        let hi = ProblemSpec::new(expr_model("2*u1^2 + 1"), 0.0, 1.0, vec![0.0]);
        let nodes = grid_from(0.0, &weights);
        let n = nodes.len() - 1;
        let u = ControlSignal::new(TimeGrid::new(nodes).unwrap(), vals[..n].iter().map(|&v| vec![v]).collect()).unwrap();
        let pair = AdmissiblePair::from_control(&lo, u).unwrap();
        let (jl, jh) = (evaluate_cost(&lo, &pair).unwrap(), evaluate_cost(&hi, &pair).unwrap());
        prop_assert!(jl <= jh);
        prop_assert!((jh - (2.0 * jl + 1.0)).abs() <= 1e-10 * (1.0 + jh));
    }

    #[test]
    fn pair_json_round_trips(
        weights in prop::collection::vec(0.01..1.0f64, 1..20),
        vals in prop::collection::vec(-5.0..5.0f64, 20),
    ) {
        let problem = ProblemSpec::new(expr_model("u1^2"), 0.0, 1.0, vec![0.25]);
        let nodes = grid_from(0.0, &weights);
        let n = nodes.len() - 1;
        let u = ControlSignal::new(TimeGrid::new(nodes).unwrap(), vals[..n].iter().map(|&v| vec![v]).collect()).unwrap();
        let pair = AdmissiblePair::from_control(&problem, u).unwrap();
        let text = to_canonical_string(&pair).unwrap();
        let back = AdmissiblePair::from_json(&problem, &text).unwrap();
        prop_assert_eq!(&back.grid, &pair.grid);
        prop_assert_eq!(&back.states, &pair.states);
        prop_assert_eq!(&back.controls, &pair.controls);
        prop_assert_eq!(to_canonical_string(&back).unwrap(), text);
    }

    #[test]
    fn floats_format_losslessly(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    /// Caps controls at `ν`, slows `Σ` by `μ`, and checks the time change
    /// and the transported pair.
    #[test]
    fn reparametrized_pair_is_bounded(
        weights in prop::collection::vec(0.05..1.0f64, 4..20),
        vals in prop::collection::vec(-1.0..1.0f64, 20),
        spike in (0usize..20, 2.0..30.0f64),
        nu in 1.0..1.5f64,
        mu in 0.3..0.8f64,
    ) {
        let problem = ProblemSpec::new(expr_model("u1^2"), 0.0, 1.0, vec![0.0]);
        let mut nodes = grid_from(0.0, &weights);
        let n = nodes.len() - 1;
        let mut controls: Vec<Vec<f64>> = vals[..n].iter().map(|&v| vec![v]).collect();
        // one narrow spike cell in the middle of cell k keeps the excess small
        let (k, mag) = (spike.0 % n, spike.1);
        let half = (0.01 / mag).min(0.25 * (nodes[k + 1] - nodes[k]));
        let mid = 0.5 * (nodes[k] + nodes[k + 1]);
        nodes.splice(k + 1..k + 1, [mid - half, mid + half]);
        let side = controls[k].clone();
        controls.splice(k..k + 1, [side.clone(), vec![mag], side]);
        let u = ControlSignal::new(TimeGrid::new(nodes).unwrap(), controls).unwrap();
        let mut pair = AdmissiblePair::from_control(&problem, u.clone()).unwrap();
        let (s_nu, eps) = compute_level_set_s(&u, nu);
        // Σ must sit where slowing by μ keeps the control below ν
        let omega = IntervalSet::from_cells(u.grid.nodes(), |k| norm(&u.values[k]) <= mu * nu);
        let sigma = select_sigma(&omega, &s_nu, eps, mu);
        prop_assume!(sigma.is_ok());
        let sigma = sigma.unwrap();
        for tau in sigma.endpoints() {
            pair = pair.refine_at(&problem, tau);
        }
        let slopes: Vec<f64> = (0..pair.grid.cells())
            .map(|k| {
                let r = norm(&pair.controls[k]);
                let (a, b) = pair.grid.cell(k);
                if r > nu {
                    r / nu
                } else if sigma.contains_interior(0.5 * (a + b)) {
                    mu
                } else {
                    1.0
                }
            })
            .collect();
        let cov = build_phi(pair.grid.nodes(), &slopes).unwrap();
        prop_assert!(cov.end_defect.abs() <= 1e-12);
        prop_assert!(cov.sup_deviation() <= 2.0 * eps + 1e-12);
        prop_assert!(cov.psi_lipschitz() <= 1.0 / mu + 1e-9);
        let out = reparametrize_pair(&problem, &pair, &cov, nu, mu, &sigma).unwrap();
        prop_assert!(out.sup_control() <= nu);
        prop_assert_eq!(out.terminal_state(), pair.terminal_state());
        prop_assert!(dynamics_residual(&problem, &out.grid, &out.states, &out.controls) <= 1e-9);
    }
}
