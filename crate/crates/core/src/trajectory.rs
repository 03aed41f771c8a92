//! Grid-based controls, states and admissible pairs for `y' = b(y)u`, plus
//! the cost functional `J_t(y,u) = ∫_t^T Λ(s, y, u) ds + g(y(T))`.
//!
//! Controls are piecewise constant on grid cells; states are given at the
//! nodes and interpolated linearly inside each cell.

use std::io::Write;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::compute_c_t_b;
use crate::error::{BolzaError, Result};
use crate::expr::Expr;
use crate::lagrangian::{builtin_with_horizon, norm, ExprModel, Model, ModelDescriptor};
use crate::quadrature::{integrate, QuadConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(BolzaError::InvalidPair("a grid needs at least two nodes".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(BolzaError::InvalidPair(
                "grid nodes must be finite and strictly increasing".into(),
            ));
        }
        Ok(TimeGrid { nodes })
    }

    /// `cells` equal cells on `[t, T]`; the last node is exactly `T`.
    pub fn uniform(t: f64, horizon: f64, cells: usize) -> Result<Self> {
        let cells = cells.max(1);
        let h = (horizon - t) / cells as f64;
        let mut nodes: Vec<f64> = (0..cells).map(|k| t + h * k as f64).collect();
        nodes.push(horizon);
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn t_start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.nodes.last().expect("nonempty")
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn cell(&self, k: usize) -> (f64, f64) {
        (self.nodes[k], self.nodes[k + 1])
    }

    pub fn width(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub grid: TimeGrid,
    /// One control per cell.
    pub values: Vec<Vec<f64>>,
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(BolzaError::InvalidPair(format!(
                "{} control values for {} cells",
                values.len(),
                grid.cells()
            )));
        }
        Ok(ControlSignal { grid, values })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| norm(v) * self.grid.width(k))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTrajectory {
    pub grid: TimeGrid,
    /// One state per node.
    pub values: Vec<Vec<f64>>,
}

/// The controlled-linear dynamics matrix `b(y)` (`n × m`).
#[derive(Debug, Clone)]
pub enum Dynamics {
    /// `b ≡ I` (requires `n = m`); states are integrated exactly.
    Identity,
    Constant(Vec<Vec<f64>>),
    /// `b(y) = (1 + |y|) I`.
    OnePlusNorm,
    /// Entries given as expressions in `y`.
    Expr(Vec<Vec<Expr>>),
}

impl Dynamics {
    pub fn apply(&self, y: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            Dynamics::Identity => u.to_vec(),
            Dynamics::Constant(m) => m
                .iter()
                .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
                .collect(),
            Dynamics::OnePlusNorm => {
                let f = 1.0 + norm(y);
                u.iter().map(|x| f * x).collect()
            }
            Dynamics::Expr(m) => m
                .iter()
                .map(|row| row.iter().zip(u).map(|(e, b)| e.eval(0.0, y, &[]) * b).sum())
                .collect(),
        }
    }

    /// Frobenius norm of `b(y)`, an upper bound for the operator norm.
    pub fn matrix_norm(&self, y: &[f64], m: usize) -> f64 {
        match self {
            Dynamics::Identity => 1.0,
            Dynamics::Constant(mat) => mat.iter().flatten().map(|x| x * x).sum::<f64>().sqrt(),
            Dynamics::OnePlusNorm => (1.0 + norm(y)) * if m > 0 { 1.0 } else { 0.0 },
            Dynamics::Expr(mat) => mat
                .iter()
                .flatten()
                .map(|e| e.eval(0.0, y, &[]).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Dynamics::Identity)
    }
}

/// Terminal cost `g ≥ 0`, possibly `+∞`.
#[derive(Debug, Clone)]
pub enum TerminalCost {
    Zero,
    /// `0` within `tol` of `target`, `+∞` outside.
    HardEndpoint {
        target: Vec<f64>,
        tol: f64,
    },
    SoftQuadratic {
        target: Vec<f64>,
        weight: f64,
    },
    Expr(Expr),
}

impl TerminalCost {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            TerminalCost::Zero => 0.0,
            TerminalCost::HardEndpoint { target, tol } => {
                let d: f64 = y.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if d <= *tol {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            TerminalCost::SoftQuadratic { target, weight } => {
                weight * y.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            }
            TerminalCost::Expr(e) => {
                let v = e.eval(0.0, y, &[]);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum StateSet {
    Whole,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Expr(Expr),
}

impl StateSet {
    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            StateSet::Whole => true,
            StateSet::Ball { center, radius } => {
                y.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= *radius
            }
            StateSet::Box { lo, hi } => y.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l <= v && v <= h),
            StateSet::Expr(e) => e.holds(0.0, y, &[]),
        }
    }

    pub fn is_whole(&self) -> bool {
        matches!(self, StateSet::Whole)
    }
}

/// The control cone `𝒰` (closed under positive scaling).
#[derive(Debug, Clone, PartialEq)]
pub enum ControlCone {
    Full,
    NonnegativeOrthant,
    /// Membership predicate in `u`; must be positively homogeneous.
    Expr(Expr),
}

impl ControlCone {
    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            ControlCone::Full => true,
            ControlCone::NonnegativeOrthant => u.iter().all(|x| *x >= 0.0),
            ControlCone::Expr(e) => e.holds(0.0, &[], u),
        }
    }

    pub fn contains_origin(&self) -> bool {
        true
    }
}

#[derive(Serialize, Deserialize)]
struct ConeSpec {
    kind: String,
    #[serde(default)]
    expr: Option<String>,
    #[serde(default)]
    control_dim: Option<usize>,
}

impl Serialize for ControlCone {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let spec = match self {
            ControlCone::Full => ConeSpec {
                kind: "full".into(),
                expr: None,
                control_dim: None,
            },
            ControlCone::NonnegativeOrthant => ConeSpec {
                kind: "nonnegative_orthant".into(),
                expr: None,
                control_dim: None,
            },
            ControlCone::Expr(e) => ConeSpec {
                kind: "expr".into(),
                expr: Some(e.source().to_string()),
                control_dim: None,
            },
        };
        spec.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ControlCone {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let spec = ConeSpec::deserialize(de)?;
        match spec.kind.as_str() {
            "full" => Ok(ControlCone::Full),
            "nonnegative_orthant" => Ok(ControlCone::NonnegativeOrthant),
            "expr" => {
                let src = spec
                    .expr
                    .ok_or_else(|| D::Error::custom("cone kind `expr` needs `expr`"))?;
                let m = spec.control_dim.unwrap_or(4);
                Expr::parse(&src, 0, m).map(ControlCone::Expr).map_err(D::Error::custom)
            }
            other => Err(D::Error::custom(format!("unknown cone kind `{other}`"))),
        }
    }
}

/// A Bolza problem `(P_{t,x})`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub horizon: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub model: Model,
    pub dynamics: Dynamics,
    /// Growth constant with `|b(y)| ≤ θ(1 + |y|)`.
    pub theta: f64,
    pub terminal: TerminalCost,
    pub state_set: StateSet,
    pub control_cone: ControlCone,
    /// Relative tolerance on the per-cell dynamics defect.
    pub dynamics_tolerance: f64,
    /// RK4 substeps per cell for nonidentity dynamics.
    pub rk_substeps: usize,
    pub quad: QuadConfig,
}

impl ProblemSpec {
    /// Problem with `b ≡ I`, `g ≡ 0`, no constraints.
    pub fn new(model: Model, t: f64, horizon: f64, x: Vec<f64>) -> Self {
        ProblemSpec {
            horizon,
            t,
            x,
            model,
            dynamics: Dynamics::Identity,
            theta: 1.0,
            terminal: TerminalCost::Zero,
            state_set: StateSet::Whole,
            control_cone: ControlCone::Full,
            dynamics_tolerance: 1e-9,
            rk_substeps: 16,
            quad: QuadConfig::default(),
        }
    }

    pub fn with_dynamics(mut self, dynamics: Dynamics, theta: f64) -> Self {
        self.dynamics = dynamics;
        self.theta = theta;
        self
    }

    pub fn with_terminal(mut self, g: TerminalCost) -> Self {
        self.terminal = g;
        self
    }

    /// The same problem started at `(t, x)`.
    pub fn at(&self, t: f64, x: Vec<f64>) -> Self {
        ProblemSpec { t, x, ..self.clone() }
    }

    pub fn state_dim(&self) -> usize {
        self.model.info().state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.model.info().control_dim
    }

    /// Spot checks of the structural assumptions on sampled states and
    /// controls: `|b(y)| ≤ θ(1+|y|)` and the cone property.
    pub fn spot_check(&self) -> Result<()> {
        let n = self.state_dim();
        let m = self.control_dim();
        if self.x.len() != n {
            return Err(BolzaError::PreconditionViolated(format!(
                "initial state has dimension {}, model expects {n}",
                self.x.len()
            )));
        }
        if !(self.t >= 0.0 && self.t < self.horizon) {
            return Err(BolzaError::PreconditionViolated(format!(
                "need 0 <= t < T, got t = {}, T = {}",
                self.t, self.horizon
            )));
        }
        if self.dynamics.is_identity() && n != m {
            return Err(BolzaError::PreconditionViolated("identity dynamics need n = m".into()));
        }
        for z in crate::sampling::ball_points(&self.x, 10.0, 64) {
            let b = self.dynamics.matrix_norm(&z, m);
            if b > self.theta * (1.0 + norm(&z)) * (1.0 + 1e-12) {
                return Err(BolzaError::PreconditionViolated(format!(
                    "|b(y)| = {b} exceeds theta(1+|y|) at y = {z:?}"
                )));
            }
        }
        for d in crate::sampling::sphere_directions(m, 32) {
            if self.control_cone.contains(&d) {
                for lam in [1e-3, 0.5, 2.0, 1e3] {
                    let v: Vec<f64> = d.iter().map(|x| x * lam).collect();
                    if !self.control_cone.contains(&v) {
                        return Err(BolzaError::PreconditionViolated("control set is not a cone".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One RK4 sweep of `y' = b(y)u` over a cell of width `h`.
pub fn rk_cell(dynamics: &Dynamics, substeps: usize, y0: &[f64], u: &[f64], h: f64) -> Vec<f64> {
    if dynamics.is_identity() {
        return y0.iter().zip(u).map(|(y, v)| y + v * h).collect();
    }
    let steps = substeps.max(1);
    let dt = h / steps as f64;
    let mut y = y0.to_vec();
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(p, q)| p + a * q).collect() };
    for _ in 0..steps {
        let k1 = dynamics.apply(&y, u);
        let k2 = dynamics.apply(&axpy(&y, &k1, 0.5 * dt), u);
        let k3 = dynamics.apply(&axpy(&y, &k2, 0.5 * dt), u);
        let k4 = dynamics.apply(&axpy(&y, &k3, dt), u);
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Solve `y' = b(y)u`, `y(t) = x` on the control's grid.
pub fn integrate_state(problem: &ProblemSpec, u: &ControlSignal) -> StateTrajectory {
    let mut values = Vec::with_capacity(u.grid.cells() + 1);
    values.push(problem.x.clone());
    for k in 0..u.grid.cells() {
        let next = rk_cell(
            &problem.dynamics,
            problem.rk_substeps,
            &values[k],
            &u.values[k],
            u.grid.width(k),
        );
        values.push(next);
    }
    StateTrajectory {
        grid: u.grid.clone(),
        values,
    }
}

/// A discretized pair `(y, u)` for a problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissiblePair {
    pub grid: TimeGrid,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    #[serde(skip)]
    pub dynamics_residual: f64,
}

#[derive(Deserialize)]
struct PairFile {
    grid: Vec<f64>,
    states: Vec<Vec<f64>>,
    controls: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for AdmissiblePair {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let f = PairFile::deserialize(de)?;
        let grid = TimeGrid::new(f.grid).map_err(D::Error::custom)?;
        Ok(AdmissiblePair {
            grid,
            states: f.states,
            controls: f.controls,
            dynamics_residual: f64::NAN,
        })
    }
}

/// Max over cells of the relative RK defect `|y_{k+1} − Φ_h(y_k)| / (1 + |y_{k+1}|)`.
pub fn dynamics_residual(problem: &ProblemSpec, grid: &TimeGrid, states: &[Vec<f64>], controls: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..grid.cells() {
        let pred = rk_cell(
            &problem.dynamics,
            problem.rk_substeps,
            &states[k],
            &controls[k],
            grid.width(k),
        );
        let diff: f64 = pred
            .iter()
            .zip(&states[k + 1])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / (1.0 + norm(&states[k + 1])));
    }
    worst
}

impl AdmissiblePair {
    /// Validate `(y, u)` against the problem's invariants.
    pub fn new(problem: &ProblemSpec, y: StateTrajectory, u: ControlSignal) -> Result<Self> {
        if y.grid != u.grid {
            return Err(BolzaError::InvalidPair("state and control grids differ".into()));
        }
        Self::from_parts(problem, u.grid, y.values, u.values)
    }

    /// Integrate the state for `u` and validate.
    pub fn from_control(problem: &ProblemSpec, u: ControlSignal) -> Result<Self> {
        let y = integrate_state(problem, &u);
        Self::new(problem, y, u)
    }

    pub fn from_parts(
        problem: &ProblemSpec,
        grid: TimeGrid,
        states: Vec<Vec<f64>>,
        controls: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = problem.state_dim();
        let m = problem.control_dim();
        if states.len() != grid.nodes().len() || controls.len() != grid.cells() {
            return Err(BolzaError::InvalidPair(format!(
                "{} nodes, {} states, {} controls",
                grid.nodes().len(),
                states.len(),
                controls.len()
            )));
        }
        if states.iter().any(|v| v.len() != n) || controls.iter().any(|v| v.len() != m) {
            return Err(BolzaError::InvalidPair("dimension mismatch".into()));
        }
        if (grid.t_start() - problem.t).abs() > 1e-12 || (grid.t_end() - problem.horizon).abs() > 1e-12 {
            return Err(BolzaError::InvalidPair(format!(
                "grid spans [{}, {}], problem is on [{}, {}]",
                grid.t_start(),
                grid.t_end(),
                problem.t,
                problem.horizon
            )));
        }
        let start_gap: f64 = states[0]
            .iter()
            .zip(&problem.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if start_gap > 1e-12 {
            return Err(BolzaError::InvalidPair(format!("y(t) misses x by {start_gap}")));
        }
        if let Some(k) = states.iter().position(|y| !problem.state_set.contains(y)) {
            return Err(BolzaError::InvalidPair(format!(
                "state at node {k} leaves the state set"
            )));
        }
        if let Some(k) = controls.iter().position(|u| !problem.control_cone.contains(u)) {
            return Err(BolzaError::InvalidPair(format!(
                "control at cell {k} leaves the control cone"
            )));
        }
        let residual = dynamics_residual(problem, &grid, &states, &controls);
        if !(residual <= problem.dynamics_tolerance) {
            return Err(BolzaError::InvalidPair(format!(
                "dynamics residual {residual:e} exceeds {:e}",
                problem.dynamics_tolerance
            )));
        }
        Ok(AdmissiblePair {
            grid,
            states,
            controls,
            dynamics_residual: residual,
        })
    }

    /// Re-validate a deserialized pair against a problem.
    pub fn validated(self, problem: &ProblemSpec) -> Result<Self> {
        Self::from_parts(problem, self.grid, self.states, self.controls)
    }

    pub fn control_signal(&self) -> ControlSignal {
        ControlSignal {
            grid: self.grid.clone(),
            values: self.controls.clone(),
        }
    }

    pub fn state_trajectory(&self) -> StateTrajectory {
        StateTrajectory {
            grid: self.grid.clone(),
            values: self.states.clone(),
        }
    }

    pub fn terminal_state(&self) -> &[f64] {
        self.states.last().expect("nonempty")
    }

    pub fn sup_control(&self) -> f64 {
        self.controls.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    pub fn sup_state(&self) -> f64 {
        self.states.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    pub fn l1_control(&self) -> f64 {
        self.control_signal().l1_norm()
    }

    /// Largest slope `|y_{k+1} − y_k| / h_k` of the piecewise-linear state.
    pub fn lipschitz_rank(&self) -> f64 {
        (0..self.grid.cells())
            .map(|k| {
                let d: f64 = self.states[k + 1]
                    .iter()
                    .zip(&self.states[k])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                d / self.grid.width(k)
            })
            .fold(0.0, f64::max)
    }

    /// Linear interpolation of the state at `s` inside cell `k`.
    pub fn state_at(&self, k: usize, s: f64) -> Vec<f64> {
        let (a, b) = self.grid.cell(k);
        let w = (s - a) / (b - a);
        self.states[k]
            .iter()
            .zip(&self.states[k + 1])
            .map(|(p, q)| p + w * (q - p))
            .collect()
    }

    /// Insert a node at `tau` (strictly inside a cell), integrating the
    /// state on the left part. No-op if `tau` is already a node.
    pub fn refine_at(&self, problem: &ProblemSpec, tau: f64) -> AdmissiblePair {
        let nodes = self.grid.nodes();
        if tau <= nodes[0] || tau >= self.grid.t_end() || nodes.contains(&tau) {
            return self.clone();
        }
        let k = nodes.partition_point(|&x| x <= tau) - 1;
        let mid = rk_cell(
            &problem.dynamics,
            problem.rk_substeps,
            &self.states[k],
            &self.controls[k],
            tau - nodes[k],
        );
        let mut new_nodes = nodes.to_vec();
        new_nodes.insert(k + 1, tau);
        let mut states = self.states.clone();
        states.insert(k + 1, mid);
        let mut controls = self.controls.clone();
        controls.insert(k + 1, self.controls[k].clone());
        let grid = TimeGrid { nodes: new_nodes };
        let residual = dynamics_residual(problem, &grid, &states, &controls);
        AdmissiblePair {
            grid,
            states,
            controls,
            dynamics_residual: residual,
        }
    }

    /// CSV with columns `s, y_1..y_n, u_1..u_m`; each cell contributes a row
    /// at both endpoints carrying the cell's control.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.states[0].len();
        let m = self.controls.first().map_or(0, |c| c.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["s".to_string()];
        header.extend((1..=n).map(|i| format!("y_{i}")));
        header.extend((1..=m).map(|i| format!("u_{i}")));
        w.write_record(&header)?;
        for k in 0..self.grid.cells() {
            for (node, s) in [(k, self.grid.nodes()[k]), (k + 1, self.grid.nodes()[k + 1])] {
                let mut row = vec![crate::json::fmt_f64(s)];
                row.extend(self.states[node].iter().map(|v| crate::json::fmt_f64(*v)));
                row.extend(self.controls[k].iter().map(|v| crate::json::fmt_f64(*v)));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_json(problem: &ProblemSpec, text: &str) -> Result<Self> {
        let raw: AdmissiblePair = serde_json::from_str(text)?;
        raw.validated(problem)
    }
}

/// `∫_a^b Λ(s, y(s), u) ds` with `y` linear from `ya` to `yb`.
pub fn cell_cost(problem: &ProblemSpec, a: f64, b: f64, ya: &[f64], yb: &[f64], u: &[f64]) -> f64 {
    let model = problem.model.as_ref();
    let info = model.info();
    if info.autonomous && info.state_independent {
        let v = model.eval(a, ya, u);
        if v.is_nan() || v == f64::INFINITY {
            return f64::INFINITY;
        }
        return v * (b - a);
    }
    if info.state_independent || ya == yb {
        let r = integrate(|s| model.eval(s, ya, u), a, b, &problem.quad);
        return r.value;
    }
    let mut y = ya.to_vec();
    let h = b - a;
    let mut cuts = model.state_breaks(ya, yb);
    cuts.retain(|w| *w > 0.0 && *w < 1.0);
    cuts.sort_by(f64::total_cmp);
    let mut knots = vec![a];
    knots.extend(cuts.iter().map(|w| a + w * h));
    knots.push(b);
    let mut total = 0.0;
    for piece in knots.windows(2) {
        if piece[1] <= piece[0] {
            continue;
        }
        let r = integrate(
            |s| {
                let w = (s - a) / h;
                for i in 0..y.len() {
                    y[i] = ya[i] + w * (yb[i] - ya[i]);
                }
                model.eval(s, &y, u)
            },
            piece[0],
            piece[1],
            &problem.quad,
        );
        total += r.value;
    }
    total
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Per-cell running costs; `+∞` entries mark domain violations.
pub fn cell_costs(problem: &ProblemSpec, pair: &AdmissiblePair) -> Vec<f64> {
    (0..pair.grid.cells())
        .map(|k| {
            let (a, b) = pair.grid.cell(k);
            cell_cost(problem, a, b, &pair.states[k], &pair.states[k + 1], &pair.controls[k])
        })
        .collect()
}

/// `J_t(y, u)`; `+∞` if any quadrature sample or `g(y(T))` is `+∞`.
pub fn evaluate_cost(problem: &ProblemSpec, pair: &AdmissiblePair) -> Result<f64> {
    if pair.states.len() != pair.grid.nodes().len() || pair.controls.len() != pair.grid.cells() {
        return Err(BolzaError::InvalidPair("grid mismatch".into()));
    }
    let residual = if pair.dynamics_residual.is_nan() {
        dynamics_residual(problem, &pair.grid, &pair.states, &pair.controls)
    } else {
        pair.dynamics_residual
    };
    if !(residual <= problem.dynamics_tolerance) {
        return Err(BolzaError::InvalidPair(format!("dynamics residual {residual:e}")));
    }
    let mut total = CompensatedSum::default();
    for c in cell_costs(problem, pair) {
        if c == f64::INFINITY || c.is_nan() {
            return Ok(f64::INFINITY);
        }
        total.add(c);
    }
    let g = problem.terminal.eval(pair.terminal_state());
    if g == f64::INFINITY || g.is_nan() {
        return Ok(f64::INFINITY);
    }
    total.add(g);
    Ok(total.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureBound {
    /// `|{s ∈ [t,T] : |u(s)| < σ}|`.
    pub measure: f64,
    /// `(1 − c_t(B)/σ)(T − t)`.
    pub required: f64,
    pub holds: bool,
}

/// Check `|{|u| < σ}| ≥ (1 − c_t(B)/σ)(T − t)` for a pair with `J_t ≤ B`.
pub fn check_measure_bound(problem: &ProblemSpec, pair: &AdmissiblePair, b: f64, sigma: f64) -> Result<MeasureBound> {
    let lg = problem.model.info().linear_growth;
    let t = pair.grid.t_start();
    let c = compute_c_t_b(t, b, lg.alpha, lg.d, problem.horizon)?;
    if !(sigma > c) {
        return Err(BolzaError::PreconditionViolated(format!(
            "sigma = {sigma} must exceed c_t(B) = {c}"
        )));
    }
    let mut measure = CompensatedSum::default();
    for (k, u) in pair.controls.iter().enumerate() {
        if norm(u) < sigma {
            measure.add(pair.grid.width(k));
        }
    }
    let measure = measure.value();
    let required = (1.0 - c / sigma) * (problem.horizon - t);
    Ok(MeasureBound {
        measure,
        required,
        holds: measure >= required,
    })
}

/// Model reference in a problem file: a built-in name or a descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Builtin(String),
    Descriptor(ModelDescriptor),
}

impl ModelRef {
    pub fn resolve(&self, horizon: f64) -> Result<Model> {
        match self {
            ModelRef::Builtin(name) => builtin_with_horizon(name, horizon),
            ModelRef::Descriptor(d) => {
                let mut d = d.clone();
                d.horizon = horizon;
                Ok(Arc::new(ExprModel::from_descriptor(&d)?))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsSpec {
    Identity,
    Constant { matrix: Vec<Vec<f64>> },
    OnePlusNorm,
    Expr { matrix: Vec<Vec<String>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminalSpec {
    Zero,
    HardEndpoint {
        target: Vec<f64>,
        #[serde(default = "default_endpoint_tol")]
        tol: f64,
    },
    SoftQuadratic {
        target: Vec<f64>,
        #[serde(default = "one")]
        weight: f64,
    },
    Expr {
        expr: String,
    },
}

fn default_endpoint_tol() -> f64 {
    1e-6
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSetSpec {
    Whole,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Expr { expr: String },
}

/// Cost-bound data for the reparametrization: `B`, `δ`, `δ*`, `x*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSpec {
    #[serde(rename = "B")]
    pub b: f64,
    pub delta: f64,
    #[serde(default)]
    pub delta_star: f64,
    #[serde(default)]
    pub x_star: Option<Vec<f64>>,
}

/// JSON form of a problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub t: f64,
    pub x: Vec<f64>,
    pub model: ModelRef,
    #[serde(default = "identity_spec")]
    pub dynamics: DynamicsSpec,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "zero_spec")]
    pub terminal: TerminalSpec,
    #[serde(default = "whole_spec")]
    pub state_set: StateSetSpec,
    #[serde(default = "full_cone")]
    pub control_cone: ControlCone,
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
}

fn identity_spec() -> DynamicsSpec {
    DynamicsSpec::Identity
}
fn zero_spec() -> TerminalSpec {
    TerminalSpec::Zero
}
fn whole_spec() -> StateSetSpec {
    StateSetSpec::Whole
}
fn full_cone() -> ControlCone {
    ControlCone::Full
}

impl ProblemFile {
    pub fn build(&self) -> Result<ProblemSpec> {
        let model = self.model.resolve(self.horizon)?;
        let n = model.info().state_dim;
        let m = model.info().control_dim;
        let state_expr = |s: &str| Expr::parse(s, n, 0);
        let (dynamics, default_theta) = match &self.dynamics {
            DynamicsSpec::Identity => (Dynamics::Identity, 1.0),
            DynamicsSpec::Constant { matrix } => {
                let d = Dynamics::Constant(matrix.clone());
                let th = d.matrix_norm(&[], m);
                (d, th)
            }
            DynamicsSpec::OnePlusNorm => (Dynamics::OnePlusNorm, 1.0),
            DynamicsSpec::Expr { matrix } => {
                let rows = matrix
                    .iter()
                    .map(|r| r.iter().map(|e| state_expr(e)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                (Dynamics::Expr(rows), f64::NAN)
            }
        };
        let theta = match (self.theta, default_theta.is_nan()) {
            (Some(t), _) => t,
            (None, false) => default_theta,
            (None, true) => {
                return Err(BolzaError::Format(
                    "expression dynamics need an explicit `theta`".into(),
                ))
            }
        };
        let terminal = match &self.terminal {
            TerminalSpec::Zero => TerminalCost::Zero,
            TerminalSpec::HardEndpoint { target, tol } => TerminalCost::HardEndpoint {
                target: target.clone(),
                tol: *tol,
            },
            TerminalSpec::SoftQuadratic { target, weight } => TerminalCost::SoftQuadratic {
                target: target.clone(),
                weight: *weight,
            },
            TerminalSpec::Expr { expr } => TerminalCost::Expr(state_expr(expr)?),
        };
        let state_set = match &self.state_set {
            StateSetSpec::Whole => StateSet::Whole,
            StateSetSpec::Ball { center, radius } => StateSet::Ball {
                center: center.clone(),
                radius: *radius,
            },
            StateSetSpec::Box { lo, hi } => StateSet::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            StateSetSpec::Expr { expr } => StateSet::Expr(state_expr(expr)?),
        };
        let control_cone = match &self.control_cone {
            ControlCone::Expr(e) => ControlCone::Expr(Expr::parse(e.source(), 0, m)?),
            other => other.clone(),
        };
        let p = ProblemSpec {
            horizon: self.horizon,
            t: self.t,
            x: self.x.clone(),
            model,
            dynamics,
            theta,
            terminal,
            state_set,
            control_cone,
            dynamics_tolerance: 1e-9,
            rk_substeps: 16,
            quad: QuadConfig::default(),
        };
        p.spot_check()?;
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
