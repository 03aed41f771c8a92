//! Direct minimization over piecewise-constant controls, minimizing
//! sequences pushed through [`nice_pair`](crate::reparam::nice_pair), and a
//! numerical Lavrentiev-gap probe.
//!
//! The optimizer is derivative-free: Λ may jump in `y` and `u`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::BoundsContext;
use crate::error::{BolzaError, Result};
use crate::exec::{map_range, ExecMode};
use crate::growth::GrowthCertificate;
use crate::json::fmt_f64;
use crate::lagrangian::norm;
use crate::reparam::{nice_pair, NicePairOptions, ReparamCertificate, ReparamOverrides, ReparamPlan};
use crate::trajectory::{
    cell_cost, evaluate_cost, rk_cell, AdmissiblePair, CompensatedSum, ControlCone, ControlSignal, ProblemSpec,
    TerminalCost, TimeGrid,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeConfig {
    /// Uniform cell counts, strictly increasing.
    pub grid_ladder: Vec<usize>,
    /// Caps on `|u|`, strictly increasing.
    pub control_bound_ladder: Vec<f64>,
    /// Sweeps per start.
    pub inner_iters: usize,
    /// Random starts on top of the deterministic one.
    pub restarts: usize,
    pub seed: u64,
    /// Relative gap tolerance of the Lavrentiev verdict.
    pub gap_rel_tol: f64,
    pub mode: ExecMode,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            grid_ladder: vec![16, 32, 64, 128, 256],
            control_bound_ladder: vec![2.0, 4.0, 8.0, 16.0],
            inner_iters: 40,
            restarts: 2,
            seed: 0,
            gap_rel_tol: 1e-3,
            mode: ExecMode::default(),
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BolzaError::PreconditionViolated(m.to_string()));
        if self.grid_ladder.is_empty() || self.grid_ladder.windows(2).any(|w| w[0] >= w[1]) || self.grid_ladder[0] == 0
        {
            return bad("grid_ladder must be nonempty, positive and strictly increasing");
        }
        let b = &self.control_bound_ladder;
        if b.is_empty() || b.windows(2).any(|w| !(w[0] < w[1])) || !(b[0] > 0.0) {
            return bad("control_bound_ladder must be nonempty, positive and strictly increasing");
        }
        if self.inner_iters == 0 {
            return bad("inner_iters must be positive");
        }
        Ok(())
    }
}

fn project(cone: &ControlCone, bound: f64, u: &mut [f64]) {
    if matches!(cone, ControlCone::NonnegativeOrthant) {
        u.iter_mut().for_each(|x| *x = x.max(0.0));
    }
    let r = norm(u);
    if r > bound {
        u.iter_mut().for_each(|x| *x *= bound / r);
        while norm(u) > bound {
            u.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
        }
    }
}

/// Incremental cost of a control vector; states are recomputed from the
/// first changed cell on and cell costs only where something moved.
struct Search<'a> {
    problem: &'a ProblemSpec,
    nodes: Vec<f64>,
    bound: f64,
    identity: bool,
    state_dependent: bool,
    controls: Vec<Vec<f64>>,
    states: Vec<Vec<f64>>,
    costs: Vec<f64>,
    total: f64,
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-13 * (1.0 + x.abs()))
}

impl<'a> Search<'a> {
    fn new(problem: &'a ProblemSpec, grid: &TimeGrid, bound: f64, controls: Vec<Vec<f64>>) -> Self {
        let info = problem.model.info();
        let mut s = Search {
            problem,
            nodes: grid.nodes().to_vec(),
            bound,
            identity: problem.dynamics.is_identity(),
            state_dependent: !info.state_independent,
            controls,
            states: Vec::new(),
            costs: Vec::new(),
            total: f64::INFINITY,
        };
        s.reset();
        s
    }

    fn step(&self, k: usize, y: &[f64], u: &[f64]) -> Vec<f64> {
        let h = self.nodes[k + 1] - self.nodes[k];
        if self.identity {
            y.iter().zip(u).map(|(a, b)| a + h * b).collect()
        } else {
            rk_cell(&self.problem.dynamics, self.problem.rk_substeps, y, u, h)
        }
    }

    fn admissible_control(&self, u: &[f64]) -> bool {
        norm(u) <= self.bound * (1.0 + 1e-12) && self.problem.control_cone.contains(u)
    }

    fn reset(&mut self) {
        let n = self.controls.len();
        let mut states = Vec::with_capacity(n + 1);
        states.push(self.problem.x.clone());
        for k in 0..n {
            let next = self.step(k, &states[k], &self.controls[k]);
            states.push(next);
        }
        self.costs = (0..n)
            .map(|k| {
                if !self.admissible_control(&self.controls[k]) {
                    return f64::INFINITY;
                }
                cell_cost(
                    self.problem,
                    self.nodes[k],
                    self.nodes[k + 1],
                    &states[k],
                    &states[k + 1],
                    &self.controls[k],
                )
            })
            .collect();
        self.states = states;
        self.total = self.sum(&self.costs, &self.states[n]);
    }

    fn sum(&self, costs: &[f64], terminal: &[f64]) -> f64 {
        if !self.problem.state_set.is_whole() && !self.states.iter().all(|y| self.problem.state_set.contains(y)) {
            return f64::INFINITY;
        }
        let mut acc = CompensatedSum::default();
        for &c in costs {
            if !(c < f64::INFINITY) {
                return f64::INFINITY;
            }
            acc.add(c);
        }
        let g = self.problem.terminal.eval(terminal);
        if !(g < f64::INFINITY) {
            return f64::INFINITY;
        }
        acc.add(g);
        acc.value()
    }

    /// Cost with cells `lo..lo + new.len()` replaced by `new`.
    fn trial(&self, lo: usize, new: &[Vec<f64>]) -> f64 {
        let n = self.controls.len();
        let hi = lo + new.len();
        if new.iter().any(|u| !self.admissible_control(u)) {
            return f64::INFINITY;
        }
        let whole = self.problem.state_set.is_whole();
        let mut y = self.states[lo].clone();
        let mut acc = CompensatedSum::default();
        for c in &self.costs[..lo] {
            acc.add(*c);
        }
        let mut k = lo;
        while k < n {
            let moved = k < hi;
            let u = if moved { &new[k - lo][..] } else { &self.controls[k][..] };
            let next = self.step(k, &y, u);
            if !whole && !self.problem.state_set.contains(&next) {
                return f64::INFINITY;
            }
            let drifted = self.state_dependent && !(close(&y, &self.states[k]) && close(&next, &self.states[k + 1]));
            let c = if moved || drifted {
                cell_cost(self.problem, self.nodes[k], self.nodes[k + 1], &y, &next, u)
            } else {
                self.costs[k]
            };
            if !(c < f64::INFINITY) {
                return f64::INFINITY;
            }
            acc.add(c);
            k += 1;
            if !moved && close(&next, &self.states[k]) {
                // back on the stored trajectory: the rest is cached
                for c in &self.costs[k..] {
                    acc.add(*c);
                }
                y = self.states[n].clone();
                break;
            }
            y = next;
        }
        let g = self.problem.terminal.eval(&y);
        if !(g < f64::INFINITY) {
            return f64::INFINITY;
        }
        acc.add(g);
        acc.value()
    }

    /// Replace cells `lo..lo + new.len()` and refresh the cached trajectory.
    fn accept(&mut self, lo: usize, new: Vec<Vec<f64>>) {
        for (i, u) in new.into_iter().enumerate() {
            self.controls[lo + i] = u;
        }
        self.reset();
    }

    /// Admissible range of coordinate `j` of cell `k`.
    fn coord_range(&self, k: usize, j: usize) -> (f64, f64) {
        let u = &self.controls[k];
        let rest: f64 = u.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, x)| x * x).sum();
        let r = (self.bound * self.bound - rest).max(0.0).sqrt();
        let lo = if matches!(self.problem.control_cone, ControlCone::NonnegativeOrthant) {
            0.0
        } else {
            -r
        };
        (lo, r)
    }
}

/// Minimize `f` on `[lo, hi]` given `f(x0) = f0`: a 9-point scan then golden
/// section inside the best bracket. Returns the best point seen.
fn line_search<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x0: f64, f0: f64) -> (f64, f64) {
    if !(hi > lo) {
        return (x0, f0);
    }
    let mut pts: Vec<(f64, f64)> = (0..9)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 8.0;
            (x, f(x))
        })
        .collect();
    pts.push((x0, f0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = (0..pts.len()).min_by(|&a, &b| pts[a].1.total_cmp(&pts[b].1)).unwrap();
    let (mut bx, mut bf) = pts[best];
    if !bf.is_finite() {
        return (x0, f0);
    }
    let mut a = pts[best.saturating_sub(1)].0;
    let mut b = pts[(best + 1).min(pts.len() - 1)].0;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let tol = 1e-11 * (1.0 + hi.abs().max(lo.abs()));
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < bf {
            bx = x;
            bf = v;
        }
    }
    (bx, bf)
}

/// Line search along `u_k[j] += δ·coef_k` for the listed cells
/// (contiguous from `lo`). Accepts the move if it lowers the cost.
fn block_move(s: &mut Search, lo: usize, coef: &[f64], j: usize) {
    let (mut dlo, mut dhi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, &c) in coef.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let (l, h) = s.coord_range(lo + i, j);
        let x = s.controls[lo + i][j];
        let (a, b) = ((l - x) / c, (h - x) / c);
        dlo = dlo.max(a.min(b));
        dhi = dhi.min(a.max(b));
    }
    if !(dhi > dlo) || !dlo.is_finite() || !dhi.is_finite() {
        return;
    }
    let f0 = s.total;
    let base: Vec<Vec<f64>> = s.controls[lo..lo + coef.len()].to_vec();
    let shifted = |d: f64| -> Vec<Vec<f64>> {
        base.iter()
            .zip(coef)
            .map(|(u, c)| {
                let mut v = u.clone();
                v[j] += d * c;
                v
            })
            .collect()
    };
    let (d, fd) = line_search(|d| s.trial(lo, &shifted(d)), dlo.min(0.0), dhi.max(0.0), 0.0, f0);
    if fd < f0 && d != 0.0 {
        let new = shifted(d);
        s.accept(lo, new);
    }
}

/// One pass of coordinate and multi-scale block moves.
///
/// With `b ≡ I` the block moves are Haar pairs: the displacement `δ` is
/// taken from one block of cells and given to the adjacent one, so `y(T)`
/// is preserved and hard endpoints stay satisfied. Otherwise (and for
/// free endpoints) single cells and aligned blocks are shifted as a whole.
fn sweep(s: &mut Search) -> bool {
    let n = s.controls.len();
    let m = s.controls[0].len();
    let start = s.total;
    let hard_end = s.identity && matches!(s.problem.terminal, TerminalCost::HardEndpoint { .. });
    if !hard_end {
        let mut len = 1;
        while len <= n {
            let step = len.max(1);
            let mut i = 0;
            while i < n {
                let l = len.min(n - i);
                for j in 0..m {
                    block_move(s, i, &vec![1.0; l], j);
                }
                i += step;
            }
            len *= 2;
        }
    }
    if s.identity {
        let mut len = n / 2;
        while len >= 1 {
            let step = (len / 2).max(1);
            let mut i = 0;
            while i + len < n {
                let l2 = len.min(n - i - len);
                let wa: f64 = (i..i + len).map(|k| s.nodes[k + 1] - s.nodes[k]).sum();
                let wb: f64 = (i + len..i + len + l2).map(|k| s.nodes[k + 1] - s.nodes[k]).sum();
                let mut coef = vec![1.0 / wa; len];
                coef.extend(std::iter::repeat_n(-1.0 / wb, l2));
                for j in 0..m {
                    block_move(s, i, &coef, j);
                }
                i += step;
            }
            len /= 2;
        }
    }
    s.total < start - 1e-13 * (1.0 + start.abs())
}

fn terminal_target(problem: &ProblemSpec) -> Option<&[f64]> {
    match &problem.terminal {
        TerminalCost::HardEndpoint { target, .. } | TerminalCost::SoftQuadratic { target, .. } => Some(target),
        _ => None,
    }
}

/// Controls of `pair` sampled at the cell midpoints of `grid`.
pub fn resample_controls(pair: &AdmissiblePair, grid: &TimeGrid) -> Vec<Vec<f64>> {
    let src = pair.grid.nodes();
    (0..grid.cells())
        .map(|k| {
            let (a, b) = grid.cell(k);
            let mid = 0.5 * (a + b);
            let idx = src.partition_point(|&x| x <= mid).clamp(1, src.len() - 1) - 1;
            pair.controls[idx].clone()
        })
        .collect()
}

fn starts(problem: &ProblemSpec, grid: &TimeGrid, bound: f64, config: &MinimizeConfig) -> Vec<Vec<Vec<f64>>> {
    let n = grid.cells();
    let m = problem.control_dim();
    let span = problem.horizon - problem.t;
    let mut base = vec![0.0; m];
    if problem.dynamics.is_identity() {
        if let Some(target) = terminal_target(problem) {
            base = target.iter().zip(&problem.x).map(|(a, b)| (a - b) / span).collect();
        }
    }
    project(&problem.control_cone, bound, &mut base);
    let keep_displacement =
        problem.dynamics.is_identity() && matches!(problem.terminal, TerminalCost::HardEndpoint { .. });
    let mut out = vec![vec![base.clone(); n]];
    for r in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64));
        let mut u: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                base.iter()
                    .map(|b| b + 0.25 * bound * rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        if keep_displacement {
            for j in 0..m {
                let mean: f64 = (0..n).map(|k| u[k][j] * grid.width(k)).sum::<f64>() / span;
                u.iter_mut().for_each(|v| v[j] += base[j] - mean);
            }
        }
        u.iter_mut().for_each(|v| project(&problem.control_cone, bound, v));
        out.push(u);
    }
    out
}

fn descend(
    problem: &ProblemSpec,
    grid: &TimeGrid,
    bound: f64,
    controls: Vec<Vec<f64>>,
    iters: usize,
) -> (Vec<Vec<f64>>, f64) {
    let mut s = Search::new(problem, grid, bound, controls);
    if !s.total.is_finite() {
        return (s.controls, f64::INFINITY);
    }
    for _ in 0..iters {
        if !sweep(&mut s) {
            break;
        }
    }
    (s.controls, s.total)
}

/// Best pair found on `grid` with `|u| ≤ control_bound`.
pub fn minimize_direct(
    problem: &ProblemSpec,
    grid: &TimeGrid,
    control_bound: f64,
    config: &MinimizeConfig,
) -> Result<AdmissiblePair> {
    minimize_from(problem, grid, control_bound, config, &[])
}

/// [`minimize_direct`] with extra starting pairs (resampled onto `grid`).
pub fn minimize_from(
    problem: &ProblemSpec,
    grid: &TimeGrid,
    control_bound: f64,
    config: &MinimizeConfig,
    warm: &[&AdmissiblePair],
) -> Result<AdmissiblePair> {
    if !(control_bound > 0.0) {
        return Err(BolzaError::PreconditionViolated(
            "control bound must be positive".into(),
        ));
    }
    let mut all = starts(problem, grid, control_bound, config);
    for w in warm {
        let mut u = resample_controls(w, grid);
        u.iter_mut()
            .for_each(|v| project(&problem.control_cone, control_bound, v));
        all.push(u);
    }
    let results = map_range(config.mode, all.len(), |i| {
        descend(problem, grid, control_bound, all[i].clone(), config.inner_iters)
    });
    let best = results
        .into_iter()
        .filter(|r| r.1.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(BolzaError::NoAdmissiblePoint)?;
    let signal = ControlSignal::new(grid.clone(), best.0)?;
    AdmissiblePair::from_control(problem, signal)
}

/// Minimize along the grid ladder at the largest control bound, then
/// reparametrize every rung with one shared plan.
pub fn minimizing_sequence(
    problem: &ProblemSpec,
    ctx: &BoundsContext,
    certificate: &GrowthCertificate,
    config: &MinimizeConfig,
) -> Result<Vec<(AdmissiblePair, ReparamCertificate)>> {
    config.validate()?;
    let plan = ReparamPlan::new(problem, ctx, certificate, 0.0, ReparamOverrides::default())?;
    let bound = *config.control_bound_ladder.last().unwrap();
    let opts = NicePairOptions {
        sampler: crate::sampling::SamplerConfig::coarse(),
        ..NicePairOptions::default()
    };
    let mut out = Vec::new();
    let mut prev: Option<AdmissiblePair> = None;
    for &cells in &config.grid_ladder {
        let grid = TimeGrid::uniform(problem.t, problem.horizon, cells)?;
        let warm: Vec<&AdmissiblePair> = prev.iter().collect();
        let pair = minimize_from(problem, &grid, bound, config, &warm)?;
        let nice = nice_pair(problem, &pair, &plan, &opts)?;
        prev = Some(pair);
        out.push(nice);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapVerdict {
    NoGapDetected,
    GapSuspected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeEntry {
    pub cells: usize,
    pub bound: f64,
    #[serde(with = "crate::json::extended")]
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub lattice: Vec<LatticeEntry>,
    /// Grid-extrapolated inf at the largest bound.
    #[serde(with = "crate::json::extended")]
    pub bounded_inf: f64,
    /// Extrapolated along the diagonal of the lattice.
    #[serde(with = "crate::json::extended")]
    pub unconstrained_inf: f64,
    #[serde(with = "crate::json::extended")]
    pub gap_estimate: f64,
    pub gap_tol: f64,
    pub verdict: GapVerdict,
    /// Lattice cells that beat their finer-grid or larger-bound neighbour
    /// by more than the solver noise.
    pub monotonicity_violations: usize,
    pub caveat: String,
}

impl GapReport {
    pub fn cost(&self, cells: usize, bound: f64) -> Option<f64> {
        self.lattice
            .iter()
            .find(|e| e.cells == cells && e.bound == bound)
            .map(|e| e.cost)
    }

    pub fn write_lattice_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cells", "bound", "cost"])?;
        for e in &self.lattice {
            w.write_record([e.cells.to_string(), fmt_f64(e.bound), fmt_f64(e.cost)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Last-two-rungs Richardson extrapolation, first order in the cell width.
fn richardson(n1: usize, c1: f64, n2: usize, c2: f64) -> f64 {
    if !(c1.is_finite() && c2.is_finite()) {
        return c2;
    }
    let r = n2 as f64 / n1 as f64;
    c2 + (c2 - c1) / (r - 1.0)
}

/// Absolute solver noise used for the monotonicity bookkeeping.
pub const SOLVER_NOISE: f64 = 1e-6;

/// Best costs over the (grid × bound) lattice and the gap between the
/// bounded-control class and the unconstrained limit.
pub fn lavrentiev_probe(problem: &ProblemSpec, config: &MinimizeConfig) -> Result<GapReport> {
    config.validate()?;
    let grids = &config.grid_ladder;
    let bounds = &config.control_bound_ladder;
    // table[b][g]; each cell warm-starts from its coarser and smaller-bound neighbours
    let mut pairs: Vec<Vec<Option<AdmissiblePair>>> = vec![vec![None; grids.len()]; bounds.len()];
    let mut table = vec![vec![f64::INFINITY; grids.len()]; bounds.len()];
    for (bi, &bound) in bounds.iter().enumerate() {
        for (gi, &cells) in grids.iter().enumerate() {
            let grid = TimeGrid::uniform(problem.t, problem.horizon, cells)?;
            let mut warm = Vec::new();
            if gi > 0 {
                warm.extend(pairs[bi][gi - 1].as_ref());
            }
            if bi > 0 {
                warm.extend(pairs[bi - 1][gi].as_ref());
            }
            match minimize_from(problem, &grid, bound, config, &warm) {
                Ok(p) => {
                    table[bi][gi] = evaluate_cost(problem, &p)?;
                    pairs[bi][gi] = Some(p);
                }
                Err(BolzaError::NoAdmissiblePoint) => {}
                Err(e) => return Err(e),
            }
        }
    }
    // second pass: every cell also starts from all solutions on coarser or
    // equal grids at any bound, so one cell's escape from a local minimum
    // propagates through the lattice
    let polish = MinimizeConfig {
        restarts: 0,
        ..config.clone()
    };
    for (bi, &bound) in bounds.iter().enumerate() {
        for (gi, &cells) in grids.iter().enumerate() {
            let grid = TimeGrid::uniform(problem.t, problem.horizon, cells)?;
            let warm: Vec<&AdmissiblePair> = pairs.iter().flat_map(|row| row[..=gi].iter().flatten()).collect();
            if warm.is_empty() {
                continue;
            }
            if let Ok(p) = minimize_from(problem, &grid, bound, &polish, &warm) {
                let j = evaluate_cost(problem, &p)?;
                if j < table[bi][gi] {
                    table[bi][gi] = j;
                    pairs[bi][gi] = Some(p);
                }
            }
        }
    }
    let mut violations = 0;
    for bi in 0..bounds.len() {
        for gi in 0..grids.len() {
            let c = table[bi][gi];
            if gi + 1 < grids.len() && table[bi][gi + 1] > c + SOLVER_NOISE {
                violations += 1;
            }
            if bi + 1 < bounds.len() && table[bi + 1][gi] > c + SOLVER_NOISE {
                violations += 1;
            }
        }
    }
    let last_b = bounds.len() - 1;
    let g = grids.len();
    let bounded_inf = if g >= 2 {
        richardson(grids[g - 2], table[last_b][g - 2], grids[g - 1], table[last_b][g - 1])
    } else {
        table[last_b][0]
    };
    let diag = g.min(bounds.len());
    let unconstrained_inf = if diag >= 2 {
        richardson(
            grids[diag - 2],
            table[diag - 2][diag - 2],
            grids[diag - 1],
            table[diag - 1][diag - 1],
        )
    } else {
        table[0][0]
    };
    let (gap_estimate, verdict) = match (bounded_inf.is_finite(), unconstrained_inf.is_finite()) {
        (true, true) => {
            let gap = bounded_inf - unconstrained_inf;
            let tol = config.gap_rel_tol * (1.0 + unconstrained_inf.abs());
            (
                gap,
                if gap <= tol {
                    GapVerdict::NoGapDetected
                } else {
                    GapVerdict::GapSuspected
                },
            )
        }
        (false, true) => (f64::INFINITY, GapVerdict::GapSuspected),
        _ => (f64::NAN, GapVerdict::NoGapDetected),
    };
    let lattice = bounds
        .iter()
        .enumerate()
        .flat_map(|(bi, &bound)| {
            let table = &table;
            grids.iter().enumerate().map(move |(gi, &cells)| LatticeEntry {
                cells,
                bound,
                cost: table[bi][gi],
            })
        })
        .collect();
    let mut caveat = String::from(
        "piecewise-constant controls on uniform grids; convergence of the lattice inf to the inf over absolutely continuous pairs is assumed",
    );
    if !unconstrained_inf.is_finite() {
        caveat.push_str("; no admissible point on the diagonal, verdict carries no information");
    }
    Ok(GapReport {
        lattice,
        bounded_inf,
        unconstrained_inf,
        gap_estimate,
        gap_tol: config.gap_rel_tol
            * (1.0
                + if unconstrained_inf.is_finite() {
                    unconstrained_inf.abs()
                } else {
                    0.0
                }),
        verdict,
        monotonicity_violations: violations,
        caveat,
    })
}
