//! The constants `c_t(B)`, `Φ(B)`, `R`, `K`, the sampled quantities
//! `Ξ(ν) = sup P` over large controls and `Υ(c, ρ) = inf P` over small
//! controls well inside the domain, and uniform cost bounds `B`.

use serde::{Deserialize, Serialize};

use crate::error::{BolzaError, Result};
use crate::lagrangian::{norm, numeric_q_auto, radial_intercept, ConditionSData, LagrangianModel, ModelInfo};
use crate::sampling::{ball_points, log_grid, Ray, SampleGrid, SamplerConfig};
use crate::trajectory::{ControlCone, ProblemSpec};

/// `c_t(B) = (B + d(T−t)) / (α(T−t))`.
pub fn compute_c_t_b(t: f64, b: f64, alpha: f64, d: f64, horizon: f64) -> Result<f64> {
    if !(t >= 0.0 && t < horizon) {
        return Err(BolzaError::PreconditionViolated(format!(
            "need 0 <= t < T, got t = {t}, T = {horizon}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(BolzaError::PreconditionViolated(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if b < 0.0 || d < 0.0 {
        return Err(BolzaError::PreconditionViolated("B and d must be nonnegative".into()));
    }
    let span = horizon - t;
    Ok((b + d * span) / (alpha * span))
}

/// `Φ(B) = κB + (A/α)(B + dT) + ‖γ‖₁`.
pub fn compute_phi_b(cs: &ConditionSData, b: f64, alpha: f64, d: f64, horizon: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(BolzaError::PreconditionViolated(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    Ok(cs.kappa * b + cs.a / alpha * (b + d * horizon) + cs.gamma_l1())
}

/// Everything the growth checks and the reparametrization derive from
/// `(δ, δ*, x*, B)` and the model/dynamics constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsContext {
    pub delta: f64,
    pub delta_star: f64,
    pub x_star: Vec<f64>,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "phi_B")]
    pub phi_b: f64,
    #[serde(rename = "c_delta_B")]
    pub c_delta_b: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl BoundsContext {
    pub fn new(info: &ModelInfo, theta: f64, delta: f64, delta_star: f64, x_star: Vec<f64>, b: f64) -> Result<Self> {
        let lg = info.linear_growth;
        let horizon = info.horizon;
        if delta_star < 0.0 {
            return Err(BolzaError::PreconditionViolated(
                "delta_star must be nonnegative".into(),
            ));
        }
        let c_delta_b = compute_c_t_b(delta, b, lg.alpha, lg.d, horizon)?;
        let phi_b = compute_phi_b(&info.condition_s, b, lg.alpha, lg.d, horizon)?;
        let mut ctx = BoundsContext {
            delta,
            delta_star,
            x_star,
            b,
            alpha: lg.alpha,
            d: lg.d,
            theta,
            horizon,
            phi_b,
            c_delta_b,
            r: (b + lg.d * horizon) / lg.alpha,
            k: 0.0,
        };
        ctx.k = gronwall_state_bound(&ctx);
        Ok(ctx)
    }

    /// Context for a problem with `δ = t`, `δ* = 0`, `x* = x`.
    pub fn for_problem(problem: &ProblemSpec, b: f64) -> Result<Self> {
        Self::new(
            problem.model.info(),
            problem.theta,
            problem.t,
            0.0,
            problem.x.clone(),
            b,
        )
    }

    /// Same data with a different cost bound.
    pub fn with_b(&self, b: f64, info: &ModelInfo) -> Result<Self> {
        Self::new(info, self.theta, self.delta, self.delta_star, self.x_star.clone(), b)
    }

    /// `c_t(B)` for some `t ≤ δ`.
    pub fn c_t(&self, t: f64) -> Result<f64> {
        compute_c_t_b(t, self.b, self.alpha, self.d, self.horizon)
    }
}

/// Sup-norm bound for states of pairs with `J_t ≤ B`, `t ≤ δ`, `|x − x*| ≤ δ*`:
/// `K = |x*| + δ* + θ·max(T,1)·R·e^{θR}(|x*| + δ* + 1)`.
pub fn gronwall_state_bound(ctx: &BoundsContext) -> f64 {
    let x0 = norm(&ctx.x_star) + ctx.delta_star;
    let tr = ctx.theta * ctx.r;
    x0 + tr * ctx.horizon.max(1.0) * tr.exp() * (x0 + 1.0)
}

/// A sampled sup or inf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupInfEstimate {
    #[serde(with = "crate::json::extended")]
    pub value: f64,
    pub samples: usize,
    pub max_abs_u: f64,
    /// Change between the last two refinement levels; `nan` if not refined.
    #[serde(with = "crate::json::extended")]
    pub refinement_delta: f64,
}

impl SupInfEstimate {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// One sampling pass; `samples == 0` marks an empty sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    pub value: f64,
    pub samples: usize,
    pub max_abs_u: f64,
    /// Set when the tail trend signalled an unbounded sup.
    pub diverged: bool,
}

fn intercept(model: &dyn LagrangianModel, s: f64, z: &[f64], v: &[f64]) -> Option<f64> {
    match radial_intercept(model, s, z, v) {
        Ok(p) if !p.is_nan() => Some(p),
        Ok(_) => None,
        Err(BolzaError::NoStructure) => {
            let q = numeric_q_auto(model, s, z, v).ok()?;
            let p = model.eval(s, z, v) - q;
            p.is_finite().then_some(p)
        }
        Err(_) => None,
    }
}

#[derive(Debug, Clone, Copy)]
struct RayStats {
    best: f64,
    tail1: f64,
    tail2: f64,
    count: usize,
    max_u: f64,
}

impl RayStats {
    fn new(init: f64) -> Self {
        RayStats {
            best: init,
            tail1: init,
            tail2: init,
            count: 0,
            max_u: 0.0,
        }
    }
}

fn xi_radii(nu: f64, exit: f64, cfg: &SamplerConfig) -> Vec<f64> {
    let hi = cfg.u_max.max(nu);
    let mut radii = log_grid(nu, hi, cfg.magnitudes);
    radii.extend([nu, hi / 10.0, hi / 100.0]);
    if exit.is_finite() {
        radii.extend((1..=cfg.exit_approach).map(|k| exit * (1.0 - 2f64.powi(-(k as i32)))));
    }
    radii.retain(|&r| r >= nu && r <= hi && r < exit);
    radii
}

/// Single-level sampled `sup{P(s,z,v) : s ∈ [0,T], |z| ≤ K, v ∈ 𝒰, |v| ≥ ν}`.
pub fn sample_xi(model: &dyn LagrangianModel, k: f64, nu: f64, cfg: &SamplerConfig) -> RawSample {
    let grid = SampleGrid::new(model, k, cfg);
    let hi = cfg.u_max.max(nu);
    let per_ray = grid.map_rays(model, cfg, |ray: &Ray| {
        let mut st = RayStats::new(f64::NEG_INFINITY);
        for r in xi_radii(nu, ray.exit, cfg) {
            let v = ray.point(r);
            if !model.in_domain(ray.s, ray.z, &v) {
                continue;
            }
            if let Some(p) = intercept(model, ray.s, ray.z, &v) {
                st.count += 1;
                st.max_u = st.max_u.max(r);
                st.best = st.best.max(p);
                if r <= hi / 10.0 {
                    st.tail1 = st.tail1.max(p);
                }
                if r <= hi / 100.0 {
                    st.tail2 = st.tail2.max(p);
                }
            }
        }
        st
    });
    let mut all = RayStats::new(f64::NEG_INFINITY);
    for st in per_ray {
        all.best = all.best.max(st.best);
        all.tail1 = all.tail1.max(st.tail1);
        all.tail2 = all.tail2.max(st.tail2);
        all.count += st.count;
        all.max_u = all.max_u.max(st.max_u);
    }
    let mut diverged = all.best > cfg.divergence_cap;
    if !diverged && hi / 100.0 >= nu && all.tail2.is_finite() {
        let (s0, s1, s2) = (all.best, all.tail1, all.tail2);
        let tol = 1e-9 * (1.0 + s1.abs());
        diverged = s0 > s1 + tol && (s0 - s1) >= 0.9 * (s1 - s2);
    }
    RawSample {
        value: if diverged { f64::INFINITY } else { all.best },
        samples: all.count,
        max_abs_u: all.max_u,
        diverged,
    }
}

/// Largest `r ∈ [0, hi)` on the ray with `dist ≥ ρ`, assuming the distance
/// decreases toward the exit.
fn rho_crossing(model: &dyn LagrangianModel, ray: &Ray, rho: f64, hi: f64) -> Option<f64> {
    let dist = |r: f64| model.dist_to_boundary(ray.s, ray.z, &ray.point(r));
    if dist(0.0) < rho || dist(hi) >= rho {
        return None;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..60 {
        let mid = 0.5 * (lo + up);
        if dist(mid) >= rho {
            lo = mid;
        } else {
            up = mid;
        }
    }
    Some(lo)
}

/// Single-level sampled `inf{P(s,z,v) : |z| ≤ K, v ∈ 𝒰, |v| < c, dist ≥ ρ}`.
/// `ρ = 0` disables the distance filter.
pub fn sample_upsilon(model: &dyn LagrangianModel, k: f64, c: f64, rho: f64, cfg: &SamplerConfig) -> RawSample {
    let grid = SampleGrid::new(model, k, cfg);
    let filter = rho > 0.0 && !model.info().real_valued;
    let per_ray = grid.map_rays(model, cfg, |ray: &Ray| {
        let mut st = RayStats::new(f64::INFINITY);
        let top = c.min(ray.exit);
        let mut radii = vec![0.0];
        radii.extend(log_grid(c * 2f64.powi(-20), c, cfg.magnitudes));
        radii.extend((1..=cfg.exit_approach).map(|j| c * (1.0 - 2f64.powi(-(j as i32)))));
        if ray.exit.is_finite() {
            radii.extend((1..=cfg.exit_approach).map(|j| ray.exit * (1.0 - 2f64.powi(-(j as i32)))));
        }
        if filter {
            if let Some(r) = rho_crossing(model, ray, rho, top) {
                radii.push(r);
            }
        }
        for r in radii {
            if !(r < top) {
                continue;
            }
            let v = ray.point(r);
            if !model.in_domain(ray.s, ray.z, &v) {
                continue;
            }
            if filter && model.dist_to_boundary(ray.s, ray.z, &v) < rho {
                continue;
            }
            if let Some(p) = intercept(model, ray.s, ray.z, &v) {
                st.count += 1;
                st.max_u = st.max_u.max(r);
                st.best = st.best.min(p);
            }
        }
        st
    });
    let mut best = f64::INFINITY;
    let mut count = 0;
    let mut max_u: f64 = 0.0;
    for st in per_ray {
        best = best.min(st.best);
        count += st.count;
        max_u = max_u.max(st.max_u);
    }
    let diverged = best < -cfg.divergence_cap;
    RawSample {
        value: if diverged { f64::NEG_INFINITY } else { best },
        samples: count,
        max_abs_u: max_u,
        diverged,
    }
}

fn refine_levels<F: Fn(&SamplerConfig) -> RawSample>(
    cfg: &SamplerConfig,
    sup: bool,
    what: &str,
    f: F,
) -> Result<SupInfEstimate> {
    let mut value = if sup { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut previous = f64::NAN;
    let mut samples = 0;
    let mut max_u: f64 = 0.0;
    for level in 0..=cfg.refinements {
        let raw = f(&cfg.refined(level));
        samples = raw.samples;
        max_u = max_u.max(raw.max_abs_u);
        if raw.samples == 0 {
            continue;
        }
        if level > 0 {
            previous = value;
        }
        // Refined grids contain the coarser ones, so keep the running extremum.
        value = if sup {
            value.max(raw.value)
        } else {
            value.min(raw.value)
        };
    }
    if samples == 0 {
        return Err(BolzaError::EmptySampleSet(what.to_string()));
    }
    let delta = if cfg.refinements == 0 {
        f64::NAN
    } else if value == previous {
        0.0
    } else {
        value - previous
    };
    Ok(SupInfEstimate {
        value,
        samples,
        max_abs_u: max_u,
        refinement_delta: delta,
    })
}

/// `Ξ(ν)`; refined `cfg.refinements` times with a running sup.
pub fn estimate_xi(model: &dyn LagrangianModel, k: f64, nu: f64, cfg: &SamplerConfig) -> Result<SupInfEstimate> {
    if !(nu > 0.0) {
        return Err(BolzaError::PreconditionViolated(format!(
            "nu must be positive, got {nu}"
        )));
    }
    if cfg.use_closed_forms {
        if let Some(v) = model.closed_form_xi(nu) {
            return Ok(SupInfEstimate {
                value: v,
                samples: 0,
                max_abs_u: nu,
                refinement_delta: 0.0,
            });
        }
    }
    refine_levels(cfg, true, &format!("no in-domain control with |v| >= {nu}"), |c| {
        sample_xi(model, k, nu, c)
    })
}

/// `Υ(c, ρ)`; refined `cfg.refinements` times with a running inf.
pub fn estimate_upsilon(
    model: &dyn LagrangianModel,
    k: f64,
    c: f64,
    rho: f64,
    cfg: &SamplerConfig,
) -> Result<SupInfEstimate> {
    if !(c > 0.0) || rho < 0.0 {
        return Err(BolzaError::PreconditionViolated(format!(
            "need c > 0 and rho >= 0, got c = {c}, rho = {rho}"
        )));
    }
    if cfg.use_closed_forms {
        if let Some(v) = model.closed_form_upsilon(c, rho) {
            return Ok(SupInfEstimate {
                value: v,
                samples: 0,
                max_abs_u: c,
                refinement_delta: 0.0,
            });
        }
    }
    refine_levels(
        cfg,
        false,
        &format!("no control with |v| < {c} at distance >= {rho} from the boundary"),
        |cf| sample_upsilon(model, k, c, rho, cf),
    )
}

/// Which estimate of a uniform cost bound to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum UniformBVariant {
    /// Straight segments to a target `ξ*` with `g(ξ*) < ∞` (needs `b ≡ I`, `𝒰 = ℝ^m`).
    CvConvexS { xi_star: Vec<f64> },
    /// The rest pair `y ≡ x`, `u ≡ 0` (needs `0 ∈ 𝒰`).
    ZeroControl,
    /// A constant control `u*` with unconstrained states.
    FullState { u_star: Vec<f64> },
}

/// Sampled upper bound `B` such that every `(P_{t,x})`, `t ≤ δ`,
/// `|x − x*| ≤ δ*`, has an admissible pair with `J_t ≤ B`.
pub fn compute_uniform_b(
    problem: &ProblemSpec,
    delta: f64,
    delta_star: f64,
    x_star: &[f64],
    variant: &UniformBVariant,
    cfg: &SamplerConfig,
) -> Result<f64> {
    let model = problem.model.as_ref();
    let horizon = problem.horizon;
    if !(delta >= 0.0 && delta < horizon) {
        return Err(BolzaError::PreconditionViolated(format!(
            "need 0 <= delta < T, got {delta}"
        )));
    }
    let times: Vec<f64> = (0..cfg.s_points.max(2))
        .map(|j| horizon * j as f64 / (cfg.s_points.max(2) - 1) as f64)
        .collect();
    let sup_lambda = |zs: &[Vec<f64>], vs: &[Vec<f64>]| -> f64 {
        let mut best = f64::NEG_INFINITY;
        for &s in &times {
            for z in zs {
                for v in vs {
                    let l = model.eval(s, z, v);
                    best = best.max(if l.is_nan() { f64::INFINITY } else { l });
                }
            }
        }
        best
    };
    let sup_g = |zs: &[Vec<f64>]| {
        zs.iter()
            .map(|z| problem.terminal.eval(z))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let m = problem.control_dim();
    let b = match variant {
        UniformBVariant::ZeroControl => {
            let zero = vec![0.0; m];
            if !problem.control_cone.contains(&zero) {
                return Err(BolzaError::VariantInapplicable("0 is not an admissible control".into()));
            }
            let xs = ball_points(x_star, delta_star, cfg.z_points);
            let mut best = f64::NEG_INFINITY;
            for &s in &times {
                for x in &xs {
                    best = best.max(horizon * model.eval(s, x, &zero) + problem.terminal.eval(x));
                }
            }
            best
        }
        UniformBVariant::CvConvexS { xi_star } => {
            if !problem.dynamics.is_identity() || problem.control_cone != ControlCone::Full {
                return Err(BolzaError::VariantInapplicable(
                    "segment estimate needs b = I and an unconstrained control".into(),
                ));
            }
            let g = problem.terminal.eval(xi_star);
            if !g.is_finite() || !problem.state_set.contains(xi_star) {
                return Err(BolzaError::VariantInapplicable(
                    "g(xi*) must be finite with xi* in S".into(),
                ));
            }
            let gap: f64 = xi_star
                .iter()
                .zip(x_star)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let state_radius = (norm(x_star) + delta_star).max(norm(xi_star));
            let speed = (gap + delta_star) / (horizon - delta);
            let zs = ball_points(&vec![0.0; xi_star.len()], state_radius, cfg.z_points);
            let vs = ball_points(&vec![0.0; m], speed, cfg.z_points);
            horizon * sup_lambda(&zs, &vs) + g
        }
        UniformBVariant::FullState { u_star } => {
            if !problem.state_set.is_whole() {
                return Err(BolzaError::VariantInapplicable("needs an unconstrained state".into()));
            }
            if !problem.control_cone.contains(u_star) {
                return Err(BolzaError::VariantInapplicable(
                    "u* is not an admissible control".into(),
                ));
            }
            let (center, radius) = if problem.dynamics.is_identity() {
                (x_star.to_vec(), delta_star + horizon * norm(u_star))
            } else {
                let x0 = norm(x_star) + delta_star;
                (
                    vec![0.0; x_star.len()],
                    (x0 + 1.0) * (problem.theta * norm(u_star) * horizon).exp() - 1.0,
                )
            };
            let zs = ball_points(&center, radius, cfg.z_points);
            horizon * sup_lambda(&zs, std::slice::from_ref(u_star)) + sup_g(&zs)
        }
    };
    Ok(b.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::builtin;

    #[test]
    fn c_t_examples() {
        assert_eq!(compute_c_t_b(0.0, 2.0, 2.0, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(compute_c_t_b(0.0, 0.0, 1.0, 0.0, 1.0).unwrap(), 0.0);
        assert!((compute_c_t_b(0.5, 1.0, 1.0, 1.0, 1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(compute_c_t_b(1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(compute_c_t_b(0.0, 1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn phi_examples() {
        let mut cs = ConditionSData::autonomous(1.0);
        assert_eq!(compute_phi_b(&cs, 5.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        cs.kappa = 1.0;
        assert_eq!(compute_phi_b(&cs, 2.0, 1.0, 0.0, 1.0).unwrap(), 2.0);
        cs.a = 2.0;
        cs.gamma = crate::lagrangian::PiecewiseConstant::constant(0.5, 1.0);
        assert!((compute_phi_b(&cs, 3.0, 2.0, 1.0, 1.0).unwrap() - 7.5).abs() < 1e-15);
    }

    #[test]
    fn gronwall_example() {
        let m = builtin("minimal_length").unwrap();
        let ctx = BoundsContext::new(m.info(), 1.0, 0.0, 0.0, vec![0.0], 1.0).unwrap();
        assert!((ctx.r - 1.0).abs() < 1e-15);
        assert!((ctx.k - std::f64::consts::E).abs() < 1e-12);
        let frozen = BoundsContext::new(m.info(), 0.0, 0.0, 0.25, vec![1.0], 1.0).unwrap();
        assert!((frozen.k - 1.25).abs() < 1e-15);
        let bigger = BoundsContext::new(m.info(), 1.0, 0.0, 0.0, vec![0.0], 2.0).unwrap();
        assert!(bigger.k > ctx.k);
    }

    #[test]
    fn minimal_length_xi_upsilon() {
        let m = builtin("minimal_length").unwrap();
        let cfg = SamplerConfig::default();
        let xi = estimate_xi(m.as_ref(), 1.0, 2.0, &cfg).unwrap();
        assert!((xi.value - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        let up = estimate_upsilon(m.as_ref(), 1.0, 1.0, 0.0, &cfg).unwrap();
        assert!((up.value - 0.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn radial_concave_xi_upsilon() {
        let m = builtin("radial_concave").unwrap();
        let cfg = SamplerConfig::default();
        let xi = estimate_xi(m.as_ref(), 1.0, 1.0, &cfg).unwrap();
        assert!(xi.value <= 0.0 && xi.value >= -1e-3, "{xi:?}");
        let up = estimate_upsilon(m.as_ref(), 1.0, 1.0, 0.5, &cfg).unwrap();
        assert!((up.value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn sqrt_growth_diverges() {
        let d: crate::lagrangian::ModelDescriptor = serde_json::from_str(
            r#"{"name": "sqrt", "state_dim": 1, "control_dim": 1, "expr": "sqrt(abs(u1))",
                "Q_expr": "sqrt(abs(u1))/2", "structure": "PartiallyDifferentiable",
                "linear_growth": {"alpha": 1, "d": 1}}"#,
        )
        .unwrap();
        let m = crate::lagrangian::ExprModel::from_descriptor(&d).unwrap();
        let xi = estimate_xi(&m, 1.0, 1.0, &SamplerConfig::coarse()).unwrap();
        assert_eq!(xi.value, f64::INFINITY);
    }

    #[test]
    fn empty_domain_reported() {
        let m = builtin("hnew_1d").unwrap();
        let mut cfg = SamplerConfig::coarse();
        cfg.cone = ControlCone::Expr(crate::expr::Expr::parse("u1 < 0", 0, 1).unwrap());
        assert!(matches!(
            estimate_xi(m.as_ref(), 1.0, 2.0, &cfg),
            Err(BolzaError::EmptySampleSet(_))
        ));
    }

    #[test]
    fn zero_control_bound() {
        let m = builtin("minimal_length").unwrap();
        let p = ProblemSpec::new(m, 0.0, 1.0, vec![0.0]);
        let b = compute_uniform_b(
            &p,
            0.5,
            0.5,
            &[0.0],
            &UniformBVariant::ZeroControl,
            &SamplerConfig::coarse(),
        )
        .unwrap();
        assert!((b - 1.0).abs() < 1e-15);
    }
}
