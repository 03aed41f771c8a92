//! The Lagrangian contract: extended-valued `Λ(s, y, u)` with a radial
//! subgradient selection or radial derivative, domain geometry, linear
//! growth and Condition (S) data.

mod builtins;
mod descriptor;

pub use builtins::{
    builtin, builtin_names, builtin_with_horizon, DiscontSurface, ExtendedStar, GNotH, HNew1d, MinimalLength,
    RadialConcave,
};
pub use descriptor::{ConditionSDescriptor, ExprModel, ModelDescriptor};

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::estimate_xi;
use crate::error::{BolzaError, Result};
use crate::sampling::SamplerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    RadiallyConvex,
    PartiallyDifferentiable,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGrowth {
    pub alpha: f64,
    pub d: f64,
}

/// Nonnegative piecewise-constant function on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    /// Strictly increasing, `breaks[0] = 0`, last = T.
    pub breaks: Vec<f64>,
    /// One value per piece.
    pub values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn constant(value: f64, horizon: f64) -> Self {
        PiecewiseConstant {
            breaks: vec![0.0, horizon],
            values: vec![value],
        }
    }

    pub fn zero(horizon: f64) -> Self {
        Self::constant(0.0, horizon)
    }

    pub fn value_at(&self, s: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b <= s);
        let idx = k.saturating_sub(1).min(self.values.len() - 1);
        self.values[idx]
    }

    pub fn l1_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| v.abs() * (w[1] - w[0]))
            .sum()
    }
}

/// Constants of Condition (S):
/// `|Λ(s₂,y,u) − Λ(s₁,y,u)| ≤ (κΛ(s,y,u) + A|u| + γ(s))|s₂ − s₁|`
/// whenever `|sᵢ − s| ≤ ε*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSData {
    pub kappa: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub gamma: PiecewiseConstant,
    pub eps_star: f64,
}

impl ConditionSData {
    pub fn autonomous(horizon: f64) -> Self {
        ConditionSData {
            kappa: 0.0,
            a: 0.0,
            gamma: PiecewiseConstant::zero(horizon),
            eps_star: horizon,
        }
    }

    pub fn gamma_l1(&self) -> f64 {
        self.gamma.l1_norm()
    }

    pub fn is_autonomous(&self) -> bool {
        self.kappa == 0.0 && self.a == 0.0 && self.gamma_l1() == 0.0
    }
}

/// Static facts about a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    /// Time horizon `T`; the model is sampled on `s ∈ [0, T]`.
    pub horizon: f64,
    pub state_dim: usize,
    pub control_dim: usize,
    pub structure: Structure,
    pub condition_s: ConditionSData,
    pub linear_growth: LinearGrowth,
    /// `Dom(Λ) = [0,T] × ℝⁿ × D` for a fixed control set `D`.
    pub domain_is_product: bool,
    /// `Λ → +∞` uniformly at the boundary of its domain.
    pub blows_up_at_boundary: bool,
    pub real_valued: bool,
    pub autonomous: bool,
    pub state_independent: bool,
    pub bounded_on_bounded_sets: bool,
    /// Radius `r` with `{|u| ≤ r}` inside the domain, if known.
    pub ball_in_domain: Option<f64>,
    /// `Λ ≥ 0` everywhere it is finite.
    pub nonnegative: bool,
}

pub trait LagrangianModel: Send + Sync + Debug {
    fn info(&self) -> &ModelInfo;

    /// `Λ(s, y, u)`; `+∞` outside the domain.
    fn eval(&self, s: f64, y: &[f64], u: &[f64]) -> f64;

    /// A selection of `∂_r Λ(s, y, r u)` at `r = 1`.
    fn q(&self, _s: f64, _y: &[f64], _u: &[f64]) -> Option<f64> {
        None
    }

    /// The radial derivative `u · ∇_u Λ(s, y, u)`.
    fn du(&self, _s: f64, _y: &[f64], _u: &[f64]) -> Option<f64> {
        None
    }

    fn in_domain(&self, s: f64, y: &[f64], u: &[f64]) -> bool {
        self.eval(s, y, u).is_finite()
    }

    /// Euclidean distance from `(s, y, u)` to the boundary of the domain.
    fn dist_to_boundary(&self, s: f64, y: &[f64], u: &[f64]) -> f64 {
        if self.info().real_valued {
            f64::INFINITY
        } else {
            numeric_control_distance(self, s, y, u)
        }
    }

    /// Exact `Ξ(ν)` when known in closed form.
    fn closed_form_xi(&self, _nu: f64) -> Option<f64> {
        None
    }

    /// Exact `Υ` over `|v| < c` when known in closed form.
    fn closed_form_upsilon(&self, _c: f64, _rho: f64) -> Option<f64> {
        None
    }

    /// Fractions `w ∈ (0, 1)` at which the segment `ya → yb` crosses a jump
    /// of Λ in `y`. Cell quadrature is split there, since a jump near a
    /// cell end can slip between the Gauss–Kronrod nodes.
    fn state_breaks(&self, _ya: &[f64], _yb: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

pub type Model = Arc<dyn LagrangianModel>;

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn scaled(u: &[f64], r: f64) -> Vec<f64> {
    u.iter().map(|x| x * r).collect()
}

/// `P(s,y,u) = Λ − Q` (or `Λ − D_uΛ`): the intercept of the tangent to
/// `r ↦ Λ(s,y,ru)` at `r = 1` with the vertical axis.
pub fn radial_intercept(model: &dyn LagrangianModel, s: f64, y: &[f64], u: &[f64]) -> Result<f64> {
    let l = model.eval(s, y, u);
    if !l.is_finite() {
        return Err(BolzaError::PreconditionViolated(format!(
            "radial intercept requested outside the domain at u = {u:?}"
        )));
    }
    if let Some(q) = model.q(s, y, u) {
        return Ok(l - q);
    }
    if let Some(d) = model.du(s, y, u) {
        return Ok(l - d);
    }
    Err(BolzaError::NoStructure)
}

/// The radial slope used by the growth checks: `Q` if present, else `D_uΛ`.
pub fn radial_slope(model: &dyn LagrangianModel, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
    model.q(s, y, u).or_else(|| model.du(s, y, u))
}

/// Central difference of `r ↦ Λ(s, y, r u)` at `r = 1` with radial step `h`.
pub fn numeric_q(model: &dyn LagrangianModel, s: f64, y: &[f64], u: &[f64], h: f64) -> Result<f64> {
    if !model.in_domain(s, y, u) {
        return Err(BolzaError::PreconditionViolated("numeric_q outside the domain".into()));
    }
    let up = scaled(u, 1.0 + h);
    if !model.in_domain(s, y, &up) {
        return Err(BolzaError::DomainEdge(format!("{up:?}")));
    }
    let down = scaled(u, 1.0 - h);
    Ok((model.eval(s, y, &up) - model.eval(s, y, &down)) / (2.0 * h))
}

/// [`numeric_q`] with the default step `1e-6·max(1,|u|)` in control space,
/// halved near the boundary and falling back to a backward difference.
pub fn numeric_q_auto(model: &dyn LagrangianModel, s: f64, y: &[f64], u: &[f64]) -> Result<f64> {
    let nu = norm(u);
    if nu == 0.0 {
        return Ok(0.0);
    }
    let mut h = 1e-6 * nu.max(1.0) / nu;
    for _ in 0..30 {
        match numeric_q(model, s, y, u, h) {
            Err(BolzaError::DomainEdge(_)) => h *= 0.5,
            other => return other,
        }
    }
    let down = scaled(u, 1.0 - h);
    Ok((model.eval(s, y, u) - model.eval(s, y, &down)) / h)
}

/// Condition (S) data from the proximal bound `|∂ₛΛ| ≤ β(Λ + |u| + 1)`:
/// `κ = A = β'`, `γ ≡ β'`, `ε* = T` with
/// `β' = (e^{2βT} + 1)(e^{2βT} − 1)/(2T)`.
pub fn derive_condition_s_from_proximal(beta: f64, horizon: f64) -> Result<ConditionSData> {
    if beta < 0.0 || horizon <= 0.0 || !beta.is_finite() {
        return Err(BolzaError::PreconditionViolated(format!(
            "need beta >= 0 and T > 0, got beta = {beta}, T = {horizon}"
        )));
    }
    if beta == 0.0 {
        return Ok(ConditionSData::autonomous(horizon));
    }
    let e = (2.0 * beta * horizon).exp();
    // (e+1)(e-1) = e^2 - 1, computed via expm1 to keep small β accurate
    let beta_prime = (e + 1.0) * (2.0 * beta * horizon).exp_m1() / (2.0 * horizon);
    Ok(ConditionSData {
        kappa: beta_prime,
        a: beta_prime,
        gamma: PiecewiseConstant::constant(beta_prime, horizon),
        eps_star: horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGrowthSearch {
    pub r_max: f64,
}

impl Default for LinearGrowthSearch {
    fn default() -> Self {
        LinearGrowthSearch {
            r_max: (1u64 << 20) as f64,
        }
    }
}

/// Search `R = 1, 2, 4, …` until `Q − Λ ≥ 1` on sampled `|w| ≥ R`, `|y| ≤ K`,
/// then return `(α, d) = (1/R, 2)`.
pub fn extract_linear_growth_from_g(
    model: &dyn LagrangianModel,
    k: f64,
    search: &LinearGrowthSearch,
    sampler: &SamplerConfig,
) -> Result<LinearGrowth> {
    let mut r = 1.0;
    while r <= search.r_max {
        let xi = estimate_xi(model, k, r, sampler)?;
        if xi.value <= -1.0 {
            return Ok(LinearGrowth { alpha: 1.0 / r, d: 2.0 });
        }
        r *= 2.0;
    }
    Err(BolzaError::NotFound { r_max: search.r_max })
}

/// Distance in control space to the boundary of `{v : (s,y,v) ∈ Dom}`,
/// estimated by bisection along 64 directions around `u`.
pub fn numeric_control_distance<M: LagrangianModel + ?Sized>(model: &M, s: f64, y: &[f64], u: &[f64]) -> f64 {
    if !model.in_domain(s, y, u) {
        return 0.0;
    }
    let m = u.len();
    let dirs = crate::sampling::sphere_directions(m, 64);
    let mut best = f64::INFINITY;
    for d in &dirs {
        let probe = |t: f64| -> bool {
            let v: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + t * b).collect();
            model.in_domain(s, y, &v)
        };
        let mut hi = 1.0;
        while probe(hi) && hi < 1e6 {
            hi *= 2.0;
        }
        if probe(hi) {
            continue;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if probe(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.min(hi);
    }
    best
}
