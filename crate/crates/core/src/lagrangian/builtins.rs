//! The catalog of worked-example Lagrangians.

use std::sync::Arc;

use super::{norm, ConditionSData, LagrangianModel, LinearGrowth, Model, ModelInfo, Structure};
use crate::error::{BolzaError, Result};

const NAMES: [&str; 6] = [
    "minimal_length",
    "discont_surface",
    "hnew_1d",
    "g_not_h",
    "radial_concave",
    "extended_star",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

/// Built-in model on the default horizon `T = 1`.
pub fn builtin(name: &str) -> Result<Model> {
    builtin_with_horizon(name, 1.0)
}

/// Built-in model whose Condition (S) data refers to the horizon `[0, T]`.
pub fn builtin_with_horizon(name: &str, horizon: f64) -> Result<Model> {
    Ok(match name {
        "minimal_length" => Arc::new(MinimalLength::new(1, horizon)),
        "discont_surface" => Arc::new(DiscontSurface::new(0.02, horizon)),
        "hnew_1d" => Arc::new(HNew1d::new(horizon)),
        "g_not_h" => Arc::new(GNotH::new(horizon)),
        "radial_concave" => Arc::new(RadialConcave::new(horizon)),
        "extended_star" => Arc::new(ExtendedStar::new(horizon)),
        other => return Err(BolzaError::UnknownName(other.to_string())),
    })
}

fn base_info(name: &str, n: usize, m: usize, horizon: f64) -> ModelInfo {
    ModelInfo {
        name: name.to_string(),
        horizon,
        state_dim: n,
        control_dim: m,
        structure: Structure::Both,
        condition_s: ConditionSData::autonomous(horizon),
        linear_growth: LinearGrowth { alpha: 1.0, d: 0.0 },
        domain_is_product: true,
        blows_up_at_boundary: false,
        real_valued: true,
        autonomous: true,
        state_independent: true,
        bounded_on_bounded_sets: true,
        ball_in_domain: Some(f64::INFINITY),
        nonnegative: true,
    }
}

/// `√(1 + |u|²)`, the length of the graph.
#[derive(Debug, Clone)]
pub struct MinimalLength {
    info: ModelInfo,
}

impl MinimalLength {
    pub fn new(dim: usize, horizon: f64) -> Self {
        MinimalLength {
            info: base_info("minimal_length", dim, dim, horizon),
        }
    }
}

impl LagrangianModel for MinimalLength {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn eval(&self, _s: f64, _y: &[f64], u: &[f64]) -> f64 {
        let r = norm(u);
        (1.0 + r * r).sqrt()
    }

    fn q(&self, _s: f64, _y: &[f64], u: &[f64]) -> Option<f64> {
        let r = norm(u);
        Some(r * r / (1.0 + r * r).sqrt())
    }

    fn du(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        self.q(s, y, u)
    }

    fn closed_form_xi(&self, nu: f64) -> Option<f64> {
        Some(1.0 / (1.0 + nu * nu).sqrt())
    }

    fn closed_form_upsilon(&self, c: f64, _rho: f64) -> Option<f64> {
        Some(1.0 / (1.0 + c * c).sqrt())
    }
}

/// `φ(s) a(y) √(1 + |u|²)` on `ℝ² × ℝ²` with `φ(s) = 1 + λs` and the
/// discontinuous weight `a(y) = 1 + [y₁ > 0]`.
#[derive(Debug, Clone)]
pub struct DiscontSurface {
    info: ModelInfo,
    lambda: f64,
}

impl DiscontSurface {
    pub fn new(lambda: f64, horizon: f64) -> Self {
        let mut info = base_info("discont_surface", 2, 2, horizon);
        // ‖φ'‖∞ / min φ with φ(s) = 1 + λs, λ ≥ 0
        info.condition_s.kappa = lambda;
        info.autonomous = lambda == 0.0;
        info.state_independent = false;
        DiscontSurface { info, lambda }
    }

    pub fn phi(&self, s: f64) -> f64 {
        1.0 + self.lambda * s
    }

    pub fn weight(&self, y: &[f64]) -> f64 {
        if y[0] > 0.0 {
            2.0
        } else {
            1.0
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl LagrangianModel for DiscontSurface {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn eval(&self, s: f64, y: &[f64], u: &[f64]) -> f64 {
        let r = norm(u);
        self.phi(s) * self.weight(y) * (1.0 + r * r).sqrt()
    }

    fn state_breaks(&self, ya: &[f64], yb: &[f64]) -> Vec<f64> {
        if (ya[0] > 0.0) != (yb[0] > 0.0) {
            let w = ya[0] / (ya[0] - yb[0]);
            if w > 0.0 && w < 1.0 {
                return vec![w];
            }
        }
        Vec::new()
    }

    fn q(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        let r = norm(u);
        Some(self.phi(s) * self.weight(y) * r * r / (1.0 + r * r).sqrt())
    }

    fn du(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        self.q(s, y, u)
    }
}

/// Scalar `1/(1 − u²)` on `(−1, 0]`, `u² + 1` on `(0, ∞)`, `+∞` for `u ≤ −1`.
#[derive(Debug, Clone)]
pub struct HNew1d {
    info: ModelInfo,
}

impl HNew1d {
    pub fn new(horizon: f64) -> Self {
        let mut info = base_info("hnew_1d", 1, 1, horizon);
        info.linear_growth = LinearGrowth { alpha: 2.0, d: 0.0 };
        info.real_valued = false;
        info.blows_up_at_boundary = true;
        info.bounded_on_bounded_sets = false;
        info.ball_in_domain = Some(0.5);
        HNew1d { info }
    }
}

impl LagrangianModel for HNew1d {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn eval(&self, _s: f64, _y: &[f64], u: &[f64]) -> f64 {
        let v = u[0];
        if v > 0.0 {
            v * v + 1.0
        } else if v > -1.0 {
            1.0 / (1.0 - v * v)
        } else {
            f64::INFINITY
        }
    }

    fn q(&self, _s: f64, _y: &[f64], u: &[f64]) -> Option<f64> {
        let v = u[0];
        if v > 0.0 {
            Some(2.0 * v * v)
        } else if v > -1.0 {
            let w = 1.0 - v * v;
            Some(2.0 * v * v / (w * w))
        } else {
            None
        }
    }

    fn du(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        self.q(s, y, u)
    }

    fn in_domain(&self, _s: f64, _y: &[f64], u: &[f64]) -> bool {
        u[0] > -1.0
    }

    fn dist_to_boundary(&self, _s: f64, _y: &[f64], u: &[f64]) -> f64 {
        (u[0] + 1.0).max(0.0)
    }
}

/// `(u₁² + u₂²) u₂/u₁` on the wedge `0 < u₁ ≤ u₂`, `|u|²` elsewhere.
#[derive(Debug, Clone)]
pub struct GNotH {
    info: ModelInfo,
}

impl GNotH {
    pub fn new(horizon: f64) -> Self {
        let mut info = base_info("g_not_h", 2, 2, horizon);
        // |u|² ≥ |u| − 1/4
        info.linear_growth = LinearGrowth { alpha: 1.0, d: 0.25 };
        info.bounded_on_bounded_sets = false;
        GNotH { info }
    }
}

impl LagrangianModel for GNotH {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn eval(&self, _s: f64, _y: &[f64], u: &[f64]) -> f64 {
        let q = u[0] * u[0] + u[1] * u[1];
        if u[0] > 0.0 && u[0] <= u[1] {
            q * u[1] / u[0]
        } else {
            q
        }
    }

    // 2-homogeneous, so the radial derivative is 2Λ
    fn q(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        Some(2.0 * self.eval(s, y, u))
    }

    fn du(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        self.q(s, y, u)
    }
}

/// Scalar `2|u| − √(1 + u²)`: radially concave on `[0, ∞)`, negative at 0.
#[derive(Debug, Clone)]
pub struct RadialConcave {
    info: ModelInfo,
}

impl RadialConcave {
    pub fn new(horizon: f64) -> Self {
        let mut info = base_info("radial_concave", 1, 1, horizon);
        info.structure = Structure::PartiallyDifferentiable;
        // 2|u| − √(1+u²) ≥ |u| − 1
        info.linear_growth = LinearGrowth { alpha: 1.0, d: 1.0 };
        info.nonnegative = false;
        RadialConcave { info }
    }
}

impl LagrangianModel for RadialConcave {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn eval(&self, _s: f64, _y: &[f64], u: &[f64]) -> f64 {
        let v = u[0];
        2.0 * v.abs() - (1.0 + v * v).sqrt()
    }

    fn du(&self, _s: f64, _y: &[f64], u: &[f64]) -> Option<f64> {
        let v = u[0];
        Some(2.0 * v.abs() - v * v / (1.0 + v * v).sqrt())
    }

    fn closed_form_xi(&self, _nu: f64) -> Option<f64> {
        Some(0.0)
    }

    fn closed_form_upsilon(&self, _c: f64, _rho: f64) -> Option<f64> {
        Some(-1.0)
    }
}

/// Extended-valued, discontinuous, superlinear `L(u₁, u₂)`:
/// `1/(1 − |u|²)` where `u₂ ≤ |u₁|, |u| < 1`;
/// `|u|²/(1 − 2|u₁|u₂)` where `u₂ > |u₁|, 2|u₁|u₂ < 1`; `+∞` otherwise.
#[derive(Debug, Clone)]
pub struct ExtendedStar {
    info: ModelInfo,
}

enum StarRegion {
    Disc { q: f64 },
    Horn { q: f64, p: f64 },
    Outside,
}

const BOUNDARY_SAMPLES: usize = 4096;

impl ExtendedStar {
    pub fn new(horizon: f64) -> Self {
        let mut info = base_info("extended_star", 2, 2, horizon);
        // region A gives L ≥ 1 ≥ |u|, region B gives L ≥ |u|² ≥ |u| − 1/4
        info.linear_growth = LinearGrowth { alpha: 1.0, d: 0.25 };
        info.real_valued = false;
        info.blows_up_at_boundary = true;
        info.bounded_on_bounded_sets = false;
        info.ball_in_domain = Some(0.5);
        ExtendedStar { info }
    }

    fn region(u: &[f64]) -> StarRegion {
        let (a, b) = (u[0].abs(), u[1]);
        let q = u[0] * u[0] + b * b;
        if b <= a {
            if q < 1.0 {
                StarRegion::Disc { q }
            } else {
                StarRegion::Outside
            }
        } else {
            let p = 2.0 * a * b;
            if p < 1.0 && a <= std::f64::consts::FRAC_1_SQRT_2 {
                StarRegion::Horn { q, p }
            } else {
                StarRegion::Outside
            }
        }
    }

    /// Distance from `(a, b)`, `a ≥ 0`, to the branch `{(t, 1/(2t)) : 0 < t ≤ 1/√2}`.
    fn hyperbola_distance(a: f64, b: f64) -> f64 {
        let f = |t: f64| {
            let dx = t - a;
            let dy = 0.5 / t - b;
            dx * dx + dy * dy
        };
        let t_lo: f64 = 1e-12;
        let t_hi = std::f64::consts::FRAC_1_SQRT_2;
        let ratio = (t_hi / t_lo).ln();
        let at = |k: usize| t_lo * (ratio * k as f64 / (BOUNDARY_SAMPLES - 1) as f64).exp();
        let mut best_k = 0;
        let mut best = f64::INFINITY;
        for k in 0..BOUNDARY_SAMPLES {
            let v = f(at(k));
            if v < best {
                best = v;
                best_k = k;
            }
        }
        // golden-section polish between the neighbouring samples
        let mut lo = at(best_k.saturating_sub(1));
        let mut hi = at((best_k + 1).min(BOUNDARY_SAMPLES - 1));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            }
        }
        best.min(f1).min(f2).sqrt()
    }

    fn arc_distance(u: &[f64]) -> f64 {
        let r = norm(u);
        let corner = std::f64::consts::FRAC_1_SQRT_2;
        // the arc is the part of the unit circle with w₂ ≤ |w₁|; a ray in
        // that cone meets it radially
        let on_arc_ray = r == 0.0 || u[1] <= u[0].abs();
        if on_arc_ray {
            (r - 1.0).abs()
        } else {
            let dx = u[0].abs() - corner;
            let dy = u[1] - corner;
            (dx * dx + dy * dy).sqrt()
        }
    }
}

impl LagrangianModel for ExtendedStar {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn eval(&self, _s: f64, _y: &[f64], u: &[f64]) -> f64 {
        match Self::region(u) {
            StarRegion::Disc { q } => 1.0 / (1.0 - q),
            StarRegion::Horn { q, p } => q / (1.0 - p),
            StarRegion::Outside => f64::INFINITY,
        }
    }

    fn q(&self, _s: f64, _y: &[f64], u: &[f64]) -> Option<f64> {
        match Self::region(u) {
            StarRegion::Disc { q } => Some(2.0 * q / ((1.0 - q) * (1.0 - q))),
            StarRegion::Horn { q, p } => Some(2.0 * q / ((1.0 - p) * (1.0 - p))),
            StarRegion::Outside => None,
        }
    }

    fn du(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        self.q(s, y, u)
    }

    fn in_domain(&self, _s: f64, _y: &[f64], u: &[f64]) -> bool {
        !matches!(Self::region(u), StarRegion::Outside)
    }

    fn dist_to_boundary(&self, _s: f64, _y: &[f64], u: &[f64]) -> f64 {
        if matches!(Self::region(u), StarRegion::Outside) {
            return 0.0;
        }
        Self::arc_distance(u).min(Self::hyperbola_distance(u[0].abs(), u[1]))
    }
}
