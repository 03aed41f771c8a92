//! User-defined Lagrangians from a JSON descriptor.
//!
//! ```json
//! {
//!   "name": "quadratic",
//!   "state_dim": 1, "control_dim": 1,
//!   "expr": "u^2",
//!   "domain_expr": "u > -1",
//!   "Q_expr": "2*u^2",
//!   "structure": "RadiallyConvex",
//!   "condition_s": {"kappa": 0, "A": 0, "gamma_const": 0, "eps_star": 1},
//!   "linear_growth": {"alpha": 1, "d": 1}
//! }
//! ```
//!
//! `domain_expr`, `Q_expr`, `dist_expr` and `condition_s` are optional.
//! Without `dist_expr` the distance to the boundary is estimated
//! numerically in control space. A NaN value of `expr` counts as `+∞`.

use serde::{Deserialize, Serialize};

use super::{
    numeric_control_distance, ConditionSData, LagrangianModel, LinearGrowth, ModelInfo, PiecewiseConstant, Structure,
};
use crate::error::{BolzaError, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSDescriptor {
    #[serde(default)]
    pub kappa: f64,
    #[serde(rename = "A", default)]
    pub a: f64,
    #[serde(default)]
    pub gamma_const: f64,
    pub eps_star: Option<f64>,
}

fn default_horizon() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub state_dim: usize,
    pub control_dim: usize,
    pub expr: String,
    #[serde(default)]
    pub domain_expr: Option<String>,
    #[serde(rename = "Q_expr", default)]
    pub q_expr: Option<String>,
    #[serde(default)]
    pub dist_expr: Option<String>,
    pub structure: Structure,
    #[serde(default)]
    pub condition_s: Option<ConditionSDescriptor>,
    pub linear_growth: LinearGrowth,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub blows_up_at_boundary: bool,
    #[serde(default = "yes")]
    pub bounded_on_bounded_sets: bool,
    #[serde(default = "yes")]
    pub nonnegative: bool,
}

#[derive(Debug, Clone)]
pub struct ExprModel {
    info: ModelInfo,
    value: Expr,
    domain: Option<Expr>,
    slope: Option<Expr>,
    dist: Option<Expr>,
}

impl ExprModel {
    pub fn from_descriptor(d: &ModelDescriptor) -> Result<Self> {
        let (n, m) = (d.state_dim, d.control_dim);
        if m == 0 || m > 4 {
            return Err(BolzaError::Expr(format!("control dimension {m} outside 1..=4")));
        }
        let parse = |s: &str| Expr::parse(s, n, m);
        let value = parse(&d.expr)?;
        let domain = d.domain_expr.as_deref().map(parse).transpose()?;
        let slope = d.q_expr.as_deref().map(parse).transpose()?;
        let dist = d.dist_expr.as_deref().map(parse).transpose()?;
        let condition_s = match &d.condition_s {
            None => ConditionSData::autonomous(d.horizon),
            Some(c) => ConditionSData {
                kappa: c.kappa,
                a: c.a,
                gamma: PiecewiseConstant::constant(c.gamma_const, d.horizon),
                eps_star: c.eps_star.unwrap_or(d.horizon),
            },
        };
        let all = [Some(&value), domain.as_ref(), slope.as_ref(), dist.as_ref()];
        let uses_time = all.iter().flatten().any(|e| e.uses_time());
        let uses_state = all.iter().flatten().any(|e| e.uses_state());
        let info = ModelInfo {
            name: d.name.clone(),
            horizon: d.horizon,
            state_dim: n,
            control_dim: m,
            structure: d.structure,
            condition_s,
            linear_growth: d.linear_growth,
            domain_is_product: !(domain.as_ref().is_some_and(|e| e.uses_time() || e.uses_state())),
            blows_up_at_boundary: d.blows_up_at_boundary,
            real_valued: domain.is_none(),
            autonomous: !uses_time,
            state_independent: !uses_state,
            bounded_on_bounded_sets: d.bounded_on_bounded_sets,
            ball_in_domain: if domain.is_none() { Some(f64::INFINITY) } else { None },
            nonnegative: d.nonnegative,
        };
        Ok(ExprModel {
            info,
            value,
            domain,
            slope,
            dist,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: ModelDescriptor = serde_json::from_str(text)?;
        Self::from_descriptor(&d)
    }
}

impl LagrangianModel for ExprModel {
    fn info(&self) -> &ModelInfo {
        &self.info
    }

    fn eval(&self, s: f64, y: &[f64], u: &[f64]) -> f64 {
        if let Some(d) = &self.domain {
            if !d.holds(s, y, u) {
                return f64::INFINITY;
            }
        }
        let v = self.value.eval(s, y, u);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn q(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        let e = self.slope.as_ref()?;
        let v = e.eval(s, y, u);
        v.is_finite().then_some(v)
    }

    fn du(&self, s: f64, y: &[f64], u: &[f64]) -> Option<f64> {
        self.q(s, y, u)
    }

    fn dist_to_boundary(&self, s: f64, y: &[f64], u: &[f64]) -> f64 {
        if self.domain.is_none() {
            return f64::INFINITY;
        }
        match &self.dist {
            Some(e) => e.eval(s, y, u).max(0.0),
            None => numeric_control_distance(self, s, y, u),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{radial_intercept, Structure};

    #[test]
    fn descriptor_round_trip() {
        let text = r#"{
            "name": "hnew_expr", "state_dim": 1, "control_dim": 1,
            "expr": "if(u > 0, u^2 + 1, 1/(1 - u^2))",
            "domain_expr": "u > -1",
            "Q_expr": "if(u > 0, 2*u^2, 2*u^2/(1 - u^2)^2)",
            "structure": "Both",
            "linear_growth": {"alpha": 2, "d": 0}
        }"#;
        let m = ExprModel::from_json(text).unwrap();
        assert_eq!(m.info().structure, Structure::Both);
        assert!(m.info().autonomous && m.info().state_independent && !m.info().real_valued);
        assert_eq!(m.eval(0.0, &[0.0], &[-1.5]), f64::INFINITY);
        let p = radial_intercept(&m, 0.0, &[0.0], &[2.0]).unwrap();
        assert!((p - (1.0 - 4.0)).abs() < 1e-12);
        // numeric distance agrees with the exact one
        let d = m.dist_to_boundary(0.0, &[0.0], &[-0.25]);
        assert!((d - 0.75).abs() < 1e-9, "{d}");
    }

    #[test]
    fn rejects_bad_dimension() {
        let text = r#"{"name":"x","state_dim":1,"control_dim":5,"expr":"1",
            "structure":"Both","linear_growth":{"alpha":1,"d":0}}"#;
        assert!(ExprModel::from_json(text).is_err());
    }
}
