//! Reparametrization of an admissible pair into a pair with bounded control
//! and Lipschitz state whose cost does not increase (or increases by at
//! most `η` under the weaker growth condition).
//!
//! The plan (`μ`, `Δ`, `m`, `ν`, ...) depends only on the bounds context and
//! the growth certificate, never on the individual pair.

mod phi;

pub use phi::{build_phi, ChangeOfVariable};

use serde::{Deserialize, Serialize};

use crate::constants::{estimate_upsilon, BoundsContext, SupInfEstimate};
use crate::error::{BolzaError, Result};
use crate::growth::{midpoint_mu0_delta, Condition, GrowthCertificate, Verdict};
use crate::intervals::IntervalSet;
use crate::lagrangian::norm;
use crate::sampling::SamplerConfig;
use crate::trajectory::{evaluate_cost, AdmissiblePair, CompensatedSum, ControlSignal, ProblemSpec};

/// Pair-independent constants of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanConstants {
    pub mu0: f64,
    #[serde(rename = "Delta")]
    pub delta_frac: f64,
    pub mu: f64,
    pub m: f64,
    pub nu: f64,
}

/// `μ₀`, `Δ` by the midpoint rule, `μ = max(μ₀, c/(ρ+c))`, `m = Δ − c_δ(B)/(μc)`
/// and the smallest `ν = 2^j·max(ν̄, c)` with
/// `R/ν ≤ min{(1−μ)m(T−δ), ε*/2}` (and `(R/ν)·gap ≤ η` when `m_clause = (gap, η)`).
pub fn plan_constants(
    ctx: &BoundsContext,
    c: f64,
    nu_bar: f64,
    rho: Option<f64>,
    eps_star: f64,
    m_clause: Option<(f64, f64)>,
) -> Result<PlanConstants> {
    let ratio = ctx.c_delta_b / c;
    if !(ratio < 1.0) {
        return Err(BolzaError::MuInfeasible { ratio });
    }
    let (mu0, delta_frac) = midpoint_mu0_delta(ctx.c_delta_b, c);
    let mu = match rho {
        Some(r) if r.is_finite() => mu0.max(c / (r + c)),
        _ => mu0,
    };
    let m = delta_frac - ctx.c_delta_b / (mu * c);
    let room = ((1.0 - mu) * m * (ctx.horizon - ctx.delta)).min(eps_star / 2.0);
    let mut nu = nu_bar.max(c);
    let fits = |nu: f64| {
        let q = ctx.r / nu;
        q <= room && m_clause.is_none_or(|(gap, eta)| q * gap <= eta)
    };
    let mut steps = 0;
    while !fits(nu) {
        nu *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(BolzaError::InsufficientRoom {
                need: ctx.r,
                have: room,
            });
        }
    }
    Ok(PlanConstants {
        mu0,
        delta_frac,
        mu,
        m,
        nu,
    })
}

/// Forced choices, for reproducing hand-worked examples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReparamOverrides {
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub sigma: Option<IntervalSet>,
}

/// Everything needed to reparametrize any pair of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReparamPlan {
    pub ctx: BoundsContext,
    pub condition: Condition,
    pub c: f64,
    pub nu_bar: f64,
    /// `inf` for real-valued models.
    #[serde(with = "crate::json::extended")]
    pub rho: f64,
    #[serde(flatten)]
    pub constants: PlanConstants,
    pub eta: f64,
    #[serde(rename = "Xi")]
    pub xi: SupInfEstimate,
    #[serde(rename = "Upsilon")]
    pub upsilon: SupInfEstimate,
    pub eps_star: f64,
    pub overrides: ReparamOverrides,
}

impl ReparamPlan {
    pub fn new(
        problem: &ProblemSpec,
        ctx: &BoundsContext,
        cert: &GrowthCertificate,
        eta: f64,
        overrides: ReparamOverrides,
    ) -> Result<Self> {
        if cert.verdict != Verdict::Holds || !matches!(cert.condition, Condition::H | Condition::M) {
            return Err(BolzaError::CertificateRequired(format!(
                "need a holding H or M certificate, got {:?} {:?}",
                cert.condition, cert.verdict
            )));
        }
        let (Some(w), Some(xi), Some(upsilon)) = (&cert.witnesses, &cert.xi, &cert.upsilon) else {
            return Err(BolzaError::CertificateRequired(
                "certificate carries no witnesses".into(),
            ));
        };
        if cert.condition == Condition::M && !(eta > 0.0) {
            return Err(BolzaError::CertificateRequired("an M certificate needs eta > 0".into()));
        }
        let eps_star = problem.model.info().condition_s.eps_star;
        let gap = 2.0 * ctx.phi_b + xi.value - upsilon.value;
        let m_clause = (cert.condition == Condition::M).then_some((gap, eta));
        let rho = (!problem.model.info().real_valued).then_some(w.rho_bar);
        let mut constants = plan_constants(ctx, w.c, w.nu_bar, rho, eps_star, m_clause)?;
        if let Some(mu) = overrides.mu {
            constants.mu = mu;
            constants.m = constants.delta_frac - ctx.c_delta_b / (mu * w.c);
        }
        if let Some(nu) = overrides.nu {
            constants.nu = nu;
        }
        Ok(ReparamPlan {
            ctx: ctx.clone(),
            condition: cert.condition,
            c: w.c,
            nu_bar: w.nu_bar,
            rho: if problem.model.info().real_valued {
                f64::INFINITY
            } else {
                w.rho_bar
            },
            constants,
            eta: if cert.condition == Condition::M { eta } else { 0.0 },
            xi: xi.clone(),
            upsilon: upsilon.clone(),
            eps_star,
            overrides,
        })
    }

    /// Lipschitz bound `θ(1+K)ν` shared by every output state.
    pub fn lipschitz_bound(&self) -> f64 {
        self.ctx.theta * (1.0 + self.ctx.k) * self.constants.nu
    }

    /// `2Φ(B) + Ξ − Υ`.
    pub fn gap(&self) -> f64 {
        2.0 * self.ctx.phi_b + self.xi.value - self.upsilon.value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSets {
    #[serde(rename = "S_nu")]
    pub s_nu: IntervalSet,
    /// `ε_ν = ∫_{S_ν} (|u|/ν − 1)`.
    pub excess: f64,
    #[serde(rename = "Omega_mu")]
    pub omega_mu: IntervalSet,
    #[serde(rename = "J_rho")]
    pub j_rho: IntervalSet,
    #[serde(rename = "Omega")]
    pub omega: IntervalSet,
    #[serde(rename = "Sigma_nu")]
    pub sigma_nu: IntervalSet,
}

/// `S_ν = {|u| > ν}` and the excess `ε_ν`, exact for piecewise-constant `u`.
pub fn compute_level_set_s(u: &ControlSignal, nu: f64) -> (IntervalSet, f64) {
    let nodes = u.grid.nodes();
    let s = IntervalSet::from_cells(nodes, |k| norm(&u.values[k]) > nu);
    let mut eps = CompensatedSum::default();
    for (k, v) in u.values.iter().enumerate() {
        let r = norm(v);
        if r > nu {
            eps.add((r / nu - 1.0) * u.grid.width(k));
        }
    }
    (s, eps.value())
}

/// Leftmost subset of `Ω ∖ S_ν` of measure `ε_ν/(1−μ)`.
pub fn select_sigma(omega: &IntervalSet, s_nu: &IntervalSet, eps: f64, mu: f64) -> Result<IntervalSet> {
    let target = eps / (1.0 - mu);
    let room = omega.difference(s_nu);
    room.leftmost_fill(target).ok_or(BolzaError::InsufficientRoom {
        need: target,
        have: room.measure(),
    })
}

/// Output of [`select_mu_rho`].
#[derive(Debug, Clone, PartialEq)]
pub struct MuRho {
    pub mu: f64,
    pub rho: f64,
    pub m: f64,
    pub omega_mu: IntervalSet,
    pub j_rho: IntervalSet,
    pub omega: IntervalSet,
    /// `ρ` values rejected before the accepted one.
    pub rejected_rho: Vec<f64>,
}

/// Smallest distance to the domain boundary over a cell (ends and midpoint).
fn cell_distance(problem: &ProblemSpec, pair: &AdmissiblePair, k: usize) -> f64 {
    let (a, b) = pair.grid.cell(k);
    let u = &pair.controls[k];
    [a, 0.5 * (a + b), b]
        .iter()
        .map(|&s| problem.model.dist_to_boundary(s, &pair.state_at(k, s), u))
        .fold(f64::INFINITY, f64::min)
}

/// `Ω_μ = {|u| < μc}`, `J_ρ = {dist ≥ 2ρ}` and `Ω = Ω_μ ∩ J_ρ`, halving `ρ`
/// from the plan's value until `|J_ρ| ≥ Δ(T−t)`.
pub fn select_mu_rho(problem: &ProblemSpec, plan: &ReparamPlan, pair: &AdmissiblePair) -> Result<MuRho> {
    let nodes = pair.grid.nodes();
    let t = pair.grid.t_start();
    let span = problem.horizon - t;
    let c = plan.c;
    let c_delta = plan.ctx.c_delta_b;
    let real = problem.model.info().real_valued;
    let dists: Vec<f64> = if real {
        vec![f64::INFINITY; pair.grid.cells()]
    } else {
        (0..pair.grid.cells())
            .map(|k| cell_distance(problem, pair, k))
            .collect()
    };
    let mut rho = plan.rho;
    let mut rejected = Vec::new();
    loop {
        let j_rho = if real {
            IntervalSet::single(t, problem.horizon)
        } else {
            IntervalSet::from_cells(nodes, |k| dists[k] >= 2.0 * rho)
        };
        if real || j_rho.measure() >= plan.constants.delta_frac * span {
            let mu = if rho == plan.rho || real {
                plan.constants.mu
            } else {
                plan.constants.mu0.max(c / (rho + c))
            };
            let m = plan.constants.delta_frac - c_delta / (mu * c);
            let omega_mu = IntervalSet::from_cells(nodes, |k| norm(&pair.controls[k]) < mu * c);
            let omega = omega_mu.intersect(&j_rho);
            return Ok(MuRho {
                mu,
                rho,
                m,
                omega_mu,
                j_rho,
                omega,
                rejected_rho: rejected,
            });
        }
        rejected.push(rho);
        rho /= 2.0;
        if rho < 1e-9 {
            return Err(BolzaError::RhoSearchFailed {
                measure: j_rho.measure(),
                required: plan.constants.delta_frac * span,
            });
        }
    }
}

/// The reparametrized pair on the image grid `φ(τ_k)`:
/// `ū = ν u/|u|` on `S_ν`, `u/μ` on `Σ_ν`, `u` elsewhere; `ȳ(φ(τ_k)) = y(τ_k)`.
pub fn reparametrize_pair(
    problem: &ProblemSpec,
    pair: &AdmissiblePair,
    cov: &ChangeOfVariable,
    nu: f64,
    mu: f64,
    sigma: &IntervalSet,
) -> Result<AdmissiblePair> {
    let nodes = pair.grid.nodes();
    if cov.breaks != nodes {
        return Err(BolzaError::InvalidPair(
            "change of variable does not match the pair's grid".into(),
        ));
    }
    let mut controls = Vec::with_capacity(pair.grid.cells());
    for (k, u) in pair.controls.iter().enumerate() {
        let r = norm(u);
        let mid = 0.5 * (nodes[k] + nodes[k + 1]);
        let v: Vec<f64> = if r > nu {
            let mut v: Vec<f64> = u.iter().map(|x| nu * x / r).collect();
            while norm(&v) > nu {
                v.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
            }
            v
        } else if sigma.contains_interior(mid) {
            u.iter().map(|x| x / mu).collect()
        } else {
            u.clone()
        };
        if !problem.control_cone.contains(&v) {
            return Err(BolzaError::ConeViolation(k));
        }
        controls.push(v);
    }
    let grid = crate::trajectory::TimeGrid::new(cov.images.clone())?;
    AdmissiblePair::from_parts(problem, grid, pair.states.clone(), controls)
}

/// Record of one reparametrization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReparamCertificate {
    pub ctx: BoundsContext,
    pub condition: Condition,
    pub c: f64,
    pub nu_bar: f64,
    pub mu: f64,
    pub mu0: f64,
    #[serde(rename = "Delta")]
    pub delta_frac: f64,
    #[serde(with = "crate::json::extended")]
    pub rho: f64,
    pub m: f64,
    pub nu: f64,
    pub eps_nu: f64,
    pub eta: f64,
    #[serde(rename = "Xi")]
    pub xi: SupInfEstimate,
    #[serde(rename = "Upsilon")]
    pub upsilon: SupInfEstimate,
    pub level_sets: LevelSets,
    pub cov: ChangeOfVariable,
    pub cost_before: f64,
    pub cost_after: f64,
    /// `J(y,u) + ε_ν(2Φ(B) + Ξ − Υ)`.
    pub cost_bound: f64,
    pub bound_u_inf: f64,
    pub lipschitz_rank_y: f64,
    pub lipschitz_bound: f64,
    pub phi_deviation: f64,
    pub psi_lipschitz: f64,
    pub rejected_rho: Vec<f64>,
    pub notes: String,
}

/// Options for [`nice_pair`] beyond the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct NicePairOptions {
    /// Relative slack on the cost inequality (quadrature noise).
    pub cost_tol: f64,
    /// Sampler for re-estimating `Υ` when a pair forces a smaller `ρ`.
    pub sampler: SamplerConfig,
}

impl Default for NicePairOptions {
    fn default() -> Self {
        NicePairOptions {
            cost_tol: 1e-8,
            sampler: SamplerConfig::default(),
        }
    }
}

/// The full construction for one pair of the family described by `plan`.
pub fn nice_pair(
    problem: &ProblemSpec,
    pair: &AdmissiblePair,
    plan: &ReparamPlan,
    opts: &NicePairOptions,
) -> Result<(AdmissiblePair, ReparamCertificate)> {
    let cost_before = evaluate_cost(problem, pair)?;
    let b = plan.ctx.b;
    if !(cost_before <= b + 1e-9 * (1.0 + b)) {
        return Err(BolzaError::PreconditionViolated(format!(
            "pair cost {cost_before} exceeds the bound B = {b}"
        )));
    }
    if pair.grid.t_start() > plan.ctx.delta + 1e-12 {
        return Err(BolzaError::PreconditionViolated(format!(
            "initial time {} exceeds delta = {}",
            pair.grid.t_start(),
            plan.ctx.delta
        )));
    }
    let nu = plan.constants.nu;
    let (s_nu, eps) = compute_level_set_s(&pair.control_signal(), nu);
    let mut notes = Vec::new();
    let mr = select_mu_rho(problem, plan, pair)?;
    let mu = plan.overrides.mu.unwrap_or(mr.mu);
    let span = problem.horizon - pair.grid.t_start();
    if mr.omega.measure() < mr.m * span * (1.0 - 1e-12) {
        notes.push(format!(
            "|Omega| = {} is below m(T-t) = {}",
            mr.omega.measure(),
            mr.m * span
        ));
    }
    let mut upsilon = plan.upsilon.clone();
    if !mr.rejected_rho.is_empty() {
        notes.push(format!("rho lowered from {} to {} for this pair", plan.rho, mr.rho));
        if mr.rho < plan.rho / 4.0 {
            let fresh = estimate_upsilon(problem.model.as_ref(), plan.ctx.k, plan.c, mr.rho, &opts.sampler)?;
            if fresh.value < upsilon.value {
                upsilon = fresh;
            }
        }
    }
    let gap = 2.0 * plan.ctx.phi_b + plan.xi.value - upsilon.value;

    let sigma = match &plan.overrides.sigma {
        Some(s) => s.clone(),
        None => select_sigma(&mr.omega, &s_nu, eps, mu)?,
    };
    let level_sets = LevelSets {
        s_nu: s_nu.clone(),
        excess: eps,
        omega_mu: mr.omega_mu.clone(),
        j_rho: mr.j_rho.clone(),
        omega: mr.omega.clone(),
        sigma_nu: sigma.clone(),
    };

    let (out, cov) = if eps == 0.0 && sigma.is_empty() {
        (pair.clone(), ChangeOfVariable::identity(pair.grid.nodes()))
    } else {
        let mut refined = pair.clone();
        for x in sigma.endpoints() {
            refined = refined.refine_at(problem, x);
        }
        let nodes = refined.grid.nodes();
        let slopes: Vec<f64> = (0..refined.grid.cells())
            .map(|k| {
                let r = norm(&refined.controls[k]);
                if r > nu {
                    r / nu
                } else if sigma.contains_interior(0.5 * (nodes[k] + nodes[k + 1])) {
                    mu
                } else {
                    1.0
                }
            })
            .collect();
        let cov = build_phi(nodes, &slopes)?;
        let out = reparametrize_pair(problem, &refined, &cov, nu, mu, &sigma)?;
        (out, cov)
    };

    let cost_after = evaluate_cost(problem, &out)?;
    let cost_bound = cost_before + eps * gap;
    let allowed = cost_bound.max(cost_before.min(cost_bound)) + plan.eta + opts.cost_tol * (1.0 + cost_before.abs());
    let allowed = if plan.condition == Condition::H {
        allowed.min(cost_before + opts.cost_tol * (1.0 + cost_before.abs()))
    } else {
        allowed
    };
    if !(cost_after <= allowed) {
        return Err(BolzaError::CostRegression {
            before: cost_before,
            after: cost_after,
            allowed,
        });
    }
    let cert = ReparamCertificate {
        ctx: plan.ctx.clone(),
        condition: plan.condition,
        c: plan.c,
        nu_bar: plan.nu_bar,
        mu,
        mu0: plan.constants.mu0,
        delta_frac: plan.constants.delta_frac,
        rho: mr.rho,
        m: mr.m,
        nu,
        eps_nu: eps,
        eta: plan.eta,
        xi: plan.xi.clone(),
        upsilon,
        level_sets,
        phi_deviation: cov.sup_deviation(),
        psi_lipschitz: cov.psi_lipschitz(),
        cov,
        cost_before,
        cost_after,
        cost_bound,
        bound_u_inf: out.sup_control(),
        lipschitz_rank_y: out.lipschitz_rank(),
        lipschitz_bound: plan.lipschitz_bound(),
        rejected_rho: mr.rejected_rho,
        notes: notes.join("; "),
    };
    Ok((out, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::builtin;
    use crate::trajectory::TimeGrid;

    #[test]
    fn excess_examples() {
        let grid = TimeGrid::new(vec![0.0, 1.0 / 3.0, 1.0]).unwrap();
        let u = ControlSignal::new(grid, vec![vec![3.0], vec![0.0]]).unwrap();
        let (s, eps) = compute_level_set_s(&u, 2.0);
        assert_eq!(s, IntervalSet::single(0.0, 1.0 / 3.0));
        assert!((eps - 1.0 / 6.0).abs() < 1e-15);
        let (s, eps) = compute_level_set_s(&u, 3.0);
        assert!(s.is_empty() && eps == 0.0);
    }

    #[test]
    fn sigma_leftmost() {
        let omega = IntervalSet::single(1.0 / 3.0, 1.0);
        let sigma = select_sigma(&omega, &IntervalSet::empty(), 1.0 / 6.0, 0.5).unwrap();
        assert_eq!(sigma.parts().len(), 1);
        assert!((sigma.parts()[0].b - 2.0 / 3.0).abs() < 1e-15);
        assert!(select_sigma(&omega, &IntervalSet::empty(), 1.0, 0.5).is_err());
    }

    #[test]
    fn plan_midpoints() {
        let m = builtin("minimal_length").unwrap();
        let ctx = BoundsContext::new(m.info(), 1.0, 0.0, 0.0, vec![0.0], 1.0).unwrap();
        let p = plan_constants(&ctx, 2.0 * ctx.c_delta_b, 1.0, None, 1.0, None).unwrap();
        assert!((p.mu0 - 0.75).abs() < 1e-15);
        assert!((p.delta_frac - 5.0 / 6.0).abs() < 1e-15);
        assert!((p.m - (5.0 / 6.0 - 2.0 / 3.0)).abs() < 1e-15);
        assert!(ctx.r / p.nu <= (1.0 - p.mu) * p.m);
        assert!(matches!(
            plan_constants(&ctx, 0.5 * ctx.c_delta_b, 1.0, None, 1.0, None),
            Err(BolzaError::MuInfeasible { .. })
        ));
    }
}
