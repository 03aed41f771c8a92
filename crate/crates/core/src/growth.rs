//! Sampled verdicts for superlinearity, Condition (G), `(H_B^δ)` and `(M_B^δ)`.
//!
//! A verdict is `Holds`, `Fails` or `Inconclusive`; limits cannot be decided
//! by sampling, so the middle ground is reported rather than guessed.

use serde::{Deserialize, Serialize};

use crate::constants::{estimate_upsilon, estimate_xi, BoundsContext, SupInfEstimate};
use crate::error::{BolzaError, Result};
use crate::lagrangian::{LagrangianModel, Structure};
use crate::reparam::plan_constants;
use crate::sampling::{log_grid, Ray, SampleGrid, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    Superlinear,
    G,
    H,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Knobs of the ladders used by the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub sampler: SamplerConfig,
    /// Number of geometric steps of the `c` ladder.
    pub c_steps: usize,
    pub c_lo_factor: f64,
    pub c_hi_factor: f64,
    /// Rungs `ν̄ = ν₀·2^k`, `k < nu_rungs`.
    pub nu_rungs: u32,
    pub margin_tol: f64,
    /// The (G) ladder runs over `ν = 2^k`, `k ≤ g_max_exp`.
    pub g_max_exp: u32,
    /// Halving depth of the blow-up radius search.
    pub rho_depth: u32,
    /// Relative change under refinement still counted as stable.
    pub stability_tol: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            sampler: SamplerConfig::default(),
            c_steps: 8,
            c_lo_factor: 1.01,
            c_hi_factor: 100.0,
            nu_rungs: 11,
            margin_tol: 1e-9,
            g_max_exp: 20,
            rho_depth: 30,
            stability_tol: 1e-2,
        }
    }
}

impl GrowthConfig {
    pub fn c_ladder(&self, c_delta: f64) -> Vec<f64> {
        let base = if c_delta > 0.0 { c_delta } else { 1e-3 };
        log_grid(base * self.c_lo_factor, base * self.c_hi_factor, self.c_steps)
    }

    pub fn nu_ladder(&self, c_delta: f64) -> Vec<f64> {
        let nu0 = c_delta.max(1.0);
        (0..self.nu_rungs).map(|k| nu0 * 2f64.powi(k as i32)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    #[serde(with = "crate::json::extended")]
    pub nu_bar: f64,
    pub c: f64,
    /// `inf` for real-valued models (no distance filter).
    #[serde(with = "crate::json::extended")]
    pub rho_bar: f64,
    #[serde(rename = "Xi_at_nu_bar", with = "crate::json::extended")]
    pub xi_at_nu_bar: f64,
    #[serde(rename = "Upsilon_at_rho", with = "crate::json::extended")]
    pub upsilon_at_rho: f64,
    #[serde(with = "crate::json::extended")]
    pub margin: f64,
}

/// One evaluated ladder point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    #[serde(with = "crate::json::extended")]
    pub nu: f64,
    #[serde(with = "crate::json::extended")]
    pub xi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::json::extended_opt")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::json::extended_opt")]
    pub upsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::json::extended_opt")]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub condition: Condition,
    pub verdict: Verdict,
    pub witnesses: Option<Witnesses>,
    pub context: Option<BoundsContext>,
    #[serde(rename = "Xi")]
    pub xi: Option<SupInfEstimate>,
    #[serde(rename = "Upsilon")]
    pub upsilon: Option<SupInfEstimate>,
    pub table: Vec<LadderRow>,
    pub notes: String,
}

impl GrowthCertificate {
    fn bare(condition: Condition, verdict: Verdict, notes: String) -> Self {
        GrowthCertificate {
            condition,
            verdict,
            witnesses: None,
            context: None,
            xi: None,
            upsilon: None,
            table: Vec::new(),
            notes,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperlinearityEstimate {
    /// `(r, Θ(r))` with `Θ(r)` the sampled min of `Λ` over `|u| = r`.
    #[serde(with = "theta_pairs")]
    pub theta_samples: Vec<(f64, f64)>,
    /// Growth factor of `Θ(r)/r` across the largest decade.
    #[serde(with = "crate::json::extended")]
    pub ratio_trend: f64,
    pub verdict: Verdict,
}

mod theta_pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair(
        #[serde(with = "crate::json::extended")] f64,
        #[serde(with = "crate::json::extended")] f64,
    );

    pub fn serialize<S: Serializer>(v: &[(f64, f64)], ser: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&(a, b)| Pair(a, b)).collect::<Vec<_>>().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<(f64, f64)>, D::Error> {
        Ok(Vec::<Pair>::deserialize(de)?.into_iter().map(|p| (p.0, p.1)).collect())
    }
}

/// `Θ(r)` for each radius: min of `Λ` over the sample rays at `|u| = r`.
fn theta_profile(model: &dyn LagrangianModel, k: f64, radii: &[f64], cfg: &SamplerConfig) -> Vec<f64> {
    let grid = SampleGrid::new(model, k, cfg);
    let per_ray = grid.map_rays(model, cfg, |ray: &Ray| {
        radii
            .iter()
            .map(|&r| {
                let v = model.eval(ray.s, ray.z, &ray.point(r));
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            })
            .collect::<Vec<f64>>()
    });
    let mut theta = vec![f64::INFINITY; radii.len()];
    for row in per_ray {
        for (t, v) in theta.iter_mut().zip(row) {
            *t = t.min(v);
        }
    }
    theta
}

/// `Θ(r)/r` must grow by a factor `≥ 2` across each of the last two
/// decades below `u_max`; a factor below `1.1` on both means linear growth.
pub fn check_superlinearity(model: &dyn LagrangianModel, k: f64, cfg: &SamplerConfig) -> SuperlinearityEstimate {
    let top = cfg.u_max;
    let decades = (top.log10().floor() as i32).max(2);
    let radii: Vec<f64> = (0..=decades * 3)
        .map(|j| top * 10f64.powf((j - decades * 3) as f64 / 3.0))
        .collect();
    let theta = theta_profile(model, k, &radii, cfg);
    let n = radii.len();
    let ratio = |i: usize| theta[i] / radii[i];
    let growth = |i: usize, j: usize| -> f64 {
        let (a, b) = (ratio(i), ratio(j));
        if b == f64::INFINITY {
            f64::INFINITY
        } else if a <= 0.0 {
            if b > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            b / a
        }
    };
    let last = growth(n - 4, n - 1);
    let previous = growth(n - 7, n - 4);
    let verdict = if last >= 2.0 && previous >= 2.0 {
        Verdict::Holds
    } else if last < 1.1 && previous < 1.1 {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    SuperlinearityEstimate {
        theta_samples: radii.into_iter().zip(theta).collect(),
        ratio_trend: last,
        verdict,
    }
}

fn stable(a: f64, b: f64, tol: f64) -> bool {
    a.is_finite() && b.is_finite() && (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// `Ξ(ν) → −∞` tested on `ν = 2^k`: `Holds` once `Ξ < −100` (having passed
/// `−1` and `−10` on the way), `Fails` when the ladder ends above `−1` on a
/// stable value.
pub fn check_g(model: &dyn LagrangianModel, k: f64, cfg: &GrowthConfig) -> Result<GrowthCertificate> {
    let mut table = Vec::new();
    let mut verdict = Verdict::Inconclusive;
    let mut notes = String::new();
    for e in 0..=cfg.g_max_exp {
        let nu = 2f64.powi(e as i32);
        let xi = match estimate_xi(model, k, nu, &cfg.sampler) {
            Ok(x) => x.value,
            Err(BolzaError::EmptySampleSet(_)) => {
                notes = format!("no admissible control with |v| >= {nu}; the sup is over an empty set");
                table.push(LadderRow {
                    nu,
                    xi: f64::NEG_INFINITY,
                    c: None,
                    rho: None,
                    upsilon: None,
                    margin: None,
                });
                verdict = Verdict::Holds;
                break;
            }
            Err(e) => return Err(e),
        };
        table.push(LadderRow {
            nu,
            xi,
            c: None,
            rho: None,
            upsilon: None,
            margin: None,
        });
        if xi == f64::INFINITY {
            verdict = Verdict::Fails;
            notes = format!("Xi({nu}) is unbounded");
            break;
        }
        if xi < -100.0 {
            verdict = Verdict::Holds;
            notes = format!("Xi crosses -1, -10, -100 by nu = {nu}");
            break;
        }
    }
    if verdict == Verdict::Inconclusive && table.len() >= 2 {
        let a = table[table.len() - 2].xi;
        let b = table[table.len() - 1].xi;
        if b > -1.0 && stable(a, b, 1e-3) {
            verdict = Verdict::Fails;
            notes = format!("Xi levels off at {b} along the ladder");
        } else {
            notes = format!("Xi = {b} at the end of the ladder without a stable limit");
        }
    }
    let mut cert = GrowthCertificate::bare(Condition::G, verdict, notes);
    cert.table = table;
    Ok(cert)
}

/// Caches the sampled `inf Λ` over the band `{dist < 2ρ}` for `ρ = 2^{-j}`.
struct BlowUpBand<'a> {
    model: &'a dyn LagrangianModel,
    k: f64,
    cfg: &'a SamplerConfig,
    values: Vec<f64>,
}

impl<'a> BlowUpBand<'a> {
    fn new(model: &'a dyn LagrangianModel, k: f64, cfg: &'a SamplerConfig) -> Self {
        BlowUpBand {
            model,
            k,
            cfg,
            values: Vec::new(),
        }
    }

    fn band_inf(&mut self, j: u32) -> f64 {
        while self.values.len() <= j as usize {
            let rho = 2f64.powi(-(self.values.len() as i32));
            let v = band_inf(self.model, self.k, rho, self.cfg);
            self.values.push(v);
        }
        self.values[j as usize]
    }

    /// Largest `ρ = 2^{-j}` with `Λ ≥ ℓ` on the sampled band.
    fn radius_for(&mut self, ell: f64, depth: u32) -> Option<f64> {
        (0..=depth)
            .find(|&j| self.band_inf(j) >= ell)
            .map(|j| 2f64.powi(-(j as i32)))
    }
}

/// Sampled `inf{Λ(s,z,v) : dist((s,z,v), ∂Dom) < 2ρ}`.
pub fn band_inf(model: &dyn LagrangianModel, k: f64, rho: f64, cfg: &SamplerConfig) -> f64 {
    let grid = SampleGrid::new(model, k, cfg);
    let vals = grid.map_rays(model, cfg, |ray: &Ray| {
        let dist = |r: f64| model.dist_to_boundary(ray.s, ray.z, &ray.point(r));
        let top = if ray.exit.is_finite() { ray.exit } else { cfg.u_max };
        let mut radii = log_grid(top * 2f64.powi(-20), top, 33);
        if ray.exit.is_finite() {
            radii.extend((1..=cfg.exit_approach).map(|j| ray.exit * (1.0 - 2f64.powi(-(j as i32)))));
            if dist(0.0) >= 2.0 * rho {
                let (mut lo, mut hi) = (0.0, ray.exit);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if dist(mid) >= 2.0 * rho {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                radii.extend((0..=20).map(|j| hi + (ray.exit - hi) * (1.0 - 2f64.powi(-j))));
            }
        }
        let mut best = f64::INFINITY;
        for r in radii {
            if !(r < top) {
                continue;
            }
            let v = ray.point(r);
            let l = model.eval(ray.s, ray.z, &v);
            if l.is_finite() && l < best && dist(r) < 2.0 * rho {
                best = l;
            }
        }
        best
    });
    vals.into_iter().fold(f64::INFINITY, f64::min)
}

/// `(μ₀, Δ)` midpoint choices for a given `c > c_δ(B)`.
pub fn midpoint_mu0_delta(c_delta: f64, c: f64) -> (f64, f64) {
    let mu0 = (c_delta / c + 1.0) / 2.0;
    let delta = (c_delta / (mu0 * c) + 1.0) / 2.0;
    (mu0, delta)
}

/// The uniform `ρ` at which states of pairs with `J ≤ B` spend at least
/// `Δ(T−t)` time at distance `≥ 2ρ` from the boundary.
fn blow_up_level(ctx: &BoundsContext, c: f64) -> f64 {
    let (_, delta) = midpoint_mu0_delta(ctx.c_delta_b, c);
    ctx.b / ((1.0 - delta) * (ctx.horizon - ctx.delta))
}

struct HCandidate {
    c: f64,
    rho: f64,
    nu_bar: f64,
    xi: SupInfEstimate,
    upsilon: SupInfEstimate,
    margin: f64,
    predicted_nu: f64,
}

/// Search for `(c, ν̄, ρ̄)` with `Ξ(ν̄) + 2Φ(B) < Υ(c, ρ)` for `ρ ∈ {ρ̄, ρ̄/2, ρ̄/4}`.
///
/// `ρ̄` is the uniform blow-up radius for extended-valued models. Among the
/// `c` that work, the one giving the smallest reparametrization bound `ν`
/// is certified.
pub fn check_h(model: &dyn LagrangianModel, ctx: &BoundsContext, cfg: &GrowthConfig) -> GrowthCertificate {
    let info = model.info();
    let k = ctx.k;
    let scfg = &cfg.sampler;
    let real = info.real_valued;
    let nus = cfg.nu_ladder(ctx.c_delta_b);
    let mut xi_cache: Vec<Option<Result<SupInfEstimate>>> = vec![None; nus.len()];
    let mut band = BlowUpBand::new(model, k, scfg);
    let mut table = Vec::new();
    let mut best: Option<HCandidate> = None;
    let mut ambiguous = Vec::new();
    let mut any_margin_row = false;

    for c in cfg.c_ladder(ctx.c_delta_b) {
        let rho_bar = if real {
            f64::INFINITY
        } else {
            match band.radius_for(blow_up_level(ctx, c), cfg.rho_depth) {
                Some(r) => r,
                None => {
                    match (0..=cfg.rho_depth)
                        .map(|j| 2f64.powi(-(j as i32)))
                        .find(|&r| estimate_upsilon(model, k, c, r, scfg).is_ok())
                    {
                        Some(r) => r,
                        None => {
                            ambiguous.push(format!("c = {c}: no nonempty well-inside sample"));
                            continue;
                        }
                    }
                }
            }
        };
        let rhos: Vec<f64> = if real {
            vec![0.0]
        } else {
            vec![rho_bar, rho_bar / 2.0, rho_bar / 4.0]
        };
        let mut ups: Option<SupInfEstimate> = None;
        let mut empty = false;
        for &r in &rhos {
            match estimate_upsilon(model, k, c, r, scfg) {
                Ok(u) => {
                    if ups.as_ref().is_none_or(|p| u.value < p.value) {
                        ups = Some(u);
                    }
                }
                Err(BolzaError::EmptySampleSet(_)) => empty = true,
                Err(e) => {
                    ambiguous.push(format!("c = {c}: {e}"));
                    empty = true;
                }
            }
        }
        let Some(ups) = ups else {
            ambiguous.push(format!("c = {c}: empty well-inside sample set"));
            continue;
        };
        if empty {
            ambiguous.push(format!("c = {c}: some rho gave an empty sample set"));
        }
        for (i, &nu) in nus.iter().enumerate() {
            if xi_cache[i].is_none() {
                xi_cache[i] = Some(estimate_xi(model, k, nu, scfg));
            }
            let xi = match xi_cache[i].as_ref().expect("cached") {
                Ok(x) => x.clone(),
                Err(BolzaError::EmptySampleSet(_)) => SupInfEstimate {
                    value: f64::NEG_INFINITY,
                    samples: 0,
                    max_abs_u: 0.0,
                    refinement_delta: f64::NAN,
                },
                Err(e) => {
                    ambiguous.push(format!("nu = {nu}: {e}"));
                    continue;
                }
            };
            let margin = ups.value - xi.value - 2.0 * ctx.phi_b;
            let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
            any_margin_row = true;
            table.push(LadderRow {
                nu,
                xi: xi.value,
                c: Some(c),
                rho: Some(if real { f64::INFINITY } else { rho_bar }),
                upsilon: Some(ups.value),
                margin: Some(margin),
            });
            if margin > cfg.margin_tol && ups.value.is_finite() && xi.value < f64::INFINITY {
                let rho_plan = if real { None } else { Some(rho_bar) };
                let predicted = plan_constants(ctx, c, nu, rho_plan, info.condition_s.eps_star, None)
                    .map(|p| p.nu)
                    .unwrap_or(f64::INFINITY);
                let better = best.as_ref().is_none_or(|b| predicted < b.predicted_nu);
                if better {
                    best = Some(HCandidate {
                        c,
                        rho: rho_bar,
                        nu_bar: nu,
                        xi,
                        upsilon: ups.clone(),
                        margin,
                        predicted_nu: predicted,
                    });
                }
                break;
            }
            // Ξ only decreases along the ladder; an infinite Υ gap cannot close.
            if ups.value == f64::NEG_INFINITY {
                break;
            }
        }
    }

    let mut cert = match best {
        Some(b) => {
            let mut cert = GrowthCertificate::bare(
                Condition::H,
                Verdict::Holds,
                format!(
                    "margin {} at c = {}, nu_bar = {}; predicted reparametrization bound nu = {}",
                    b.margin, b.c, b.nu_bar, b.predicted_nu
                ),
            );
            cert.witnesses = Some(Witnesses {
                nu_bar: b.nu_bar,
                c: b.c,
                rho_bar: b.rho,
                xi_at_nu_bar: b.xi.value,
                upsilon_at_rho: b.upsilon.value,
                margin: b.margin,
            });
            cert.xi = Some(b.xi);
            cert.upsilon = Some(b.upsilon);
            cert
        }
        None if any_margin_row && ambiguous.is_empty() => GrowthCertificate::bare(
            Condition::H,
            Verdict::Fails,
            "the margin stays <= 0 for every tested (c, nu_bar)".into(),
        ),
        None => GrowthCertificate::bare(Condition::H, Verdict::Inconclusive, ambiguous.join("; ")),
    };
    cert.context = Some(ctx.clone());
    cert.table = table;
    cert
}

/// Re-evaluate `(H_B^δ)` at fixed witnesses `(c, ν̄)` for the context's `B`.
pub fn verify_h(
    model: &dyn LagrangianModel,
    ctx: &BoundsContext,
    c: f64,
    nu_bar: f64,
    cfg: &GrowthConfig,
) -> GrowthCertificate {
    let scfg = &cfg.sampler;
    let k = ctx.k;
    let real = model.info().real_valued;
    if !(c > ctx.c_delta_b) {
        return GrowthCertificate::bare(
            Condition::H,
            Verdict::Inconclusive,
            format!("c = {c} does not exceed c_delta(B) = {}", ctx.c_delta_b),
        );
    }
    let rho_bar = if real {
        Some(f64::INFINITY)
    } else {
        BlowUpBand::new(model, k, scfg).radius_for(blow_up_level(ctx, c), cfg.rho_depth)
    };
    let Some(rho_bar) = rho_bar else {
        return GrowthCertificate::bare(Condition::H, Verdict::Inconclusive, "no blow-up radius found".into());
    };
    let rhos: Vec<f64> = if real {
        vec![0.0]
    } else {
        vec![rho_bar, rho_bar / 2.0, rho_bar / 4.0]
    };
    let mut ups: Option<SupInfEstimate> = None;
    for r in rhos {
        if let Ok(u) = estimate_upsilon(model, k, c, r, scfg) {
            if ups.as_ref().is_none_or(|p| u.value < p.value) {
                ups = Some(u);
            }
        }
    }
    let xi = estimate_xi(model, k, nu_bar, scfg).unwrap_or(SupInfEstimate {
        value: f64::NEG_INFINITY,
        samples: 0,
        max_abs_u: 0.0,
        refinement_delta: f64::NAN,
    });
    let Some(ups) = ups else {
        return GrowthCertificate::bare(
            Condition::H,
            Verdict::Inconclusive,
            "empty well-inside sample set".into(),
        );
    };
    let margin = ups.value - xi.value - 2.0 * ctx.phi_b;
    let verdict = if margin > cfg.margin_tol && ups.value.is_finite() {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let mut cert = GrowthCertificate::bare(Condition::H, verdict, format!("margin {margin} at fixed witnesses"));
    cert.witnesses = Some(Witnesses {
        nu_bar,
        c,
        rho_bar,
        xi_at_nu_bar: xi.value,
        upsilon_at_rho: ups.value,
        margin,
    });
    cert.context = Some(ctx.clone());
    cert.xi = Some(xi);
    cert.upsilon = Some(ups);
    cert
}

/// `(M_B^δ)`: `Υ > −∞` and `Ξ(ν̄) < +∞`, each finite and stable under one
/// refinement of the sampler.
pub fn check_m(model: &dyn LagrangianModel, ctx: &BoundsContext, cfg: &GrowthConfig) -> GrowthCertificate {
    let info = model.info();
    let k = ctx.k;
    let mut scfg = cfg.sampler.clone();
    scfg.refinements = 1;
    let c = cfg.c_ladder(ctx.c_delta_b)[0];
    let rho_bar = if info.real_valued {
        f64::INFINITY
    } else {
        let mut band = BlowUpBand::new(model, k, &cfg.sampler);
        match band.radius_for(blow_up_level(ctx, c), cfg.rho_depth) {
            Some(r) => r,
            None => {
                return GrowthCertificate {
                    context: Some(ctx.clone()),
                    ..GrowthCertificate::bare(Condition::M, Verdict::Inconclusive, "no blow-up radius found".into())
                }
            }
        }
    };
    let rho = if info.real_valued { 0.0 } else { rho_bar / 4.0 };
    let mut notes = Vec::new();
    let ups = estimate_upsilon(model, k, c, rho, &scfg);
    let mut table = Vec::new();
    let mut xi_found: Option<(f64, SupInfEstimate)> = None;
    for nu in cfg.nu_ladder(ctx.c_delta_b).into_iter().take(3) {
        match estimate_xi(model, k, nu, &scfg) {
            Ok(x) => {
                table.push(LadderRow {
                    nu,
                    xi: x.value,
                    c: Some(c),
                    rho: Some(rho_bar),
                    upsilon: ups.as_ref().ok().map(|u| u.value),
                    margin: None,
                });
                let done = x.value < f64::INFINITY;
                xi_found = Some((nu, x));
                if done {
                    break;
                }
            }
            Err(BolzaError::EmptySampleSet(_)) => {
                xi_found = Some((
                    nu,
                    SupInfEstimate {
                        value: f64::NEG_INFINITY,
                        samples: 0,
                        max_abs_u: 0.0,
                        refinement_delta: 0.0,
                    },
                ));
                break;
            }
            Err(e) => notes.push(format!("nu = {nu}: {e}")),
        }
    }
    let ok = |e: &SupInfEstimate| {
        e.value.is_finite()
            && (e.refinement_delta.is_nan() || e.refinement_delta.abs() <= cfg.stability_tol * (1.0 + e.value.abs()))
    };
    let verdict = match (&ups, &xi_found) {
        (Ok(u), Some((_, x))) => {
            let xi_ok = x.value == f64::NEG_INFINITY || ok(x);
            if u.value == f64::NEG_INFINITY {
                notes.push("i) fails: the well-inside inf diverges to -inf".into());
                Verdict::Fails
            } else if x.value == f64::INFINITY {
                notes.push("ii) fails: the sup over large controls diverges to +inf".into());
                Verdict::Fails
            } else if ok(u) && xi_ok {
                notes.push("both estimates finite and stable under refinement".into());
                Verdict::Holds
            } else {
                notes.push("finite estimates that move under refinement".into());
                Verdict::Inconclusive
            }
        }
        (Err(e), _) => {
            notes.push(format!("Upsilon: {e}"));
            Verdict::Inconclusive
        }
        (_, None) => Verdict::Inconclusive,
    };
    let mut cert = GrowthCertificate::bare(Condition::M, verdict, notes.join("; "));
    if let (Ok(u), Some((nu, x))) = (&ups, &xi_found) {
        cert.witnesses = Some(Witnesses {
            nu_bar: *nu,
            c,
            rho_bar,
            xi_at_nu_bar: x.value,
            upsilon_at_rho: u.value,
            margin: u.value - x.value,
        });
        cert.xi = Some(x.clone());
        cert.upsilon = Some(u.clone());
    }
    cert.context = Some(ctx.clone());
    cert.table = table;
    cert
}

/// Verdicts of all four checks for one model plus the implications between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationRow {
    pub model: String,
    pub superlinear: Verdict,
    pub g: Verdict,
    pub h: Verdict,
    pub m: Verdict,
    /// `superlinear ∧ radially convex ∧ ball in domain ⇒ G`
    pub super_implies_g: Option<bool>,
    /// `G ∧ bounded on bounded sets ⇒ H`
    pub g_implies_h: Option<bool>,
    pub h_implies_m: Option<bool>,
    pub notes: String,
}

/// Check the implications between verdicts where their side conditions hold.
/// `None` marks an exempt implication; `Some(false)` is a sampler deficiency.
pub fn cross_check_implications(
    model: &dyn LagrangianModel,
    ctx: &BoundsContext,
    cfg: &GrowthConfig,
) -> Result<ImplicationRow> {
    let info = model.info();
    let sup = check_superlinearity(model, ctx.k, &cfg.sampler).verdict;
    let g = check_g(model, ctx.k, cfg)?.verdict;
    let h = check_h(model, ctx, cfg).verdict;
    let m = check_m(model, ctx, cfg).verdict;
    let radially_convex = matches!(info.structure, Structure::RadiallyConvex | Structure::Both);
    let mut notes = Vec::new();
    let super_implies_g = if sup == Verdict::Holds && radially_convex && info.ball_in_domain.is_some() {
        Some(g == Verdict::Holds)
    } else {
        None
    };
    let g_implies_h = if g == Verdict::Holds && info.bounded_on_bounded_sets {
        Some(h == Verdict::Holds)
    } else {
        if g == Verdict::Holds {
            notes.push("G => H exempt: not bounded on bounded sets".to_string());
        }
        None
    };
    let h_implies_m = (h == Verdict::Holds).then_some(m == Verdict::Holds);
    for (name, v) in [
        ("superlinear => G", super_implies_g),
        ("G => H", g_implies_h),
        ("H => M", h_implies_m),
    ] {
        if v == Some(false) {
            notes.push(format!("{name} violated by the sampled verdicts (sampler deficiency)"));
        }
    }
    Ok(ImplicationRow {
        model: info.name.clone(),
        superlinear: sup,
        g,
        h,
        m,
        super_implies_g,
        g_implies_h,
        h_implies_m,
        notes: notes.join("; "),
    })
}
