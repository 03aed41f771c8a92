//! Acceptance suite. Prints one PASS/FAIL line per criterion with timings;
//! run with `cargo test -p bolza --test acceptance -- --nocapture`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::sync::Arc;
use std::time::Instant;

use bolza::constants::{compute_c_t_b, compute_phi_b, estimate_upsilon, estimate_xi, BoundsContext};
use bolza::growth::{
    check_g, check_h, check_m, check_superlinearity, Condition, GrowthCertificate, GrowthConfig, Verdict,
};
use bolza::intervals::IntervalSet;
use bolza::lagrangian::ExprModel;
use bolza::lagrangian::{builtin, builtin_names, norm, Model};
use bolza::minimize::{lavrentiev_probe, minimize_direct, GapVerdict, MinimizeConfig};
use bolza::reparam::{nice_pair, NicePairOptions, ReparamOverrides, ReparamPlan};
use bolza::sampling::SamplerConfig;
use bolza::trajectory::{
    check_measure_bound, dynamics_residual, evaluate_cost, AdmissiblePair, ControlSignal, ProblemSpec, TerminalCost,
    TimeGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    lines: Vec<(usize, bool, String, f64)>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String, secs: f64) {
        println!(
            "criterion {id:>2}: {} ({secs:.2} s) {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        self.lines.push((id, pass, detail, secs));
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Standard setting for a built-in: `T = 1`, `b ≡ I`, `x* = 0`, `δ* = 1`.
struct Setting {
    model: Model,
    ctx: BoundsContext,
    delta: f64,
}

fn setting(name: &str, b: f64, delta: f64) -> Setting {
    let model = builtin(name).unwrap();
    let n = model.info().state_dim;
    let ctx = BoundsContext::new(model.info(), 1.0, delta, 1.0, vec![0.0; n], b).unwrap();
    Setting { model, ctx, delta }
}

/// Random admissible pair with `J ≤ B`: a random grid with a few narrow
/// cells carrying controls above `nu`.
fn random_pair(rng: &mut ChaCha8Rng, s: &Setting, nu: f64) -> Option<(ProblemSpec, AdmissiblePair)> {
    let info = s.model.info();
    let (n, m) = (info.state_dim, info.control_dim);
    let t = rng.gen_range(0.0..=s.delta);
    let x: Vec<f64> = loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if norm(&v) <= 1.0 {
            break v;
        }
    };
    let problem = ProblemSpec::new(s.model.clone(), t, 1.0, x);
    let dir = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v).max(1e-12);
        v.into_iter().map(|x| x / r).collect()
    };
    let in_domain = |u: &[f64]| s.model.eval(0.0, &problem.x, u).is_finite();
    let cells = rng.gen_range(3..=16);
    let mut base: Vec<f64> = (0..cells - 1).map(|_| rng.gen_range(t..1.0)).collect();
    base.sort_by(f64::total_cmp);
    let mut small: Vec<Vec<f64>> = (0..cells)
        .map(|_| {
            for _ in 0..50 {
                let r = rng.gen_range(0.0..0.8);
                let u: Vec<f64> = dir(rng).into_iter().map(|x| x * r).collect();
                if in_domain(&u) {
                    return u;
                }
            }
            vec![0.0; m]
        })
        .collect();
    // spikes: (position, magnitude·direction, width)
    let mut spikes: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        for _ in 0..200 {
            let mag = nu * rng.gen_range(1.05..4.0);
            let u: Vec<f64> = dir(rng).into_iter().map(|x| x * mag).collect();
            if in_domain(&u) {
                let w = rng.gen_range(0.05..0.5) / (mag * mag).max(1.0);
                spikes.push((rng.gen_range(t..1.0), u, w));
                break;
            }
        }
    }
    for _ in 0..80 {
        let mut nodes = vec![t];
        nodes.extend(base.iter().copied());
        nodes.push(1.0);
        let mut controls = small.clone();
        for (pos, u, w) in &spikes {
            let k = nodes.partition_point(|&x| x <= *pos).clamp(1, nodes.len() - 1) - 1;
            let (a, b) = (nodes[k], nodes[k + 1]);
            let w = w.min(0.5 * (b - a));
            let start = pos.clamp(a, b - w);
            if start - a > 1e-9 && b - (start + w) > 1e-9 {
                nodes.splice(k + 1..k + 1, [start, start + w]);
                let keep = controls[k].clone();
                controls.splice(k + 1..k + 1, [u.clone(), keep]);
            }
        }
        let grid = TimeGrid::new(nodes).ok()?;
        let pair = AdmissiblePair::from_control(&problem, ControlSignal::new(grid, controls).ok()?).ok()?;
        let j = evaluate_cost(&problem, &pair).ok()?;
        if j <= s.ctx.b {
            return Some((problem, pair));
        }
        small.iter_mut().flatten().for_each(|x| *x *= 0.7);
        spikes.iter_mut().for_each(|sp| sp.2 *= 0.5);
    }
    None
}

struct Certified {
    name: &'static str,
    setting: Setting,
    cert: Option<GrowthCertificate>,
    eta: f64,
}

fn certify(name: &'static str, b: f64, cfg: &GrowthConfig) -> Certified {
    let s = setting(name, b, 0.25);
    let h = check_h(s.model.as_ref(), &s.ctx, cfg);
    let (cert, eta) = if h.holds() {
        (Some(h), 0.0)
    } else {
        let m = check_m(s.model.as_ref(), &s.ctx, cfg);
        if m.holds() {
            (Some(m), 0.1)
        } else {
            (None, 0.0)
        }
    };
    Certified {
        name,
        setting: s,
        cert,
        eta,
    }
}

#[derive(Default)]
struct PipelineStats {
    runs: usize,
    reparametrized: usize,
    failures: Vec<String>,
    newc_failures: Vec<String>,
}

fn pipeline_suite(c: &Certified, pairs: usize, seed: u64, stats: &mut PipelineStats) {
    let s = &c.setting;
    let Some(cert) = &c.cert else {
        // no certificate: nice_pair must refuse
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some((problem, _)) = random_pair(&mut rng, s, 4.0) {
            let bare = GrowthCertificate {
                verdict: Verdict::Fails,
                ..check_m(s.model.as_ref(), &s.ctx, &GrowthConfig::default())
            };
            if ReparamPlan::new(&problem, &s.ctx, &bare, 0.1, ReparamOverrides::default()).is_ok() {
                stats
                    .failures
                    .push(format!("{}: plan accepted without a certificate", c.name));
            }
        }
        return;
    };
    let opts = NicePairOptions {
        sampler: SamplerConfig::coarse(),
        ..NicePairOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    let mut attempts = 0;
    while done < pairs && attempts < 20 * pairs {
        attempts += 1;
        let proto = ProblemSpec::new(s.model.clone(), 0.0, 1.0, vec![0.0; s.model.info().state_dim]);
        let plan = match ReparamPlan::new(&proto, &s.ctx, cert, c.eta, ReparamOverrides::default()) {
            Ok(p) => p,
            Err(e) => {
                stats.failures.push(format!("{}: plan: {e}", c.name));
                return;
            }
        };
        let nu = plan.constants.nu;
        let Some((problem, pair)) = random_pair(&mut rng, s, nu) else {
            continue;
        };
        done += 1;
        stats.runs += 1;
        newc_checks(c.name, s, &problem, &pair, &mut stats.newc_failures);
        let (out, rc) = match nice_pair(&problem, &pair, &plan, &opts) {
            Ok(r) => r,
            Err(e) => {
                stats.failures.push(format!("{}: {e}", c.name));
                continue;
            }
        };
        if rc.eps_nu > 0.0 {
            stats.reparametrized += 1;
        }
        let mut bad = Vec::new();
        if !(out.sup_control() <= nu * (1.0 + 1e-12)) {
            bad.push(format!("sup|u| {} > nu {nu}", out.sup_control()));
        }
        if !(out.lipschitz_rank() <= plan.lipschitz_bound() * (1.0 + 1e-12)) {
            bad.push("Lipschitz rank".to_string());
        }
        if out.states[0] != pair.states[0] || out.states.last() != pair.states.last() {
            bad.push("boundary values moved".to_string());
        }
        let res = dynamics_residual(&problem, &out.grid, &out.states, &out.controls);
        if !(res <= 1e-9) {
            bad.push(format!("residual {res:e}"));
        }
        let slack = 1e-8 * (1.0 + rc.cost_before) + if cert.condition == Condition::M { c.eta } else { 0.0 };
        if !(rc.cost_after <= rc.cost_before + slack) {
            bad.push(format!("cost {} -> {}", rc.cost_before, rc.cost_after));
        }
        let end = *rc.cov.images.last().unwrap();
        if !close(end, 1.0, 1e-12) {
            bad.push(format!("phi(T) = {end}"));
        }
        if !(rc.cov.sup_deviation() <= 2.0 * rc.eps_nu + 1e-12) {
            bad.push("phi deviation".to_string());
        }
        if !bad.is_empty() {
            stats.failures.push(format!("{}: {}", c.name, bad.join(", ")));
        }
    }
    if done < pairs {
        stats
            .failures
            .push(format!("{}: only {done} random pairs generated", c.name));
    }
}

/// The three inequalities relating `B`, `c_t(B)` and `Φ(B)` to a pair.
fn newc_checks(name: &str, s: &Setting, problem: &ProblemSpec, pair: &AdmissiblePair, out: &mut Vec<String>) {
    let ctx = &s.ctx;
    let t = problem.t;
    let span = 1.0 - t;
    let l1 = pair.l1_control();
    let bound1 = (ctx.b + ctx.d * span) / ctx.alpha;
    if !(l1 <= bound1 * (1.0 + 1e-12)) {
        out.push(format!("{name}: int|u| = {l1} > {bound1}"));
    }
    let ct = ctx.c_t(t).unwrap();
    for sigma in [1.01 * ct, 2.0 * ct, 10.0 * ct] {
        let mb = check_measure_bound(problem, pair, ctx.b, sigma).unwrap();
        if !mb.holds {
            out.push(format!(
                "{name}: |{{|u| < {sigma}}}| = {} < {}",
                mb.measure, mb.required
            ));
        }
    }
    let cs = &s.model.info().condition_s;
    let costs = bolza::trajectory::cell_costs(problem, pair);
    let lhs: f64 = costs.iter().sum::<f64>() * cs.kappa + cs.a * l1 + cs.gamma_l1();
    if !(lhs <= ctx.phi_b * (1.0 + 1e-12) + 1e-12) {
        out.push(format!("{name}: Condition S integral {lhs} > Phi(B) = {}", ctx.phi_b));
    }
}

fn lq_model() -> Model {
    let json = r#"{"name": "lq", "state_dim": 1, "control_dim": 1, "expr": "u1^2",
        "structure": "RadiallyConvex", "linear_growth": {"alpha": 1, "d": 1}}"#;
    Arc::new(ExprModel::from_json(json).unwrap())
}

/// Value of `min ∫u² + w(y(T) − 1)²`, `y' = u`, `y(0) = 0` from the Riccati
/// equation `p' = p²`, `p(T) = w`, integrated backward with RK4.
fn riccati_value(w: f64, horizon: f64) -> f64 {
    let steps = 10_000;
    let h = horizon / steps as f64;
    let mut p = w;
    for _ in 0..steps {
        let f = |p: f64| -(p * p);
        let k1 = f(p);
        let k2 = f(p + 0.5 * h * k1);
        let k3 = f(p + 0.5 * h * k2);
        let k4 = f(p + h * k3);
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    p
}

#[test]
fn acceptance() {
    let suite = Instant::now();
    let mut rep = Report { lines: Vec::new() };
    let gcfg = GrowthConfig::default();
    let scfg = SamplerConfig::default();

    // 1. constants
    let t0 = Instant::now();
    let c0 = compute_c_t_b(0.0, 2.0, 2.0, 0.0, 1.0).unwrap();
    let mut phis = Vec::new();
    for name in builtin_names() {
        let m = builtin(name).unwrap();
        let info = m.info();
        if info.condition_s.is_autonomous() {
            phis.push((
                name,
                compute_phi_b(
                    &info.condition_s,
                    2.0,
                    info.linear_growth.alpha,
                    info.linear_growth.d,
                    1.0,
                )
                .unwrap(),
            ));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = c0 == 1.0 && phis.iter().all(|p| p.1 == 0.0) && secs < 1.0;
    rep.record(
        1,
        pass,
        format!(
            "c_0(2) = {c0}; Phi(B) over {} autonomous built-ins = {:?}",
            phis.len(),
            phis.iter().map(|p| p.1).collect::<Vec<_>>()
        ),
        secs,
    );

    // 2. minimal_length goldens
    let t0 = Instant::now();
    let ml = builtin("minimal_length").unwrap();
    let mut worst: f64 = 0.0;
    for nu in [1.0, 2.0, 5.0, 10.0] {
        let xi = estimate_xi(ml.as_ref(), 1.0, nu, &scfg).unwrap().value;
        worst = worst.max((xi - 1.0 / (1.0 + nu * nu).sqrt()).abs());
    }
    for c in [0.5, 1.0, 2.0] {
        let up = estimate_upsilon(ml.as_ref(), 1.0, c, 0.0, &scfg).unwrap().value;
        worst = worst.max((up - 1.0 / (1.0 + c * c).sqrt()).abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    rep.record(
        2,
        worst <= 1e-6 && secs < 30.0,
        format!("max deviation {worst:.3e}"),
        secs,
    );

    // 3. radial_concave goldens and verdicts
    let t0 = Instant::now();
    let rc = setting("radial_concave", 2.0, 0.25);
    let xi1 = estimate_xi(rc.model.as_ref(), rc.ctx.k, 1.0, &scfg).unwrap().value;
    let up1 = estimate_upsilon(rc.model.as_ref(), rc.ctx.k, 1.0, 0.0, &scfg)
        .unwrap()
        .value;
    let h = check_h(rc.model.as_ref(), &rc.ctx, &gcfg).verdict;
    let m = check_m(rc.model.as_ref(), &rc.ctx, &gcfg).verdict;
    let secs = t0.elapsed().as_secs_f64();
    let pass = (-1e-3..=0.0).contains(&xi1) && close(up1, -1.0, 1e-9) && h == Verdict::Fails && m == Verdict::Holds;
    rep.record(
        3,
        pass,
        format!("Xi(1) = {xi1:.3e}, Upsilon(1) = {up1}, H {h:?}, M {m:?}"),
        secs,
    );

    // 4. verdict table
    let t0 = Instant::now();
    let mut rows = Vec::new();
    let mut ok = true;
    {
        let s = setting("minimal_length", 2.0, 0.25);
        let g = check_g(s.model.as_ref(), s.ctx.k, &gcfg).unwrap().verdict;
        let h = check_h(s.model.as_ref(), &s.ctx, &gcfg).verdict;
        ok &= g == Verdict::Fails && h == Verdict::Holds;
        rows.push(format!("minimal_length G {g:?} H {h:?}"));
    }
    {
        let s = setting("g_not_h", 2.0, 0.25);
        let g = check_g(s.model.as_ref(), s.ctx.k, &gcfg).unwrap().verdict;
        let h = check_h(s.model.as_ref(), &s.ctx, &gcfg).verdict;
        ok &= g == Verdict::Holds && h == Verdict::Fails;
        rows.push(format!("g_not_h G {g:?} H {h:?}"));
    }
    {
        let s = setting("hnew_1d", 2.0, 0.5);
        let h = check_h(s.model.as_ref(), &s.ctx, &gcfg);
        let c = h.witnesses.as_ref().map_or(1.01 * s.ctx.c_delta_b, |w| w.c);
        let unfiltered = estimate_upsilon(s.model.as_ref(), s.ctx.k, c, 0.0, &scfg)
            .map(|e| e.value)
            .unwrap_or(f64::NAN);
        ok &= h.verdict == Verdict::Holds && unfiltered <= -1e3;
        rows.push(format!(
            "hnew_1d H {:?} (unfiltered Upsilon {unfiltered:.3e})",
            h.verdict
        ));
    }
    {
        let s = setting("extended_star", 2.0, 0.25);
        let sup = check_superlinearity(s.model.as_ref(), s.ctx.k, &scfg).verdict;
        let g = check_g(s.model.as_ref(), s.ctx.k, &gcfg).unwrap().verdict;
        let h = check_h(s.model.as_ref(), &s.ctx, &gcfg).verdict;
        let m = check_m(s.model.as_ref(), &s.ctx, &gcfg).verdict;
        ok &= [sup, g, h, m].iter().all(|v| *v == Verdict::Holds);
        rows.push(format!("extended_star super {sup:?} G {g:?} H {h:?} M {m:?}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    rep.record(4, ok && secs < 180.0, rows.join("; "), secs);

    // 5. worked example
    let t0 = Instant::now();
    let s = setting("minimal_length", 2.0, 0.25);
    let cert = check_h(s.model.as_ref(), &s.ctx, &gcfg);
    let cert_secs = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let problem = ProblemSpec::new(s.model.clone(), 0.0, 1.0, vec![0.0]);
    let grid = TimeGrid::new(vec![0.0, 1.0 / 3.0, 1.0]).unwrap();
    let pair =
        AdmissiblePair::from_control(&problem, ControlSignal::new(grid, vec![vec![3.0], vec![0.0]]).unwrap()).unwrap();
    let overrides = ReparamOverrides {
        nu: Some(2.0),
        mu: Some(0.5),
        sigma: Some(IntervalSet::single(1.0 / 3.0, 2.0 / 3.0)),
    };
    let result = ReparamPlan::new(&problem, &s.ctx, &cert, 0.0, overrides)
        .and_then(|plan| nice_pair(&problem, &pair, &plan, &NicePairOptions::default()));
    let secs = t0.elapsed().as_secs_f64();
    match result {
        Ok((out, rc)) => {
            let before = 10f64.sqrt() / 3.0 + 2.0 / 3.0;
            let after = 5f64.sqrt() / 2.0 + 0.5;
            let phi_end = *rc.cov.images.last().unwrap();
            let shape = out.grid.cells() == 3
                && close(out.grid.nodes()[1], 0.5, 1e-12)
                && out.controls[0] == vec![2.0]
                && out.controls[1] == vec![0.0]
                && out.controls[2] == vec![0.0];
            let pass = close(phi_end, 1.0, 1e-12)
                && shape
                && close(rc.cost_before, before, 1e-6)
                && close(rc.cost_after, after, 1e-6)
                && secs < 1.0;
            rep.record(
                5,
                pass,
                format!(
                    "phi(1) = {phi_end}, u_bar = {:?} on {:?}, cost {:.6} -> {:.6} (certificate {cert_secs:.2} s)",
                    out.controls,
                    out.grid.nodes(),
                    rc.cost_before,
                    rc.cost_after
                ),
                secs,
            );
        }
        Err(e) => rep.record(5, false, format!("error: {e}"), secs),
    }

    // 6 and 8. pipeline property suite and proposition checks
    let t0 = Instant::now();
    let certified: Vec<Certified> = builtin_names().iter().map(|n| certify(n, 2.0, &gcfg)).collect();
    let cert_secs = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let mut stats = PipelineStats::default();
    for (i, c) in certified.iter().enumerate() {
        pipeline_suite(c, 100, 1000 + i as u64, &mut stats);
    }
    let secs = t0.elapsed().as_secs_f64();
    let kinds: Vec<String> = certified
        .iter()
        .map(|c| {
            format!(
                "{}:{}",
                c.name,
                c.cert
                    .as_ref()
                    .map_or("none".to_string(), |x| format!("{:?}", x.condition))
            )
        })
        .collect();
    rep.record(
        6,
        stats.failures.is_empty() && secs < 120.0,
        format!(
            "{} pairs, {} reparametrized, certificates [{}] in {cert_secs:.1} s; failures {:?}",
            stats.runs,
            stats.reparametrized,
            kinds.join(", "),
            stats.failures.iter().take(5).collect::<Vec<_>>()
        ),
        secs,
    );

    // 7. uniformity grid
    let t0 = Instant::now();
    let u = setting("minimal_length", 2.0, 0.5);
    let ucert = check_h(u.model.as_ref(), &u.ctx, &gcfg);
    let mut nus = Vec::new();
    let mut lips = Vec::new();
    let mut errs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..5 {
        for j in 0..5 {
            let t = 0.5 * i as f64 / 4.0;
            let x = -1.0 + 2.0 * j as f64 / 4.0;
            let problem = ProblemSpec::new(u.model.clone(), t, 1.0, vec![x]);
            let plan = match ReparamPlan::new(&problem, &u.ctx, &ucert, 0.0, ReparamOverrides::default()) {
                Ok(p) => p,
                Err(e) => {
                    errs.push(e.to_string());
                    continue;
                }
            };
            let nu = plan.constants.nu;
            let grid = TimeGrid::new(vec![
                t,
                t + 0.1 * (1.0 - t),
                t + 0.1 * (1.0 - t) + 0.2 / (3.0 * nu),
                1.0,
            ])
            .unwrap();
            let v = rng.gen_range(0.0..0.5);
            let pair = AdmissiblePair::from_control(
                &problem,
                ControlSignal::new(grid, vec![vec![v], vec![3.0 * nu], vec![-v]]).unwrap(),
            )
            .unwrap();
            match nice_pair(&problem, &pair, &plan, &NicePairOptions::default()) {
                Ok((_, rc)) => {
                    nus.push(rc.nu);
                    lips.push(rc.lipschitz_bound);
                }
                Err(e) => errs.push(e.to_string()),
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let same = nus.len() == 25 && nus.iter().all(|&n| n == nus[0]) && lips.iter().all(|&l| l == lips[0]);
    rep.record(
        7,
        same && errs.is_empty() && secs < 60.0,
        format!("{} cells, nu = {:?}, errors {:?}", nus.len(), nus.first(), errs),
        secs,
    );

    // 8. propositions and monotonicity of H in B
    let t0 = Instant::now();
    let mut mono = Vec::new();
    for name in ["minimal_length", "extended_star"] {
        for b in [2.0, 1.0] {
            let s = setting(name, b, 0.25);
            let h = check_h(s.model.as_ref(), &s.ctx, &gcfg).verdict;
            let half = check_h(s.model.as_ref(), &s.ctx.with_b(b / 2.0, s.model.info()).unwrap(), &gcfg).verdict;
            mono.push((name, b, h, half));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let mono_ok = mono
        .iter()
        .all(|(_, _, h, half)| *h != Verdict::Holds || *half == Verdict::Holds);
    rep.record(
        8,
        stats.newc_failures.is_empty() && mono_ok && stats.runs > 0,
        format!(
            "inequalities on {} pairs, failures {:?}; H at (B, B/2): {:?}",
            stats.runs,
            stats.newc_failures.iter().take(5).collect::<Vec<_>>(),
            mono.iter()
                .map(|m| format!("{} B={}: {:?}/{:?}", m.0, m.1, m.2, m.3))
                .collect::<Vec<_>>()
        ),
        secs,
    );

    // 9. Lavrentiev probe and LQ cross-check
    let t0 = Instant::now();
    let mut detail = Vec::new();
    let mut ok = true;
    {
        let p = ProblemSpec::new(builtin("minimal_length").unwrap(), 0.0, 1.0, vec![0.0]).with_terminal(
            TerminalCost::HardEndpoint {
                target: vec![1.0],
                tol: 1e-6,
            },
        );
        let cfg = MinimizeConfig {
            grid_ladder: vec![16, 32, 64],
            control_bound_ladder: vec![2.0, 4.0, 8.0],
            ..MinimizeConfig::default()
        };
        let r = lavrentiev_probe(&p, &cfg).unwrap();
        ok &= r.verdict == GapVerdict::NoGapDetected && r.gap_estimate <= 1e-3 * (1.0 + r.unconstrained_inf.abs());
        detail.push(format!(
            "minimal_length gap {:.3e} inf {:.6}",
            r.gap_estimate, r.unconstrained_inf
        ));
    }
    {
        let p = ProblemSpec::new(builtin("discont_surface").unwrap(), 0.0, 1.0, vec![-0.5, 0.0]).with_terminal(
            TerminalCost::HardEndpoint {
                target: vec![0.5, 0.5],
                tol: 1e-6,
            },
        );
        let cfg = MinimizeConfig {
            grid_ladder: vec![8, 16, 32],
            control_bound_ladder: vec![2.0, 4.0, 8.0],
            restarts: 1,
            ..MinimizeConfig::default()
        };
        let r = lavrentiev_probe(&p, &cfg).unwrap();
        ok &= r.verdict == GapVerdict::NoGapDetected && r.gap_estimate <= 1e-3 * (1.0 + r.unconstrained_inf.abs());
        detail.push(format!(
            "discont_surface gap {:.3e} inf {:.6}",
            r.gap_estimate, r.unconstrained_inf
        ));
    }
    {
        let p = ProblemSpec::new(lq_model(), 0.0, 1.0, vec![0.0]).with_terminal(TerminalCost::SoftQuadratic {
            target: vec![1.0],
            weight: 1.0,
        });
        let grid = TimeGrid::uniform(0.0, 1.0, 32).unwrap();
        let pair = minimize_direct(&p, &grid, 4.0, &MinimizeConfig::default()).unwrap();
        let j = evaluate_cost(&p, &pair).unwrap();
        let exact = riccati_value(1.0, 1.0);
        ok &= close(j, exact, 1e-3);
        detail.push(format!("LQ {j:.8} vs Riccati {exact:.8}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    rep.record(9, ok && secs < 300.0, detail.join("; "), secs);

    // 10. wall clock
    let total = suite.elapsed().as_secs_f64();
    rep.record(10, total < 900.0, format!("full suite {total:.1} s"), total);

    let failed: Vec<usize> = rep.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
