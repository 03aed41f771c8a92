//! Golden values of the built-in examples.

use bolza::constants::{compute_c_t_b, compute_phi_b, estimate_upsilon, estimate_xi, BoundsContext};
use bolza::growth::{check_g, check_h, check_m, GrowthConfig, Verdict};
use bolza::intervals::IntervalSet;
use bolza::lagrangian::{builtin, builtin_names};
use bolza::reparam::{nice_pair, NicePairOptions, ReparamOverrides, ReparamPlan};
use bolza::sampling::SamplerConfig;
use bolza::trajectory::{AdmissiblePair, ControlSignal, ProblemSpec, TimeGrid};

pub struct Row {
    pub name: String,
    pub expected: String,
    pub got: String,
    pub pass: bool,
}

fn num(name: &str, expected: f64, got: f64, tol: f64) -> Row {
    Row {
        name: name.to_string(),
        expected: format!("{expected:.9} ± {tol:.0e}"),
        got: format!("{got:.9}"),
        pass: (got - expected).abs() <= tol,
    }
}

fn verdict(name: &str, expected: Verdict, got: Verdict) -> Row {
    Row {
        name: name.to_string(),
        expected: format!("{expected:?}"),
        got: format!("{got:?}"),
        pass: expected == got,
    }
}

fn ctx(name: &str, b: f64, delta: f64) -> (bolza::lagrangian::Model, BoundsContext) {
    let m = builtin(name).expect("built-in");
    let n = m.info().state_dim;
    let c = BoundsContext::new(m.info(), 1.0, delta, 1.0, vec![0.0; n], b).expect("context");
    (m, c)
}

pub fn run(full: bool) -> Vec<Row> {
    let mut rows = Vec::new();
    let s = SamplerConfig::default();
    let g = GrowthConfig::default();

    rows.push(num(
        "c_0(2), alpha=2, d=0, T=1",
        1.0,
        compute_c_t_b(0.0, 2.0, 2.0, 0.0, 1.0).unwrap_or(f64::NAN),
        0.0,
    ));
    for name in builtin_names() {
        let m = builtin(name).expect("built-in");
        let info = m.info();
        if info.condition_s.is_autonomous() {
            let lg = info.linear_growth;
            let phi = compute_phi_b(&info.condition_s, 2.0, lg.alpha, lg.d, 1.0).unwrap_or(f64::NAN);
            rows.push(num(&format!("Phi(2) {name}"), 0.0, phi, 0.0));
        }
    }

    let ml = builtin("minimal_length").expect("built-in");
    for nu in [1.0, 2.0, 5.0, 10.0] {
        let xi = estimate_xi(ml.as_ref(), 1.0, nu, &s)
            .map(|e| e.value)
            .unwrap_or(f64::NAN);
        rows.push(num(
            &format!("minimal_length Xi({nu})"),
            1.0 / (1.0 + nu * nu).sqrt(),
            xi,
            1e-6,
        ));
    }
    for c in [0.5, 1.0, 2.0] {
        let up = estimate_upsilon(ml.as_ref(), 1.0, c, 0.0, &s)
            .map(|e| e.value)
            .unwrap_or(f64::NAN);
        rows.push(num(
            &format!("minimal_length Upsilon({c})"),
            1.0 / (1.0 + c * c).sqrt(),
            up,
            1e-6,
        ));
    }

    let (rc, rctx) = ctx("radial_concave", 2.0, 0.25);
    let xi = estimate_xi(rc.as_ref(), rctx.k, 1.0, &s)
        .map(|e| e.value)
        .unwrap_or(f64::NAN);
    rows.push(num("radial_concave Xi(1)", -5e-4, xi, 5e-4));
    let up = estimate_upsilon(rc.as_ref(), rctx.k, 1.0, 0.0, &s)
        .map(|e| e.value)
        .unwrap_or(f64::NAN);
    rows.push(num("radial_concave Upsilon(1)", -1.0, up, 1e-9));

    // worked reparametrization example
    let (m, mctx) = ctx("minimal_length", 2.0, 0.25);
    let problem = ProblemSpec::new(m.clone(), 0.0, 1.0, vec![0.0]);
    let worked = (|| {
        let cert = check_h(m.as_ref(), &mctx, &g);
        let grid = TimeGrid::new(vec![0.0, 1.0 / 3.0, 1.0])?;
        let pair = AdmissiblePair::from_control(&problem, ControlSignal::new(grid, vec![vec![3.0], vec![0.0]])?)?;
        let overrides = ReparamOverrides {
            nu: Some(2.0),
            mu: Some(0.5),
            sigma: Some(IntervalSet::single(1.0 / 3.0, 2.0 / 3.0)),
        };
        let plan = ReparamPlan::new(&problem, &mctx, &cert, 0.0, overrides)?;
        nice_pair(&problem, &pair, &plan, &NicePairOptions::default())
    })();
    match worked {
        Ok((_, rc)) => {
            rows.push(num("worked example phi(1/3)", 0.5, rc.cov.images[1], 1e-12));
            rows.push(num(
                "worked example cost before",
                10f64.sqrt() / 3.0 + 2.0 / 3.0,
                rc.cost_before,
                1e-6,
            ));
            rows.push(num(
                "worked example cost after",
                5f64.sqrt() / 2.0 + 0.5,
                rc.cost_after,
                1e-6,
            ));
        }
        Err(e) => rows.push(Row {
            name: "worked example".into(),
            expected: "success".into(),
            got: e.to_string(),
            pass: false,
        }),
    }

    if full {
        let v = |name: &str, b: f64, delta: f64| ctx(name, b, delta);
        let (m, c) = v("minimal_length", 2.0, 0.25);
        rows.push(verdict(
            "minimal_length G",
            Verdict::Fails,
            check_g(m.as_ref(), c.k, &g)
                .map(|x| x.verdict)
                .unwrap_or(Verdict::Inconclusive),
        ));
        rows.push(verdict(
            "minimal_length H",
            Verdict::Holds,
            check_h(m.as_ref(), &c, &g).verdict,
        ));
        let (m, c) = v("g_not_h", 2.0, 0.25);
        rows.push(verdict(
            "g_not_h G",
            Verdict::Holds,
            check_g(m.as_ref(), c.k, &g)
                .map(|x| x.verdict)
                .unwrap_or(Verdict::Inconclusive),
        ));
        rows.push(verdict(
            "g_not_h H",
            Verdict::Fails,
            check_h(m.as_ref(), &c, &g).verdict,
        ));
        let (m, c) = v("hnew_1d", 2.0, 0.5);
        rows.push(verdict(
            "hnew_1d H",
            Verdict::Holds,
            check_h(m.as_ref(), &c, &g).verdict,
        ));
        let (m, c) = v("radial_concave", 2.0, 0.25);
        rows.push(verdict(
            "radial_concave H",
            Verdict::Fails,
            check_h(m.as_ref(), &c, &g).verdict,
        ));
        rows.push(verdict(
            "radial_concave M",
            Verdict::Holds,
            check_m(m.as_ref(), &c, &g).verdict,
        ));
        let (m, c) = v("extended_star", 2.0, 0.25);
        rows.push(verdict(
            "extended_star H",
            Verdict::Holds,
            check_h(m.as_ref(), &c, &g).verdict,
        ));
        rows.push(verdict(
            "extended_star M",
            Verdict::Holds,
            check_m(m.as_ref(), &c, &g).verdict,
        ));
    }
    rows
}

pub fn table(rows: &[Row]) -> String {
    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{}  {:<w$}  expected {}  got {}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.expected,
            r.got
        ));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    out.push_str(&format!(
        "{} of {} golden values pass\n",
        rows.len() - failed,
        rows.len()
    ));
    out
}
