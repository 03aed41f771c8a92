//! `bolza` command-line front end.
//!
//! Exit codes: 0 success, 1 domain error (JSON body on stderr), 2 usage error.

mod goldens;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bolza::constants::{compute_c_t_b, compute_phi_b, BoundsContext};
use bolza::error::BolzaError;
use bolza::growth::{check_g, check_h, check_m, check_superlinearity, GrowthConfig};
use bolza::json::to_canonical_string;
use bolza::lagrangian::{ConditionSData, ExprModel, Model, PiecewiseConstant};
use bolza::minimize::{lavrentiev_probe, minimize_from, MinimizeConfig};
use bolza::reparam::{nice_pair, NicePairOptions, ReparamOverrides, ReparamPlan};
use bolza::sampling::SamplerConfig;
use bolza::trajectory::{evaluate_cost, AdmissiblePair, ModelRef, ProblemFile, ProblemSpec, TimeGrid};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "bolza",
    version,
    about = "Growth conditions, reparametrization and Lavrentiev probes for Bolza problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// c_t(B), Φ(B) and R from raw constants, or the full bounds context of a problem file.
    Constants(ConstantsArgs),
    /// Check superlinearity or one of the growth conditions G, H, M.
    CheckGrowth(GrowthArgs),
    /// Reparametrize an admissible pair into a bounded-control pair.
    Reparam(ReparamArgs),
    /// Direct minimization along the grid ladder.
    Minimize(MinimizeArgs),
    /// Lavrentiev-gap probe over the (grid × bound) lattice.
    Lavrentiev(MinimizeArgs),
    /// Golden values of the built-in examples as a pass/fail table.
    Goldens(GoldensArgs),
}

#[derive(clap::Args, Debug)]
struct ConstantsArgs {
    /// Problem file; when given, the raw constants below are ignored.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    d: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    #[arg(long = "A", default_value_t = 0.0)]
    a: f64,
    /// L¹ norm of γ.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConditionArg {
    Super,
    #[value(name = "G")]
    G,
    #[value(name = "H")]
    H,
    #[value(name = "M")]
    M,
}

#[derive(clap::Args, Debug)]
struct GrowthArgs {
    /// Built-in name or path to a JSON model descriptor.
    #[arg(long)]
    model: String,
    #[arg(long, value_enum, ignore_case = true)]
    condition: ConditionArg,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    delta_star: f64,
    /// Comma-separated center of the initial-state ball (default origin).
    #[arg(long, value_delimiter = ',')]
    x_star: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    /// Lighter sampler.
    #[arg(long)]
    coarse: bool,
    /// Write the certificate here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ReparamArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    pair: PathBuf,
    /// Admissible cost increase; enables an M certificate when H fails.
    #[arg(long)]
    eta: Option<f64>,
    /// JSON with optional `nu`, `mu`, `sigma` forcing the construction.
    #[arg(long)]
    overrides: Option<PathBuf>,
    #[arg(long)]
    coarse: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(clap::Args, Debug)]
struct MinimizeArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(clap::Args, Debug)]
struct GoldensArgs {
    /// Also run the growth-verdict table (minutes).
    #[arg(long)]
    full: bool,
}

/// Domain failure carrying the error kind for the JSON body.
struct Failure {
    kind: String,
    message: String,
}

impl From<BolzaError> for Failure {
    fn from(e: BolzaError) -> Self {
        Failure {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        BolzaError::from(e).into()
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn fail(kind: &str, message: impl Into<String>) -> Failure {
    Failure {
        kind: kind.to_string(),
        message: message.into(),
    }
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| fail("Io", format!("{}: {e}", path.display())))
}

fn canonical<T: Serialize>(v: &T) -> Outcome<String> {
    Ok(to_canonical_string(v)?)
}

fn load_problem(path: &Path, manifest: &mut RunManifest) -> Outcome<(ProblemFile, ProblemSpec)> {
    let text = read(path)?;
    manifest.input(path, text.as_bytes());
    let file = ProblemFile::from_json(&text)?;
    let spec = file.build()?;
    Ok((file, spec))
}

fn load_model(arg: &str, horizon: f64, manifest: &mut RunManifest) -> Outcome<Model> {
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e == "json") || path.exists() {
        let text = read(path)?;
        manifest.input(path, text.as_bytes());
        let mut d: bolza::lagrangian::ModelDescriptor = serde_json::from_str(&text).map_err(BolzaError::from)?;
        d.horizon = horizon;
        return Ok(std::sync::Arc::new(ExprModel::from_descriptor(&d)?));
    }
    Ok(ModelRef::Builtin(arg.to_string()).resolve(horizon)?)
}

fn bounds_context(file: &ProblemFile, spec: &ProblemSpec) -> Outcome<BoundsContext> {
    let b = file
        .bounds
        .as_ref()
        .ok_or_else(|| fail("PreconditionViolated", "the problem file needs a `bounds` block"))?;
    let x_star = b.x_star.clone().unwrap_or_else(|| spec.x.clone());
    Ok(BoundsContext::new(
        spec.model.info(),
        spec.theta,
        b.delta,
        b.delta_star,
        x_star,
        b.b,
    )?)
}

fn sampler(coarse: bool) -> SamplerConfig {
    if coarse {
        SamplerConfig::coarse()
    } else {
        SamplerConfig::default()
    }
}

fn write_out(dir: &Path, name: &str, contents: &[u8], manifest: &mut RunManifest) -> Outcome<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| fail("Io", format!("{}: {e}", path.display())))?;
    manifest.output(&path);
    Ok(())
}

fn finish_manifest(dir: &Path, mut manifest: RunManifest) -> Outcome<()> {
    let path = dir.join("manifest.json");
    manifest.output(&path);
    fs::write(&path, canonical(&manifest)?)?;
    Ok(())
}

fn constants(args: ConstantsArgs, manifest: &mut RunManifest) -> Outcome<String> {
    if let Some(path) = &args.problem {
        let (file, spec) = load_problem(path, manifest)?;
        return canonical(&bounds_context(&file, &spec)?);
    }
    let b = args
        .b
        .ok_or_else(|| fail("Usage", "--B is required without --problem"))?;
    let cs = ConditionSData {
        kappa: args.kappa,
        a: args.a,
        gamma: PiecewiseConstant::constant(args.gamma / args.horizon, args.horizon),
        eps_star: args.horizon,
    };
    #[derive(Serialize)]
    struct Out {
        #[serde(rename = "c_t_B")]
        c_t_b: f64,
        #[serde(rename = "phi_B")]
        phi_b: f64,
        #[serde(rename = "R")]
        r: f64,
    }
    canonical(&Out {
        c_t_b: compute_c_t_b(args.t, b, args.alpha, args.d, args.horizon)?,
        phi_b: compute_phi_b(&cs, b, args.alpha, args.d, args.horizon)?,
        r: (b + args.d * args.horizon) / args.alpha,
    })
}

fn check_growth(args: GrowthArgs, manifest: &mut RunManifest) -> Outcome<String> {
    let model = load_model(&args.model, args.horizon, manifest)?;
    let n = model.info().state_dim;
    let x_star = args.x_star.clone().unwrap_or_else(|| vec![0.0; n]);
    if x_star.len() != n {
        return Err(fail("PreconditionViolated", format!("x_star needs {n} components")));
    }
    let ctx = BoundsContext::new(model.info(), args.theta, args.delta, args.delta_star, x_star, args.b)?;
    let cfg = GrowthConfig {
        sampler: sampler(args.coarse),
        ..GrowthConfig::default()
    };
    let text = match args.condition {
        ConditionArg::Super => canonical(&check_superlinearity(model.as_ref(), ctx.k, &cfg.sampler))?,
        ConditionArg::G => canonical(&check_g(model.as_ref(), ctx.k, &cfg)?)?,
        ConditionArg::H => canonical(&check_h(model.as_ref(), &ctx, &cfg))?,
        ConditionArg::M => canonical(&check_m(model.as_ref(), &ctx, &cfg))?,
    };
    if let Some(out) = &args.out {
        fs::write(out, &text)?;
        manifest.output(out);
    }
    Ok(text)
}

fn reparam(args: ReparamArgs, manifest: &mut RunManifest) -> Outcome<()> {
    let (file, problem) = load_problem(&args.problem, manifest)?;
    let ctx = bounds_context(&file, &problem)?;
    let pair_text = read(&args.pair)?;
    manifest.input(&args.pair, pair_text.as_bytes());
    let pair = AdmissiblePair::from_json(&problem, &pair_text)?;
    let overrides: ReparamOverrides = match &args.overrides {
        Some(p) => {
            let text = read(p)?;
            manifest.input(p, text.as_bytes());
            serde_json::from_str(&text).map_err(BolzaError::from)?
        }
        None => ReparamOverrides::default(),
    };
    let cfg = GrowthConfig {
        sampler: sampler(args.coarse),
        ..GrowthConfig::default()
    };
    let model = problem.model.as_ref();
    let h = check_h(model, &ctx, &cfg);
    let (cert, eta) = if h.holds() {
        (h, 0.0)
    } else if let Some(eta) = args.eta {
        (check_m(model, &ctx, &cfg), eta)
    } else {
        (h, 0.0)
    };
    let plan = ReparamPlan::new(&problem, &ctx, &cert, eta, overrides)?;
    let opts = NicePairOptions {
        sampler: cfg.sampler.clone(),
        ..NicePairOptions::default()
    };
    let (out, rc) = nice_pair(&problem, &pair, &plan, &opts)?;
    write_out(&args.out_dir, "pair_out.json", canonical(&out)?.as_bytes(), manifest)?;
    write_out(&args.out_dir, "certificate.json", canonical(&rc)?.as_bytes(), manifest)?;
    let mut csv = Vec::new();
    out.write_csv(&mut csv)?;
    write_out(&args.out_dir, "trajectory.csv", &csv, manifest)?;
    Ok(())
}

fn load_config(path: Option<&Path>, manifest: &mut RunManifest) -> Outcome<MinimizeConfig> {
    let cfg = match path {
        Some(p) => {
            let text = read(p)?;
            manifest.input(p, text.as_bytes());
            serde_json::from_str(&text).map_err(BolzaError::from)?
        }
        None => MinimizeConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn minimize(args: MinimizeArgs, manifest: &mut RunManifest) -> Outcome<()> {
    let (_, problem) = load_problem(&args.problem, manifest)?;
    let cfg = load_config(args.config.as_deref(), manifest)?;
    let bound = *cfg.control_bound_ladder.last().expect("validated");
    let mut costs = csv::Writer::from_writer(Vec::new());
    costs
        .write_record(["cells", "bound", "cost"])
        .map_err(BolzaError::from)?;
    let mut best: Option<AdmissiblePair> = None;
    for &cells in &cfg.grid_ladder {
        let grid = TimeGrid::uniform(problem.t, problem.horizon, cells)?;
        let warm: Vec<&AdmissiblePair> = best.iter().collect();
        let pair = minimize_from(&problem, &grid, bound, &cfg, &warm)?;
        let j = evaluate_cost(&problem, &pair)?;
        costs
            .write_record([cells.to_string(), bolza::json::fmt_f64(bound), bolza::json::fmt_f64(j)])
            .map_err(BolzaError::from)?;
        best = Some(pair);
    }
    let best = best.expect("nonempty ladder");
    let bytes = costs.into_inner().map_err(|e| fail("Io", e.to_string()))?;
    write_out(&args.out_dir, "costs.csv", &bytes, manifest)?;
    write_out(&args.out_dir, "pair.json", canonical(&best)?.as_bytes(), manifest)?;
    let mut csv = Vec::new();
    best.write_csv(&mut csv)?;
    write_out(&args.out_dir, "trajectory.csv", &csv, manifest)?;
    Ok(())
}

fn lavrentiev(args: MinimizeArgs, manifest: &mut RunManifest) -> Outcome<()> {
    let (_, problem) = load_problem(&args.problem, manifest)?;
    let cfg = load_config(args.config.as_deref(), manifest)?;
    let report = lavrentiev_probe(&problem, &cfg)?;
    let mut csv = Vec::new();
    report.write_lattice_csv(&mut csv)?;
    write_out(&args.out_dir, "lattice.csv", &csv, manifest)?;
    write_out(
        &args.out_dir,
        "gap_report.json",
        canonical(&report)?.as_bytes(),
        manifest,
    )?;
    Ok(())
}

fn run(cli: Cli, argv: &[String]) -> Outcome<ExitCode> {
    if let Ok(v) = std::env::var("BOLZA_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| fail("Usage", format!("BOLZA_THREADS must be a positive integer, got `{v}`")))?;
        bolza::exec::configure_threads(n);
    }
    let mut manifest = RunManifest::new(argv);
    match cli.command {
        Command::Constants(a) => print!("{}", constants(a, &mut manifest)?),
        Command::CheckGrowth(a) => print!("{}", check_growth(a, &mut manifest)?),
        Command::Reparam(a) => {
            let dir = a.out_dir.clone();
            reparam(a, &mut manifest)?;
            finish_manifest(&dir, manifest)?;
        }
        Command::Minimize(a) => {
            let dir = a.out_dir.clone();
            minimize(a, &mut manifest)?;
            finish_manifest(&dir, manifest)?;
        }
        Command::Lavrentiev(a) => {
            let dir = a.out_dir.clone();
            lavrentiev(a, &mut manifest)?;
            finish_manifest(&dir, manifest)?;
        }
        Command::Goldens(a) => {
            let rows = goldens::run(a.full);
            print!("{}", goldens::table(&rows));
            if rows.iter().any(|r| !r.pass) {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &argv) {
        Ok(code) => code,
        Err(f) => {
            let body = serde_json::json!({"error": f.kind, "message": f.message});
            eprintln!("{body}");
            if f.kind == "Usage" {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
