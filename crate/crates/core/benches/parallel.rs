//! Parallel versus sequential execution of the two heaviest loops: the
//! sampled estimate of Ξ and the restarts of the direct minimizer.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bolza::constants::estimate_xi;
use bolza::lagrangian::builtin;
use bolza::minimize::{minimize_direct, MinimizeConfig};
use bolza::sampling::SamplerConfig;
use bolza::trajectory::{ProblemSpec, TerminalCost, TimeGrid};
use bolza::ExecMode;

const MODES: [ExecMode; 2] = [ExecMode::Sequential, ExecMode::Parallel];

fn xi(c: &mut Criterion) {
    let model = builtin("discont_surface").unwrap();
    let mut group = c.benchmark_group("estimate_xi");
    group.sample_size(10);
    for mode in MODES {
        let cfg = SamplerConfig {
            mode,
            use_closed_forms: false,
            ..SamplerConfig::coarse()
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &cfg, |b, cfg| {
            b.iter(|| estimate_xi(model.as_ref(), 2.0, 4.0, cfg).unwrap())
        });
    }
    group.finish();
}

fn restarts(c: &mut Criterion) {
    let problem = ProblemSpec::new(builtin("discont_surface").unwrap(), 0.0, 1.0, vec![-0.5, 0.0]).with_terminal(
        TerminalCost::HardEndpoint {
            target: vec![0.5, 0.5],
            tol: 1e-6,
        },
    );
    let grid = TimeGrid::uniform(0.0, 1.0, 16).unwrap();
    let mut group = c.benchmark_group("minimize_restarts");
    group.sample_size(10);
    for mode in MODES {
        let config = MinimizeConfig {
            restarts: 4,
            inner_iters: 10,
            mode,
            ..MinimizeConfig::default()
        };
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &config,
            |b, config| b.iter(|| minimize_direct(&problem, &grid, 4.0, config).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, xi, restarts);
criterion_main!(benches);
