use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ddg_core::harness::{Problem, ProblemSpec};
use ddg_core::projections::project_pi_h;
use ddg_core::{l2_project, Execution, FluxParams, Mesh2D, OperatorContext};

fn residual(c: &mut Criterion) {
    let spec = ProblemSpec::new(Problem::Burgers2d);
    let mut group = c.benchmark_group("residual");
    for (k, n) in [(2, 32), (3, 32)] {
        let mesh = Arc::new(Mesh2D::uniform(n, n).unwrap());
        let params = FluxParams::new(k, 12.0, FluxParams::special_beta1(k)).unwrap();
        let u = l2_project(&spec.exact, 0.0, mesh.clone(), k).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let ctx = OperatorContext::new(mesh.clone(), k, params.clone(), spec.flux.clone(), spec.source.clone())
                .unwrap()
                .with_execution(exec);
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), format!("k{k}_N{n}")), &u, |b, u| {
                b.iter(|| ctx.residual(u, 0.0).unwrap())
            });
        }
    }
    group.finish();
}

fn pi_h(c: &mut Criterion) {
    let spec = ProblemSpec::new(Problem::Burgers2d);
    let k = 2;
    let mesh = Arc::new(Mesh2D::uniform(32, 32).unwrap());
    let params = FluxParams::new(k, 12.0, FluxParams::special_beta1(k)).unwrap();
    c.bench_function("pi_h_k2_N32", |b| {
        b.iter(|| project_pi_h(&spec.exact, 0.0, mesh.clone(), k, &params).unwrap())
    });
}

criterion_group!(benches, residual, pi_h);
criterion_main!(benches);
