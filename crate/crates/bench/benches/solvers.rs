use std::hint::black_box;

use burgers_ocp::{
    assemble_linearized, solve_ocp, solve_state, Method, Mesh, NewtonOptions, OcpOptions,
    PiecewiseLinearFn, ReducedProblem,
};
use burgers_ocp_bench::{exact_control, problem, state_load, SIZES};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobian");
    for n in SIZES {
        let mesh = Mesh::new(n).unwrap();
        let v: Vec<f64> = (1..n).map(|i| (i as f64 / n as f64).sin()).collect();
        let y = PiecewiseLinearFn::from_interior(mesh, &v).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &y, |b, y| {
            b.iter(|| assemble_linearized(black_box(y), &mesh, 0.78).unwrap())
        });
    }
    group.finish();
}

fn bench_state(c: &mut Criterion) {
    let p = problem();
    let mut group = c.benchmark_group("solve_state");
    for n in SIZES {
        let mesh = Mesh::new(n).unwrap();
        let load = state_load(&p, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &load, |b, load| {
            b.iter(|| solve_state(black_box(load), &mesh, p.nu, &NewtonOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_reduced_eval(c: &mut Criterion) {
    let p = problem();
    let mut group = c.benchmark_group("reduced_eval");
    for n in SIZES {
        let rp = ReducedProblem::new(&p, Mesh::new(n).unwrap()).unwrap();
        let u = exact_control(&p, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| rp.eval(black_box(u)).unwrap())
        });
    }
    group.finish();
}

fn bench_ocp(c: &mut Criterion) {
    let p = problem();
    let mut group = c.benchmark_group("solve_ocp");
    group.sample_size(20);
    for method in [Method::Gradient, Method::Bfgs] {
        let opts = OcpOptions {
            method,
            ..OcpOptions::default()
        };
        for n in [41, 161] {
            let mesh = Mesh::new(n).unwrap();
            group.bench_function(BenchmarkId::new(format!("{method:?}"), n), |b| {
                b.iter(|| solve_ocp(&p, &mesh, &opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_state, bench_reduced_eval, bench_ocp);
criterion_main!(benches);
