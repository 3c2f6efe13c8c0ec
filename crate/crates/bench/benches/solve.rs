use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use helmdd_bench::desk_problem;
use helmdd_core::krylov::{gmres, GmresConfig, LinearOperator};
use helmdd_core::partition::{build_local_problems, decompose};
use helmdd_core::{Layout, Oras};

fn oras_gmres(c: &mut Criterion) {
    let (g, mesh, sys) = desk_problem(0.1);
    let dofmap = &sys.dofmap;
    let dec = decompose(&mesh, dofmap, 8, Layout::Grid { sx: 4, sy: 2 }, 2).unwrap();
    let locals = build_local_problems(&g, &mesh, dofmap, &dec).unwrap();
    let oras = Oras::new(dec, locals).unwrap();
    c.bench_function("oras_apply_s8", |b| b.iter(|| oras.apply(black_box(&sys.b)).unwrap()));
    let cfg = GmresConfig {
        tol: 1e-6,
        maxiter: 1000,
        record_hr: false,
        ..Default::default()
    };
    let mut group = c.benchmark_group("gmres");
    group.sample_size(10);
    group.bench_function("oras_s8_no_hr", |b| b.iter(|| gmres(&sys.a, Some(&oras), &sys.b, &cfg).unwrap()));
    let with_hr = GmresConfig { record_hr: true, ..cfg };
    group.bench_function("oras_s8_hr_every_step", |b| b.iter(|| gmres(&sys.a, Some(&oras), &sys.b, &with_hr).unwrap()));
    group.finish();
}

criterion_group!(benches, oras_gmres);
criterion_main!(benches);
