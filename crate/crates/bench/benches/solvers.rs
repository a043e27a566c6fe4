use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::Vector3;
use sbt_core::bem::{build_surface_mesh, single_layer_matrix, ReferenceMethod, ReferenceSystem};
use sbt_core::kernel::assemble_sbt_matrix;
use sbt_core::{CurveSpec, RigidSystem, SlenderGeometry};
use std::hint::black_box;

const WAVY: CurveSpec = CurveSpec::WavyCircle { amplitude: 0.02, mode: 3 };

fn sbt(c: &mut Criterion) {
    let mut group = c.benchmark_group("sbt");
    for n in [128, 256, 512] {
        let g = SlenderGeometry::build(&WAVY, n, 0.01).unwrap();
        group.bench_with_input(BenchmarkId::new("assemble", n), &g, |b, g| b.iter(|| assemble_sbt_matrix(black_box(g)).unwrap()));
        group.bench_with_input(BenchmarkId::new("factor_and_solve", n), &g, |b, g| {
            b.iter(|| RigidSystem::new(black_box(g)).unwrap().solve(&Vector3::z(), &Vector3::zeros()).unwrap())
        });
    }
    group.finish();
}

fn reference(c: &mut Criterion) {
    let mut group = c.benchmark_group("reference");
    group.sample_size(10);
    let g = SlenderGeometry::build(&WAVY, 128, 0.02).unwrap();
    for (ns, nt) in [(16, 8), (32, 8)] {
        let mesh = build_surface_mesh(&g, ns, nt).unwrap();
        let id = format!("{ns}x{nt}");
        group.bench_with_input(BenchmarkId::new("assemble_corrected", &id), &mesh, |b, m| {
            b.iter(|| single_layer_matrix(black_box(m), &ReferenceMethod::Corrected).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("assemble_regularized", &id), &mesh, |b, m| {
            b.iter(|| single_layer_matrix(black_box(m), &ReferenceMethod::Regularized { delta_factor: 1.0 }).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("full_solve", &id), &mesh, |b, m| {
            b.iter(|| ReferenceSystem::new(m, &ReferenceMethod::Corrected).unwrap().solve(&Vector3::z(), &Vector3::zeros()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sbt, reference);
criterion_main!(benches);
