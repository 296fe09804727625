//! Hot-path timings: geometry construction, operator assembly, the
//! spectrum solve, and one variation formula. Run with `cargo bench`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use steklov_core::{
    assemble_dtn, build_curve, dt_dtn_normal, steklov_spectrum, BoundaryField, CurveSpec,
};

fn wavy_spec(n_nodes: usize) -> CurveSpec {
    CurveSpec {
        base_radius: 1.0,
        cos: vec![0.0, 0.0, 0.1],
        sin: vec![],
        n_nodes,
        r_min: 0.05,
    }
}

fn curve_construction(c: &mut Criterion) {
    let spec = wavy_spec(256);
    c.bench_function("build_curve wavy n=256", |b| {
        b.iter(|| build_curve(black_box(&spec)).unwrap())
    });
}

fn operator_assembly(c: &mut Criterion) {
    let curve = build_curve(&wavy_spec(256)).unwrap();
    c.bench_function("assemble_dtn wavy n=256 order=24", |b| {
        b.iter(|| assemble_dtn(black_box(&curve), 24).unwrap())
    });
}

fn spectrum_solve(c: &mut Criterion) {
    let curve = build_curve(&CurveSpec::circle(1.0, 128)).unwrap();
    let dtn = assemble_dtn(&curve, 16).unwrap();
    c.bench_function("steklov_spectrum disk n=128 order=16", |b| {
        b.iter(|| steklov_spectrum(black_box(&curve), black_box(&dtn), 10, 1e-5).unwrap())
    });
}

fn variation_formula(c: &mut Criterion) {
    let curve = build_curve(&wavy_spec(256)).unwrap();
    let dtn = assemble_dtn(&curve, 24).unwrap();
    let f = BoundaryField::from_fn(&curve, |th| th.cos()).unwrap();
    let sigma = BoundaryField::from_fn(&curve, |th| (2.0 * th).cos()).unwrap();
    c.bench_function("dt_dtn_normal wavy n=256 order=24", |b| {
        b.iter(|| dt_dtn_normal(black_box(&curve), &dtn, &f, &sigma, None).unwrap())
    });
}

criterion_group!(
    benches,
    curve_construction,
    operator_assembly,
    spectrum_solve,
    variation_formula
);
criterion_main!(benches);
