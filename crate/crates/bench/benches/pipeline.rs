use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use stratlab::gallery::{self, GalleryOptions};
use stratlab::neighborhoods::{directed_probe, probe_openness};
use stratlab::witness::{complex_witness, real_witness, WitnessOptions};
use stratlab::{GridSpec, Tolerances};

fn witness(c: &mut Criterion) {
    let tol = Tolerances::default();
    let fault = gallery::golubitsky_fault(&tol).expect("fixture");
    c.bench_function("witness/real", |b| {
        b.iter(|| real_witness(black_box(&fault), &WitnessOptions::default(), &tol).expect("witness"))
    });
    let (cfault, source) = gallery::complex_fault(&tol).expect("fixture");
    c.bench_function("witness/complex", |b| {
        b.iter(|| complex_witness(black_box(&cfault), &source, &WitnessOptions::default(), &tol).expect("witness"))
    });
}

fn probe(c: &mut Criterion) {
    let tol = Tolerances::default();
    let sigma = gallery::circle_sigma();
    let spec = gallery::hirsch_spec(0.05);
    let grid = GridSpec::new(gallery::PROBE_GRID);
    let mut g = c.benchmark_group("probe");
    g.sample_size(10);
    g.bench_function("openness_20", |b| {
        b.iter(|| probe_openness(&spec, &sigma, 20, black_box(1), grid, None, &tol).expect("probe"))
    });
    let wide = gallery::hirsch_spec(0.1);
    g.bench_function("directed", |b| {
        b.iter(|| directed_probe(&wide, &sigma, &gallery::hirsch_family(), grid, &tol).expect("probe"))
    });
    g.finish();
}

fn gallery_all(c: &mut Criterion) {
    let mut g = c.benchmark_group("gallery");
    g.sample_size(10);
    g.bench_function("all", |b| b.iter(|| gallery::run_all(black_box(&GalleryOptions::default()))));
    g.finish();
}

criterion_group!(benches, witness, probe, gallery_all);
criterion_main!(benches);
