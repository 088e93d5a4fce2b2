//! Single worker vs the full rayon pool on the three heavy stages. Build with
//! `--no-default-features` to time the plain sequential loops instead.

use std::sync::Arc;

use bargmann_lens::backends::{coherent_zero_family, torus_backend, PrequantizedKahler, SectionFamily};
use bargmann_lens::diagnostics::zero_locus;
use bargmann_lens::model_bundle::{bargmann_section, BallDomain, Polynomial};
use bargmann_lens::par;
use bargmann_lens::renormalize::{build_chart, identity_frame, radial_gauge, renormalize_section};
use bargmann_lens::Complex64;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const K: u32 = 16;

fn setup() -> (Arc<dyn PrequantizedKahler>, Arc<dyn SectionFamily>, BallDomain) {
    let torus = torus_backend(2).unwrap();
    let offsets = vec![
        vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.6)],
    ];
    let weights = vec![Complex64::new(1.0, 0.0); 2];
    let family = coherent_zero_family(&torus, K, &[0.0; 4], &offsets, &weights).unwrap();
    (Arc::new(torus), Arc::new(family), BallDomain::new(2, 0.9, 13).unwrap())
}

fn modes() -> [(&'static str, usize); 2] {
    [("one-thread", 1), ("all-cores", 0)]
}

fn gauge(c: &mut Criterion) {
    let (torus, _, grid) = setup();
    let chart = build_chart(torus, &[0.0; 4], K, &identity_frame(2)).unwrap();
    let mut group = c.benchmark_group("radial_gauge");
    group.sample_size(10);
    for (label, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| par::with_threads(threads, || radial_gauge(&chart, grid).unwrap()))
        });
    }
    group.finish();
}

fn renormalize(c: &mut Criterion) {
    let (torus, family, grid) = setup();
    let chart = build_chart(torus, &[0.0; 4], K, &identity_frame(2)).unwrap();
    let g = radial_gauge(&chart, grid).unwrap();
    let mut group = c.benchmark_group("renormalize_section");
    group.sample_size(10);
    for (label, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| {
                par::with_threads(threads, || renormalize_section(Arc::clone(&family), &chart, &g, grid).unwrap())
            })
        });
    }
    group.finish();
}

fn zeros(c: &mut Criterion) {
    let grid = BallDomain::new(2, 0.9, 17).unwrap();
    let one = Complex64::new(1.0, 0.0);
    let p = Polynomial::from_terms(2, [(vec![1, 0], one), (vec![0, 2], -0.5 * one)]);
    let s = bargmann_section(&p, grid).unwrap();
    let mut group = c.benchmark_group("zero_locus");
    group.sample_size(10);
    for (label, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| par::with_threads(threads, || zero_locus(&s).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, gauge, renormalize, zeros);
criterion_main!(benches);
