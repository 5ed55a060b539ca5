//! Parallel vs sequential paths of the sweep engine. Each workload runs
//! twice: on the rayon pool and with `par::set_sequential(true)`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rectif::coefficients::{c_profile, CKind};
use rectif::cubes::build_christ_cubes_with_unit;
use rectif::energies::{beta_energy, carleson_energy, PlaneSource};
use rectif::generators::{gen_cantor4, gen_lipschitz_graph};
use rectif::par;

const PATHS: [(&str, bool); 2] = [("parallel", false), ("sequential", true)];

fn bench_c_profile(c: &mut Criterion) {
    let mu = gen_lipschitz_graph(0.3, 1.0, 8.0, 1.0 / 256.0).unwrap();
    let ts: Vec<f64> = (0..64).map(|k| 0.01 * 1.1f64.powi(k)).collect();
    let xs: Vec<usize> = (0..mu.len()).step_by(mu.len() / 16).collect();
    let mut g = c.benchmark_group("c_profile");
    for (name, seq) in PATHS {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new(name, mu.len()), |b| {
            b.iter(|| {
                for &i in &xs {
                    black_box(c_profile(&mu, mu.point(i), &ts, &CKind::C).unwrap());
                }
            })
        });
    }
    par::set_sequential(false);
    g.finish();
}

fn bench_carleson(c: &mut Criterion) {
    let mu = gen_cantor4(5).unwrap();
    let tree = build_christ_cubes_with_unit(&mu, 0, 8, 1.5).unwrap();
    let mut g = c.benchmark_group("carleson_energy");
    g.sample_size(10);
    for (name, seq) in PATHS {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new(name, mu.len()), |b| {
            b.iter(|| black_box(carleson_energy(&mu, &tree, tree.root(), &CKind::C, 8).unwrap()))
        });
    }
    par::set_sequential(false);
    g.finish();
}

fn bench_beta_energy(c: &mut Criterion) {
    let mu = gen_lipschitz_graph(0.3, 1.0, 16.0, 1.0 / 64.0).unwrap();
    let tree = build_christ_cubes_with_unit(&mu, 0, 7, 8.0).unwrap();
    let mut g = c.benchmark_group("beta_energy");
    g.sample_size(10);
    for (name, seq) in PATHS {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new(name, mu.len()), |b| {
            b.iter(|| black_box(beta_energy(&mu, &tree, tree.root(), &PlaneSource::Beta2).unwrap()))
        });
    }
    par::set_sequential(false);
    g.finish();
}

criterion_group!(benches, bench_c_profile, bench_carleson, bench_beta_energy);
criterion_main!(benches);
