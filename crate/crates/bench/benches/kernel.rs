use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dpcollapse_core::consts::ANGSTROM;
use dpcollapse_core::kernel::{delta_e_brute_atoms, delta_e_fast, pair_kernel, BruteOptions};
use dpcollapse_core::{Lattice, SuperpositionConfig, Vec3};
use std::hint::black_box;

const MASS: f64 = 2.0e-26;

fn config(d: f64) -> SuperpositionConfig {
    SuperpositionConfig::new(Vec3::xy(d, 0.0), ANGSTROM).unwrap()
}

fn kernel(c: &mut Criterion) {
    let d = Vec3::xy(1e-6, 0.0);
    c.bench_function("pair_kernel", |b| {
        b.iter(|| pair_kernel(black_box(Vec3::xy(3e-10, 4e-10)), black_box(ANGSTROM), d))
    });
}

fn fast(c: &mut Criterion) {
    let mut g = c.benchmark_group("delta_e_fast");
    g.sample_size(10);
    for side in [100u64, 300, 1000] {
        let lat = Lattice::square(side, side, ANGSTROM, MASS).unwrap();
        let cfg = config(4.0 * side as f64 * ANGSTROM);
        g.bench_with_input(BenchmarkId::from_parameter(side * side), &lat, |b, lat| {
            b.iter(|| delta_e_fast(lat, &cfg, 1).unwrap().delta_e)
        });
    }
    let graphene = Lattice::graphene_sheet(300, 300).unwrap();
    let cfg = config(1e-7);
    g.bench_function("graphene_180000", |b| {
        b.iter(|| delta_e_fast(&graphene, &cfg, 1).unwrap().delta_e)
    });
    g.finish();
}

fn brute(c: &mut Criterion) {
    let mut g = c.benchmark_group("delta_e_brute");
    g.sample_size(10);
    let opts = BruteOptions {
        workers: 1,
        override_cap: false,
    };
    for side in [10u64, 30, 60] {
        let atoms = Lattice::square(side, side, ANGSTROM, MASS).unwrap().atoms();
        let cfg = [config(4.0 * side as f64 * ANGSTROM)];
        g.bench_with_input(BenchmarkId::from_parameter(side * side), &atoms, |b, atoms| {
            b.iter(|| delta_e_brute_atoms(atoms, &cfg, &opts).unwrap()[0].delta_e)
        });
    }
    g.finish();
}

criterion_group!(benches, kernel, fast, brute);
criterion_main!(benches);
