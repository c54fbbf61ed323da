use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cocycle_lab::brownian::tau_samples;
use cocycle_lab::directions::{trajectory_histograms, SphereMesh};
use cocycle_lab::driver::{IncrementLaw, QuadraticIrrational, SystemSpec};
use cocycle_lab::engine::{Cocycle, Observable};
use cocycle_lab::exec::{map_indexed, trajectory_seed, Execution};
use cocycle_lab::filling::kesten_rate;
use cocycle_lab::sojourn::{tau, Cone};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn walk() -> Cocycle {
    let sys = SystemSpec::iid_shift(IncrementLaw::Rademacher, 2, 1).unwrap();
    Cocycle::new(sys, Observable::parse("iid(d=2)").unwrap()).unwrap()
}

fn sojourn(c: &mut Criterion) {
    let walk = walk();
    let cone = Cone::half_space(&[0.0, 1.0]);
    let mut g = c.benchmark_group("walk_sojourn_64x10k");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                map_indexed(exec, 64, |i| {
                    let x = walk.system.sample_initial(trajectory_seed(7, i as u64));
                    tau(&walk.sums(&x, 10_000), 10_000, &cone).unwrap()
                })
            })
        });
    }
    g.finish();
}

fn brownian(c: &mut Criterion) {
    let cone = Cone::angular(&[1.0, 0.0], 0.8);
    let mut g = c.benchmark_group("brownian_tau_256");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| tau_samples(&cone, 1.0, 1e-3, 256, black_box(3), exec).unwrap())
        });
    }
    g.finish();
}

fn directions(c: &mut Criterion) {
    let walk = walk();
    let mesh = SphereMesh::for_dim(2);
    let thresholds = [1.0, 10.0, 100.0];
    let mut g = c.benchmark_group("direction_histograms_32x20k");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                trajectory_histograms(&walk, 20_000, &mesh, &thresholds, 32, black_box(5), exec)
            })
        });
    }
    g.finish();
}

fn kesten(c: &mut Criterion) {
    let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 1);
    let drift = Cocycle::new(sys, Observable::parse("cobdrift(x, c=[1])").unwrap()).unwrap();
    let mut g = c.benchmark_group("kesten_rate_32x20k");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kesten_rate(&drift, 32, 20_000, black_box(9), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = sojourn, brownian, directions, kesten
}
criterion_main!(benches);
