use std::time::Duration;

use cavgate::dynamics::{transfer_point, FidelityOptions};
use cavgate::{par, SystemParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn damped() -> SystemParams {
    SystemParams {
        decay: 0.0034,
        dephasing: 0.0096,
        ..SystemParams::reference()
    }
}

/// Photon-number sweep of the dissipative transfer at half a period.
fn sweep(c: &mut Criterion) {
    let params = damped();
    let opts = FidelityOptions::default();
    let mut group = c.benchmark_group("transfer_sweep");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    for count in [4usize, 8] {
        let ns: Vec<usize> = (0..count).collect();
        group.bench_with_input(BenchmarkId::new("parallel", count), &ns, |b, ns| {
            b.iter(|| par::map(ns, |&n| transfer_point(&params, 20.8, n, &opts).unwrap().value))
        });
        group.bench_with_input(BenchmarkId::new("sequential", count), &ns, |b, ns| {
            b.iter(|| par::map_sequential(ns, |&n| transfer_point(&params, 20.8, n, &opts).unwrap().value))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
