use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slocc_bench::{bench_options, catalogued_states};
use slocc_core::{catalog, classify_system, is_critical, momentum, morse_index, random_state, total_variance};

fn momentum_and_variance(c: &mut Criterion) {
    let mut group = c.benchmark_group("momentum");
    for desc in [catalog::qubits3(), catalog::wedge35(), slocc_core::SystemDescriptor::distinguishable(3, 4).unwrap()] {
        let psi = random_state(desc, 1);
        group.bench_with_input(BenchmarkId::new("momentum", desc), &psi, |b, psi| b.iter(|| momentum(black_box(psi))));
        group.bench_with_input(BenchmarkId::new("variance", desc), &psi, |b, psi| {
            b.iter(|| total_variance(black_box(psi)).unwrap())
        });
    }
    group.finish();
}

fn morse(c: &mut Criterion) {
    let mut group = c.benchmark_group("morse_index");
    for (name, psi) in catalogued_states() {
        let lambda = is_critical(&psi, 1e-9).lambda;
        group.bench_function(name, |b| b.iter(|| morse_index(black_box(&psi), lambda, 1e-8, 1e-9).unwrap()));
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("classify");
    group.sample_size(10);
    let opts = bench_options();
    group.bench_function("three_qubits_d6", |b| b.iter(|| classify_system(catalog::qubits3(), Some(6), &opts).unwrap()));
    group.bench_function("wedge35_d30", |b| b.iter(|| classify_system(catalog::wedge35(), Some(30), &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, momentum_and_variance, morse, sweep);
criterion_main!(benches);
