use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qline_bench::{bits, line_config, short_spec};
use qline_core::adversary::passive;
use qline_core::analysis::{run_interaction, Interaction};
use qline_core::postproc::{privacy_amplify, reconcile};
use qline_core::resources::{ideal_system, qline_system, SigmaVariant};
use qline_core::run_line;
use std::hint::black_box;

fn line(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_line");
    g.sample_size(20);
    for parties in [2, 3, 5] {
        let cfg = line_config(parties, 10_000);
        g.bench_with_input(BenchmarkId::from_parameter(parties), &cfg, |b, cfg| {
            b.iter(|| run_line(black_box(cfg), &passive()).unwrap())
        });
    }
    g.finish();
}

fn postproc(c: &mut Criterion) {
    let key = bits(4096, 1);
    let seed = bits(4096 + 2048 - 1, 2);
    c.bench_function("privacy_amplify/4096->2048", |b| {
        b.iter(|| privacy_amplify(black_box(&key), &seed, 2048).unwrap())
    });
    let mut noisy = key.clone();
    for i in (0..noisy.len()).step_by(97) {
        noisy[i] = !noisy[i];
    }
    c.bench_function("reconcile/4096", |b| b.iter(|| reconcile(black_box(&key), black_box(&noisy)).unwrap()));
}

fn systems(c: &mut Criterion) {
    let spec = short_spec("AB");
    let mut g = c.benchmark_group("interaction");
    g.bench_function("real", |b| {
        b.iter(|| {
            let mut sys = qline_system(&spec, 3).unwrap();
            run_interaction(&mut sys, &spec, Interaction::Honest, 3).unwrap()
        })
    });
    g.bench_function("ideal", |b| {
        b.iter(|| {
            let mut sys = ideal_system(&spec, 3, SigmaVariant::Faithful).unwrap();
            run_interaction(&mut sys, &spec, Interaction::Honest, 3).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, line, postproc, systems);
criterion_main!(benches);
