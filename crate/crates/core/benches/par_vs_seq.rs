//! Parallel vs sequential throughput of the two quadratic hot spots:
//! Nystrom matrix assembly and tacnode coupling-table construction.
//!
//! Run with `cargo bench -p tacgap-core`. The parallel paths need the
//! default `parallel` feature; without it both sides of each comparison
//! run the sequential code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tacgap_core::fredholm::{nystrom_matrix, nystrom_matrix_serial, KernelFn};
use tacgap_core::kernels::{airy_kernel, TacnodeContext, TacnodeParams};
use tacgap_core::quad::semi_infinite_rule;

fn bench_assembly(c: &mut Criterion) {
    let eval = |x: f64, y: f64| airy_kernel(x, y);
    let kernel = KernelFn::new(&eval, true);
    let mut group = c.benchmark_group("nystrom_assembly");
    group.sample_size(20);
    for &n in &[64usize, 128, 256] {
        let rule = semi_infinite_rule(-2.0, 1e-12, n).unwrap();
        group.bench_with_input(BenchmarkId::new("parallel", n), &rule, |b, rule| {
            b.iter(|| nystrom_matrix(&kernel, rule).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("serial", n), &rule, |b, rule| {
            b.iter(|| nystrom_matrix_serial(&kernel, rule).unwrap())
        });
    }
    group.finish();
}

fn bench_context(c: &mut Criterion) {
    let params = TacnodeParams::new(1.0, 0.5).unwrap();
    let probes: Vec<f64> = (0..48).map(|i| -2.0 + f64::from(i) / 12.0).collect();
    let mut group = c.benchmark_group("tacnode_context");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| TacnodeContext::build(&params, &probes, 48).unwrap())
    });
    group.bench_function("serial", |b| {
        b.iter(|| TacnodeContext::build_serial(&params, &probes, 48).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_context);
criterion_main!(benches);
