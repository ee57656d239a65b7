use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use trinfer_bench::{Prepared, Workload};
use trinfer_core::harness::Backend;

fn bench_workloads(c: &mut Criterion, group: &str, cases: &[(usize, Workload)]) {
    let mut g = c.benchmark_group(group);
    for &(size, w) in cases {
        let prep = Prepared::new(w, Backend::Simulated, 7).expect("inputs share");
        g.throughput(Throughput::Elements(size as u64));
        g.bench_with_input(BenchmarkId::from_parameter(size), &prep, |b, prep| {
            b.iter(|| prep.run().expect("protocol runs"))
        });
    }
    g.finish();
}

fn primitives(c: &mut Criterion) {
    bench_workloads(
        c,
        "mul",
        &[(1 << 10, Workload::Mul(1 << 10)), (1 << 16, Workload::Mul(1 << 16))],
    );
    bench_workloads(
        c,
        "a2b",
        &[(1 << 10, Workload::A2b(1 << 10)), (1 << 14, Workload::A2b(1 << 14))],
    );
    bench_workloads(
        c,
        "lt",
        &[(1 << 10, Workload::Lt(1 << 10)), (1 << 14, Workload::Lt(1 << 14))],
    );
}

fn nonlinear(c: &mut Criterion) {
    bench_workloads(
        c,
        "gelu",
        &[(1 << 10, Workload::Gelu(1 << 10)), (1 << 14, Workload::Gelu(1 << 14))],
    );
    bench_workloads(
        c,
        "softmax",
        &[(64, Workload::Softmax(64, 64)), (128, Workload::Softmax(128, 128))],
    );
    bench_workloads(
        c,
        "layernorm",
        &[(64, Workload::Layernorm(64, 64)), (256, Workload::Layernorm(256, 64))],
    );
}

fn forward(c: &mut Criterion) {
    let mut c = c.benchmark_group("forward_tiny");
    c.sample_size(10);
    for s in [1usize, 8, 16] {
        let prep = Prepared::new(Workload::Forward(s), Backend::Simulated, 7).expect("model shares");
        c.bench_with_input(BenchmarkId::from_parameter(s), &prep, |b, prep| {
            b.iter(|| prep.run().expect("forward runs"))
        });
    }
    c.finish();
}

criterion_group!(benches, primitives, nonlinear, forward);
criterion_main!(benches);
