use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use decomap::certify::{dual_witness, sep_witness_with, CertifyOptions};
use decomap::corpus::choi_map;
use decomap::exec::Execution;
use decomap::maps::positivity_probe_with;
use decomap::matlib::max_entangled_vector;
use decomap::ComplexMatrix;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn probe(c: &mut Criterion) {
    let phi = choi_map(1.0);
    let mut group = c.benchmark_group("positivity_probe");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| positivity_probe_with(&phi, 2000, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn sep_witness(c: &mut Criterion) {
    let e = max_entangled_vector(3);
    let rho = ComplexMatrix::outer(&e, &e).scale(1.0 / 3.0);
    let mut group = c.benchmark_group("sep_witness");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sep_witness_with(&rho, 3, 3, 64, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn dual_restarts(c: &mut Criterion) {
    let phi = choi_map(1.0);
    let mut group = c.benchmark_group("dual_witness_restarts");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = CertifyOptions { budget: 2000, restarts: 4, exec, ..Default::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| dual_witness(&phi, true, &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, probe, sep_witness, dual_restarts);
criterion_main!(benches);
