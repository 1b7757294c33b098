use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lmreg::gof::{loo_variance, Standardization};
use lmreg::harness::{run_table1, ExperimentConfig, Model};
use lmreg::kernel::{default_grid, Bandwidth, Kernel, VarianceEstimator};
use lmreg::limits::{sample_z2, LimitKind, Z2Request};
use lmreg::regress::{fit_lse, Basis};
use lmreg::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn table1(c: &mut Criterion) {
    let mut g = c.benchmark_group("table1_cell");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = ExperimentConfig {
            n: 500,
            reps: 64,
            big_h_grid: vec![0.75],
            h_grid: vec![0.75],
            execution: exec,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_table1(black_box(&cfg)).unwrap()));
    }
    g.finish();
}

fn limit_law(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_z2");
    g.sample_size(10);
    let req = Z2Request::new(0.9, 0.9, LimitKind::Z2Independent, 512, 256, 7);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| sample_z2(black_box(&req), exec).unwrap()));
    }
    g.finish();
}

fn kernel(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let d = Model::new(&cfg, 2000, 0.75, 0.75).unwrap().draw(3);
    let fit = fit_lse(&d.x, &d.y, &Basis::SimpleLinear).unwrap();
    let bw = Bandwidth::new(3.0, 0.2, d.x.len()).unwrap();
    let est = VarianceEstimator::new(&d.x, &fit.residuals, bw, Kernel::Cosine).unwrap();
    let grid = default_grid();
    let mut g = c.benchmark_group("kernel");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("grid", name), |b| b.iter(|| est.estimate_grid(black_box(&grid), exec).unwrap()));
        g.bench_function(BenchmarkId::new("loo", name), |b| {
            b.iter(|| loo_variance(black_box(&d.x), &fit.residuals, bw, Kernel::Cosine, Standardization::Studentized, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, table1, limit_law, kernel);
criterion_main!(benches);
