//! Compares the parallel grid-scan path (rayon, default feature) against a
//! plain sequential per-cell loop over the same workload.
//!
//! Run with `cargo bench -p gecap-core`; disable the `parallel` feature to
//! measure the sequential dispatch of the library entry points themselves:
//! `cargo bench -p gecap-core --no-default-features`.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use gecap_core::capacity::OptimOptions;
use gecap_core::pdl::{scan_grid, solve_q1_pdl, superadditivity_report, ScanKind};

fn bench_q1_heatmap(c: &mut Criterion) {
    let mut group = c.benchmark_group("q1_heatmap_21x21");
    let opts = OptimOptions::default();

    group.bench_function("scan_grid", |b| {
        b.iter_batched(
            || (),
            |_| scan_grid(ScanKind::Q1Heatmap, 21, None, &opts).unwrap(),
            BatchSize::SmallInput,
        )
    });

    group.bench_function("sequential_loop", |b| {
        b.iter(|| {
            let n = 21;
            let mut rows = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let p_h = i as f64 / (n - 1) as f64;
                    let p_v = j as f64 / (n - 1) as f64;
                    rows.push((p_h, p_v, solve_q1_pdl(p_h, p_v).unwrap().q1));
                }
            }
            rows
        })
    });

    group.finish();
}

fn bench_superadd_gap(c: &mut Criterion) {
    let mut group = c.benchmark_group("superadd_gap_4x4");
    group.sample_size(10);
    let opts = OptimOptions { restarts: 2, seed: 42, max_evals: 1500 };

    group.bench_function("scan_grid", |b| {
        b.iter(|| scan_grid(ScanKind::SuperaddGap, 4, None, &opts).unwrap())
    });

    group.bench_function("sequential_loop", |b| {
        b.iter(|| {
            let n = 4;
            let mut rows = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let p_h = 0.5 + 0.5 * i as f64 / (n - 1) as f64;
                    let p_v = 0.5 * j as f64 / (n - 1) as f64;
                    let cell = superadditivity_report(p_h, p_v, &opts).unwrap();
                    rows.push((p_h, p_v, cell.gap));
                }
            }
            rows
        })
    });

    group.finish();
}

criterion_group!(benches, bench_q1_heatmap, bench_superadd_gap);
criterion_main!(benches);
