use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hardsat_bench::unique_instance;
use hardsat_core::sa::{Annealer, SaSchedule};
use hardsat_core::sat::enumerate_dos;
use hardsat_core::seed::stream_rng;
use hardsat_core::spectrum::{apply_hqac, lowest_two, DEFAULT_TOL};

fn dos(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate_dos");
    for n in [12, 16, 20] {
        let p = unique_instance(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| enumerate_dos(black_box(p)).unwrap()));
    }
    g.finish();
}

fn hqac(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply_hqac");
    for n in [10, 14] {
        let p = unique_instance(n, 2);
        let v = vec![1.0 / ((1usize << n) as f64).sqrt(); 1 << n];
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| apply_hqac(p, 0.6, black_box(&v)).unwrap()));
    }
    g.finish();
}

fn lanczos(c: &mut Criterion) {
    let mut g = c.benchmark_group("lowest_two");
    g.sample_size(10);
    for n in [8, 12] {
        let p = unique_instance(n, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| lowest_two(p, 0.6, DEFAULT_TOL).unwrap()));
    }
    g.finish();
}

fn anneal(c: &mut Criterion) {
    let mut g = c.benchmark_group("sa_trajectory");
    let schedule = SaSchedule::default();
    for n in [10, 16] {
        let a = Annealer::new(&unique_instance(n, 4)).unwrap();
        let mut t = 0;
        g.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| {
                t += 1;
                a.trajectory(&schedule, &mut stream_rng(7, t))
            })
        });
    }
    g.finish();
}

criterion_group!(benches, dos, hqac, lanczos, anneal);
criterion_main!(benches);
