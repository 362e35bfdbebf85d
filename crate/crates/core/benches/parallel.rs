//! Matrix assembly and a Berezin grid on a one-thread pool against the
//! default pool. Without the `parallel` feature only the sequential path runs.

use std::hint::black_box;

use bergman_lab::kernel::berezin_direct;
use bergman_lab::toeplitz::assemble;
use bergman_lab::{QuadratureConfig, Symbol, UnitDiskPoint};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn workload(f: &Symbol, n: usize) {
    let q = QuadratureConfig::default();
    let rule = q.matrix_rule(f, n).unwrap();
    black_box(assemble(f, n, &rule).unwrap());
    let rule = q.rule_with(f, q.angular_for_radius(0.9)).unwrap();
    for k in 0..16 {
        let z = UnitDiskPoint::from_polar(0.9, k as f64 * std::f64::consts::PI / 8.0).unwrap();
        black_box(berezin_direct(&rule, f, z).unwrap());
    }
}

fn compare(c: &mut Criterion) {
    let f = Symbol::parse("w + disk(0.7)").unwrap();
    let mut group = c.benchmark_group("assemble_and_berezin");
    group.sample_size(10);
    for n in [32, 64] {
        #[cfg(feature = "parallel")]
        {
            let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            group.bench_with_input(BenchmarkId::new("one-thread", n), &n, |b, &n| {
                b.iter(|| single.install(|| workload(&f, n)))
            });
            let full = rayon::ThreadPoolBuilder::new().build().unwrap();
            group.bench_with_input(
                BenchmarkId::new(format!("default-pool-{}", full.current_num_threads()), n),
                &n,
                |b, &n| b.iter(|| full.install(|| workload(&f, n))),
            );
        }
        #[cfg(not(feature = "parallel"))]
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| b.iter(|| workload(&f, n)));
    }
    group.finish();
}

criterion_group!(benches, compare);
criterion_main!(benches);
