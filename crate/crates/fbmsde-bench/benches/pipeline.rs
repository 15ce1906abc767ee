use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use fbmsde::coeffs::Family;
use fbmsde::fbm::{path_stats, CholeskyFbm, CirculantFbm};
use fbmsde::flow::{build_partition, PiecewiseFlow};
use fbmsde::scheme::{solve_x_scheme_on_path, Generator, SchemeConfig};
use fbmsde::{builtin_family, g_l, step_scheme_y};

fn bench_samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("fbm");
    let chol = CholeskyFbm::new(512, 1.0, 0.35).unwrap();
    let mut seed = 0u64;
    group.bench_function("cholesky_sample_512", |b| {
        b.iter(|| {
            seed = seed.wrapping_add(1);
            black_box(chol.sample(seed))
        })
    });
    let circ = CirculantFbm::new(4096, 1.0, 0.35).unwrap();
    group.bench_function("circulant_sample_4096", |b| {
        b.iter(|| {
            seed = seed.wrapping_add(1);
            black_box(circ.sample(seed))
        })
    });
    let path = circ.sample(3);
    group.bench_function("path_stats_4096", |b| {
        b.iter(|| black_box(path_stats(&path, 0.01).unwrap()))
    });
    group.finish();
}

fn bench_flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow");
    let pair = builtin_family(Family::Trig(1.0, 1.0)).unwrap();
    let partition = build_partition(1.3, 512).unwrap();
    group.bench_function("psi_nodes_build_512", |b| {
        let mut z = 0.0_f64;
        b.iter_batched(
            || {
                z += 1e-9;
                (PiecewiseFlow::new(partition.clone(), pair.clone(), 12.0), z)
            },
            |(flow, z)| black_box(flow.psi_nodes(z)),
            BatchSize::SmallInput,
        )
    });
    let flow = PiecewiseFlow::new(partition, pair.clone(), 12.0);
    let nodes = flow.psi_nodes(0.1);
    group.bench_function("psi_eval_cached", |b| {
        b.iter(|| black_box(flow.psi_with_nodes(&nodes, 0.7321).unwrap()))
    });
    group.bench_function("g_eval_256", |b| {
        let flow = PiecewiseFlow::new(build_partition(1.3, 256).unwrap(), pair.clone(), 12.0);
        b.iter(|| black_box(g_l(&pair, &flow, 0.9, 0.1).unwrap()))
    });
    group.finish();
}

fn bench_scheme(c: &mut Criterion) {
    let mut group = c.benchmark_group("scheme");
    group.sample_size(20);
    let pair = builtin_family(Family::Trig(1.0, 1.0)).unwrap();
    let n = 256;
    let q = 8;
    let circ = CirculantFbm::new(n * q, 1.0, 0.35).unwrap();
    let path = circ.sample(5);
    let stats = path_stats(&path, 0.01).unwrap();
    group.bench_function("step_scheme_y_256x8", |b| {
        b.iter(|| {
            let flow = PiecewiseFlow::new(
                build_partition(stats.sup_norm, n).unwrap(),
                pair.clone(),
                20.0,
            );
            black_box(step_scheme_y(&pair, &flow, &path, 0.1, n, q).unwrap())
        })
    });
    let cfg = SchemeConfig {
        n,
        q,
        hurst: 0.35,
        horizon: 1.0,
        x0: 0.1,
        rho: 0.01,
        seed: 5,
        coeffs: Family::Trig(1.0, 1.0),
        oracle_tol: 1e-10,
        generator: Generator::Circulant,
        level_override: None,
        stats_inflation: 1.0,
    };
    group.bench_function("solve_x_scheme_256x8", |b| {
        b.iter(|| black_box(solve_x_scheme_on_path(&cfg, &path).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_samplers, bench_flow, bench_scheme);
criterion_main!(benches);
