use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stot_core::{
    brute_force_value, check_cyclical_monotonicity, gen, lipschitz_smooth_cost, solve_stochastic,
    solve_transport, support_of, wasserstein_p, SUPPORT_THRESHOLD,
};

fn bench_solve_transport(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_transport");
    for n in [5usize, 10, 20, 40] {
        let inst = gen::instance(n as u64, n, n, 1);
        let sc = inst.scenarios[0].clone();
        group.bench_with_input(BenchmarkId::from_parameter(n), &sc, |b, sc| {
            b.iter(|| solve_transport(&sc.cost, &sc.mu, &sc.nu).unwrap());
        });
    }
    group.finish();
}

fn bench_enumeration_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute_force_value");
    group.sample_size(10);
    for n in [3usize, 4, 5] {
        let inst = gen::instance(100 + n as u64, n, n, 1);
        let sc = inst.scenarios[0].clone();
        group.bench_with_input(BenchmarkId::from_parameter(n), &sc, |b, sc| {
            b.iter(|| brute_force_value(&sc.cost, &sc.mu, &sc.nu).unwrap());
        });
    }
    group.finish();
}

fn bench_stochastic_solve(c: &mut Criterion) {
    let inst = gen::instance(7, 10, 10, 8);
    c.bench_function("solve_stochastic 10x10x8", |b| {
        b.iter(|| solve_stochastic(&inst).unwrap());
    });
}

fn bench_monotonicity_search(c: &mut Criterion) {
    let inst = gen::instance(11, 5, 5, 1);
    let sc = &inst.scenarios[0];
    let solved = solve_transport(&sc.cost, &sc.mu, &sc.nu).unwrap();
    let support = support_of(&solved.coupling, SUPPORT_THRESHOLD);
    let limit = support.len().min(8);
    c.bench_function("check_cyclical_monotonicity 5x5", |b| {
        b.iter(|| check_cyclical_monotonicity(&sc.cost, &support, limit));
    });
}

fn bench_smoothing(c: &mut Criterion) {
    let inst = gen::instance(13, 8, 8, 1);
    let sc = &inst.scenarios[0];
    c.bench_function("lipschitz_smooth_cost 8x8", |b| {
        b.iter(|| lipschitz_smooth_cost(&sc.cost, &inst.space_x, &inst.space_y, 4).unwrap());
    });
}

fn bench_kernel_distance(c: &mut Criterion) {
    let pair = gen::kernel_pair(17, 8, 4, 2.0);
    c.bench_function("wasserstein_p 8 points x 4 scenarios", |b| {
        b.iter(|| wasserstein_p(&pair).unwrap());
    });
}

criterion_group!(
    benches,
    bench_solve_transport,
    bench_enumeration_oracle,
    bench_stochastic_solve,
    bench_monotonicity_search,
    bench_smoothing,
    bench_kernel_distance
);
criterion_main!(benches);
