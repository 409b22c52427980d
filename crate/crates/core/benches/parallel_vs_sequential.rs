use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ipa_sim::qkd::{
    attack_success_monte_carlo, distance_grid, sweep_key_rates, AttackParams, QkdScenario,
};
use ipa_sim::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn key_rate_sweep(c: &mut Criterion) {
    let s = QkdScenario::default();
    let m_db: Vec<f64> = (0..=16).map(|k| k as f64 * 0.5).collect();
    let grid = distance_grid(150.0, 1.0).unwrap();
    let mut g = c.benchmark_group("key_rate_sweep");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep_key_rates(&s, &m_db, &grid, exec).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let s = QkdScenario {
        distance_km: 20.0,
        ..QkdScenario::default()
    };
    let a = AttackParams::undetectable(&s, 6.0).unwrap();
    let mut g = c.benchmark_group("attack_monte_carlo");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| attack_success_monte_carlo(&s, &a, 1_000_000, 7, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, key_rate_sweep, monte_carlo);
criterion_main!(benches);
