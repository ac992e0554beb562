use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cpomcp::envs::{LightDark, LightDarkSpec, Tiger, TigerSpec, ToyChain, ToyChainSpec};
use cpomcp::{plan, plan_pow, BeliefModel, PlannerConfig, TabularModel, WideningConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy(c: &mut Criterion) {
    let m = ToyChain::new(ToyChainSpec::default()).unwrap();
    let b = m.initial_distribution();
    let mut group = c.benchmark_group("toy_plan");
    for local in [false, true] {
        let cfg = PlannerConfig { simulations: 5000, max_depth: 2, local_duals: local, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(if local { "local" } else { "global" }), &cfg, |bch, cfg| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            bch.iter(|| black_box(plan(&m, &b, &[1.0], cfg, &mut rng).unwrap()))
        });
    }
    group.finish();
}

fn tiger(c: &mut Criterion) {
    let m = Tiger::new(TigerSpec::default()).unwrap();
    let b = m.initial_distribution();
    let mut group = c.benchmark_group("tiger_plan");
    for sims in [100, 1000] {
        let cfg = PlannerConfig { simulations: sims, exploration: 100.0, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(sims), &cfg, |bch, cfg| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            bch.iter(|| black_box(plan(&m, &b, &[0.9], cfg, &mut rng).unwrap()))
        });
    }
    group.finish();
}

fn lightdark(c: &mut Criterion) {
    let m = LightDark::new(LightDarkSpec::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = m.initial_belief(10_000, &mut rng);
    let cfg = PlannerConfig { simulations: 100, exploration: 100.0, ..Default::default() };
    let widening = WideningConfig::default();
    c.bench_function("lightdark_plan_100", |bch| {
        bch.iter(|| black_box(plan_pow(&m, &b, &[0.1], &cfg, &widening, &mut rng).unwrap()))
    });
}

criterion_group!(benches, toy, tiger, lightdark);
criterion_main!(benches);
