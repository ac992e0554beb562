use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cpomcp::belief::exact_update;
use cpomcp::envs::{LightDark, LightDarkSpec, Tiger, TigerAction, TigerObs, TigerSpec};
use cpomcp::{BeliefModel, TabularModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiger_exact(c: &mut Criterion) {
    let m = Tiger::new(TigerSpec::default()).unwrap();
    let b = m.initial_distribution();
    c.bench_function("tiger_exact_update", |bch| {
        bch.iter(|| black_box(exact_update(&b, &TigerAction::Listen, &TigerObs::HearLeft, &m).unwrap()))
    });
}

fn lightdark_filter(c: &mut Criterion) {
    let m = LightDark::new(LightDarkSpec::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let b = m.initial_belief(10_000, &mut rng);
    c.bench_function("lightdark_particle_filter_10k", |bch| {
        bch.iter(|| black_box(m.update_belief(&b, &5.0, &7.0, 10_000, &mut rng).unwrap()))
    });
}

criterion_group!(benches, tiger_exact, lightdark_filter);
criterion_main!(benches);
