//! Hot-path timings: compression, algebra, conditional sampling, and a full
//! controller step at benchmark scale.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::{ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttmpc_core::dist::TtDistribution;
use ttmpc_core::harness::{self, RunConfig, WorldKind};
use ttmpc_core::poe::{DiagonalGaussian, ProductActionSampler};
use ttmpc_core::smpc::{self, ControllerConfig, GaussianPolicy};
use ttmpc_core::tt;

fn random_dense(shape: &[usize], seed: u64) -> ArrayD<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ArrayD::from_shape_fn(IxDyn(shape), |_| rng.gen_range(0.0..1.0))
}

fn pngrid_setup() -> (RunConfig, harness::Bench, TtDistribution) {
    let mut cfg = RunConfig::default_for(WorldKind::Pngrid);
    cfg.learn.state_nodes = vec![60, 60];
    cfg.learn.action_nodes = vec![12, 12];
    cfg.learn.action_refine = 5;
    let bench = harness::base_world(&cfg);
    let model = harness::build_feasibility(bench.as_world(), &cfg.learn)
        .unwrap()
        .dist;
    (cfg, bench, model)
}

fn bench_compression(c: &mut Criterion) {
    let dense = random_dense(&[20, 20, 20, 20], 7);
    c.bench_function("tt_svd 20^4", |b| {
        b.iter(|| tt::tt_svd(std::hint::black_box(&dense), 1e-8, 64).unwrap())
    });
}

fn bench_algebra(c: &mut Criterion) {
    let a = tt::tt_svd(&random_dense(&[15, 15, 15, 15], 1), 1e-6, 24).unwrap();
    let bm = tt::tt_svd(&random_dense(&[15, 15, 15, 15], 2), 1e-6, 24).unwrap();
    c.bench_function("hadamard + round", |b| {
        b.iter(|| {
            let p = tt::hadamard(std::hint::black_box(&a), std::hint::black_box(&bm)).unwrap();
            tt::round(&p, 1e-8, 512).unwrap()
        })
    });
}

fn bench_sampling(c: &mut Criterion) {
    let (_, _, model) = pngrid_setup();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    c.bench_function("feasibility draws x256", |b| {
        b.iter(|| model.sample(256, &mut rng).unwrap())
    });

    let g = DiagonalGaussian::new(vec![0.0, 0.0], vec![0.35, 0.35]).unwrap();
    let mut u = vec![0.0; 2];
    c.bench_function("product sampler build + draw", |b| {
        b.iter_batched(
            || ProductActionSampler::new(&model, 2, &g).unwrap(),
            |s| s.sample(&[0.5, 0.5], &mut rng, &mut u).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_controller_step(c: &mut Criterion) {
    let (cfg, bench, model) = pngrid_setup();
    let w = bench.as_world();
    let ccfg = ControllerConfig {
        horizon: 15,
        samples: 16,
        beta: 0.05,
        gamma: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    c.bench_function("product policy step", |b| {
        b.iter_batched(
            || GaussianPolicy::zeros(15, 2, cfg.sigma()).unwrap(),
            |mut p| smpc::step_tt_poe_mppi(w, &[-1.0, -1.0], &mut p, &model, &ccfg, &mut rng)
                .unwrap(),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("plain step", |b| {
        b.iter_batched(
            || GaussianPolicy::zeros(15, 2, cfg.sigma()).unwrap(),
            |mut p| smpc::step_mppi(w, &[-1.0, -1.0], &mut p, &ccfg, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_compression,
    bench_algebra,
    bench_sampling,
    bench_controller_step
);
criterion_main!(benches);
