use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use epicredit_core::credit::Mechanism;
use epicredit_core::harness::{RunState, TrainConfig};
use epicredit_core::nn::Rng;

const OBS: usize = 784;

/// Cost of one training step with a full memory of `capacity` slots.
fn train_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("train_step");
    g.sample_size(10);
    let capacity = 100;
    for m in Mechanism::ALL {
        let cfg = TrainConfig {
            mechanism: m,
            capacity,
            ..TrainConfig::desk()
        };
        let mut rng = Rng::new(3);
        let xs: Vec<Vec<f64>> = (0..capacity + 1)
            .map(|_| (0..OBS).map(|_| rng.uniform()).collect())
            .collect();
        let mut st = RunState::new(&cfg, 0, OBS).unwrap();
        for (t, x) in xs.iter().take(capacity).enumerate() {
            st.train_step(x, t % 10).unwrap();
        }
        g.bench_with_input(BenchmarkId::from_parameter(m), &st, |b, st| {
            b.iter_batched(
                || st.clone(),
                |mut s| s.train_step(&xs[capacity], 3).unwrap(),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, train_step);
criterion_main!(benches);
