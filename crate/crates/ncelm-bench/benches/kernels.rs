//! Hot-path suites: the dense kernels behind the recurrent stack, the two
//! output heads side by side (the contrastive head's cost should stay flat
//! as the vocabulary grows while exact softmax scales linearly), and noise
//! sampling.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ncelm_core::heads::{
    nce_loss_backward, softmax_loss_backward, HeadParams, NceBatch, NoiseSamples, ZMode,
};
use ncelm_core::noise::{NoiseDistribution, NoiseKind};
use ncelm_core::tensor::{Matrix, RngStream};

fn filled(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.uniform(-0.5, 0.5);
    }
    m
}

/// Zipf-flavoured counts so the alias table has realistically skewed mass.
fn skewed_counts(vocab: usize) -> Vec<u64> {
    (0..vocab).map(|r| 1 + 1_000_000 / (r as u64 + 2)).collect()
}

fn dense_kernels(c: &mut Criterion) {
    let mut rng = RngStream::new(11);
    let a = filled(80, 256, &mut rng);
    let b = filled(256, 256, &mut rng);

    let mut group = c.benchmark_group("matmul_80x256x256");
    group.bench_function("nn", |bch| bch.iter(|| a.matmul(&b).unwrap()));
    group.bench_function("nt", |bch| bch.iter(|| a.matmul_nt(&b).unwrap()));
    let at = filled(256, 80, &mut rng);
    group.bench_function("tn", |bch| bch.iter(|| at.matmul_tn(&b).unwrap()));
    group.finish();
}

fn output_heads(c: &mut Criterion) {
    let hidden = 128;
    let positions = 100;
    let k = 50;
    let mut rng = RngStream::new(23);
    let hs = filled(positions, hidden, &mut rng);

    let mut group = c.benchmark_group("head_backward");
    group.sample_size(10);
    for &vocab in &[2_000usize, 8_000, 32_000] {
        let counts = skewed_counts(vocab);
        let noise = NoiseDistribution::build(NoiseKind::Zipf { s: 1.0 }, &counts).unwrap();
        let mut head = HeadParams::zeros(vocab, hidden, ZMode::Learned);
        for v in head.theta.data_mut() {
            *v = rng.uniform(-0.1, 0.1);
        }
        let targets: Vec<usize> = (0..positions).map(|_| rng.index(vocab)).collect();
        let batch = NceBatch {
            targets: targets.clone(),
            noise: NoiseSamples::Shared(noise.sample_k(k, &mut rng)),
        };

        group.bench_with_input(BenchmarkId::new("softmax", vocab), &vocab, |bch, _| {
            bch.iter(|| softmax_loss_backward(&head, &hs, &targets).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("nce_k50", vocab), &vocab, |bch, _| {
            bch.iter(|| nce_loss_backward(&head, &hs, &batch, &noise).unwrap())
        });
    }
    group.finish();
}

fn noise_sampling(c: &mut Criterion) {
    let counts = skewed_counts(10_000);
    let dist = NoiseDistribution::build(NoiseKind::Unigram { alpha: 0.75 }, &counts).unwrap();
    let mut rng = RngStream::new(7);

    let mut group = c.benchmark_group("noise");
    group.bench_function("sample_600_of_10k", |bch| bch.iter(|| dist.sample_k(600, &mut rng)));
    group.bench_function("build_table_10k", |bch| {
        bch.iter(|| NoiseDistribution::build(NoiseKind::Unigram { alpha: 0.75 }, &counts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, dense_kernels, output_heads, noise_sampling);
criterion_main!(benches);
