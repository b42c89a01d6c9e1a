use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rtmotion::features::{extract_features, WindowParams};
use rtmotion::model::{loss_and_gradients, Architecture, Network, NetworkConfig};
use rtmotion::skeleton::synth::{synth_sequence, SegmentClass};
use rtmotion::{Label, Matrix};

fn random_input(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn features(c: &mut Criterion) {
    let (seq, _) = synth_sequence(SegmentClass::MotionRich, 10.0, 1).unwrap();
    c.bench_function("extract_features/300_frames", |b| {
        b.iter(|| extract_features(black_box(seq.frames()), WindowParams::default()).unwrap())
    });
}

fn networks(c: &mut Criterion) {
    for (arch, width) in [(Architecture::Dd, 29), (Architecture::V, 51)] {
        let cfg = NetworkConfig::default_for(arch, width);
        let net = Network::init(cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let x = random_input(120, width, 3);
        c.bench_function(&format!("{arch}/forward_120"), |b| {
            b.iter(|| net.forward(black_box(&x)).unwrap())
        });
        c.bench_function(&format!("{arch}/backward_120"), |b| {
            b.iter(|| loss_and_gradients(&net, &[(black_box(&x), Label::Rt)]).unwrap())
        });
    }
}

criterion_group!(benches, features, networks);
criterion_main!(benches);
