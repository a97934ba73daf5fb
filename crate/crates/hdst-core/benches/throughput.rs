//! Data-parallel batch paths vs their sequential equivalents, plus the raw
//! word-level kernels. Build with `--no-default-features` to measure the
//! fully sequential crate as a third point of comparison.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hdst_core::crossbar::{IdealReader, NoiseParams, PcmCrossbar};
use hdst_core::encoder::{
    encode_adapted, encode_batch_crossbar, encode_batch_ideal, encoding_rng, EncoderConfig,
    SampleWindow,
};
use hdst_core::learner::{predict_batch_software, predict_software};
use hdst_core::{Hypervector, SeededRng};

fn bench_kernels(c: &mut Criterion) {
    let mut rng = SeededRng::new(1);
    let a = Hypervector::random(10_000, &mut rng).unwrap();
    let b = Hypervector::random(10_000, &mut rng).unwrap();
    c.bench_function("hamming_10k", |bench| {
        bench.iter(|| black_box(a.hamming(&b).unwrap()))
    });
    c.bench_function("bind_10k", |bench| {
        bench.iter(|| black_box(a.bind(&b).unwrap()))
    });
    c.bench_function("permute_10k", |bench| {
        bench.iter(|| black_box(a.permute(black_box(4097))))
    });
}

fn bench_encode(c: &mut Criterion) {
    let cfg = EncoderConfig::uniform(2048, 4, 5, 8, 7);
    let image = cfg.build_image().unwrap();
    let mut wrng = SeededRng::new(2);
    let windows: Vec<SampleWindow> = (0..512)
        .map(|_| SampleWindow::random(&cfg, &mut wrng))
        .collect();

    let mut group = c.benchmark_group("encode_512_windows");
    group.bench_function(BenchmarkId::new("batch", "ideal"), |bench| {
        bench.iter(|| black_box(encode_batch_ideal(&cfg, &windows, &image).unwrap()))
    });
    group.bench_function(BenchmarkId::new("sequential", "ideal"), |bench| {
        bench.iter(|| {
            let out: Vec<Hypervector> = windows
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let mut rng = encoding_rng(&cfg, i as u64);
                    let mut source = IdealReader::new(&image);
                    encode_adapted(&cfg, w, &mut source, &mut rng).unwrap()
                })
                .collect();
            black_box(out)
        })
    });
    let xbar = PcmCrossbar::program(&image, NoiseParams::default_preset(3)).unwrap();
    group.bench_function(BenchmarkId::new("batch", "noisy_crossbar"), |bench| {
        bench.iter(|| black_box(encode_batch_crossbar(&cfg, &windows, &xbar).unwrap()))
    });
    group.finish();
}

fn bench_search(c: &mut Criterion) {
    let mut rng = SeededRng::new(3);
    let prototypes: Vec<Hypervector> = (0..5)
        .map(|_| Hypervector::random(10_000, &mut rng).unwrap())
        .collect();
    let queries: Vec<Hypervector> = (0..2048)
        .map(|_| Hypervector::random(10_000, &mut rng).unwrap())
        .collect();

    let mut group = c.benchmark_group("search_2048_queries");
    group.bench_function("batch", |bench| {
        bench.iter(|| black_box(predict_batch_software(&prototypes, &queries).unwrap()))
    });
    group.bench_function("sequential", |bench| {
        bench.iter(|| {
            let out: Vec<usize> = queries
                .iter()
                .map(|q| predict_software(&prototypes, q).unwrap().0)
                .collect();
            black_box(out)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_kernels, bench_encode, bench_search);
criterion_main!(benches);
