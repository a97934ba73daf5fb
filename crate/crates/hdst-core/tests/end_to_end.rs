//! End-to-end flows through the public API: train/freeze/reload/evaluate,
//! CSV round trips into identical windows, and thread-count independence.

use hdst_core::crossbar::NoiseParams;
use hdst_core::dataio::{self, synth_generate, SynthSpec};
use hdst_core::encoder::{encode_batch_ideal, EncoderConfig};
use hdst_core::learner::TrainedModel;
use hdst_core::pipeline::{self, Dataset};
use hdst_core::SeededRng;

fn spec() -> SynthSpec {
    SynthSpec {
        classes: 4,
        channels: 3,
        ngram: 3,
        levels: 6,
        windows_per_class: 40,
        jitter: 1,
    }
}

#[test]
fn frozen_model_reloads_and_classifies_identically() {
    let cfg = EncoderConfig::uniform(512, 3, 3, 6, 0xE2E);
    let data = Dataset::from_synth(&synth_generate(&spec(), &mut SeededRng::new(1)).unwrap());
    let (train_set, test_set) = data.split(0.5).unwrap();
    let model = pipeline::train(&cfg, &train_set).unwrap();

    let dir = std::env::temp_dir().join(format!("hdst-e2e-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.bin");
    model.save(&path).unwrap();
    let reloaded = TrainedModel::load(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();

    let a = pipeline::eval_software(&cfg, &model, &test_set).unwrap();
    let b = pipeline::eval_software(&cfg, &reloaded, &test_set).unwrap();
    assert_eq!(a.predictions, b.predictions);
    assert_eq!(a.confusion, b.confusion);
}

#[test]
fn csv_round_trip_reproduces_windows_exactly() {
    let data = synth_generate(&spec(), &mut SeededRng::new(2)).unwrap();
    let levels = data.to_level_recording();

    let dir = std::env::temp_dir().join(format!("hdst-e2e-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("synth.csv");
    dataio::write_recording(&path, &levels.to_recording()).unwrap();
    let loaded = dataio::load_recording(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();

    // integer levels survive the min-max quantizer unchanged
    let quantizer = dataio::QuantizerSpec::fit(&loaded, &[6, 6, 6]).unwrap();
    let requantized = quantizer.quantize(&loaded).unwrap();
    assert_eq!(requantized.frames, levels.frames);
    assert_eq!(requantized.labels, levels.labels);

    // disjoint windowing recovers the generated windows one-to-one
    let mut cfg = EncoderConfig::uniform(64, 3, 3, 6, 3);
    cfg.stride = 3;
    let windows = pipeline::windows_from_levels(&cfg, &requantized).unwrap();
    assert_eq!(windows.len(), data.windows.len());
    for (got, (want, label)) in windows.windows.iter().zip(&data.windows) {
        assert_eq!(got, want);
        let _ = label;
    }
    assert_eq!(
        windows.labels,
        data.windows.iter().map(|(_, c)| *c).collect::<Vec<_>>()
    );
}

#[test]
fn batch_encoding_is_independent_of_worker_count() {
    let cfg = EncoderConfig::uniform(256, 3, 3, 6, 4);
    let data = Dataset::from_synth(&synth_generate(&spec(), &mut SeededRng::new(5)).unwrap());
    let image = cfg.build_image().unwrap();

    let reference = encode_batch_ideal(&cfg, &data.windows, &image).unwrap();
    #[cfg(feature = "parallel")]
    for threads in [1usize, 2, 7] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let out = pool.install(|| encode_batch_ideal(&cfg, &data.windows, &image).unwrap());
        assert_eq!(out, reference, "{threads} threads");
    }
    assert_eq!(reference.len(), data.len());
}

#[test]
fn noisy_evaluation_is_reproducible() {
    let cfg = EncoderConfig::uniform(256, 3, 3, 6, 6);
    let data = Dataset::from_synth(&synth_generate(&spec(), &mut SeededRng::new(7)).unwrap());
    let (train_set, test_set) = data.split(0.5).unwrap();
    let model = pipeline::train(&cfg, &train_set).unwrap();
    let noise = NoiseParams {
        p_program_flip: 0.02,
        p_read_01: 0.01,
        p_read_10: 0.01,
        am_sigma: 1.5,
        subarray_rows: 8,
        seed: 99,
    };
    let a = pipeline::eval_in_memory(&cfg, &model, &test_set, &noise).unwrap();
    let b = pipeline::eval_in_memory(&cfg, &model, &test_set, &noise).unwrap();
    assert_eq!(a.predictions, b.predictions);
}
