//! Batch training and evaluation drivers.
//!
//! These functions wire the modules into the two full datapaths:
//!
//! - software: ideal image -> adapted encoder -> dot-product search
//! - in-memory: programmed crossbar -> adapted encoder -> crossbar search
//!
//! Window i always encodes under the stream `encoding_rng(cfg, i)` and reads
//! through crossbar streams tagged `i`, so results are identical for any
//! thread count and the two datapaths agree bit-exactly at zero noise.

use serde::Serialize;

use crate::crossbar::{NoiseParams, PcmCrossbar};
use crate::dataio::{LevelRecording, SynthDataset};
use crate::encoder::{encode_batch_crossbar, encode_batch_ideal, EncoderConfig, SampleWindow};
use crate::error::{Error, Result};
use crate::learner::{
    predict_batch_crossbar, predict_batch_software, AssociativeMemory, TrainedModel,
};
use crate::rng::SeededRng;

const STREAM_FINALIZE: u64 = 0x46;
const STREAM_ENCODER_ARRAY: u64 = 0x58;
const STREAM_AM_ARRAY: u64 = 0x41;

/// Labeled windows ready for training or evaluation.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub windows: Vec<SampleWindow>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn from_synth(data: &SynthDataset) -> Self {
        Self {
            windows: data.windows.iter().map(|(w, _)| w.clone()).collect(),
            labels: data.windows.iter().map(|(_, c)| *c).collect(),
            classes: data.spec.classes,
        }
    }

    /// Per-class prefix split: the first `floor(fraction * count)` windows of
    /// each class go to the training set, the rest to the test set.
    pub fn split(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "train fraction {fraction} must be in (0, 1)"
            )));
        }
        let mut per_class: Vec<u64> = vec![0; self.classes];
        for &c in &self.labels {
            per_class[c] += 1;
        }
        let quota: Vec<u64> = per_class
            .iter()
            .map(|&n| (fraction * n as f64).floor() as u64)
            .collect();
        let mut taken: Vec<u64> = vec![0; self.classes];
        let mut train = Dataset {
            windows: Vec::new(),
            labels: Vec::new(),
            classes: self.classes,
        };
        let mut test = Dataset {
            windows: Vec::new(),
            labels: Vec::new(),
            classes: self.classes,
        };
        for (w, &c) in self.windows.iter().zip(&self.labels) {
            let target = if taken[c] < quota[c] {
                taken[c] += 1;
                &mut train
            } else {
                &mut test
            };
            target.windows.push(w.clone());
            target.labels.push(c);
        }
        Ok((train, test))
    }
}

/// Slice a quantized frame stream into sliding windows.
///
/// A window is emitted at every tick `t >= max(N_m) - 1` with
/// `(t - (max(N_m) - 1)) % stride == 0`; channel m contributes its last N_m
/// samples and the window's label is the label of frame t.
pub fn windows_from_levels(cfg: &EncoderConfig, rec: &LevelRecording) -> Result<Dataset> {
    cfg.validate()?;
    if rec.level_counts.len() != cfg.channels() {
        return Err(Error::InvalidConfig(format!(
            "recording has {} channels, config has {}",
            rec.level_counts.len(),
            cfg.channels()
        )));
    }
    for (m, (&rec_l, &cfg_l)) in rec.level_counts.iter().zip(&cfg.level_counts).enumerate() {
        if rec_l > cfg_l {
            return Err(Error::InvalidConfig(format!(
                "channel {m}: recording uses {rec_l} levels, config allows {cfg_l}"
            )));
        }
    }
    let warm = cfg.ngram_sizes.iter().max().copied().unwrap_or(1) - 1;
    let mut windows = Vec::new();
    let mut labels = Vec::new();
    let mut t = warm;
    while t < rec.frames.len() {
        let levels = (0..cfg.channels())
            .map(|m| {
                let n = cfg.ngram_sizes[m];
                (t + 1 - n..=t).map(|i| rec.frames[i][m]).collect()
            })
            .collect();
        windows.push(SampleWindow::new(levels));
        labels.push(rec.labels[t]);
        t += cfg.stride;
    }
    let classes = labels.iter().copied().max().map_or(0, |c| c + 1);
    Ok(Dataset {
        windows,
        labels,
        classes,
    })
}

fn bundle_prototypes(
    cfg: &EncoderConfig,
    encoded: &[crate::Hypervector],
    labels: &[usize],
    classes: usize,
) -> Result<Vec<crate::Hypervector>> {
    let mut am = AssociativeMemory::new(classes, cfg.dim)?;
    for (gram, &label) in encoded.iter().zip(labels) {
        am.accumulate(label, gram)?;
    }
    let mut rng = SeededRng::derive(cfg.seed, &[STREAM_FINALIZE]);
    am.finalize(&mut rng)
}

/// Train class prototypes in software over the ideal image.
pub fn train(cfg: &EncoderConfig, data: &Dataset) -> Result<TrainedModel> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("empty training set".into()));
    }
    let image = cfg.build_image()?;
    let encoded = encode_batch_ideal(cfg, &data.windows, &image)?;
    let prototypes = bundle_prototypes(cfg, &encoded, &data.labels, data.classes)?;
    Ok(TrainedModel { image, prototypes })
}

/// Train class prototypes with the conventional encoder. Returns prototypes
/// only; the conventional datapath has no crossbar image to freeze.
pub fn train_baseline(cfg: &EncoderConfig, data: &Dataset) -> Result<Vec<crate::Hypervector>> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("empty training set".into()));
    }
    let (im, cims) = cfg.build_memories()?;
    let encoded = crate::encoder::encode_batch_baseline(cfg, &data.windows, &im, &cims)?;
    bundle_prototypes(cfg, &encoded, &data.labels, data.classes)
}

/// Classification outcome over one dataset.
#[derive(Clone, Debug, Serialize)]
pub struct EvalOutcome {
    pub accuracy: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<u64>>,
    pub predictions: Vec<usize>,
}

fn summarize(predictions: Vec<usize>, labels: &[usize], classes: usize) -> EvalOutcome {
    let mut confusion = vec![vec![0u64; classes]; classes];
    let mut correct = 0u64;
    for (&pred, &truth) in predictions.iter().zip(labels) {
        confusion[truth][pred] += 1;
        correct += (pred == truth) as u64;
    }
    EvalOutcome {
        accuracy: correct as f64 / labels.len().max(1) as f64,
        confusion,
        predictions,
    }
}

/// Evaluate entirely in software: ideal image, dot-product search.
pub fn eval_software(
    cfg: &EncoderConfig,
    model: &TrainedModel,
    data: &Dataset,
) -> Result<EvalOutcome> {
    let encoded = encode_batch_ideal(cfg, &data.windows, &model.image)?;
    let predictions = predict_batch_software(&model.prototypes, &encoded)?
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    Ok(summarize(predictions, &data.labels, model.classes()))
}

/// Evaluate through the in-memory datapath: both the encoder image and the
/// prototype array are programmed crossbars under `noise`. The two arrays
/// draw from distinct streams derived from the noise seed.
pub fn eval_in_memory(
    cfg: &EncoderConfig,
    model: &TrainedModel,
    data: &Dataset,
    noise: &NoiseParams,
) -> Result<EvalOutcome> {
    let enc_noise = NoiseParams {
        seed: SeededRng::derive(noise.seed, &[STREAM_ENCODER_ARRAY]).next_u64(),
        ..*noise
    };
    let am_noise = NoiseParams {
        seed: SeededRng::derive(noise.seed, &[STREAM_AM_ARRAY]).next_u64(),
        ..*noise
    };
    let encoder_xbar = PcmCrossbar::program(&model.image, enc_noise)?;
    let am_xbar = PcmCrossbar::program_rows(&model.prototypes, am_noise)?;
    let encoded = encode_batch_crossbar(cfg, &data.windows, &encoder_xbar)?;
    let predictions = predict_batch_crossbar(&am_xbar, &encoded)?
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    Ok(summarize(predictions, &data.labels, model.classes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_generate, SynthSpec};

    fn synth_dataset(jitter: usize, windows_per_class: usize, seed: u64) -> Dataset {
        let spec = SynthSpec {
            classes: 3,
            channels: 3,
            ngram: 4,
            levels: 6,
            windows_per_class,
            jitter,
        };
        Dataset::from_synth(&synth_generate(&spec, &mut SeededRng::new(seed)).unwrap())
    }

    #[test]
    fn zero_jitter_training_set_is_memorized() {
        let cfg = EncoderConfig::uniform(512, 3, 4, 6, 1);
        let data = synth_dataset(0, 10, 2);
        let model = train(&cfg, &data).unwrap();
        let outcome = eval_software(&cfg, &model, &data).unwrap();
        assert_eq!(outcome.accuracy, 1.0);
        // confusion is diagonal
        for (t, row) in outcome.confusion.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                assert_eq!(n, if t == p { 10 } else { 0 });
            }
        }
    }

    #[test]
    fn split_is_per_class_and_exhaustive() {
        let data = synth_dataset(1, 10, 3);
        let (train_set, test_set) = data.split(0.3).unwrap();
        assert_eq!(train_set.len(), 9); // 3 per class
        assert_eq!(test_set.len(), 21);
        for c in 0..3 {
            assert_eq!(train_set.labels.iter().filter(|&&l| l == c).count(), 3);
        }
        assert!(data.split(0.0).is_err());
        assert!(data.split(1.0).is_err());
    }

    #[test]
    fn zero_noise_in_memory_matches_software() {
        let cfg = EncoderConfig::uniform(256, 3, 4, 6, 4);
        let data = synth_dataset(1, 12, 5);
        let (train_set, test_set) = data.split(0.5).unwrap();
        let model = train(&cfg, &train_set).unwrap();
        let sw = eval_software(&cfg, &model, &test_set).unwrap();
        let hw = eval_in_memory(&cfg, &model, &test_set, &NoiseParams::noiseless()).unwrap();
        assert_eq!(sw.predictions, hw.predictions);
        assert_eq!(sw.accuracy, hw.accuracy);
    }

    #[test]
    fn windows_from_levels_slides_and_labels() {
        let mut cfg = EncoderConfig::uniform(64, 2, 2, 9, 6);
        cfg.ngram_sizes = vec![2, 3];
        let rec = LevelRecording {
            frames: vec![vec![1, 1], vec![2, 2], vec![3, 3], vec![4, 4], vec![5, 5]],
            labels: vec![0, 0, 1, 1, 2],
            level_counts: vec![9, 9],
            sample_rate: 1.0,
        };
        let data = windows_from_levels(&cfg, &rec).unwrap();
        assert_eq!(data.len(), 3); // ticks 2, 3, 4
        assert_eq!(data.windows[0].channel(0), &[2, 3]);
        assert_eq!(data.windows[0].channel(1), &[1, 2, 3]);
        assert_eq!(data.labels, vec![1, 1, 2]);

        let mut strided = cfg.clone();
        strided.stride = 2;
        let data2 = windows_from_levels(&strided, &rec).unwrap();
        assert_eq!(data2.len(), 2); // ticks 2 and 4
        assert_eq!(data2.labels, vec![1, 2]);
    }

    #[test]
    fn windows_from_levels_rejects_overrange_levels() {
        let cfg = EncoderConfig::uniform(64, 1, 2, 3, 7);
        let rec = LevelRecording {
            frames: vec![vec![1], vec![4]],
            labels: vec![0, 0],
            level_counts: vec![4],
            sample_rate: 1.0,
        };
        assert!(windows_from_levels(&cfg, &rec).is_err());
    }
}
