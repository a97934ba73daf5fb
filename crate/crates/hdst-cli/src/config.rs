//! Run configuration: a single JSON document in which every field has a
//! default; command-line flags override file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hdst_core::costmodel::EnergyParams;
use hdst_core::crossbar::NoiseParams;
use hdst_core::dataio::SynthSpec;
use hdst_core::encoder::{EncoderConfig, TieBreakMode};
use hdst_core::SeededRng;

const STREAM_NOISE: u64 = 0x4E;
const STREAM_SYNTH: u64 = 0x53;
pub const STREAM_CELL: u64 = 0x47;

/// Fallback seed when neither flag, config, nor `HDST_SEED` provides one.
pub const DEFAULT_SEED: u64 = 42;

/// How windows are cut from a quantized frame stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMode {
    /// One window per `stride` external ticks once warm.
    #[default]
    Sliding,
    /// Back-to-back windows (stride = largest n-gram size); use this to
    /// consume CSV files written by `prepare`, whose frames are grouped in
    /// window-sized blocks.
    Disjoint,
}

/// Synthetic dataset parameters; window length and level count come from the
/// encoder fields of the run config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub classes: usize,
    pub windows_per_class: usize,
    pub jitter: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            classes: 5,
            windows_per_class: 400,
            jitter: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; flags and the `HDST_SEED` environment variable can
    /// supply it when absent here.
    pub seed: Option<u64>,
    pub dim: usize,
    pub channels: usize,
    /// Uniform n-gram size; `ngram_per_channel` overrides it when set.
    pub ngram: usize,
    /// Uniform quantization level count; `levels_per_channel` overrides it.
    pub levels: usize,
    pub ngram_per_channel: Option<Vec<usize>>,
    pub levels_per_channel: Option<Vec<usize>>,
    pub tie_break: TieBreakMode,
    pub stride: usize,
    pub window_mode: WindowMode,
    /// Crossbar non-idealities. A zero noise seed is replaced by a stream
    /// derived from the global seed.
    pub noise: NoiseParams,
    pub energy: EnergyParams,
    /// Fraction of each class (synthetic) or of the frame stream (CSV)
    /// reserved for training.
    pub train_fraction: f64,
    /// Down-sampling factor applied to CSV recordings before quantization.
    pub downsample: usize,
    /// One CSV per subject; empty list switches to the synthetic dataset.
    pub dataset: Vec<PathBuf>,
    pub synth: SynthParams,
    pub sweep_ngrams: Vec<usize>,
    pub sweep_levels: Vec<usize>,
    pub out_dir: PathBuf,
    /// Worker threads for batch encoding and sweep cells; 0 uses the
    /// default pool size.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            dim: 2048,
            channels: 4,
            ngram: 5,
            levels: 8,
            ngram_per_channel: None,
            levels_per_channel: None,
            tie_break: TieBreakMode::default(),
            stride: 1,
            window_mode: WindowMode::default(),
            noise: NoiseParams::noiseless(),
            energy: EnergyParams::default(),
            train_fraction: 0.25,
            downsample: 1,
            dataset: Vec::new(),
            synth: SynthParams::default(),
            sweep_ngrams: vec![1, 3, 5],
            sweep_levels: vec![4, 8],
            out_dir: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Seed precedence: `--seed` flag, then the config file, then
    /// `HDST_SEED`, then the built-in default.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = flag {
            return Ok(s);
        }
        if let Some(s) = self.seed {
            return Ok(s);
        }
        if let Ok(env) = std::env::var("HDST_SEED") {
            let s = env
                .parse::<u64>()
                .with_context(|| format!("HDST_SEED={env:?} is not a u64"))?;
            return Ok(s);
        }
        Ok(DEFAULT_SEED)
    }

    /// The encoder configuration under a resolved global seed.
    pub fn encoder_config(&self, seed: u64) -> Result<EncoderConfig> {
        let ngram_sizes = match &self.ngram_per_channel {
            Some(list) => list.clone(),
            None => vec![self.ngram; self.channels],
        };
        let level_counts = match &self.levels_per_channel {
            Some(list) => list.clone(),
            None => vec![self.levels; self.channels],
        };
        if ngram_sizes.len() != self.channels {
            bail!(
                "ngram_per_channel lists {} channels, config has {}",
                ngram_sizes.len(),
                self.channels
            );
        }
        if level_counts.len() != self.channels {
            bail!(
                "levels_per_channel lists {} channels, config has {}",
                level_counts.len(),
                self.channels
            );
        }
        let stride = match self.window_mode {
            WindowMode::Sliding => self.stride,
            WindowMode::Disjoint => ngram_sizes.iter().max().copied().unwrap_or(1),
        };
        let cfg = EncoderConfig {
            dim: self.dim,
            ngram_sizes,
            level_counts,
            seed,
            tie_break: self.tie_break,
            stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Noise parameters with the seed derived from the global seed when the
    /// config leaves it at zero.
    pub fn resolved_noise(&self, seed: u64) -> NoiseParams {
        let mut noise = self.noise;
        if noise.seed == 0 {
            noise.seed = SeededRng::derive(seed, &[STREAM_NOISE]).next_u64();
        }
        noise
    }

    /// Synthetic dataset shape for a given encoder configuration.
    pub fn synth_spec(&self, enc: &EncoderConfig) -> Result<SynthSpec> {
        let Some(ngram) = enc.uniform_ngram() else {
            bail!("the synthetic dataset requires a uniform n-gram size");
        };
        let levels = enc.level_counts[0];
        if enc.level_counts.iter().any(|&l| l != levels) {
            bail!("the synthetic dataset requires a uniform level count");
        }
        Ok(SynthSpec {
            classes: self.synth.classes,
            channels: enc.channels(),
            ngram,
            levels,
            windows_per_class: self.synth.windows_per_class,
            jitter: self.synth.jitter,
        })
    }

    pub fn synth_rng(&self, seed: u64) -> SeededRng {
        SeededRng::derive(seed, &[STREAM_SYNTH])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!(
                "train_fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            );
        }
        if self.downsample == 0 {
            bail!("downsample factor must be >= 1");
        }
        if self.synth.classes < 2 {
            bail!("synthetic dataset needs at least 2 classes");
        }
        Ok(())
    }
}
