//! The two spatio-temporal encoders and the streaming front end.
//!
//! Both encoders map a window of quantized samples `s[n][m]` (time step n,
//! channel m) to one D-dimensional N-gram hypervector.
//!
//! The conventional (baseline) encoder first bundles across channels at each
//! time step into spatial vectors `S_n = Majority_m(bind(CiM(s[n][m]), E_m))`
//! and then chains the spatial vectors through the temporal stage
//! `G = p^(N-1) S_1 ^ p^(N-2) S_2 ^ ... ^ S_N`, `p` being the circular right
//! shift. It requires one uniform N across channels.
//!
//! The in-memory-adapted encoder fetches precomputed channel-bound rows from
//! a crossbar and runs the temporal stage per channel first, folding each
//! fetched row through the binder recurrence `R <- bind(permute(R, 1), row)`
//! (an array of XOR gates daisy-chained with registers), and bundles the
//! per-channel results once at the end: `G' = Majority_m(T_m)`. N-gram size
//! and level count may differ per channel.
//!
//! When the channel count is even, the bundler appends one random scan-chain
//! vector drawn at the start of the encoding cycle to break ties.

use serde::{Deserialize, Serialize};

use crate::crossbar::{IdealReader, PcmCrossbar, RowSource};
use crate::error::{Error, Result};
use crate::hv::{self, Hypervector};
use crate::memories::{ContinuousItemMemory, CrossbarImage, ItemMemory};
use crate::par;
use crate::rng::SeededRng;

const STREAM_ITEM_MEMORY: u64 = 0x49;
const STREAM_CIM: u64 = 0x43;
const STREAM_ENCODE: u64 = 0x45;

/// Cycles consumed per N-gram beyond the row reads: one bundler-compare
/// cycle plus one output-latch cycle.
pub const PIPELINE_CYCLES_PER_NGRAM: u64 = 2;

/// How the bundler resolves per-dimension ties for even channel counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreakMode {
    /// Append one random hypervector (the scan-chain mechanism), drawn once
    /// per encoding cycle from the config-seeded stream.
    #[default]
    RandomScanChain,
    /// Refuse to encode when a per-dimension tie actually occurs.
    ErrorOnTie,
}

/// Static encoder parameters: dimension, per-channel N-gram sizes and level
/// counts, seed, and tie policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub dim: usize,
    /// N_m per channel; the channel count M is the length of this list.
    pub ngram_sizes: Vec<usize>,
    /// L_m per channel; must have the same length as `ngram_sizes`.
    pub level_counts: Vec<usize>,
    pub seed: u64,
    pub tie_break: TieBreakMode,
    /// Emission stride of the streaming front end, in external sample ticks.
    pub stride: usize,
}

impl EncoderConfig {
    /// Uniform configuration: same N and L on every channel.
    pub fn uniform(dim: usize, channels: usize, ngram: usize, levels: usize, seed: u64) -> Self {
        Self {
            dim,
            ngram_sizes: vec![ngram; channels],
            level_counts: vec![levels; channels],
            seed,
            tie_break: TieBreakMode::default(),
            stride: 1,
        }
    }

    pub fn channels(&self) -> usize {
        self.ngram_sizes.len()
    }

    /// Total crossbar rows, `sum of L_m`.
    pub fn total_rows(&self) -> usize {
        self.level_counts.iter().sum()
    }

    /// Row reads per N-gram, `sum of N_m`.
    pub fn total_reads(&self) -> usize {
        self.ngram_sizes.iter().sum()
    }

    /// The shared N when all channels agree on one, else `None`.
    pub fn uniform_ngram(&self) -> Option<usize> {
        let first = *self.ngram_sizes.first()?;
        self.ngram_sizes
            .iter()
            .all(|&n| n == first)
            .then_some(first)
    }

    /// Per-channel row offsets into the crossbar image.
    pub fn row_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.level_counts.len());
        let mut acc = 0;
        for &l in &self.level_counts {
            offsets.push(acc);
            acc += l;
        }
        offsets
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidDimension);
        }
        if self.ngram_sizes.is_empty() {
            return Err(Error::InvalidConfig("at least one channel required".into()));
        }
        if self.ngram_sizes.len() != self.level_counts.len() {
            return Err(Error::InvalidConfig(format!(
                "{} n-gram sizes vs {} level counts",
                self.ngram_sizes.len(),
                self.level_counts.len()
            )));
        }
        if let Some(&n) = self.ngram_sizes.iter().find(|&&n| n == 0) {
            return Err(Error::InvalidConfig(format!(
                "n-gram size {n} must be >= 1"
            )));
        }
        if let Some(&l) = self.level_counts.iter().find(|&&l| l < 2) {
            return Err(Error::InvalidConfig(format!(
                "level count {l} must be >= 2"
            )));
        }
        // Rotation powers up to N-1 must stay distinct rotations.
        let max_n = *self.ngram_sizes.iter().max().unwrap();
        if self.dim <= max_n {
            return Err(Error::InvalidConfig(format!(
                "dimension {} must exceed the largest n-gram size {max_n}",
                self.dim
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Item memory and per-channel continuous item memories for this
    /// configuration. When all level counts agree, every channel shares one
    /// CiM instance, matching the conventional single-CiM encoder.
    pub fn build_memories(&self) -> Result<(ItemMemory, Vec<ContinuousItemMemory>)> {
        self.validate()?;
        let mut im_rng = SeededRng::derive(self.seed, &[STREAM_ITEM_MEMORY]);
        let im = ItemMemory::build(self.channels(), self.dim, &mut im_rng)?;
        let uniform_levels = self.level_counts.iter().all(|&l| l == self.level_counts[0]);
        let cims = if uniform_levels {
            let mut rng = SeededRng::derive(self.seed, &[STREAM_CIM, 0]);
            let shared = ContinuousItemMemory::build(self.level_counts[0], self.dim, &mut rng)?;
            vec![shared; self.channels()]
        } else {
            (0..self.channels())
                .map(|m| {
                    let mut rng = SeededRng::derive(self.seed, &[STREAM_CIM, m as u64]);
                    ContinuousItemMemory::build(self.level_counts[m], self.dim, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok((im, cims))
    }

    /// The unrolled channel-bound crossbar image for this configuration.
    pub fn build_image(&self) -> Result<CrossbarImage> {
        let (im, cims) = self.build_memories()?;
        CrossbarImage::precompute(&im, &cims)
    }
}

/// The per-encoding RNG stream: tie-break scan-chain draws for the window at
/// `index`. Batch and streaming paths both key the stream by window index so
/// they produce bit-identical encodings.
pub fn encoding_rng(cfg: &EncoderConfig, index: u64) -> SeededRng {
    SeededRng::derive(cfg.seed, &[STREAM_ENCODE, index])
}

/// One window of discrete level indices: `levels[m][n]` is the sample of
/// channel m at relative time step n, in `1..=L_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleWindow {
    levels: Vec<Vec<usize>>,
}

impl SampleWindow {
    pub fn new(levels: Vec<Vec<usize>>) -> Self {
        Self { levels }
    }

    pub fn channel(&self, m: usize) -> &[usize] {
        &self.levels[m]
    }

    pub fn channel_count(&self) -> usize {
        self.levels.len()
    }

    pub fn validate(&self, cfg: &EncoderConfig) -> Result<()> {
        if self.levels.len() != cfg.channels() {
            return Err(Error::InvalidConfig(format!(
                "window has {} channels, config has {}",
                self.levels.len(),
                cfg.channels()
            )));
        }
        for (m, samples) in self.levels.iter().enumerate() {
            if samples.len() != cfg.ngram_sizes[m] {
                return Err(Error::InvalidConfig(format!(
                    "channel {m} holds {} samples, expected {}",
                    samples.len(),
                    cfg.ngram_sizes[m]
                )));
            }
            for &s in samples {
                if s < 1 || s > cfg.level_counts[m] {
                    return Err(Error::LevelOutOfRange {
                        channel: m,
                        level: s,
                        levels: cfg.level_counts[m],
                    });
                }
            }
        }
        Ok(())
    }

    /// Uniformly random valid window for the configuration.
    pub fn random(cfg: &EncoderConfig, rng: &mut SeededRng) -> Self {
        let levels = cfg
            .ngram_sizes
            .iter()
            .zip(&cfg.level_counts)
            .map(|(&n, &l)| (0..n).map(|_| 1 + rng.gen_index(l)).collect())
            .collect();
        Self { levels }
    }
}

/// Draw the scan-chain vector for this cycle if the bundler will need one.
fn draw_tie(cfg: &EncoderConfig, rng: &mut SeededRng) -> Result<Option<Hypervector>> {
    if cfg.channels().is_multiple_of(2) && cfg.tie_break == TieBreakMode::RandomScanChain {
        Ok(Some(Hypervector::random(cfg.dim, rng)?))
    } else {
        Ok(None)
    }
}

/// Bundle with the configured tie policy.
fn bundle(
    cfg: &EncoderConfig,
    inputs: &[Hypervector],
    tie: Option<&Hypervector>,
) -> Result<Hypervector> {
    if inputs.len() % 2 == 1 {
        return hv::majority(inputs, None);
    }
    match cfg.tie_break {
        TieBreakMode::RandomScanChain => hv::majority(inputs, tie),
        TieBreakMode::ErrorOnTie => {
            let counts = hv::ones_counts(inputs)?;
            let m = inputs.len() as u32;
            let mut out = Hypervector::zeros(inputs[0].dim())?;
            for (d, &c) in counts.iter().enumerate() {
                if 2 * c == m {
                    return Err(Error::MajorityTie { dim: d });
                }
                if 2 * c > m {
                    out.set_bit(d, true);
                }
            }
            Ok(out)
        }
    }
}

/// Conventional encoder: spatial bundling per time step, then the temporal
/// permute-and-bind chain. Requires a uniform N across channels.
pub fn encode_baseline(
    cfg: &EncoderConfig,
    window: &SampleWindow,
    im: &ItemMemory,
    cims: &[ContinuousItemMemory],
    rng: &mut SeededRng,
) -> Result<Hypervector> {
    cfg.validate()?;
    let n = cfg.uniform_ngram().ok_or_else(|| {
        Error::UnsupportedConfig(
            "the conventional encoder requires a uniform n-gram size across channels".into(),
        )
    })?;
    window.validate(cfg)?;
    if cims.len() != cfg.channels() || im.channel_count() != cfg.channels() {
        return Err(Error::InvalidConfig(
            "memories do not match the channel count".into(),
        ));
    }
    let tie = draw_tie(cfg, rng)?;

    let mut gram = Hypervector::zeros(cfg.dim)?;
    for step in 0..n {
        let bound: Vec<Hypervector> = (0..cfg.channels())
            .map(|m| cims[m].level(window.channel(m)[step]).bind(im.channel(m)))
            .collect::<Result<_>>()?;
        let spatial = bundle(cfg, &bound, tie.as_ref())?;
        gram.bind_assign(&spatial.permute(n - 1 - step))?;
    }
    Ok(gram)
}

/// Adapted encoder over any row source; also reports the number of row
/// fetches actually issued.
fn encode_adapted_counted<S: RowSource>(
    cfg: &EncoderConfig,
    window: &SampleWindow,
    source: &mut S,
    rng: &mut SeededRng,
) -> Result<(Hypervector, u64)> {
    cfg.validate()?;
    window.validate(cfg)?;
    if source.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            left: cfg.dim,
            right: source.dim(),
        });
    }
    if source.row_count() != cfg.total_rows() {
        return Err(Error::InvalidConfig(format!(
            "row source holds {} rows, config needs {}",
            source.row_count(),
            cfg.total_rows()
        )));
    }
    let tie = draw_tie(cfg, rng)?;
    let offsets = cfg.row_offsets();

    let mut reads = 0u64;
    let mut temporal = Vec::with_capacity(cfg.channels());
    for (m, &offset) in offsets.iter().enumerate() {
        let mut reg = Hypervector::zeros(cfg.dim)?;
        for &level in window.channel(m) {
            let row = source.fetch_row(offset + level - 1)?;
            reads += 1;
            reg = reg.permute(1);
            reg.bind_assign(&row)?;
        }
        temporal.push(reg);
    }
    Ok((bundle(cfg, &temporal, tie.as_ref())?, reads))
}

/// In-memory-adapted encoder: per-channel binder recurrence over fetched
/// crossbar rows, then one final bundling.
pub fn encode_adapted<S: RowSource>(
    cfg: &EncoderConfig,
    window: &SampleWindow,
    source: &mut S,
    rng: &mut SeededRng,
) -> Result<Hypervector> {
    encode_adapted_counted(cfg, window, source, rng).map(|(hv, _)| hv)
}

/// Encode a batch of windows against the ideal image, window `i` using the
/// encoding stream `encoding_rng(cfg, i)`. Runs data-parallel when the
/// `parallel` feature is enabled; output is identical either way.
pub fn encode_batch_ideal(
    cfg: &EncoderConfig,
    windows: &[SampleWindow],
    image: &CrossbarImage,
) -> Result<Vec<Hypervector>> {
    par::try_map_indexed(windows.len(), |i| {
        let mut rng = encoding_rng(cfg, i as u64);
        let mut source = IdealReader::new(image);
        encode_adapted(cfg, &windows[i], &mut source, &mut rng)
    })
}

/// Encode a batch of windows with the conventional encoder, window `i` using
/// the encoding stream `encoding_rng(cfg, i)`, the same streams as the
/// adapted batch encoders, so tie-break draws line up across encoders.
pub fn encode_batch_baseline(
    cfg: &EncoderConfig,
    windows: &[SampleWindow],
    im: &ItemMemory,
    cims: &[ContinuousItemMemory],
) -> Result<Vec<Hypervector>> {
    par::try_map_indexed(windows.len(), |i| {
        let mut rng = encoding_rng(cfg, i as u64);
        encode_baseline(cfg, &windows[i], im, cims, &mut rng)
    })
}

/// Encode a batch of windows through a programmed crossbar, window `i` using
/// an independent read stream tagged `i` and the encoding stream
/// `encoding_rng(cfg, i)`. Deterministic for any thread count.
pub fn encode_batch_crossbar(
    cfg: &EncoderConfig,
    windows: &[SampleWindow],
    xbar: &PcmCrossbar,
) -> Result<Vec<Hypervector>> {
    par::try_map_indexed(windows.len(), |i| {
        let mut rng = encoding_rng(cfg, i as u64);
        let mut source = xbar.reader(i as u64);
        encode_adapted(cfg, &windows[i], &mut source, &mut rng)
    })
}

/// Ring buffer holding the last N_m samples of each channel, channel-major.
/// Each channel has its own write pointer cycling inside its segment; the
/// read traversal (the snapshot) visits channels in order and each channel's
/// samples in chronological order.
#[derive(Clone, Debug)]
pub struct CircularBuffer {
    slots: Vec<usize>,
    base: Vec<usize>,
    ngram_sizes: Vec<usize>,
    level_counts: Vec<usize>,
    write_pos: Vec<usize>,
    seen: Vec<u64>,
}

impl CircularBuffer {
    pub fn new(cfg: &EncoderConfig) -> Result<Self> {
        cfg.validate()?;
        let base = {
            let mut acc = 0;
            cfg.ngram_sizes
                .iter()
                .map(|&n| {
                    let b = acc;
                    acc += n;
                    b
                })
                .collect()
        };
        Ok(Self {
            slots: vec![0; cfg.total_reads()],
            base,
            ngram_sizes: cfg.ngram_sizes.clone(),
            level_counts: cfg.level_counts.clone(),
            write_pos: vec![0; cfg.channels()],
            seen: vec![0; cfg.channels()],
        })
    }

    /// Write one sample into a channel's segment, overwriting its oldest.
    pub fn push(&mut self, channel: usize, level: usize) -> Result<()> {
        let channels = self.ngram_sizes.len();
        if channel >= channels {
            return Err(Error::ChannelOutOfRange { channel, channels });
        }
        if level < 1 || level > self.level_counts[channel] {
            return Err(Error::LevelOutOfRange {
                channel,
                level,
                levels: self.level_counts[channel],
            });
        }
        let n = self.ngram_sizes[channel];
        self.slots[self.base[channel] + self.write_pos[channel]] = level;
        self.write_pos[channel] = (self.write_pos[channel] + 1) % n;
        self.seen[channel] += 1;
        Ok(())
    }

    /// Write one sample per channel (one external tick).
    pub fn push_frame(&mut self, frame: &[usize]) -> Result<()> {
        if frame.len() != self.ngram_sizes.len() {
            return Err(Error::InvalidConfig(format!(
                "frame has {} samples for {} channels",
                frame.len(),
                self.ngram_sizes.len()
            )));
        }
        for (m, &level) in frame.iter().enumerate() {
            self.push(m, level)?;
        }
        Ok(())
    }

    /// True once every channel has received at least N_m samples.
    pub fn is_warm(&self) -> bool {
        self.seen
            .iter()
            .zip(&self.ngram_sizes)
            .all(|(&seen, &n)| seen >= n as u64)
    }

    /// Chronological window snapshot (the read-pointer traversal), or `None`
    /// before warm-up.
    pub fn snapshot(&self) -> Option<SampleWindow> {
        if !self.is_warm() {
            return None;
        }
        let levels = (0..self.ngram_sizes.len())
            .map(|m| {
                let n = self.ngram_sizes[m];
                // write_pos points at the oldest sample once the segment has
                // wrapped at least once
                (0..n)
                    .map(|i| self.slots[self.base[m] + (self.write_pos[m] + i) % n])
                    .collect()
            })
            .collect();
        Some(SampleWindow::new(levels))
    }
}

/// Cycle accounting of one emitted N-gram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TickCost {
    pub row_reads: u64,
    pub cycles: u64,
}

/// Encode the current window if every channel is warm; `None` otherwise.
/// The cost reports the row reads actually issued plus the fixed pipeline
/// cycles.
pub fn stream_encode_tick<S: RowSource>(
    buf: &CircularBuffer,
    cfg: &EncoderConfig,
    source: &mut S,
    rng: &mut SeededRng,
) -> Result<Option<(Hypervector, TickCost)>> {
    let Some(window) = buf.snapshot() else {
        return Ok(None);
    };
    let (gram, reads) = encode_adapted_counted(cfg, &window, source, rng)?;
    Ok(Some((
        gram,
        TickCost {
            row_reads: reads,
            cycles: reads + PIPELINE_CYCLES_PER_NGRAM,
        },
    )))
}

/// An N-gram emitted by the streaming front end; `t` is the external tick at
/// which the window's newest sample arrived.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub gram: Hypervector,
    pub t: u64,
    pub cost: TickCost,
}

/// Streaming driver: push one frame per external tick, emit one N-gram per
/// `stride` ticks once warm. Emission `q` uses the encoding stream
/// `encoding_rng(cfg, q)`, matching the batch encoders.
#[derive(Clone, Debug)]
pub struct StreamEncoder {
    cfg: EncoderConfig,
    buf: CircularBuffer,
    tick: u64,
    warm_tick: Option<u64>,
    emitted: u64,
}

impl StreamEncoder {
    pub fn new(cfg: EncoderConfig) -> Result<Self> {
        let buf = CircularBuffer::new(&cfg)?;
        Ok(Self {
            cfg,
            buf,
            tick: 0,
            warm_tick: None,
            emitted: 0,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Feed one frame and encode if this tick emits.
    pub fn push_and_encode<S: RowSource>(
        &mut self,
        frame: &[usize],
        source: &mut S,
    ) -> Result<Option<Encoded>> {
        self.buf.push_frame(frame)?;
        let t = self.tick;
        self.tick += 1;
        if !self.buf.is_warm() {
            return Ok(None);
        }
        let warm = *self.warm_tick.get_or_insert(t);
        if !(t - warm).is_multiple_of(self.cfg.stride as u64) {
            return Ok(None);
        }
        let mut rng = encoding_rng(&self.cfg, self.emitted);
        let out = stream_encode_tick(&self.buf, &self.cfg, source, &mut rng)?
            .map(|(gram, cost)| Encoded { gram, t, cost });
        if out.is_some() {
            self.emitted += 1;
        }
        Ok(out)
    }
}
