//! Dataset ingestion, pre-processing, and a synthetic dataset generator.
//!
//! Recordings travel as CSV with header `t,ch1..chM,label`, one row per time
//! frame, plus an optional JSON sidecar (same path with a `.json` extension)
//! carrying the sample rate and channel names. Pre-processing is
//! down-sampling (keep every k-th frame) followed by per-channel uniform
//! min-max quantization into 1-based level indices.
//!
//! The synthetic generator emits labeled windows around per-class level
//! templates with bounded level jitter; it exists so classification runs are
//! possible at desk scale without any external dataset.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoder::SampleWindow;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Multi-channel real-valued recording with a class label per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecording {
    pub sample_rate: f64,
    pub channel_names: Vec<String>,
    /// One series per channel, all equal length.
    pub channels: Vec<Vec<f64>>,
    /// One label per time frame.
    pub labels: Vec<usize>,
}

impl RawRecording {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn frames(&self) -> usize {
        self.labels.len()
    }

    pub fn duration_secs(&self) -> f64 {
        self.frames() as f64 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::Schema("recording has no channels".into()));
        }
        let frames = self.labels.len();
        for (m, series) in self.channels.iter().enumerate() {
            if series.len() != frames {
                return Err(Error::Schema(format!(
                    "channel {m} has {} samples but {frames} labels",
                    series.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    sample_rate: f64,
    channels: Vec<String>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Load a recording from CSV (+ optional sidecar). Rows are validated for
/// field count and finite values; errors carry the 1-based line number.
pub fn load_recording(path: &Path) -> Result<RawRecording> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Schema("empty file".into()))?;
    let header = header?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 3 || columns[0] != "t" {
        return Err(Error::Schema(format!(
            "expected header t,ch1..chM,label, got {header:?}"
        )));
    }
    if columns[columns.len() - 1] != "label" {
        return Err(Error::Schema("missing label column".into()));
    }
    let channel_names: Vec<String> = columns[1..columns.len() - 1]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let m = channel_names.len();

    let mut channels = vec![Vec::new(); m];
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != m + 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("{} fields, expected {}", fields.len(), m + 2),
            });
        }
        fields[0].parse::<f64>().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad time value {:?}: {e}", fields[0]),
        })?;
        for (c, field) in fields[1..=m].iter().enumerate() {
            let v = field.parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad sample {field:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    line: line_no,
                    channel: c,
                });
            }
            channels[c].push(v);
        }
        let label = fields[m + 1].parse::<usize>().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad label {:?}: {e}", fields[m + 1]),
        })?;
        labels.push(label);
    }

    let side = sidecar_path(path);
    let (sample_rate, channel_names) = if side.exists() {
        let sc: Sidecar = serde_json::from_reader(BufReader::new(File::open(&side)?))
            .map_err(|e| Error::Schema(format!("bad sidecar {}: {e}", side.display())))?;
        if sc.channels.len() != m {
            return Err(Error::Schema(format!(
                "sidecar names {} channels, CSV has {m}",
                sc.channels.len()
            )));
        }
        (sc.sample_rate, sc.channels)
    } else {
        (1.0, channel_names)
    };

    let rec = RawRecording {
        sample_rate,
        channel_names,
        channels,
        labels,
    };
    rec.validate()?;
    Ok(rec)
}

/// Write a recording as CSV plus its JSON sidecar.
pub fn write_recording(path: &Path, rec: &RawRecording) -> Result<()> {
    rec.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "t")?;
    for name in &rec.channel_names {
        write!(w, ",{name}")?;
    }
    writeln!(w, ",label")?;
    for t in 0..rec.frames() {
        write!(w, "{t}")?;
        for series in &rec.channels {
            write!(w, ",{}", series[t])?;
        }
        writeln!(w, ",{}", rec.labels[t])?;
    }
    w.flush()?;

    let sc = Sidecar {
        sample_rate: rec.sample_rate,
        channels: rec.channel_names.clone(),
    };
    let mut sw = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut sw, &sc)
        .map_err(|e| Error::Schema(format!("sidecar write: {e}")))?;
    sw.flush()?;
    Ok(())
}

/// Keep every `factor`-th frame (indices 0, factor, 2*factor, ...), labels
/// subsampled identically. The reported sample rate shrinks by the factor.
pub fn downsample(rec: &RawRecording, factor: usize) -> Result<RawRecording> {
    if factor == 0 {
        return Err(Error::InvalidConfig(
            "downsample factor must be >= 1".into(),
        ));
    }
    if factor == 1 {
        return Ok(rec.clone());
    }
    Ok(RawRecording {
        sample_rate: rec.sample_rate / factor as f64,
        channel_names: rec.channel_names.clone(),
        channels: rec
            .channels
            .iter()
            .map(|s| s.iter().step_by(factor).copied().collect())
            .collect(),
        labels: rec.labels.iter().step_by(factor).copied().collect(),
    })
}

/// Per-channel uniform min-max quantizer into 1-based level indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub level_counts: Vec<usize>,
}

impl QuantizerSpec {
    /// Freeze per-channel min/max from a (training) recording.
    pub fn fit(rec: &RawRecording, level_counts: &[usize]) -> Result<Self> {
        rec.validate()?;
        if level_counts.len() != rec.channel_count() {
            return Err(Error::InvalidConfig(format!(
                "{} level counts for {} channels",
                level_counts.len(),
                rec.channel_count()
            )));
        }
        let mut mins = Vec::with_capacity(rec.channel_count());
        let mut maxs = Vec::with_capacity(rec.channel_count());
        for (m, series) in rec.channels.iter().enumerate() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in series {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if lo >= hi {
                return Err(Error::Schema(format!(
                    "channel {m} has no spread (min {lo}, max {hi})"
                )));
            }
            mins.push(lo);
            maxs.push(hi);
        }
        let spec = Self {
            mins,
            maxs,
            level_counts: level_counts.to_vec(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mins.len() != self.maxs.len() || self.mins.len() != self.level_counts.len() {
            return Err(Error::InvalidConfig(
                "quantizer field lengths differ".into(),
            ));
        }
        for m in 0..self.mins.len() {
            if !self.mins[m].is_finite()
                || !self.maxs[m].is_finite()
                || self.mins[m] >= self.maxs[m]
            {
                return Err(Error::InvalidConfig(format!(
                    "channel {m}: min {} not below max {}",
                    self.mins[m], self.maxs[m]
                )));
            }
            if self.level_counts[m] < 2 {
                return Err(Error::InvalidConfig(format!(
                    "channel {m}: level count must be >= 2"
                )));
            }
        }
        Ok(())
    }

    /// Map one value to its 1-based level. The normalized position is
    /// clamped to one ULP below 1 so the maximum lands in the top bin.
    pub fn quantize_value(&self, channel: usize, v: f64) -> usize {
        let top = f64::from_bits(1.0f64.to_bits() - 1);
        let l = self.level_counts[channel];
        let frac = (v - self.mins[channel]) / (self.maxs[channel] - self.mins[channel]);
        1 + (frac.clamp(0.0, top) * l as f64).floor() as usize
    }

    /// Quantize a whole recording into a level stream.
    pub fn quantize(&self, rec: &RawRecording) -> Result<LevelRecording> {
        rec.validate()?;
        self.validate()?;
        if rec.channel_count() != self.level_counts.len() {
            return Err(Error::InvalidConfig(format!(
                "quantizer covers {} channels, recording has {}",
                self.level_counts.len(),
                rec.channel_count()
            )));
        }
        for (m, series) in rec.channels.iter().enumerate() {
            if let Some(t) = series.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    line: t + 2, // header + 1-based data line
                    channel: m,
                });
            }
        }
        let frames = (0..rec.frames())
            .map(|t| {
                (0..rec.channel_count())
                    .map(|m| self.quantize_value(m, rec.channels[m][t]))
                    .collect()
            })
            .collect();
        Ok(LevelRecording {
            frames,
            labels: rec.labels.clone(),
            level_counts: self.level_counts.clone(),
            sample_rate: rec.sample_rate,
        })
    }
}

/// Quantized recording: one level vector per frame, frame-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecording {
    /// `frames[t][m]` is the level of channel m at frame t, in `1..=L_m`.
    pub frames: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
    pub level_counts: Vec<usize>,
    pub sample_rate: f64,
}

impl LevelRecording {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Re-serialize as a recording with integer level values.
    pub fn to_recording(&self) -> RawRecording {
        let m = self.level_counts.len();
        let mut channels = vec![Vec::with_capacity(self.frames.len()); m];
        for frame in &self.frames {
            for (c, &level) in frame.iter().enumerate() {
                channels[c].push(level as f64);
            }
        }
        RawRecording {
            sample_rate: self.sample_rate,
            channel_names: (1..=m).map(|i| format!("ch{i}")).collect(),
            channels,
            labels: self.labels.clone(),
        }
    }
}

/// Synthetic dataset shape: C classes, M channels, windows of N samples over
/// L levels, with i.i.d. level jitter up to `jitter` around each template.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub channels: usize,
    pub ngram: usize,
    pub levels: usize,
    pub windows_per_class: usize,
    pub jitter: usize,
}

/// Labeled windows plus the templates that generated them.
#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub windows: Vec<(SampleWindow, usize)>,
    /// `templates[class][channel][n]`
    pub templates: Vec<Vec<Vec<usize>>>,
    pub spec: SynthSpec,
}

/// Generate a labeled synthetic dataset; deterministic per seed. Windows are
/// emitted class-major: all windows of class 0 first, then class 1, ...
pub fn synth_generate(spec: &SynthSpec, rng: &mut SeededRng) -> Result<SynthDataset> {
    if spec.classes < 2 {
        return Err(Error::InvalidConfig("at least two classes required".into()));
    }
    if spec.channels == 0 || spec.ngram == 0 || spec.windows_per_class == 0 {
        return Err(Error::InvalidConfig(
            "channels, ngram and windows_per_class must be >= 1".into(),
        ));
    }
    if spec.levels < 2 {
        return Err(Error::InvalidConfig("level count must be >= 2".into()));
    }

    let templates: Vec<Vec<Vec<usize>>> = (0..spec.classes)
        .map(|_| {
            (0..spec.channels)
                .map(|_| {
                    (0..spec.ngram)
                        .map(|_| 1 + rng.gen_index(spec.levels))
                        .collect()
                })
                .collect()
        })
        .collect();

    // round-robin over classes so any prefix of the stream stays balanced
    let mut windows = Vec::with_capacity(spec.classes * spec.windows_per_class);
    for _ in 0..spec.windows_per_class {
        for (class, template) in templates.iter().enumerate() {
            let levels = template
                .iter()
                .map(|series| {
                    series
                        .iter()
                        .map(|&s| {
                            let delta =
                                rng.gen_index(2 * spec.jitter + 1) as i64 - spec.jitter as i64;
                            (s as i64 + delta).clamp(1, spec.levels as i64) as usize
                        })
                        .collect()
                })
                .collect();
            windows.push((SampleWindow::new(levels), class));
        }
    }
    Ok(SynthDataset {
        windows,
        templates,
        spec: *spec,
    })
}

impl SynthDataset {
    /// Flatten the windows into a frame stream: each window contributes N
    /// consecutive frames carrying its class label.
    pub fn to_level_recording(&self) -> LevelRecording {
        let mut frames = Vec::with_capacity(self.windows.len() * self.spec.ngram);
        let mut labels = Vec::with_capacity(frames.capacity());
        for (window, class) in &self.windows {
            for n in 0..self.spec.ngram {
                frames.push(
                    (0..self.spec.channels)
                        .map(|m| window.channel(m)[n])
                        .collect(),
                );
                labels.push(*class);
            }
        }
        LevelRecording {
            frames,
            labels,
            level_counts: vec![self.spec.levels; self.spec.channels],
            sample_rate: 1.0,
        }
    }
}
