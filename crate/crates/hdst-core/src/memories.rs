//! Item memory, continuous item memory, and the unrolled channel-bound rows.
//!
//! The item memory holds one quasi-orthogonal random hypervector per channel.
//! The continuous item memory (CiM) holds one hypervector per quantization
//! level, constructed so the Hamming distance between levels grows linearly
//! with the level difference: distance(level 1, level i) is exactly
//! `floor(D * (i - 1) / (2 * (L - 1)))`, the extremes sitting at D/2 apart
//! (quasi-orthogonal). The crossbar image is the unrolled set of
//! channel-bound rows `bind(CiM_m(l), E_m)` laid out channel-major, which is
//! what gets programmed into the encoder crossbar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hv::Hypervector;
use crate::rng::SeededRng;

/// Channel identity vectors E_1..E_M.
#[derive(Clone, Debug)]
pub struct ItemMemory {
    vectors: Vec<Hypervector>,
    dim: usize,
}

impl ItemMemory {
    /// Draw `channels` random identity vectors; deterministic per seed.
    pub fn build(channels: usize, dim: usize, rng: &mut SeededRng) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidConfig("channel count must be >= 1".into()));
        }
        let vectors = (0..channels)
            .map(|_| Hypervector::random(dim, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vectors, dim })
    }

    pub fn channel(&self, m: usize) -> &Hypervector {
        &self.vectors[m]
    }

    pub fn channel_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Level vectors CiM(l_1)..CiM(l_L) with linear distance structure.
#[derive(Clone, Debug)]
pub struct ContinuousItemMemory {
    levels: Vec<Hypervector>,
    dim: usize,
}

impl ContinuousItemMemory {
    /// Build `levels` level vectors of dimension `dim`.
    ///
    /// CiM(l_1) is random; a random permutation of bit positions is drawn
    /// once, and level i is level 1 with the first
    /// `floor(D * (i - 1) / (2 * (L - 1)))` permuted positions flipped.
    /// Flip sets are nested, so distances between any two levels are the
    /// difference of their flip counts.
    pub fn build(levels: usize, dim: usize, rng: &mut SeededRng) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidConfig("level count must be >= 2".into()));
        }
        let first = Hypervector::random(dim, rng)?;
        let mut positions: Vec<usize> = (0..dim).collect();
        rng.shuffle(&mut positions);

        let mut out = Vec::with_capacity(levels);
        let mut current = first;
        let mut flipped = 0usize;
        for i in 0..levels {
            let target = dim * i / (2 * (levels - 1));
            for &p in &positions[flipped..target] {
                current.flip_bit(p);
            }
            flipped = target;
            out.push(current.clone());
        }
        Ok(Self { levels: out, dim })
    }

    /// Level vector for a 1-based level index.
    pub fn level(&self, level: usize) -> &Hypervector {
        assert!(
            level >= 1 && level <= self.levels.len(),
            "level {level} out of range 1..={}",
            self.levels.len()
        );
        &self.levels[level - 1]
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Unrolled channel-bound rows, laid out channel-major: channel m occupies
/// rows `[offset_m, offset_m + L_m)` with `offset_m = sum of earlier L`.
#[derive(Clone, Debug)]
pub struct CrossbarImage {
    rows: Vec<Hypervector>,
    offsets: Vec<usize>,
    level_counts: Vec<usize>,
    dim: usize,
}

impl CrossbarImage {
    /// Precompute `bind(CiM_m(l), E_m)` for every channel and level.
    pub fn precompute(im: &ItemMemory, cims: &[ContinuousItemMemory]) -> Result<Self> {
        if cims.len() != im.channel_count() {
            return Err(Error::InvalidConfig(format!(
                "{} continuous item memories for {} channels",
                cims.len(),
                im.channel_count()
            )));
        }
        let dim = im.dim();
        let mut rows = Vec::new();
        let mut offsets = Vec::with_capacity(cims.len());
        let mut level_counts = Vec::with_capacity(cims.len());
        for (m, cim) in cims.iter().enumerate() {
            if cim.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: cim.dim(),
                });
            }
            offsets.push(rows.len());
            level_counts.push(cim.level_count());
            for l in 1..=cim.level_count() {
                rows.push(cim.level(l).bind(im.channel(m))?);
            }
        }
        Ok(Self {
            rows,
            offsets,
            level_counts,
            dim,
        })
    }

    /// Assemble directly from rows and per-channel level counts
    /// (deserialization path).
    pub fn from_rows(rows: Vec<Hypervector>, level_counts: Vec<usize>, dim: usize) -> Result<Self> {
        let total: usize = level_counts.iter().sum();
        if rows.len() != total {
            return Err(Error::ModelFormat(format!(
                "{} rows for level counts summing to {total}",
                rows.len()
            )));
        }
        for row in &rows {
            if row.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.dim(),
                });
            }
        }
        let mut offsets = Vec::with_capacity(level_counts.len());
        let mut acc = 0;
        for &l in &level_counts {
            offsets.push(acc);
            acc += l;
        }
        Ok(Self {
            rows,
            offsets,
            level_counts,
            dim,
        })
    }

    pub fn row(&self, index: usize) -> Option<&Hypervector> {
        self.rows.get(index)
    }

    pub fn rows(&self) -> &[Hypervector] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Absolute row index of (channel, 1-based level).
    pub fn row_index(&self, channel: usize, level: usize) -> usize {
        self.offsets[channel] + level - 1
    }

    pub fn channel_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn level_counts(&self) -> &[usize] {
        &self.level_counts
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, self.dim, &self.level_counts)?;
        for row in &self.rows {
            write_row(w, row)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let (dim, level_counts) = read_header(r)?;
        let total: usize = level_counts.iter().sum();
        let rows = (0..total)
            .map(|_| read_row(r, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows, level_counts, dim)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }
}

// Flat binary layout, little-endian throughout:
//   magic (8 bytes) | version u32 | dim u32 | channels u32 | L_m u32 * M
//   then sum(L_m) rows, each ceil(dim / 64) u64 words.
// A trained model file appends: classes u32 | one prototype row per class.
const MAGIC: &[u8; 8] = b"HDSTMEM1";
const VERSION: u32 = 1;

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn write_header<W: Write>(w: &mut W, dim: usize, level_counts: &[usize]) -> Result<()> {
    w.write_all(MAGIC)?;
    write_u32(w, VERSION)?;
    write_u32(w, dim as u32)?;
    write_u32(w, level_counts.len() as u32)?;
    for &l in level_counts {
        write_u32(w, l as u32)?;
    }
    Ok(())
}

pub(crate) fn read_header<R: Read>(r: &mut R) -> Result<(usize, Vec<usize>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version}")));
    }
    let dim = read_u32(r)? as usize;
    if dim == 0 {
        return Err(Error::ModelFormat("zero dimension".into()));
    }
    let channels = read_u32(r)? as usize;
    if channels == 0 {
        return Err(Error::ModelFormat("zero channels".into()));
    }
    let level_counts = (0..channels)
        .map(|_| read_u32(r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok((dim, level_counts))
}

pub(crate) fn write_row<W: Write>(w: &mut W, row: &Hypervector) -> Result<()> {
    for word in row.words() {
        w.write_all(&word.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_row<R: Read>(r: &mut R, dim: usize) -> Result<Hypervector> {
    let words = dim.div_ceil(64);
    let mut buf = [0u8; 8];
    let mut out = Vec::with_capacity(words);
    for _ in 0..words {
        r.read_exact(&mut buf)?;
        out.push(u64::from_le_bytes(buf));
    }
    Hypervector::from_words(out, dim)
}

pub(crate) fn write_u32_value<W: Write>(w: &mut W, v: u32) -> Result<()> {
    write_u32(w, v)
}

pub(crate) fn read_u32_value<R: Read>(r: &mut R) -> Result<u32> {
    read_u32(r)
}
