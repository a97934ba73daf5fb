//! Behavioral simulator of PCM crossbar arrays.
//!
//! Programming freezes one spatial flip pattern per device (wrong binary
//! state with probability `p_program_flip`); every read then applies fresh
//! temporal flips (`p_read_01`, `p_read_10`) at the sense-amplifier boundary.
//! The associative-memory search adds optional Gaussian noise on the analog
//! column sums. With all parameters at zero the simulator is bit-exact to the
//! ideal image for every operation.
//!
//! Spatial flips draw from per-row RNG streams derived from
//! `(seed, subarray, local row)`, so programming parallelizes without
//! changing results and `subarray_rows` only scopes the streams. Temporal
//! reads through `&mut self` consume the crossbar's own stream and must be
//! externally serialized; [`PcmCrossbar::reader`] hands out independently
//! seeded read streams for deterministic concurrent use (one reader per
//! query, tagged by query index).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hv::Hypervector;
use crate::memories::CrossbarImage;
use crate::par;
use crate::rng::SeededRng;

const STREAM_PROGRAM: u64 = 0x50;
const STREAM_READ: u64 = 0x52;

/// Stochastic device non-ideality parameters (parameterized surrogate).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Probability a device is programmed to the wrong binary state
    /// (spatial, frozen at program time).
    pub p_program_flip: f64,
    /// Probability a stored 0 reads as 1, per read event.
    pub p_read_01: f64,
    /// Probability a stored 1 reads as 0, per read event.
    pub p_read_10: f64,
    /// Standard deviation of additive Gaussian noise on an analog
    /// associative-memory column sum, in units of counts.
    pub am_sigma: f64,
    /// Rows per subarray partition; 0 leaves the array unpartitioned.
    /// The partition only scopes RNG streams.
    pub subarray_rows: usize,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseParams {
    /// All non-idealities off; the crossbar behaves as the ideal image.
    pub fn noiseless() -> Self {
        Self {
            p_program_flip: 0.0,
            p_read_01: 0.0,
            p_read_10: 0.0,
            am_sigma: 0.0,
            subarray_rows: 0,
            seed: 0,
        }
    }

    /// Default surrogate parameters: 1% spatial programming errors and
    /// 0.3% temporal read flips, no analog search noise.
    pub fn default_preset(seed: u64) -> Self {
        Self {
            p_program_flip: 0.01,
            p_read_01: 0.003,
            p_read_10: 0.003,
            am_sigma: 0.0,
            subarray_rows: 0,
            seed,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_program_flip == 0.0
            && self.p_read_01 == 0.0
            && self.p_read_10 == 0.0
            && self.am_sigma == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_program_flip", self.p_program_flip),
            ("p_read_01", self.p_read_01),
            ("p_read_10", self.p_read_10),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} not in [0, 1]")));
            }
        }
        if !self.am_sigma.is_finite() || self.am_sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "am_sigma = {} must be >= 0",
                self.am_sigma
            )));
        }
        Ok(())
    }
}

/// Anything the adapted encoder can fetch rows from: the ideal image or a
/// noisy programmed crossbar.
pub trait RowSource {
    fn dim(&self) -> usize;
    fn row_count(&self) -> usize;
    fn fetch_row(&mut self, row: usize) -> Result<Hypervector>;
}

/// Noise-free row source over an ideal [`CrossbarImage`].
pub struct IdealReader<'a> {
    image: &'a CrossbarImage,
}

impl<'a> IdealReader<'a> {
    pub fn new(image: &'a CrossbarImage) -> Self {
        Self { image }
    }
}

impl RowSource for IdealReader<'_> {
    fn dim(&self) -> usize {
        self.image.dim()
    }

    fn row_count(&self) -> usize {
        self.image.row_count()
    }

    fn fetch_row(&mut self, row: usize) -> Result<Hypervector> {
        self.image.row(row).cloned().ok_or(Error::RowOutOfRange {
            row,
            rows: self.image.row_count(),
        })
    }
}

/// A programmed crossbar: frozen spatial flip pattern plus a temporal
/// read-noise stream.
#[derive(Clone, Debug)]
pub struct PcmCrossbar {
    programmed: Vec<Hypervector>,
    noise: NoiseParams,
    rng: SeededRng,
    dim: usize,
}

impl PcmCrossbar {
    /// Program an encoder image into devices.
    pub fn program(image: &CrossbarImage, noise: NoiseParams) -> Result<Self> {
        Self::program_rows(image.rows(), noise)
    }

    /// Program an arbitrary row set (e.g. class prototypes for the
    /// associative-memory array).
    pub fn program_rows(rows: &[Hypervector], noise: NoiseParams) -> Result<Self> {
        noise.validate()?;
        let dim = match rows.first() {
            Some(r) => r.dim(),
            None => return Err(Error::InvalidConfig("cannot program an empty array".into())),
        };
        for r in rows {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: r.dim(),
                });
            }
        }
        let programmed = if noise.p_program_flip == 0.0 {
            rows.to_vec()
        } else {
            par::map_indexed(rows.len(), |r| {
                let (sub, local) = match noise.subarray_rows {
                    0 => (0, r),
                    rows => (r / rows, r % rows),
                };
                let mut rng =
                    SeededRng::derive(noise.seed, &[STREAM_PROGRAM, sub as u64, local as u64]);
                let mut row = rows[r].clone();
                for d in 0..dim {
                    if rng.gen_bool(noise.p_program_flip) {
                        row.flip_bit(d);
                    }
                }
                row
            })
        };
        let rng = SeededRng::derive(noise.seed, &[STREAM_READ]);
        Ok(Self {
            programmed,
            noise,
            rng,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row_count(&self) -> usize {
        self.programmed.len()
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    /// Stored state of a row after spatial flips, with no read event
    /// (side-effect-free snapshot).
    pub fn programmed_row(&self, row: usize) -> Result<&Hypervector> {
        self.programmed.get(row).ok_or(Error::RowOutOfRange {
            row,
            rows: self.programmed.len(),
        })
    }

    /// Read a row through the sense amplifiers, applying fresh temporal
    /// flips from the crossbar's own stream.
    pub fn read_row(&mut self, row: usize) -> Result<Hypervector> {
        let stored = self
            .programmed
            .get(row)
            .ok_or(Error::RowOutOfRange {
                row,
                rows: self.programmed.len(),
            })?
            .clone();
        Ok(noisy_read(stored, &self.noise, &mut self.rng))
    }

    /// Associative-memory search: one score per stored prototype row,
    /// `dot(query, noisy row) + N(0, am_sigma)`.
    pub fn am_search(&mut self, query: &Hypervector) -> Result<Vec<f64>> {
        let noise = self.noise;
        am_search_impl(&self.programmed, query, &noise, &mut self.rng)
    }

    /// Independent read stream for deterministic concurrent use; `tag`
    /// usually identifies the query or window being processed.
    pub fn reader(&self, tag: u64) -> PcmReader<'_> {
        PcmReader {
            xbar: self,
            rng: SeededRng::derive(self.noise.seed, &[STREAM_READ, tag]),
        }
    }
}

impl RowSource for PcmCrossbar {
    fn dim(&self) -> usize {
        self.dim
    }

    fn row_count(&self) -> usize {
        self.programmed.len()
    }

    fn fetch_row(&mut self, row: usize) -> Result<Hypervector> {
        self.read_row(row)
    }
}

/// Borrowed view of a crossbar with its own temporal-noise stream.
pub struct PcmReader<'a> {
    xbar: &'a PcmCrossbar,
    rng: SeededRng,
}

impl PcmReader<'_> {
    pub fn read_row(&mut self, row: usize) -> Result<Hypervector> {
        let stored = self
            .xbar
            .programmed
            .get(row)
            .ok_or(Error::RowOutOfRange {
                row,
                rows: self.xbar.programmed.len(),
            })?
            .clone();
        Ok(noisy_read(stored, &self.xbar.noise, &mut self.rng))
    }

    pub fn am_search(&mut self, query: &Hypervector) -> Result<Vec<f64>> {
        am_search_impl(
            &self.xbar.programmed,
            query,
            &self.xbar.noise,
            &mut self.rng,
        )
    }
}

impl RowSource for PcmReader<'_> {
    fn dim(&self) -> usize {
        self.xbar.dim
    }

    fn row_count(&self) -> usize {
        self.xbar.programmed.len()
    }

    fn fetch_row(&mut self, row: usize) -> Result<Hypervector> {
        self.read_row(row)
    }
}

fn noisy_read(mut stored: Hypervector, noise: &NoiseParams, rng: &mut SeededRng) -> Hypervector {
    if noise.p_read_01 == 0.0 && noise.p_read_10 == 0.0 {
        return stored;
    }
    for d in 0..stored.dim() {
        let p = if stored.bit(d) {
            noise.p_read_10
        } else {
            noise.p_read_01
        };
        if rng.gen_bool(p) {
            stored.flip_bit(d);
        }
    }
    stored
}

fn am_search_impl(
    rows: &[Hypervector],
    query: &Hypervector,
    noise: &NoiseParams,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    let dim = rows.first().map(|r| r.dim()).unwrap_or(0);
    if query.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: query.dim(),
            right: dim,
        });
    }
    let mut scores = Vec::with_capacity(rows.len());
    for row in rows {
        let read = noisy_read(row.clone(), noise, rng);
        let mut score = query.dot(&read)? as f64;
        if noise.am_sigma > 0.0 {
            score += noise.am_sigma * rng.gauss();
        }
        scores.push(score);
    }
    Ok(scores)
}
