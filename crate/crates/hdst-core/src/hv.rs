//! Packed binary hypervector algebra.
//!
//! A [`Hypervector`] is a D-dimensional binary vector stored LSB-first in
//! `u64` words. D need not be a multiple of 64; the trailing padding bits of
//! the last word are kept at 0 and never enter popcounts. Bit `d` lives at
//! word `d / 64`, bit position `d % 64`.
//!
//! Operations: XOR binding, circular-right-shift permutation, count-threshold
//! majority bundling, Hamming distance, binary dot product, and seeded random
//! generation. Everything is a pure function of its inputs; randomness enters
//! only through an explicit [`SeededRng`].

use crate::error::{Error, Result};
use crate::rng::SeededRng;

const WORD_BITS: usize = 64;

#[inline]
fn word_count(dim: usize) -> usize {
    dim.div_ceil(WORD_BITS)
}

/// Mask selecting the valid bits of the last word.
#[inline]
fn tail_mask(dim: usize) -> u64 {
    let r = dim % WORD_BITS;
    if r == 0 {
        !0
    } else {
        (1u64 << r) - 1
    }
}

/// D-dimensional binary vector, bit-packed into `u64` words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Hypervector {
    words: Vec<u64>,
    dim: usize,
}

impl std::fmt::Debug for Hypervector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Hypervector(dim={}, ones={})", self.dim, self.popcount())
    }
}

impl Hypervector {
    /// All-zero vector (the identity element of binding).
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension);
        }
        Ok(Self {
            words: vec![0; word_count(dim)],
            dim,
        })
    }

    /// Random vector with each bit i.i.d. Bernoulli(1/2) drawn from `rng`.
    pub fn random(dim: usize, rng: &mut SeededRng) -> Result<Self> {
        let mut hv = Self::zeros(dim)?;
        for w in hv.words.iter_mut() {
            *w = rng.next_u64();
        }
        *hv.words.last_mut().unwrap() &= tail_mask(dim);
        Ok(hv)
    }

    /// Build from explicit bits; `bits[d]` becomes dimension `d`.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut hv = Self::zeros(bits.len())?;
        for (d, &b) in bits.iter().enumerate() {
            if b {
                hv.words[d / WORD_BITS] |= 1u64 << (d % WORD_BITS);
            }
        }
        Ok(hv)
    }

    /// Reconstruct from packed little-endian words (deserialization path).
    pub fn from_words(words: Vec<u64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension);
        }
        if words.len() != word_count(dim) {
            return Err(Error::ModelFormat(format!(
                "expected {} words for dim {}, got {}",
                word_count(dim),
                dim,
                words.len()
            )));
        }
        if words[words.len() - 1] & !tail_mask(dim) != 0 {
            return Err(Error::ModelFormat(
                "nonzero padding bits in packed row".into(),
            ));
        }
        Ok(Self { words, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, d: usize) -> bool {
        debug_assert!(d < self.dim);
        (self.words[d / WORD_BITS] >> (d % WORD_BITS)) & 1 == 1
    }

    pub fn set_bit(&mut self, d: usize, value: bool) {
        debug_assert!(d < self.dim);
        let mask = 1u64 << (d % WORD_BITS);
        if value {
            self.words[d / WORD_BITS] |= mask;
        } else {
            self.words[d / WORD_BITS] &= !mask;
        }
    }

    pub fn flip_bit(&mut self, d: usize) {
        debug_assert!(d < self.dim);
        self.words[d / WORD_BITS] ^= 1u64 << (d % WORD_BITS);
    }

    /// Number of set bits (padding excluded by construction).
    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Bitwise complement over the valid D bits.
    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w = !*w;
        }
        *out.words.last_mut().unwrap() &= tail_mask(self.dim);
        out
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Element-wise XOR binding.
    pub fn bind(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (w, o) in out.words.iter_mut().zip(&other.words) {
            *w ^= o;
        }
        Ok(out)
    }

    /// In-place XOR binding.
    pub fn bind_assign(&mut self, other: &Self) -> Result<()> {
        self.check_dims(other)?;
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w ^= o;
        }
        Ok(())
    }

    /// Circular right shift by `k`: bit `d` moves to `(d + k) mod D`.
    pub fn permute(&self, k: usize) -> Self {
        let dim = self.dim;
        let k = k % dim;
        if k == 0 {
            return self.clone();
        }
        // Moving every bit toward higher index by k is a left rotation of the
        // packed D-bit integer: out = (x << k | x >> (D - k)) mod 2^D.
        let hi = shifted_up(&self.words, k);
        let lo = shifted_down(&self.words, dim - k);
        let mut words: Vec<u64> = hi.iter().zip(&lo).map(|(a, b)| a | b).collect();
        *words.last_mut().unwrap() &= tail_mask(dim);
        Self { words, dim }
    }

    /// Number of positions where the two vectors differ.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Number of positions where both vectors are 1.
    pub fn dot(&self, other: &Self) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }
}

/// Shift the packed value toward higher bit indices by `k` (value `<< k`).
fn shifted_up(words: &[u64], k: usize) -> Vec<u64> {
    let n = words.len();
    let ws = k / WORD_BITS;
    let bs = k % WORD_BITS;
    let mut out = vec![0u64; n];
    for i in ws..n {
        let mut w = words[i - ws] << bs;
        if bs > 0 && i > ws {
            w |= words[i - ws - 1] >> (WORD_BITS - bs);
        }
        out[i] = w;
    }
    out
}

/// Shift the packed value toward lower bit indices by `k` (value `>> k`).
fn shifted_down(words: &[u64], k: usize) -> Vec<u64> {
    let n = words.len();
    let ws = k / WORD_BITS;
    let bs = k % WORD_BITS;
    let mut out = vec![0u64; n];
    for i in 0..n.saturating_sub(ws) {
        let mut w = words[i + ws] >> bs;
        if bs > 0 && i + ws + 1 < n {
            w |= words[i + ws + 1] << (WORD_BITS - bs);
        }
        out[i] = w;
    }
    out
}

/// Per-dimension counts of set bits across `inputs`.
pub(crate) fn ones_counts(inputs: &[Hypervector]) -> Result<Vec<u32>> {
    let first = inputs.first().ok_or(Error::EmptyBundle)?;
    let dim = first.dim;
    for hv in inputs {
        first.check_dims(hv)?;
    }
    let mut counts = vec![0u32; dim];
    for hv in inputs {
        for (d, c) in counts.iter_mut().enumerate() {
            *c += hv.bit(d) as u32;
        }
    }
    Ok(counts)
}

/// Count-threshold majority bundling.
///
/// With an odd number of inputs `tie_break` must be `None`; with an even
/// number it must be `Some` and is appended as one extra input before
/// thresholding, exactly as a scan-chain vector would enter a hardware
/// bundler. Per dimension the output is 1 iff the count of ones among the
/// (possibly augmented) inputs reaches `ceil((M + 1) / 2)`, M being the
/// original input count.
pub fn majority(inputs: &[Hypervector], tie_break: Option<&Hypervector>) -> Result<Hypervector> {
    let m = inputs.len();
    if m == 0 {
        return Err(Error::EmptyBundle);
    }
    for hv in inputs {
        inputs[0].check_dims(hv)?;
    }
    if let Some(tie) = tie_break {
        inputs[0].check_dims(tie)?;
    }
    if m.is_multiple_of(2) && tie_break.is_none() {
        return Err(Error::MissingTieBreak { count: m });
    }
    if m % 2 == 1 && tie_break.is_some() {
        return Err(Error::UnexpectedTieBreak { count: m });
    }
    let mut counts = ones_counts(inputs)?;
    if let Some(tie) = tie_break {
        for (d, c) in counts.iter_mut().enumerate() {
            *c += tie.bit(d) as u32;
        }
    }
    let threshold = ((m + 2) / 2) as u32; // == ceil((m + 1) / 2)
    let dim = inputs[0].dim();
    let mut out = Hypervector::zeros(dim)?;
    for (d, &c) in counts.iter().enumerate() {
        if c >= threshold {
            out.set_bit(d, true);
        }
    }
    Ok(out)
}
