//! Packed bit-vector storage with naive rank/select oracles and a
//! bit-exact file format.
//!
//! Position `i` lives in word `i / 64`, bit `i % 64` (least significant bit
//! first). Bits past the logical length are kept zero, so word popcounts
//! never need length masking.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::serial::read_exact_or;
use crate::word_select::popcount64;

const MAGIC: &[u8; 8] = b"SELBV001";

/// Fraction of one bits requested from [`BitVector::from_random`],
/// validated to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density(f64);

impl Density {
    pub fn new(fraction: f64) -> Result<Self> {
        if fraction.is_finite() && (0.0..=1.0).contains(&fraction) {
            Ok(Density(fraction))
        } else {
            Err(Error::InvalidDensity(fraction))
        }
    }

    /// Accepts either a fraction (`0.5`) or a percentage (`50`); anything
    /// above 1 is treated as a percentage.
    pub fn parse_lenient(value: f64) -> Result<Self> {
        if value > 1.0 {
            Density::new(value / 100.0)
        } else {
            Density::new(value)
        }
    }

    pub fn fraction(self) -> f64 {
        self.0
    }

    /// Draw threshold: a uniform u64 below this (as u128) is a one bit.
    /// `floor(d * 2^64)`, so d = 1 accepts every draw and d = 0 none.
    fn threshold(self) -> u128 {
        (self.0 * 18_446_744_073_709_551_616.0).floor() as u128
    }
}

/// A bit sequence packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitVector {
    words: Vec<u64>,
    len_bits: u64,
}

fn words_for(bits: u64) -> usize {
    bits.div_ceil(64) as usize
}

impl BitVector {
    /// All-zero vector of `len_bits` bits.
    pub fn new(len_bits: u64) -> Self {
        BitVector {
            words: vec![0u64; words_for(len_bits)],
            len_bits,
        }
    }

    /// Vector whose bits are independently one with probability `density`,
    /// drawn from SplitMix64. Identical `(len, density, seed)` triples give
    /// bit-identical vectors on every platform.
    pub fn from_random(len_bits: u64, density: Density, seed: u64) -> Self {
        let threshold = density.threshold();
        let mut rng = SplitMix64::new(seed);
        let mut words = vec![0u64; words_for(len_bits)];
        for i in 0..len_bits {
            if (rng.next_u64() as u128) < threshold {
                words[(i / 64) as usize] |= 1u64 << (i % 64);
            }
        }
        BitVector { words, len_bits }
    }

    /// Build from a string of '0'/'1' characters, character `i` becoming
    /// bit `i`. Handy for worked examples.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let mut bv = BitVector::new(s.len() as u64);
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bv.set(i as u64, true)?,
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "bit string may contain only '0' and '1', got {c:?}"
                    )))
                }
            }
        }
        Ok(bv)
    }

    pub fn len(&self) -> u64 {
        self.len_bits
    }

    pub fn is_empty(&self) -> bool {
        self.len_bits == 0
    }

    /// Backing words; bits past `len()` are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Total number of one bits.
    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|&w| popcount64(w) as u64).sum()
    }

    pub fn get(&self, i: u64) -> Result<bool> {
        self.check_index(i)?;
        Ok((self.words[(i / 64) as usize] >> (i % 64)) & 1 == 1)
    }

    /// Set bit `i`. Mutation is build-time only: indexes built over this
    /// vector assume it no longer changes.
    pub fn set(&mut self, i: u64, bit: bool) -> Result<()> {
        self.check_index(i)?;
        let word = &mut self.words[(i / 64) as usize];
        if bit {
            *word |= 1u64 << (i % 64);
        } else {
            *word &= !(1u64 << (i % 64));
        }
        Ok(())
    }

    /// Number of ones in the inclusive prefix `[0, j]`, by direct word
    /// scan. Definitional oracle for the indexes.
    pub fn rank_naive(&self, j: u64) -> Result<u64> {
        self.check_index(j)?;
        let word_idx = (j / 64) as usize;
        let mut count: u64 = self.words[..word_idx]
            .iter()
            .map(|&w| popcount64(w) as u64)
            .sum();
        let mask = u64::MAX >> (63 - (j % 64));
        count += popcount64(self.words[word_idx] & mask) as u64;
        Ok(count)
    }

    /// Position of the `r`-th one bit, `r` 1-based: the smallest `j` with
    /// `rank_naive(j) = r`. Definitional oracle.
    pub fn select_naive(&self, r: u64) -> Result<u64> {
        let ones = self.count_ones();
        if r == 0 || r > ones {
            return Err(Error::RankOutOfRange { rank: r, ones });
        }
        let mut remaining = r;
        for (idx, &w) in self.words.iter().enumerate() {
            let pc = popcount64(w) as u64;
            if remaining <= pc {
                let in_word = crate::word_select::select_word_oracle(w, (remaining - 1) as u32);
                return Ok(idx as u64 * 64 + in_word as u64);
            }
            remaining -= pc;
        }
        unreachable!("count_ones guaranteed the rank is present")
    }

    /// Positions of all one bits in increasing order.
    pub fn iter_ones(&self) -> OnesIter<'_> {
        OnesIter {
            words: &self.words,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Serialize: 8-byte magic, little-endian bit count, 8 reserved zero
    /// bytes, then the words in little-endian order.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(MAGIC)?;
        sink.write_all(&self.len_bits.to_le_bytes())?;
        sink.write_all(&[0u8; 8])?;
        for &w in &self.words {
            sink.write_all(&w.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut source: R) -> Result<Self> {
        let mut header = [0u8; 24];
        read_exact_or(&mut source, &mut header, "bit-vector header")?;
        if &header[..8] != MAGIC {
            if &header[..5] == b"SELBV" {
                let found = std::str::from_utf8(&header[5..8])
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(0);
                return Err(Error::UnsupportedVersion {
                    family: "bit-vector",
                    found,
                });
            }
            return Err(Error::BadMagic {
                expected: "SELBV001",
            });
        }
        let len_bits = u64::from_le_bytes(header[8..16].try_into().unwrap());
        if header[16..24] != [0u8; 8] {
            return Err(Error::MalformedHeader("reserved bytes must be zero"));
        }
        let mut words = vec![0u64; words_for(len_bits)];
        let mut buf = [0u8; 8];
        for w in words.iter_mut() {
            read_exact_or(&mut source, &mut buf, "bit-vector payload")?;
            *w = u64::from_le_bytes(buf);
        }
        let bv = BitVector { words, len_bits };
        bv.check_padding()?;
        Ok(bv)
    }

    fn check_index(&self, i: u64) -> Result<()> {
        if i < self.len_bits {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.len_bits,
            })
        }
    }

    fn check_padding(&self) -> Result<()> {
        let tail = self.len_bits % 64;
        if tail != 0 {
            let last = *self.words.last().expect("tail bits imply a word");
            if last >> tail != 0 {
                return Err(Error::NonzeroPadding);
            }
        }
        Ok(())
    }
}

/// Iterator over set-bit positions, lowest first.
pub struct OnesIter<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for OnesIter<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        while self.current == 0 {
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
        let bit = self.current.trailing_zeros();
        self.current &= self.current - 1;
        Some(self.word_idx as u64 * 64 + bit as u64)
    }
}
