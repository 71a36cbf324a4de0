//! Combined-sampling rank/select index with interleaved counter tables.
//!
//! The vector is carved into 512-bit basic blocks (one cache line), groups
//! of four basic blocks form 2048-bit lower blocks, and 2^21 lower blocks
//! form a 2^32-bit upper block. Three tables support the queries:
//!
//! * `l0` — absolute rank of each upper block's first bit (64-bit).
//! * `l1l2` — one 64-bit entry per lower block: the low 32 bits hold the
//!   rank of the block's first bit relative to its upper block, the high
//!   bits hold the popcounts of the block's first three basic blocks as
//!   10-bit fields (the fourth is implied). One cache line of entries
//!   covers 8 lower blocks, so reading the counts costs no extra miss.
//! * `samples` — for each upper block, the position of every k-th one
//!   relative to that block (32-bit), with a zero sentinel in slot 0.
//!
//! Select walks: scan `l0`, jump through the sample, scan `l1` forward to
//! the lower block, scan the three counts to the basic block, popcount at
//! most eight words, then one machine-word select.

use std::io::{Read, Write};

use crate::bitvector::BitVector;
use crate::error::{Error, Result};
use crate::serial;
use crate::word_select::{popcount64, select_word, WordSelectBackend};

pub const BASIC_BLOCK_BITS: u64 = 512;
pub const LOWER_BLOCK_BITS: u64 = 2048;
pub const UPPER_BLOCK_BITS: u64 = 1 << 32;
pub const LOWER_BLOCKS_PER_UPPER: usize = 1 << 21;
/// Default sampling interval for the select side table.
pub const DEFAULT_SAMPLING: u64 = 8192;

const WORDS_PER_LOWER: usize = (LOWER_BLOCK_BITS / 64) as usize;
const WORDS_PER_BASIC: usize = (BASIC_BLOCK_BITS / 64) as usize;

const MAGIC: &[u8; 8] = b"SELPY001";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoppyIndex {
    l0: Vec<u64>,
    l1l2: Vec<u64>,
    /// CSR offsets into `samples`, one slot per upper block plus a tail.
    sample_offsets: Vec<u64>,
    samples: Vec<u32>,
    k: u64,
    backend: WordSelectBackend,
    n: u64,
    ones: u64,
}

#[inline]
fn pack_entry(l1: u32, counts: &[u64; 4]) -> u64 {
    debug_assert!(counts.iter().all(|&c| c <= BASIC_BLOCK_BITS));
    (l1 as u64) | (counts[0] << 32) | (counts[1] << 42) | (counts[2] << 52)
}

#[inline]
fn entry_l1(e: u64) -> u64 {
    e & 0xFFFF_FFFF
}

#[inline]
fn entry_count(e: u64, i: usize) -> u64 {
    (e >> (32 + 10 * i)) & 0x3FF
}

impl PoppyIndex {
    /// Build the index in one pass over `bv`.
    ///
    /// `k` is the select sampling interval and must be a positive multiple
    /// of 64 so samples align with the counter arithmetic. The vector must
    /// not be mutated afterwards.
    ///
    /// # Panics
    /// If `k` is zero or not a multiple of 64.
    pub fn build(bv: &BitVector, k: u64, backend: WordSelectBackend) -> PoppyIndex {
        assert!(
            k > 0 && k.is_multiple_of(64),
            "sampling interval must be a positive multiple of 64, got {k}"
        );
        let backend = backend.resolve();
        let n = bv.len();
        let words = bv.words();
        let upper_count = n.div_ceil(UPPER_BLOCK_BITS) as usize;
        let lower_count = n.div_ceil(LOWER_BLOCK_BITS) as usize;

        let mut l0 = Vec::with_capacity(upper_count);
        let mut l1l2 = Vec::with_capacity(lower_count);
        let mut sample_offsets = Vec::with_capacity(upper_count + 1);
        let mut samples: Vec<u32> = Vec::new();

        let mut abs_ones: u64 = 0;
        let mut upper_ones: u64 = 0;
        let mut next_sample: u64 = k;
        let mut upper_base_word: usize = 0;

        for glb in 0..lower_count {
            if glb % LOWER_BLOCKS_PER_UPPER == 0 {
                l0.push(abs_ones);
                sample_offsets.push(samples.len() as u64);
                samples.push(0); // slot 0 is a scan-start sentinel, never a bit position
                upper_ones = 0;
                next_sample = k;
                upper_base_word = glb * WORDS_PER_LOWER;
            }
            let chunk_start = glb * WORDS_PER_LOWER;
            let chunk_end = (chunk_start + WORDS_PER_LOWER).min(words.len());
            let l1 = upper_ones;
            debug_assert!(l1 <= u32::MAX as u64);
            let mut counts = [0u64; 4];
            for w in chunk_start..chunk_end {
                let word = words[w];
                let pc = popcount64(word) as u64;
                while next_sample <= upper_ones + pc {
                    let j = (next_sample - upper_ones - 1) as u32;
                    let rel =
                        (w - upper_base_word) as u64 * 64 + select_word(backend, word, j) as u64;
                    samples.push(rel as u32);
                    next_sample += k;
                }
                counts[(w - chunk_start) / WORDS_PER_BASIC] += pc;
                upper_ones += pc;
                abs_ones += pc;
            }
            l1l2.push(pack_entry(l1 as u32, &counts));
        }
        sample_offsets.push(samples.len() as u64);

        PoppyIndex {
            l0,
            l1l2,
            sample_offsets,
            samples,
            k,
            backend,
            n,
            ones: abs_ones,
        }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count_ones(&self) -> u64 {
        self.ones
    }

    pub fn sampling_interval(&self) -> u64 {
        self.k
    }

    /// The concrete backend queries use (`Auto` was resolved at build).
    pub fn backend(&self) -> WordSelectBackend {
        self.backend
    }

    /// Bytes occupied by the auxiliary tables.
    pub fn aux_bytes(&self) -> u64 {
        (self.l0.len() * 8
            + self.l1l2.len() * 8
            + self.sample_offsets.len() * 8
            + self.samples.len() * 4) as u64
    }

    /// Number of ones in the inclusive prefix `[0, j]`.
    #[inline]
    pub fn rank(&self, bv: &BitVector, j: u64) -> Result<u64> {
        self.check_vector(bv)?;
        if j >= self.n {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.n,
            });
        }
        let words = bv.words();
        let upper = (j / UPPER_BLOCK_BITS) as usize;
        let glb = (j / LOWER_BLOCK_BITS) as usize;
        let entry = self.l1l2[glb];
        let mut count = self.l0[upper] + entry_l1(entry);
        let basic = ((j % LOWER_BLOCK_BITS) / BASIC_BLOCK_BITS) as usize;
        for i in 0..basic {
            count += entry_count(entry, i);
        }
        let word_idx = (j / 64) as usize;
        let basic_start = (j / BASIC_BLOCK_BITS) as usize * WORDS_PER_BASIC;
        for &w in &words[basic_start..word_idx] {
            count += popcount64(w) as u64;
        }
        count += popcount64(words[word_idx] & (u64::MAX >> (63 - (j % 64)))) as u64;
        Ok(count)
    }

    /// Position of the `r`-th one, `r` 1-based.
    #[inline]
    pub fn select(&self, bv: &BitVector, r: u64) -> Result<u64> {
        self.check_vector(bv)?;
        if r == 0 || r > self.ones {
            return Err(Error::RankOutOfRange {
                rank: r,
                ones: self.ones,
            });
        }
        let words = bv.words();

        // (1) upper block, by linear scan of l0.
        let mut upper = 0usize;
        while upper + 1 < self.l0.len() && self.l0[upper + 1] < r {
            upper += 1;
        }
        let r_local = r - self.l0[upper]; // 1-based within the upper block

        // (2) jump through the sample table. The sample at slot i is the
        // (k*i)-th one of the block, so for r_local an exact multiple of k
        // the scan below finds the sample position itself.
        let slot = (r_local / self.k) as usize;
        let sample_idx = self.sample_offsets[upper] as usize + slot;
        debug_assert!((sample_idx as u64) < self.sample_offsets[upper + 1]);
        let sample_rel = self.samples[sample_idx] as u64;

        // (3) forward scan of l1 to the containing lower block.
        let first_lb = upper * LOWER_BLOCKS_PER_UPPER;
        let last_lb = (first_lb + LOWER_BLOCKS_PER_UPPER).min(self.l1l2.len()) - 1;
        let mut glb = first_lb + (sample_rel / LOWER_BLOCK_BITS) as usize;
        while glb < last_lb && entry_l1(self.l1l2[glb + 1]) < r_local {
            glb += 1;
        }
        let entry = self.l1l2[glb];
        let mut remaining = r_local - entry_l1(entry); // 1-based within the lower block

        // (4) scan the three stored basic-block counts.
        let mut basic = 0usize;
        while basic < 3 {
            let c = entry_count(entry, basic);
            if remaining <= c {
                break;
            }
            remaining -= c;
            basic += 1;
        }

        // (5) popcount over the words of the basic block, then (6) one
        // machine-word select for the in-word offset.
        let start = glb * WORDS_PER_LOWER + basic * WORDS_PER_BASIC;
        let end = (start + WORDS_PER_BASIC).min(words.len());
        for (offset, &word) in words[start..end].iter().enumerate() {
            let pc = popcount64(word) as u64;
            if remaining <= pc {
                let pos = select_word(self.backend, word, (remaining - 1) as u32);
                return Ok((start + offset) as u64 * 64 + pos as u64);
            }
            remaining -= pc;
        }
        unreachable!("tables count {r} ones but the basic block ran out");
    }

    /// Recheck every structural invariant against the raw vector. Slow
    /// (linear passes); meant for tests and the `verify` CLI command.
    pub fn verify(&self, bv: &BitVector) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));

        if self.n != bv.len() {
            return fail(format!(
                "index n = {} but vector has {} bits",
                self.n,
                bv.len()
            ));
        }
        if self.ones != bv.count_ones() {
            return fail(format!(
                "index ones = {} but vector has {}",
                self.ones,
                bv.count_ones()
            ));
        }
        let upper_count = self.n.div_ceil(UPPER_BLOCK_BITS) as usize;
        let lower_count = self.n.div_ceil(LOWER_BLOCK_BITS) as usize;
        if self.l0.len() != upper_count {
            return fail(format!(
                "l0 has {} entries, expected {upper_count}",
                self.l0.len()
            ));
        }
        if self.l1l2.len() != lower_count {
            return fail(format!(
                "l1l2 has {} entries, expected {lower_count}",
                self.l1l2.len()
            ));
        }
        if self.sample_offsets.len() != upper_count + 1 {
            return fail("sample_offsets length mismatch".into());
        }
        if !self.l0.is_empty() && self.l0[0] != 0 {
            return fail(format!("l0[0] = {}, expected 0", self.l0[0]));
        }
        if self.l0.windows(2).any(|w| w[0] > w[1]) {
            return fail("l0 is not nondecreasing".into());
        }

        // Recompute l1 and the basic-block counts from the words.
        let words = bv.words();
        let mut upper_ones: u64 = 0;
        let mut abs_ones: u64 = 0;
        for glb in 0..lower_count {
            if glb % LOWER_BLOCKS_PER_UPPER == 0 {
                let upper = glb / LOWER_BLOCKS_PER_UPPER;
                if self.l0[upper] != abs_ones {
                    return fail(format!(
                        "l0[{upper}] = {}, recomputed {abs_ones}",
                        self.l0[upper]
                    ));
                }
                upper_ones = 0;
            }
            let entry = self.l1l2[glb];
            if entry_l1(entry) != upper_ones {
                return fail(format!(
                    "l1 of lower block {glb} = {}, recomputed {upper_ones}",
                    entry_l1(entry)
                ));
            }
            let chunk_start = glb * WORDS_PER_LOWER;
            let chunk_end = (chunk_start + WORDS_PER_LOWER).min(words.len());
            let mut counts = [0u64; 4];
            for w in chunk_start..chunk_end {
                counts[(w - chunk_start) / WORDS_PER_BASIC] += popcount64(words[w]) as u64;
            }
            for (i, &c) in counts.iter().take(3).enumerate() {
                let stored = entry_count(entry, i);
                if stored > BASIC_BLOCK_BITS {
                    return fail(format!("basic-block count {stored} exceeds 512"));
                }
                if stored != c {
                    return fail(format!(
                        "count {i} of lower block {glb} = {stored}, recomputed {c}"
                    ));
                }
            }
            let delta: u64 = counts.iter().sum();
            upper_ones += delta;
            abs_ones += delta;
            // Four counts must bridge exactly to the next block's l1.
            let next = glb + 1;
            if next < lower_count && next % LOWER_BLOCKS_PER_UPPER != 0 {
                let next_l1 = entry_l1(self.l1l2[next]);
                if entry_l1(entry) + delta != next_l1 {
                    return fail(format!(
                        "counts of lower block {glb} sum to {delta}, but l1 steps {} -> {next_l1}",
                        entry_l1(entry)
                    ));
                }
            }
        }

        // Sample table: slot 0 is the sentinel, slot i >= 1 holds the
        // position of the (k*i)-th one of its upper block, so exactly
        // k*i - 1 ones precede it there.
        for upper in 0..upper_count {
            let lo = self.sample_offsets[upper] as usize;
            let hi = self.sample_offsets[upper + 1] as usize;
            let upper_ones = self.ones_in_upper(upper);
            let expected = 1 + (upper_ones / self.k) as usize;
            if hi - lo != expected {
                return fail(format!(
                    "upper block {upper} has {} samples, expected {expected}",
                    hi - lo
                ));
            }
            if self.samples[lo] != 0 {
                return fail("sample slot 0 must be 0".into());
            }
        }
        let mut counted: u64 = 0;
        for pos in bv.iter_ones() {
            counted += 1;
            let upper = (pos / UPPER_BLOCK_BITS) as usize;
            let local_rank = counted - self.l0[upper];
            if local_rank.is_multiple_of(self.k) {
                let slot = (local_rank / self.k) as usize;
                let rel = self.samples[self.sample_offsets[upper] as usize + slot] as u64;
                let expected_rel = pos % UPPER_BLOCK_BITS;
                if rel != expected_rel {
                    return fail(format!(
                        "sample {slot} of upper block {upper} = {rel}, expected {expected_rel}"
                    ));
                }
            }
        }
        if counted != self.ones {
            return fail(format!("walked {counted} ones, index says {}", self.ones));
        }
        Ok(())
    }

    fn ones_in_upper(&self, upper: usize) -> u64 {
        let next = if upper + 1 < self.l0.len() {
            self.l0[upper + 1]
        } else {
            self.ones
        };
        next - self.l0[upper]
    }

    fn check_vector(&self, bv: &BitVector) -> Result<()> {
        if self.n == bv.len() {
            Ok(())
        } else {
            Err(Error::IndexMismatch {
                expected: self.n,
                got: bv.len(),
            })
        }
    }

    /// Serialize the tables (not the vector): magic, n, ones, k, then the
    /// four tables as length-prefixed little-endian sections.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(MAGIC)?;
        serial::write_u64(&mut sink, self.n)?;
        serial::write_u64(&mut sink, self.ones)?;
        serial::write_u64(&mut sink, self.k)?;
        serial::write_u64_section(&mut sink, &self.l0)?;
        serial::write_u64_section(&mut sink, &self.l1l2)?;
        serial::write_u64_section(&mut sink, &self.sample_offsets)?;
        serial::write_u32_section(&mut sink, &self.samples)?;
        Ok(())
    }

    /// Load tables written by [`save`](Self::save). The backend is a
    /// runtime choice, so it is supplied here rather than stored.
    pub fn load<R: Read>(mut source: R, backend: WordSelectBackend) -> Result<PoppyIndex> {
        serial::check_magic(&mut source, MAGIC, "SELPY001", "poppy index")?;
        let n = serial::read_u64(&mut source, "poppy header")?;
        let ones = serial::read_u64(&mut source, "poppy header")?;
        let k = serial::read_u64(&mut source, "poppy header")?;
        if k == 0 || k % 64 != 0 {
            return Err(Error::MalformedHeader(
                "sampling interval must be a positive multiple of 64",
            ));
        }
        let l0 = serial::read_u64_section(&mut source, "poppy l0")?;
        let l1l2 = serial::read_u64_section(&mut source, "poppy l1l2")?;
        let sample_offsets = serial::read_u64_section(&mut source, "poppy sample offsets")?;
        let samples = serial::read_u32_section(&mut source, "poppy samples")?;

        if l0.len() as u64 != n.div_ceil(UPPER_BLOCK_BITS)
            || l1l2.len() as u64 != n.div_ceil(LOWER_BLOCK_BITS)
            || sample_offsets.len() != l0.len() + 1
            || sample_offsets.windows(2).any(|w| w[0] > w[1])
            || sample_offsets.last().copied().unwrap_or(0) != samples.len() as u64
            || ones > n
        {
            return Err(Error::MalformedHeader("inconsistent poppy table sizes"));
        }

        Ok(PoppyIndex {
            l0,
            l1l2,
            sample_offsets,
            samples,
            k,
            backend: backend.resolve(),
            n,
            ones,
        })
    }
}
