//! Superblock select index in the Clark / select_support_mcl style.
//!
//! Ones are grouped 4096 to a superblock. A superblock spanning at least
//! `ceil(log2(n)^4)` bits is *long* and stores all 4096 positions outright,
//! so those queries are a single lookup. A *short* superblock stores the
//! position of every 64th one relative to the superblock start; queries
//! jump to the nearest stored position, popcount forward word by word, and
//! finish with one machine-word select.
//!
//! Select only; pair it with a rank structure if both are needed.

use std::io::{Read, Write};

use crate::bitvector::BitVector;
use crate::error::{Error, Result};
use crate::serial;
use crate::word_select::{popcount64, select_word, WordSelectBackend};

pub const ONES_PER_SUPERBLOCK: u64 = 4096;
pub const SHORT_SAMPLE_EVERY: u64 = 64;

const MAGIC: &[u8; 8] = b"SELCL001";

#[derive(Debug, Clone, PartialEq, Eq)]
enum Payload {
    /// Absolute position of every one in the superblock.
    Long(Vec<u64>),
    /// Position of every 64th one, relative to the superblock start.
    Short(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClarkSelectIndex {
    /// Entry t is the position of the one with rank 4096*t + 1.
    starts: Vec<u64>,
    payloads: Vec<Payload>,
    threshold: u64,
    backend: WordSelectBackend,
    n: u64,
    ones: u64,
}

/// Superblock span at or above which all positions are stored explicitly:
/// `ceil(log2(n)^4)` with n the vector length in bits.
pub fn long_span_threshold(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    (n as f64).log2().powi(4).ceil() as u64
}

impl ClarkSelectIndex {
    /// Build in one pass; the vector must not be mutated afterwards.
    pub fn build(bv: &BitVector, backend: WordSelectBackend) -> ClarkSelectIndex {
        let backend = backend.resolve();
        let n = bv.len();
        let threshold = long_span_threshold(n);

        let mut starts = Vec::new();
        let mut payloads = Vec::new();
        let mut buffer: Vec<u64> = Vec::with_capacity(ONES_PER_SUPERBLOCK as usize);
        let mut ones: u64 = 0;

        for pos in bv.iter_ones() {
            ones += 1;
            if buffer.len() == ONES_PER_SUPERBLOCK as usize {
                // `pos` opens the next superblock, fixing this one's span.
                let start = buffer[0];
                starts.push(start);
                payloads.push(Self::make_payload(&buffer, start, pos - start >= threshold));
                buffer.clear();
            }
            buffer.push(pos);
        }
        if !buffer.is_empty() {
            let start = buffer[0];
            starts.push(start);
            payloads.push(Self::make_payload(&buffer, start, n - start >= threshold));
        }

        ClarkSelectIndex {
            starts,
            payloads,
            threshold,
            backend,
            n,
            ones,
        }
    }

    fn make_payload(positions: &[u64], start: u64, long: bool) -> Payload {
        if long {
            Payload::Long(positions.to_vec())
        } else {
            Payload::Short(
                positions
                    .iter()
                    .step_by(SHORT_SAMPLE_EVERY as usize)
                    .map(|&p| {
                        let rel = p - start;
                        assert!(
                            rel <= u32::MAX as u64,
                            "short superblock span exceeds 32 bits"
                        );
                        rel as u32
                    })
                    .collect(),
            )
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

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn backend(&self) -> WordSelectBackend {
        self.backend
    }

    pub fn superblocks(&self) -> usize {
        self.starts.len()
    }

    pub fn is_long(&self, superblock: usize) -> bool {
        matches!(self.payloads[superblock], Payload::Long(_))
    }

    /// Bytes occupied by the directory and payloads.
    pub fn aux_bytes(&self) -> u64 {
        let payload_bytes: usize = self
            .payloads
            .iter()
            .map(|p| match p {
                Payload::Long(v) => v.len() * 8,
                Payload::Short(v) => v.len() * 4,
            })
            .sum();
        (self.starts.len() * 8 + payload_bytes) as u64
    }

    /// Position of the `r`-th one, `r` 1-based.
    #[inline]
    pub fn select(&self, bv: &BitVector, r: u64) -> Result<u64> {
        self.select_traced(bv, r).map(|(pos, _)| pos)
    }

    /// Like [`select`](Self::select), also reporting whether the query
    /// invoked a machine-word select (long-superblock lookups never do).
    #[inline]
    pub fn select_traced(&self, bv: &BitVector, r: u64) -> Result<(u64, bool)> {
        if self.n != bv.len() {
            return Err(Error::IndexMismatch {
                expected: self.n,
                got: bv.len(),
            });
        }
        if r == 0 || r > self.ones {
            return Err(Error::RankOutOfRange {
                rank: r,
                ones: self.ones,
            });
        }
        let t = ((r - 1) / ONES_PER_SUPERBLOCK) as usize;
        let local = r - t as u64 * ONES_PER_SUPERBLOCK; // 1..=4096
        match &self.payloads[t] {
            Payload::Long(positions) => Ok((positions[(local - 1) as usize], false)),
            Payload::Short(rel) => {
                let slot = ((local - 1) / SHORT_SAMPLE_EVERY) as usize;
                let jump = self.starts[t] + rel[slot] as u64;
                // The stored position is the one with local rank 64*slot+1,
                // so counting from `jump` inclusive we need this many ones:
                let mut remaining = local - slot as u64 * SHORT_SAMPLE_EVERY;
                let words = bv.words();
                let mut w = (jump / 64) as usize;
                let mut word = words[w] & (u64::MAX << (jump % 64));
                loop {
                    let pc = popcount64(word) as u64;
                    if remaining <= pc {
                        let pos = select_word(self.backend, word, (remaining - 1) as u32);
                        return Ok((w as u64 * 64 + pos as u64, true));
                    }
                    remaining -= pc;
                    w += 1;
                    word = words[w];
                }
            }
        }
    }

    /// Recheck classification, directory, and payload contents against the
    /// raw vector. Linear; meant for tests and the `verify` CLI command.
    pub fn verify(&self, bv: &BitVector) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));

        if self.n != bv.len() {
            return fail(format!(
                "index n = {} but vector has {} bits",
                self.n,
                bv.len()
            ));
        }
        if self.threshold != long_span_threshold(self.n) {
            return fail(format!(
                "threshold = {}, recomputed {}",
                self.threshold,
                long_span_threshold(self.n)
            ));
        }
        let expected_sbs = self.ones.div_ceil(ONES_PER_SUPERBLOCK) as usize;
        if self.starts.len() != expected_sbs || self.payloads.len() != expected_sbs {
            return fail(format!(
                "{} starts / {} payloads for {} ones",
                self.starts.len(),
                self.payloads.len(),
                self.ones
            ));
        }

        // Classification soundness: recompute each span from the directory.
        for t in 0..self.starts.len() {
            let span_end = if t + 1 < self.starts.len() {
                self.starts[t + 1]
            } else {
                self.n
            };
            let span = span_end - self.starts[t];
            let should_be_long = span >= self.threshold;
            if should_be_long != self.is_long(t) {
                return fail(format!(
                    "superblock {t} spans {span} bits (threshold {}) but is stored as {}",
                    self.threshold,
                    if self.is_long(t) { "long" } else { "short" }
                ));
            }
        }

        // Every stored position must address the right one bit.
        let mut walked: u64 = 0;
        for pos in bv.iter_ones() {
            let local0 = walked % ONES_PER_SUPERBLOCK;
            let t = (walked / ONES_PER_SUPERBLOCK) as usize;
            walked += 1;
            if local0 == 0 && self.starts[t] != pos {
                return fail(format!(
                    "superblock {t} starts at {}, expected {pos}",
                    self.starts[t]
                ));
            }
            match &self.payloads[t] {
                Payload::Long(positions) => {
                    if positions[local0 as usize] != pos {
                        return fail(format!(
                            "long payload {t}[{local0}] = {}, expected {pos}",
                            positions[local0 as usize]
                        ));
                    }
                }
                Payload::Short(rel) => {
                    if local0.is_multiple_of(SHORT_SAMPLE_EVERY) {
                        let slot = (local0 / SHORT_SAMPLE_EVERY) as usize;
                        let stored = self.starts[t] + rel[slot] as u64;
                        if stored != pos {
                            return fail(format!(
                                "short payload {t}[{slot}] = {stored}, expected {pos}"
                            ));
                        }
                    }
                }
            }
        }
        if walked != self.ones {
            return fail(format!("walked {walked} ones, index says {}", self.ones));
        }
        for (t, p) in self.payloads.iter().enumerate() {
            let in_block = (self.ones - t as u64 * ONES_PER_SUPERBLOCK).min(ONES_PER_SUPERBLOCK);
            let expected_len = match p {
                Payload::Long(v) => (v.len() as u64, in_block),
                Payload::Short(v) => (v.len() as u64, in_block.div_ceil(SHORT_SAMPLE_EVERY)),
            };
            if expected_len.0 != expected_len.1 {
                return fail(format!(
                    "payload {t} holds {} entries, expected {}",
                    expected_len.0, expected_len.1
                ));
            }
        }
        Ok(())
    }

    /// Serialize: magic, n, ones, threshold, the directory, then each
    /// payload with a kind tag.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(MAGIC)?;
        serial::write_u64(&mut sink, self.n)?;
        serial::write_u64(&mut sink, self.ones)?;
        serial::write_u64(&mut sink, self.threshold)?;
        serial::write_u64_section(&mut sink, &self.starts)?;
        serial::write_u64(&mut sink, self.payloads.len() as u64)?;
        for p in &self.payloads {
            match p {
                Payload::Long(v) => {
                    sink.write_all(&[1u8])?;
                    serial::write_u64_section(&mut sink, v)?;
                }
                Payload::Short(v) => {
                    sink.write_all(&[0u8])?;
                    serial::write_u32_section(&mut sink, v)?;
                }
            }
        }
        Ok(())
    }

    pub fn load<R: Read>(mut source: R, backend: WordSelectBackend) -> Result<ClarkSelectIndex> {
        serial::check_magic(&mut source, MAGIC, "SELCL001", "clark select index")?;
        let n = serial::read_u64(&mut source, "clark header")?;
        let ones = serial::read_u64(&mut source, "clark header")?;
        let threshold = serial::read_u64(&mut source, "clark header")?;
        let starts = serial::read_u64_section(&mut source, "clark directory")?;
        let payload_count = serial::read_u64(&mut source, "clark payloads")?;
        if ones > n
            || starts.len() as u64 != ones.div_ceil(ONES_PER_SUPERBLOCK)
            || payload_count != starts.len() as u64
        {
            return Err(Error::MalformedHeader("inconsistent clark table sizes"));
        }
        let mut payloads = Vec::with_capacity(starts.len());
        let mut kind = [0u8; 1];
        for _ in 0..payload_count {
            serial::read_exact_or(&mut source, &mut kind, "clark payload kind")?;
            payloads.push(match kind[0] {
                1 => Payload::Long(serial::read_u64_section(&mut source, "clark long payload")?),
                0 => Payload::Short(serial::read_u32_section(
                    &mut source,
                    "clark short payload",
                )?),
                _ => return Err(Error::MalformedHeader("unknown clark payload kind")),
            });
        }
        Ok(ClarkSelectIndex {
            starts,
            payloads,
            threshold,
            backend: backend.resolve(),
            n,
            ones,
        })
    }
}
