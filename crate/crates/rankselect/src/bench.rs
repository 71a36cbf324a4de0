//! Microbenchmarks: in-register word select, word select on words drawn
//! randomly from a vector, and full bit-vector select through an index.
//!
//! Query streams are pregenerated outside the timed region, the backend is
//! resolved before the loop, and the loop allocates nothing. Each run does
//! one untimed warm-up pass, then `iterations` timed passes; the mean
//! excludes the warm-up. Every returned position is folded into a checksum
//! so the work cannot be optimized away and so runs of the same
//! configuration under different backends or structures can be
//! cross-checked: any checksum mismatch is a correctness failure caught
//! while benchmarking.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use crate::bitvector::{BitVector, Density};
use crate::clark_select::ClarkSelectIndex;
use crate::error::{Error, Result};
use crate::poppy::{PoppyIndex, DEFAULT_SAMPLING};
use crate::rng::{derive_seed, SplitMix64};
use crate::word_select::{
    popcount64, select_word_broadword, select_word_bytescan, select_word_oracle,
    select_word_ptselect, WordSelectBackend,
};

/// Stream tags so the vector bits, the benched word, and the query ranks
/// come from decorrelated PRNG streams of one user-facing seed.
const STREAM_WORD: u64 = 1;
const STREAM_RANK: u64 = 2;
const STREAM_PICK: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkKind {
    WordRegister,
    WordRandom,
    VectorSelect,
}

impl BenchmarkKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::WordRegister => "word-register",
            BenchmarkKind::WordRandom => "word-random",
            BenchmarkKind::VectorSelect => "vector-select",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-register" => Ok(BenchmarkKind::WordRegister),
            "word-random" => Ok(BenchmarkKind::WordRandom),
            "vector-select" => Ok(BenchmarkKind::VectorSelect),
            other => Err(Error::InvalidConfig(format!(
                "unknown benchmark {other:?} (expected word-register|word-random|vector-select)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Poppy,
    Clark,
}

impl Structure {
    pub fn name(self) -> &'static str {
        match self {
            Structure::Poppy => "poppy",
            Structure::Clark => "clark",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poppy" => Ok(Structure::Poppy),
            "clark" => Ok(Structure::Clark),
            other => Err(Error::InvalidConfig(format!(
                "unknown structure {other:?} (expected poppy|clark)"
            ))),
        }
    }
}

/// Parameters of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub benchmark: BenchmarkKind,
    /// Index structure; only meaningful for `vector-select`.
    pub structure: Option<Structure>,
    pub backend: WordSelectBackend,
    pub log2_n: u32,
    pub density: Density,
    pub ops: u64,
    pub iterations: u32,
    pub seed: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ops == 0 {
            return Err(Error::InvalidConfig("ops must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(10..=40).contains(&self.log2_n) {
            return Err(Error::InvalidConfig(format!(
                "log2_n must lie in [10, 40], got {}",
                self.log2_n
            )));
        }
        if self.benchmark == BenchmarkKind::VectorSelect && self.structure.is_none() {
            return Err(Error::InvalidConfig(
                "vector-select needs a structure (poppy|clark)".into(),
            ));
        }
        Ok(())
    }
}

/// Timing result of one run: per-iteration ns/op and the position fold.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub config: BenchConfig,
    pub ns_per_op: Vec<f64>,
    pub checksum: u64,
}

impl BenchRecord {
    pub fn mean_ns_per_op(&self) -> f64 {
        self.ns_per_op.iter().sum::<f64>() / self.ns_per_op.len() as f64
    }
}

/// `ops` uniform ranks in `[1, count_ones]`, deterministic per seed.
pub fn gen_queries(bv: &BitVector, ops: u64, seed: u64) -> Result<Vec<u64>> {
    let ones = bv.count_ones();
    if ones == 0 {
        return Err(Error::NoOnes);
    }
    let mut rng = SplitMix64::new(seed);
    Ok((0..ops).map(|_| 1 + rng.next_below(ones)).collect())
}

/// One warm-up pass, then `iterations` timed passes of `pass`.
fn timed_iterations<F: FnMut() -> u64>(iterations: u32, ops: u64, mut pass: F) -> (Vec<f64>, u64) {
    std::hint::black_box(pass());
    let mut ns = Vec::with_capacity(iterations as usize);
    let mut checksum = 0u64;
    for _ in 0..iterations {
        let started = Instant::now();
        let fold = pass();
        let elapsed = started.elapsed();
        std::hint::black_box(fold);
        checksum = checksum.wrapping_add(fold);
        ns.push(elapsed.as_nanos() as f64 / ops as f64);
    }
    (ns, checksum)
}

#[inline(never)]
fn register_pass<F: Fn(u64, u32) -> u32>(select: F, word: u64, js: &[u32]) -> u64 {
    let word = std::hint::black_box(word);
    let mut fold = 0u64;
    for &j in js {
        fold = fold.wrapping_add(select(word, j) as u64);
    }
    fold
}

#[inline(never)]
fn random_word_pass<F: Fn(u64, u32) -> u32>(
    select: F,
    words: &[u64],
    picks: &[u64],
    js: &[u32],
) -> u64 {
    let mut fold = 0u64;
    for (&idx, &j) in picks.iter().zip(js) {
        fold = fold.wrapping_add(select(words[idx as usize], j) as u64);
    }
    fold
}

fn run_register(backend: WordSelectBackend, word: u64, js: &[u32]) -> u64 {
    match backend.resolve() {
        WordSelectBackend::PtSelect => register_pass(select_word_ptselect, word, js),
        WordSelectBackend::Broadword => register_pass(select_word_broadword, word, js),
        WordSelectBackend::ByteScan => register_pass(select_word_bytescan, word, js),
        WordSelectBackend::Oracle => register_pass(select_word_oracle, word, js),
        WordSelectBackend::Auto => unreachable!(),
    }
}

fn run_random_word(backend: WordSelectBackend, words: &[u64], picks: &[u64], js: &[u32]) -> u64 {
    match backend.resolve() {
        WordSelectBackend::PtSelect => random_word_pass(select_word_ptselect, words, picks, js),
        WordSelectBackend::Broadword => random_word_pass(select_word_broadword, words, picks, js),
        WordSelectBackend::ByteScan => random_word_pass(select_word_bytescan, words, picks, js),
        WordSelectBackend::Oracle => random_word_pass(select_word_oracle, words, picks, js),
        WordSelectBackend::Auto => unreachable!(),
    }
}

/// A word with bits at the configured density, redrawn until nonzero.
fn random_nonzero_word(density: Density, seed: u64) -> Result<u64> {
    let mut bits = SplitMix64::new(seed);
    for _ in 0..10_000 {
        let candidate = BitVector::from_random(64, density, bits.next_u64()).words()[0];
        if candidate != 0 {
            return Ok(candidate);
        }
    }
    Err(Error::NoOnes)
}

/// Time `select_word` on one fixed word with random valid ranks: the
/// in-register cost of each backend, no memory traffic.
pub fn bench_word_register(config: &BenchConfig) -> Result<BenchRecord> {
    config.validate()?;
    let word = random_nonzero_word(config.density, derive_seed(config.seed, STREAM_WORD))?;
    let ones = popcount64(word) as u64;
    let mut rng = SplitMix64::new(derive_seed(config.seed, STREAM_RANK));
    let js: Vec<u32> = (0..config.ops)
        .map(|_| rng.next_below(ones) as u32)
        .collect();

    let backend = config.backend.resolve();
    let (ns_per_op, checksum) = timed_iterations(config.iterations, config.ops, || {
        run_register(backend, word, &js)
    });
    Ok(BenchRecord {
        config: config.clone(),
        ns_per_op,
        checksum,
    })
}

/// Time `select_word` on words picked at random from `bv`: for vectors
/// beyond cache each pick costs a miss, so this exposes how much memory
/// parallelism each backend's code size permits.
pub fn bench_word_random(config: &BenchConfig, bv: &BitVector) -> Result<BenchRecord> {
    config.validate()?;
    let words = bv.words();
    if words.iter().all(|&w| w == 0) {
        return Err(Error::NoNonzeroWords);
    }
    let mut rng = SplitMix64::new(derive_seed(config.seed, STREAM_PICK));
    let mut picks = Vec::with_capacity(config.ops as usize);
    let mut js = Vec::with_capacity(config.ops as usize);
    for _ in 0..config.ops {
        // Redraw zero words: they carry no valid rank. Cheap at the
        // densities of interest.
        let idx = loop {
            let candidate = rng.next_below(words.len() as u64);
            if words[candidate as usize] != 0 {
                break candidate;
            }
        };
        picks.push(idx);
        js.push(rng.next_below(popcount64(words[idx as usize]) as u64) as u32);
    }

    let backend = config.backend.resolve();
    let (ns_per_op, checksum) = timed_iterations(config.iterations, config.ops, || {
        run_random_word(backend, words, &picks, &js)
    });
    Ok(BenchRecord {
        config: config.clone(),
        ns_per_op,
        checksum,
    })
}

/// Time full bit-vector selects through the configured index structure.
/// Index construction happens before timing starts.
pub fn bench_vector_select(config: &BenchConfig, bv: &BitVector) -> Result<BenchRecord> {
    config.validate()?;
    let structure = config
        .structure
        .ok_or_else(|| Error::InvalidConfig("vector-select needs a structure".into()))?;
    let queries = gen_queries(bv, config.ops, derive_seed(config.seed, STREAM_RANK))?;

    let (ns_per_op, checksum) = match structure {
        Structure::Poppy => {
            let idx = PoppyIndex::build(bv, DEFAULT_SAMPLING, config.backend);
            timed_iterations(config.iterations, config.ops, || {
                let mut fold = 0u64;
                for &r in &queries {
                    fold =
                        fold.wrapping_add(idx.select(bv, r).expect("pregenerated rank is valid"));
                }
                fold
            })
        }
        Structure::Clark => {
            let idx = ClarkSelectIndex::build(bv, config.backend);
            timed_iterations(config.iterations, config.ops, || {
                let mut fold = 0u64;
                for &r in &queries {
                    fold =
                        fold.wrapping_add(idx.select(bv, r).expect("pregenerated rank is valid"));
                }
                fold
            })
        }
    };
    Ok(BenchRecord {
        config: config.clone(),
        ns_per_op,
        checksum,
    })
}

pub const CSV_HEADER: &str =
    "benchmark,structure,backend,log2_n,density,ops,iterations,seed,ns_per_op_mean,ns_per_op_all,checksum";

/// Write records as CSV, one row per run, ns values with two decimals,
/// the per-iteration list joined with `;`.
pub fn write_csv<W: Write>(records: &[BenchRecord], mut sink: W) -> Result<()> {
    writeln!(sink, "{CSV_HEADER}")?;
    for record in records {
        let c = &record.config;
        let all = record
            .ns_per_op
            .iter()
            .map(|v| format!("{v:.2}"))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{:.2},{},{}",
            c.benchmark,
            c.structure.map(Structure::name).unwrap_or(""),
            c.backend,
            c.log2_n,
            c.density.fraction(),
            c.ops,
            c.iterations,
            c.seed,
            record.mean_ns_per_op(),
            all,
            record.checksum,
        )?;
    }
    Ok(())
}

/// Parse CSV produced by [`write_csv`] back into records.
pub fn read_csv<R: BufRead>(source: R) -> Result<Vec<BenchRecord>> {
    let bad = |msg: &str| Error::InvalidConfig(format!("malformed benchmark CSV: {msg}"));
    let mut lines = source.lines();
    match lines.next() {
        Some(Ok(header)) if header == CSV_HEADER => {}
        _ => return Err(bad("missing header")),
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(bad("wrong field count"));
        }
        let parse_f64 = |s: &str| s.parse::<f64>().map_err(|_| bad("bad float"));
        let config = BenchConfig {
            benchmark: fields[0].parse()?,
            structure: if fields[1].is_empty() {
                None
            } else {
                Some(fields[1].parse()?)
            },
            backend: fields[2].parse()?,
            log2_n: fields[3].parse().map_err(|_| bad("bad log2_n"))?,
            density: Density::new(parse_f64(fields[4])?)?,
            ops: fields[5].parse().map_err(|_| bad("bad ops"))?,
            iterations: fields[6].parse().map_err(|_| bad("bad iterations"))?,
            seed: fields[7].parse().map_err(|_| bad("bad seed"))?,
        };
        let ns_per_op = fields[9]
            .split(';')
            .map(parse_f64)
            .collect::<Result<Vec<f64>>>()?;
        records.push(BenchRecord {
            config,
            ns_per_op,
            checksum: fields[10].parse().map_err(|_| bad("bad checksum"))?,
        });
    }
    Ok(records)
}

/// Everything that pins a configuration's answers: benchmark, log2_n,
/// density bits, ops, iterations, seed. Backend and structure excluded.
type ChecksumKey = (BenchmarkKind, u32, u64, u64, u32, u64);

/// Fail if two records of the same configuration (backend and structure
/// aside) folded different positions.
pub fn check_checksums(records: &[BenchRecord]) -> Result<()> {
    let mut seen: HashMap<ChecksumKey, (u64, String)> = HashMap::new();
    for record in records {
        let c = &record.config;
        let key = (
            c.benchmark,
            c.log2_n,
            c.density.fraction().to_bits(),
            c.ops,
            c.iterations,
            c.seed,
        );
        let label = format!(
            "{} structure={} backend={}",
            c.benchmark,
            c.structure.map(Structure::name).unwrap_or("-"),
            c.backend
        );
        match seen.get(&key) {
            None => {
                seen.insert(key, (record.checksum, label));
            }
            Some((expected, first_label)) => {
                if *expected != record.checksum {
                    return Err(Error::ChecksumMismatch(format!(
                        "{label} folded {:#x}, but {first_label} folded {expected:#x}",
                        record.checksum
                    )));
                }
            }
        }
    }
    Ok(())
}
