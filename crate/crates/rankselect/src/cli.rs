//! Command-line interface: `gen`, `verify`, `bench`, `info`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, BenchConfig, BenchRecord, BenchmarkKind, Structure};
use crate::bitvector::{BitVector, Density};
use crate::clark_select::ClarkSelectIndex;
use crate::error::{Error, Result};
use crate::poppy::{PoppyIndex, DEFAULT_SAMPLING};
use crate::rng::SplitMix64;
use crate::word_select::{detect_features, select_word, WordSelectBackend};

#[derive(Parser)]
#[command(
    name = "rankselect",
    version,
    about = "Bit-vector rank/select: generate vectors, verify indexes, run benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic random bit-vector file
    Gen(GenArgs),
    /// Build indexes over a vector file and check them against the oracles
    Verify(VerifyArgs),
    /// Run benchmarks and write CSV
    Bench(BenchArgs),
    /// Print detected CPU features and the resolved auto backend
    Info,
}

#[derive(Args)]
struct GenArgs {
    /// Vector length in bits
    #[arg(long)]
    bits: u64,
    /// Fraction of one bits; values above 1 are read as percentages
    #[arg(long, value_parser = parse_density)]
    density: Density,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Bit-vector file to verify against
    #[arg(long = "in")]
    input: PathBuf,
    /// Index structure: poppy, clark, or both
    #[arg(long, default_value = "both")]
    structure: String,
    /// Comma-separated word-select backends, or "all"
    #[arg(long, default_value = "all")]
    backend: String,
    /// Select sampling interval for poppy (positive multiple of 64)
    #[arg(long, default_value_t = DEFAULT_SAMPLING)]
    sampling: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// word-register, word-random, or vector-select
    #[arg(long, value_parser = parse_benchmark)]
    benchmark: BenchmarkKind,
    /// Index structure for vector-select: poppy, clark, or both
    #[arg(long, default_value = "both")]
    structure: String,
    /// Comma-separated word-select backends, or "all"
    #[arg(long, default_value = "ptselect,broadword,bytescan")]
    backend: String,
    /// Vector sizes as log2: a range "20..28" (step 2), a single value, or
    /// a comma list
    #[arg(long, default_value = "20..28")]
    log2n: String,
    /// Comma-separated densities, fractions or percentages
    #[arg(long, default_value = "90,50,10")]
    density: String,
    /// Select operations per iteration
    #[arg(long, default_value_t = 1_000_000)]
    ops: u64,
    /// Timed iterations (one extra warm-up iteration always runs first)
    #[arg(long, default_value_t = 10)]
    iters: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// CSV output path; stdout when omitted
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_density(s: &str) -> std::result::Result<Density, String> {
    let value: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    Density::parse_lenient(value).map_err(|e| e.to_string())
}

fn parse_benchmark(s: &str) -> std::result::Result<BenchmarkKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_backend_list(s: &str) -> Result<Vec<WordSelectBackend>> {
    if s == "all" {
        return Ok(WordSelectBackend::CONCRETE.to_vec());
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

fn parse_structure_list(s: &str) -> Result<Vec<Structure>> {
    if s == "both" {
        return Ok(vec![Structure::Poppy, Structure::Clark]);
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

fn parse_log2n_list(s: &str) -> Result<Vec<u32>> {
    let bad = |why: String| Error::InvalidConfig(format!("bad --log2n {s:?}: {why}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad("range start".into()))?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad("range end".into()))?;
        if lo > hi {
            return Err(bad(format!("{lo} > {hi}")));
        }
        Ok((lo..=hi).step_by(2).collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad(format!("value {t:?}"))))
            .collect()
    }
}

fn parse_density_list(s: &str) -> Result<Vec<Density>> {
    s.split(',')
        .map(|t| {
            let value: f64 = t
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad density {t:?}")))?;
            Density::parse_lenient(value)
        })
        .collect()
}

/// Entry point; returns the process exit code (0 ok, 1 failure, clap
/// exits 2 on usage errors by itself).
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Info => cmd_info(),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    let bv = BitVector::from_random(args.bits, args.density, args.seed);
    let mut sink = BufWriter::new(File::create(&args.out)?);
    bv.save(&mut sink)?;
    sink.flush()?;
    println!(
        "wrote {} bits ({} ones, density {:.4}) to {}",
        bv.len(),
        bv.count_ones(),
        bv.count_ones() as f64 / bv.len().max(1) as f64,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_info() -> Result<ExitCode> {
    let f = detect_features();
    let yn = |b: bool| if b { "available" } else { "not available" };
    println!("popcnt:       {}", yn(f.has_popcnt));
    println!("tzcnt (BMI1): {}", yn(f.has_tzcnt));
    println!("pdep (BMI2):  {}", yn(f.has_bmi2));
    println!("auto backend: {}", WordSelectBackend::Auto.resolve());
    Ok(ExitCode::SUCCESS)
}

/// Query sample used by the verify suites: boundary ranks plus a seeded
/// random sample, capped so big files stay quick to check.
fn sample_ranks(ones: u64, k: u64) -> Vec<u64> {
    let mut ranks = vec![1, ones];
    for boundary in [64u64, 4096, k] {
        let mut m = boundary;
        while m <= ones && ranks.len() < 4096 {
            ranks.push(m);
            m += boundary;
        }
    }
    let mut rng = SplitMix64::new(0x5EED);
    for _ in 0..2000 {
        ranks.push(1 + rng.next_below(ones));
    }
    ranks.sort_unstable();
    ranks.dedup();
    ranks
}

fn sample_positions(n: u64) -> Vec<u64> {
    let mut js = vec![0, n - 1];
    for boundary in [64u64, 512, 2048] {
        let mut m = boundary;
        while m < n && js.len() < 4096 {
            js.push(m - 1);
            js.push(m);
            m += boundary;
        }
    }
    let mut rng = SplitMix64::new(0xFACE);
    for _ in 0..2000 {
        js.push(rng.next_below(n));
    }
    js.sort_unstable();
    js.dedup();
    js
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let bv = BitVector::load(BufReader::new(File::open(&args.input)?))?;
    let backends = parse_backend_list(&args.backend)?;
    let structures = parse_structure_list(&args.structure)?;
    if args.sampling == 0 || !args.sampling.is_multiple_of(64) {
        return Err(Error::InvalidConfig(format!(
            "--sampling must be a positive multiple of 64, got {}",
            args.sampling
        )));
    }

    let ones = bv.count_ones();
    let n = bv.len();
    println!("verifying {} ({n} bits, {ones} ones)", args.input.display());
    if ones == 0 {
        println!("suite empty-vector                 PASS (no ones; nothing to select)");
        return Ok(ExitCode::SUCCESS);
    }

    // Oracle data, one linear pass each.
    let positions: Vec<u64> = bv.iter_ones().collect();
    let ranks = sample_ranks(ones, args.sampling);
    let js = sample_positions(n);

    let mut failed = false;
    let mut suite = |name: String, outcome: Result<()>| match outcome {
        Ok(()) => println!("suite {name:<34} PASS"),
        Err(e) => {
            failed = true;
            println!("suite {name:<34} FAIL: {e}");
        }
    };

    suite(
        "bitvector-laws".into(),
        (|| {
            for (i, &r) in ranks.iter().enumerate() {
                let pos = positions[(r - 1) as usize];
                if i % 97 == 0 && bv.select_naive(r)? != pos {
                    return Err(Error::Invariant(format!("select_naive({r}) disagrees")));
                }
                if bv.rank_naive(pos)? != r {
                    return Err(Error::Invariant(format!("rank(select({r})) != {r}")));
                }
                if !bv.get(pos)? {
                    return Err(Error::Invariant(format!("select({r}) lands on a zero")));
                }
            }
            for &j in js.iter().take(512) {
                let here = bv.rank_naive(j)?;
                let before = if j == 0 { 0 } else { bv.rank_naive(j - 1)? };
                if here != before + bv.get(j)? as u64 {
                    return Err(Error::Invariant(format!("rank not monotone at {j}")));
                }
            }
            Ok(())
        })(),
    );

    for &backend in &backends {
        for &structure in &structures {
            match structure {
                Structure::Poppy => {
                    let idx = PoppyIndex::build(&bv, args.sampling, backend);
                    suite(format!("poppy-invariants[{backend}]"), idx.verify(&bv));
                    suite(
                        format!("poppy-rank-oracle[{backend}]"),
                        (|| {
                            for &j in &js {
                                if idx.rank(&bv, j)? != bv.rank_naive(j)? {
                                    return Err(Error::Invariant(format!("rank({j}) disagrees")));
                                }
                            }
                            Ok(())
                        })(),
                    );
                    suite(
                        format!("poppy-select-oracle[{backend}]"),
                        (|| {
                            for &r in &ranks {
                                let got = idx.select(&bv, r)?;
                                if got != positions[(r - 1) as usize] {
                                    return Err(Error::Invariant(format!("select({r}) = {got}")));
                                }
                                if idx.rank(&bv, got)? != r {
                                    return Err(Error::Invariant(format!(
                                        "rank(select({r})) != {r}"
                                    )));
                                }
                            }
                            Ok(())
                        })(),
                    );
                }
                Structure::Clark => {
                    let idx = ClarkSelectIndex::build(&bv, backend);
                    suite(format!("clark-invariants[{backend}]"), idx.verify(&bv));
                    suite(
                        format!("clark-select-oracle[{backend}]"),
                        (|| {
                            for &r in &ranks {
                                let got = idx.select(&bv, r)?;
                                if got != positions[(r - 1) as usize] {
                                    return Err(Error::Invariant(format!("select({r}) = {got}")));
                                }
                            }
                            Ok(())
                        })(),
                    );
                }
            }
        }
    }

    suite(
        "word-backend-equivalence".into(),
        (|| {
            let words = bv.words();
            let mut rng = SplitMix64::new(0xBEEF);
            for _ in 0..2000.min(words.len() * 4) {
                let w = words[rng.next_below(words.len() as u64) as usize];
                let j = rng.next_below(66) as u32;
                let expected = select_word(WordSelectBackend::Oracle, w, j);
                for backend in WordSelectBackend::CONCRETE {
                    if select_word(backend, w, j) != expected {
                        return Err(Error::Invariant(format!(
                            "backend {backend} disagrees on word {w:#x}, j={j}"
                        )));
                    }
                }
            }
            Ok(())
        })(),
    );

    if failed {
        Ok(ExitCode::FAILURE)
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let backends = parse_backend_list(&args.backend)?;
    let structures = parse_structure_list(&args.structure)?;
    let log2ns = parse_log2n_list(&args.log2n)?;
    let densities = parse_density_list(&args.density)?;
    if log2ns.is_empty() || densities.is_empty() || backends.is_empty() {
        return Err(Error::InvalidConfig("empty sweep".into()));
    }

    let config = |structure, backend, log2_n, density| BenchConfig {
        benchmark: args.benchmark,
        structure,
        backend,
        log2_n,
        density,
        ops: args.ops,
        iterations: args.iters,
        seed: args.seed,
    };

    let mut records: Vec<BenchRecord> = Vec::new();
    let mut run = |record: Result<BenchRecord>| -> Result<()> {
        let record = record?;
        let c = &record.config;
        eprintln!(
            "{} structure={} backend={} log2n={} density={} -> {:.2} ns/op",
            c.benchmark,
            c.structure.map(Structure::name).unwrap_or("-"),
            c.backend,
            c.log2_n,
            c.density.fraction(),
            record.mean_ns_per_op()
        );
        records.push(record);
        Ok(())
    };

    match args.benchmark {
        BenchmarkKind::WordRegister => {
            // No vector involved; one run per density and backend.
            for &density in &densities {
                for &backend in &backends {
                    run(bench::bench_word_register(&config(
                        None, backend, log2ns[0], density,
                    )))?;
                }
            }
        }
        BenchmarkKind::WordRandom => {
            for &log2_n in &log2ns {
                for &density in &densities {
                    let bv = BitVector::from_random(1u64 << log2_n, density, args.seed);
                    for &backend in &backends {
                        run(bench::bench_word_random(
                            &config(None, backend, log2_n, density),
                            &bv,
                        ))?;
                    }
                }
            }
        }
        BenchmarkKind::VectorSelect => {
            for &log2_n in &log2ns {
                for &density in &densities {
                    let bv = BitVector::from_random(1u64 << log2_n, density, args.seed);
                    for &structure in &structures {
                        for &backend in &backends {
                            run(bench::bench_vector_select(
                                &config(Some(structure), backend, log2_n, density),
                                &bv,
                            ))?;
                        }
                    }
                }
            }
        }
    }

    // The fold of returned positions must agree across backends and
    // structures for the same configuration; a mismatch means a backend
    // answered a query wrong during the run.
    bench::check_checksums(&records)?;

    match &args.csv {
        Some(path) => {
            let mut sink = BufWriter::new(File::create(path)?);
            bench::write_csv(&records, &mut sink)?;
            sink.flush()?;
            eprintln!("wrote {} rows to {}", records.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            bench::write_csv(&records, stdout.lock())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
