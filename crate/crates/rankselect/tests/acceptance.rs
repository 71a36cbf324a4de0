//! Acceptance suite. Each test prints one `criterion N: PASS/FAIL/SKIP`
//! line (run with `--nocapture` to see them on success) and enforces its
//! runtime budget. A global lock serializes the criteria so the timing
//! measurements are not perturbed by concurrent tests.

mod common;

use std::panic::AssertUnwindSafe;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use common::{boundary_positions, boundary_ranks, fixture, worked_example, RankSelectOracle};
use rankselect::bench::{self, BenchConfig, BenchRecord, BenchmarkKind, Structure};
use rankselect::poppy::DEFAULT_SAMPLING;
use rankselect::rng::SplitMix64;
use rankselect::word_select::{
    detect_features, pdep_soft, popcount64, select_word_broadword, select_word_bytescan,
    select_word_oracle, select_word_ptselect, tzcnt_soft,
};
use rankselect::{BitVector, ClarkSelectIndex, Density, PoppyIndex, WordSelectBackend};

static SERIAL: Mutex<()> = Mutex::new(());

fn serialize_criteria() -> MutexGuard<'static, ()> {
    SERIAL
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

enum Outcome {
    Pass(String),
    Skip(String),
}

fn criterion<F>(name: &str, budget: Duration, body: F)
where
    F: FnOnce() -> Outcome,
{
    let _guard = serialize_criteria();
    let started = Instant::now();
    let result = std::panic::catch_unwind(AssertUnwindSafe(body));
    let elapsed = started.elapsed();
    match result {
        Ok(Outcome::Pass(detail)) if elapsed <= budget => {
            println!(
                "criterion {name}: PASS ({detail}; {:.2}s of {:.0}s budget)",
                elapsed.as_secs_f64(),
                budget.as_secs_f64()
            );
        }
        Ok(Outcome::Pass(detail)) => {
            println!(
                "criterion {name}: FAIL (passed checks but took {:.2}s, budget {:.0}s; {detail})",
                elapsed.as_secs_f64(),
                budget.as_secs_f64()
            );
            panic!("criterion {name} exceeded its runtime budget");
        }
        Ok(Outcome::Skip(why)) => {
            println!("criterion {name}: SKIP ({why})");
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            println!("criterion {name}: FAIL ({msg})");
            panic!("criterion {name} failed");
        }
    }
}

const ALL_BACKENDS: [WordSelectBackend; 5] = [
    WordSelectBackend::PtSelect,
    WordSelectBackend::Broadword,
    WordSelectBackend::ByteScan,
    WordSelectBackend::Oracle,
    WordSelectBackend::Auto,
];

#[test]
fn criterion_01_worked_example_fidelity() {
    criterion("1 (worked example)", Duration::from_secs(1), || {
        let bv = worked_example();
        assert_eq!(bv.rank_naive(5).unwrap(), 3);
        assert_eq!(bv.select_naive(4).unwrap(), 8);
        for backend in ALL_BACKENDS {
            let poppy = PoppyIndex::build(&bv, DEFAULT_SAMPLING, backend);
            assert_eq!(poppy.rank(&bv, 5).unwrap(), 3, "poppy rank, {backend}");
            assert_eq!(poppy.select(&bv, 4).unwrap(), 8, "poppy select, {backend}");
            let clark = ClarkSelectIndex::build(&bv, backend);
            assert_eq!(clark.select(&bv, 4).unwrap(), 8, "clark select, {backend}");
        }
        Outcome::Pass("rank(5)=3 and select(4)=8 via naive, poppy, clark with 5 backends".into())
    });
}

fn random_word_sweep(mut check: impl FnMut(u64, u32, u32)) -> u64 {
    let mut rng = SplitMix64::new(0xACCE97);
    let mut checks = 0u64;
    for _ in 0..1_000_000u32 {
        let x = rng.next_u64();
        for j in 0..popcount64(x) {
            check(x, j, select_word_oracle(x, j));
            checks += 1;
        }
    }
    checks
}

#[test]
fn criterion_02_word_select_oracle_equivalence() {
    criterion(
        "2 (word-select equivalence)",
        Duration::from_secs(30),
        || {
            let mut checks = random_word_sweep(|x, j, expected| {
                assert_eq!(
                    select_word_ptselect(x, j),
                    expected,
                    "ptselect x={x:#x} j={j}"
                );
                assert_eq!(
                    select_word_broadword(x, j),
                    expected,
                    "broadword x={x:#x} j={j}"
                );
                assert_eq!(
                    select_word_bytescan(x, j),
                    expected,
                    "bytescan x={x:#x} j={j}"
                );
            });
            let mut structured: Vec<u64> =
                vec![0, u64::MAX, 0x5555_5555_5555_5555, 0xAAAA_AAAA_AAAA_AAAA];
            structured.extend((0..64).map(|b| 1u64 << b));
            for x in structured {
                for j in 0..=64u32 {
                    let expected = select_word_oracle(x, j);
                    assert_eq!(select_word_ptselect(x, j), expected);
                    assert_eq!(select_word_broadword(x, j), expected);
                    assert_eq!(select_word_bytescan(x, j), expected);
                    checks += 1;
                }
            }
            Outcome::Pass(format!(
                "{checks} (word, rank) pairs agree across ptselect, broadword, bytescan, oracle"
            ))
        },
    );
}

#[test]
fn criterion_03_deposit_count_composition() {
    criterion(
        "3 (software pdep+tzcnt composition)",
        Duration::from_secs(30),
        || {
            let checks = random_word_sweep(|x, j, expected| {
                assert_eq!(
                    tzcnt_soft(pdep_soft(1u64 << j, x)),
                    expected,
                    "x={x:#x} j={j}"
                );
            });
            Outcome::Pass(format!(
                "tzcnt_soft(pdep_soft(1<<j, x)) matched the oracle on {checks} pairs"
            ))
        },
    );
}

const FIXTURE_GRID: [u32; 3] = [16, 20, 24];
const FIXTURE_DENSITIES: [f64; 3] = [0.1, 0.5, 0.9];
const FIXTURE_SEEDS: [u64; 3] = [1, 2, 3];

#[test]
fn criterion_04_structure_oracle_equivalence() {
    criterion(
        "4 (structure equivalence)",
        Duration::from_secs(300),
        || {
            let mut select_checks = 0u64;
            let mut rank_checks = 0u64;
            for log2_n in FIXTURE_GRID {
                for density in FIXTURE_DENSITIES {
                    for seed in FIXTURE_SEEDS {
                        let bv = fixture(log2_n, density, seed);
                        let oracle = RankSelectOracle::build(&bv);
                        oracle.anchor_against_naive(&bv);
                        let poppy =
                            PoppyIndex::build(&bv, DEFAULT_SAMPLING, WordSelectBackend::Auto);
                        let clark = ClarkSelectIndex::build(&bv, WordSelectBackend::Auto);
                        let ones = oracle.ones();

                        let mut rng = SplitMix64::new(seed ^ 0xF1F7);
                        let mut ranks: Vec<u64> =
                            (0..100_000).map(|_| 1 + rng.next_below(ones)).collect();
                        ranks.extend(boundary_ranks(ones, DEFAULT_SAMPLING));
                        for r in ranks {
                            let expected = oracle.select(r);
                            assert_eq!(
                                poppy.select(&bv, r).unwrap(),
                                expected,
                                "poppy select({r}) n=2^{log2_n} d={density} seed={seed}"
                            );
                            assert_eq!(
                                clark.select(&bv, r).unwrap(),
                                expected,
                                "clark select({r}) n=2^{log2_n} d={density} seed={seed}"
                            );
                            select_checks += 2;
                        }

                        let mut positions: Vec<u64> =
                            (0..100_000).map(|_| rng.next_below(bv.len())).collect();
                        positions.extend(boundary_positions(bv.len()));
                        for j in positions {
                            assert_eq!(
                                poppy.rank(&bv, j).unwrap(),
                                oracle.rank(j),
                                "poppy rank({j}) n=2^{log2_n} d={density} seed={seed}"
                            );
                            rank_checks += 1;
                        }
                    }
                }
            }
            Outcome::Pass(format!(
            "27 fixtures, {select_checks} select and {rank_checks} rank checks against the oracle"
        ))
        },
    );
}

#[test]
fn criterion_05_inverse_laws() {
    criterion("5 (inverse laws)", Duration::from_secs(120), || {
        let mut checks = 0u64;
        for density in FIXTURE_DENSITIES {
            for seed in FIXTURE_SEEDS {
                let bv = fixture(20, density, seed);
                let oracle = RankSelectOracle::build(&bv);
                let poppy = PoppyIndex::build(&bv, DEFAULT_SAMPLING, WordSelectBackend::Auto);
                let clark = ClarkSelectIndex::build(&bv, WordSelectBackend::Auto);
                let ones = oracle.ones();
                let mut rng = SplitMix64::new(seed ^ 0x1453);
                let mut ranks: Vec<u64> = (0..10_000).map(|_| 1 + rng.next_below(ones)).collect();
                ranks.extend(boundary_ranks(ones, DEFAULT_SAMPLING));
                for r in ranks {
                    let p_pos = poppy.select(&bv, r).unwrap();
                    assert_eq!(poppy.rank(&bv, p_pos).unwrap(), r, "poppy inverse at {r}");
                    assert!(bv.get(p_pos).unwrap(), "poppy select({r}) lands on a zero");
                    let c_pos = clark.select(&bv, r).unwrap();
                    assert_eq!(oracle.rank(c_pos), r, "clark inverse at {r}");
                    assert!(bv.get(c_pos).unwrap(), "clark select({r}) lands on a zero");
                    checks += 2;
                }
            }
        }
        Outcome::Pass(format!(
            "rank(select(r)) = r and bit(select(r)) = 1 on {checks} queries, both structures"
        ))
    });
}

#[test]
fn criterion_06_trailing_zero_example() {
    criterion("6 (tzcnt example)", Duration::from_secs(1), || {
        let word: u64 = 0b1100_1010_0000;
        assert_eq!(tzcnt_soft(word), 5);
        assert_eq!(word.trailing_zeros(), 5);
        Outcome::Pass("the word 110010100000 has 5 trailing zeros".into())
    });
}

fn word_register_mean(backend: WordSelectBackend) -> f64 {
    let config = BenchConfig {
        benchmark: BenchmarkKind::WordRegister,
        structure: None,
        backend,
        log2_n: 20,
        density: Density::new(0.5).unwrap(),
        ops: 1_000_000,
        iterations: 10,
        seed: 42,
    };
    bench::bench_word_register(&config)
        .unwrap()
        .mean_ns_per_op()
}

#[test]
fn criterion_07_in_register_ordering() {
    criterion("7 (in-register timing)", Duration::from_secs(60), || {
        let f = detect_features();
        if !(f.has_bmi2 && f.has_tzcnt) {
            return Outcome::Skip(
                "needs BMI1/BMI2 hardware; in-register ordering not asserted here".into(),
            );
        }
        let ptselect = word_register_mean(WordSelectBackend::PtSelect);
        let broadword = word_register_mean(WordSelectBackend::Broadword);
        let bytescan = word_register_mean(WordSelectBackend::ByteScan);
        assert!(
            ptselect < broadword,
            "ptselect {ptselect:.2} ns/op not faster than broadword {broadword:.2}"
        );
        assert!(
            broadword < bytescan,
            "broadword {broadword:.2} ns/op not faster than bytescan {bytescan:.2}"
        );
        assert!(
            bytescan / ptselect >= 1.5,
            "ptselect {ptselect:.2} ns/op not 1.5x faster than bytescan {bytescan:.2}"
        );
        Outcome::Pass(format!(
            "ptselect {ptselect:.2} < broadword {broadword:.2} < bytescan {bytescan:.2} ns/op, \
             ratio {:.2}x",
            bytescan / ptselect
        ))
    });
}

#[test]
fn criterion_08_vector_select_speedup() {
    criterion("8 (vector-select timing)", Duration::from_secs(300), || {
        let f = detect_features();
        if !(f.has_bmi2 && f.has_tzcnt) {
            return Outcome::Skip(
                "needs BMI1/BMI2 hardware; vector-select speedup not asserted here".into(),
            );
        }
        let bv = fixture(28, 0.5, 42);
        let mut records: Vec<BenchRecord> = Vec::new();
        for backend in [WordSelectBackend::PtSelect, WordSelectBackend::ByteScan] {
            let config = BenchConfig {
                benchmark: BenchmarkKind::VectorSelect,
                structure: Some(Structure::Poppy),
                backend,
                log2_n: 28,
                density: Density::new(0.5).unwrap(),
                ops: 1_000_000,
                iterations: 10,
                seed: 42,
            };
            records.push(bench::bench_vector_select(&config, &bv).unwrap());
        }
        bench::check_checksums(&records).unwrap();
        let csv_path =
            std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_vector_select.csv");
        let mut sink = Vec::new();
        bench::write_csv(&records, &mut sink).unwrap();
        std::fs::write(&csv_path, sink).unwrap();

        let ptselect = records[0].mean_ns_per_op();
        let bytescan = records[1].mean_ns_per_op();
        assert!(
            ptselect <= 0.95 * bytescan,
            "poppy+ptselect {ptselect:.2} ns/op is not 5% faster than poppy+bytescan {bytescan:.2}"
        );
        Outcome::Pass(format!(
            "poppy select at 2^28 bits, density 0.5: ptselect {ptselect:.2} vs bytescan \
             {bytescan:.2} ns/op ({:.1}% faster; magnitudes in {})",
            (1.0 - ptselect / bytescan) * 100.0,
            csv_path.display()
        ))
    });
}

#[test]
fn criterion_09_out_of_scope_notice() {
    criterion("9 (desk-scale notice)", Duration::from_secs(10), || {
        // Instruction counts of compiled select code, hardware-counter
        // collection (in-flight read requests), and the full 2^34-bit
        // sweep are hardware/tooling-dependent and reported only. The
        // harness schema still carries the full sweep: configurations up
        // to 2^34 validate and round-trip through the CSV.
        let config = BenchConfig {
            benchmark: BenchmarkKind::VectorSelect,
            structure: Some(Structure::Poppy),
            backend: WordSelectBackend::PtSelect,
            log2_n: 34,
            density: Density::new(0.9).unwrap(),
            ops: 10_000_000,
            iterations: 10,
            seed: 42,
        };
        config.validate().unwrap();
        let record = BenchRecord {
            config,
            ns_per_op: vec![70.0; 10],
            checksum: 0xDEAD,
        };
        let mut sink = Vec::new();
        bench::write_csv(std::slice::from_ref(&record), &mut sink).unwrap();
        let back = bench::read_csv(sink.as_slice()).unwrap();
        assert_eq!(back[0].config, record.config);
        Outcome::Pass(
            "instruction counts and in-flight-read measurements are out of scope; \
             the CSV schema accepts the full 2^24..2^34 x 10M-op sweep"
                .into(),
        )
    });
}

#[test]
fn criterion_10_serialization_round_trip() {
    criterion("10 (serialization)", Duration::from_secs(300), || {
        let mut checks = 0u64;
        for log2_n in FIXTURE_GRID {
            for density in FIXTURE_DENSITIES {
                for seed in FIXTURE_SEEDS {
                    let bv = fixture(log2_n, density, seed);
                    let poppy = PoppyIndex::build(&bv, DEFAULT_SAMPLING, WordSelectBackend::Auto);
                    let clark = ClarkSelectIndex::build(&bv, WordSelectBackend::Auto);

                    let mut buf = Vec::new();
                    bv.save(&mut buf).unwrap();
                    let bv2 = BitVector::load(buf.as_slice()).unwrap();
                    assert_eq!(bv2, bv);

                    let mut pbuf = Vec::new();
                    poppy.save(&mut pbuf).unwrap();
                    let poppy2 =
                        PoppyIndex::load(pbuf.as_slice(), WordSelectBackend::Auto).unwrap();

                    let mut cbuf = Vec::new();
                    clark.save(&mut cbuf).unwrap();
                    let clark2 =
                        ClarkSelectIndex::load(cbuf.as_slice(), WordSelectBackend::Auto).unwrap();

                    let ones = bv.count_ones();
                    let mut rng = SplitMix64::new(seed ^ 0x5E71A);
                    for _ in 0..1000 {
                        let r = 1 + rng.next_below(ones);
                        assert_eq!(
                            poppy2.select(&bv2, r).unwrap(),
                            poppy.select(&bv, r).unwrap()
                        );
                        assert_eq!(
                            clark2.select(&bv2, r).unwrap(),
                            clark.select(&bv, r).unwrap()
                        );
                        let j = rng.next_below(bv.len());
                        assert_eq!(poppy2.rank(&bv2, j).unwrap(), poppy.rank(&bv, j).unwrap());
                        assert_eq!(bv2.get(j).unwrap(), bv.get(j).unwrap());
                        checks += 4;
                    }
                }
            }
        }
        Outcome::Pass(format!(
            "vector and both indexes round-trip on 27 fixtures, {checks} query answers preserved"
        ))
    });
}
