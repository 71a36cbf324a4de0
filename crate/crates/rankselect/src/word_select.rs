//! Select, popcount, and bit-deposit primitives on 64-bit machine words.
//!
//! Four interchangeable select implementations are provided:
//!
//! * `ptselect` — one shift, one `pdep`, one `tzcnt` (BMI1/BMI2); the
//!   software composition `tzcnt_soft(pdep_soft(1 << j, x))` is used when
//!   the instructions are unavailable and is bit-identical.
//! * `broadword` — multiply/shift byte-rank arithmetic plus an in-byte
//!   lookup table; runs on any hardware.
//! * `bytescan` — per-byte popcount scan plus the same in-byte table.
//! * `oracle` — a definitional bit loop; ground truth for everything else.
//!
//! Bit `b` of a word is the `b`-th least significant bit throughout, and the
//! select rank `j` is 0-based: `select(x, j)` is the position of the
//! `(j+1)`-th set bit. Any `j >= popcount64(x)` yields 64 ("not found") from
//! every implementation; that value is part of the contract, not an error.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::Error;

/// CPU capabilities relevant to word select, detected once per process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpuFeatures {
    /// `pdep` available (BMI2).
    pub has_bmi2: bool,
    /// Hardware popcount available.
    pub has_popcnt: bool,
    /// `tzcnt` available (BMI1).
    pub has_tzcnt: bool,
}

/// Detected CPU features, cached for the lifetime of the process.
pub fn detect_features() -> CpuFeatures {
    static FEATURES: OnceLock<CpuFeatures> = OnceLock::new();
    *FEATURES.get_or_init(|| {
        #[cfg(target_arch = "x86_64")]
        {
            CpuFeatures {
                has_bmi2: std::arch::is_x86_feature_detected!("bmi2"),
                has_popcnt: std::arch::is_x86_feature_detected!("popcnt"),
                has_tzcnt: std::arch::is_x86_feature_detected!("bmi1"),
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            CpuFeatures {
                has_bmi2: false,
                has_popcnt: false,
                has_tzcnt: false,
            }
        }
    })
}

/// Strategy for 64-bit word select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordSelectBackend {
    PtSelect,
    Broadword,
    ByteScan,
    Oracle,
    /// Resolves to `PtSelect` when `pdep` and `tzcnt` are available, else
    /// `Broadword`. Resolution is deterministic per process.
    Auto,
}

impl WordSelectBackend {
    /// The four concrete backends, for equivalence sweeps.
    pub const CONCRETE: [WordSelectBackend; 4] = [
        WordSelectBackend::PtSelect,
        WordSelectBackend::Broadword,
        WordSelectBackend::ByteScan,
        WordSelectBackend::Oracle,
    ];

    /// Collapse `Auto` to a concrete backend. Idempotent for the rest.
    pub fn resolve(self) -> WordSelectBackend {
        match self {
            WordSelectBackend::Auto => {
                let f = detect_features();
                if f.has_bmi2 && f.has_tzcnt {
                    WordSelectBackend::PtSelect
                } else {
                    WordSelectBackend::Broadword
                }
            }
            other => other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WordSelectBackend::PtSelect => "ptselect",
            WordSelectBackend::Broadword => "broadword",
            WordSelectBackend::ByteScan => "bytescan",
            WordSelectBackend::Oracle => "oracle",
            WordSelectBackend::Auto => "auto",
        }
    }
}

impl fmt::Display for WordSelectBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WordSelectBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ptselect" => Ok(WordSelectBackend::PtSelect),
            "broadword" => Ok(WordSelectBackend::Broadword),
            "bytescan" => Ok(WordSelectBackend::ByteScan),
            "oracle" => Ok(WordSelectBackend::Oracle),
            "auto" => Ok(WordSelectBackend::Auto),
            other => Err(Error::InvalidConfig(format!(
                "unknown backend {other:?} (expected ptselect|broadword|bytescan|oracle|auto)"
            ))),
        }
    }
}

/// Number of set bits in `x`.
///
/// `count_ones` lowers to the popcount instruction when the target enables
/// it (e.g. `-C target-cpu=native`); otherwise the compiler emits the same
/// parallel bit summation as [`popcount64_soft`].
#[inline]
pub fn popcount64(x: u64) -> u32 {
    x.count_ones()
}

/// Parallel-bit-summation popcount, no intrinsics. Identical results to
/// [`popcount64`] on all inputs.
#[inline]
pub fn popcount64_soft(x: u64) -> u32 {
    let x = x - ((x >> 1) & 0x5555_5555_5555_5555);
    let x = (x & 0x3333_3333_3333_3333) + ((x >> 2) & 0x3333_3333_3333_3333);
    let x = (x + (x >> 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    (x.wrapping_mul(0x0101_0101_0101_0101) >> 56) as u32
}

/// Software bit deposit, bit-exact with the `pdep` instruction.
///
/// Bit `i` of the result is bit `j` of `v` when bit `i` is the `j`-th set
/// bit of the mask `x` (counting set bits from bit 0 upward), else 0.
#[inline]
pub fn pdep_soft(v: u64, x: u64) -> u64 {
    let mut out = 0u64;
    let mut src = v;
    let mut mask = x;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if src & 1 != 0 {
            out |= low;
        }
        src >>= 1;
        mask &= mask - 1;
    }
    out
}

/// Software trailing-zero count; 64 for input 0 (the `tzcnt` convention).
#[inline]
pub fn tzcnt_soft(x: u64) -> u32 {
    // (x & -x) - 1 is a mask of exactly the trailing zeros, and all-ones
    // when x = 0.
    popcount64_soft((x & x.wrapping_neg()).wrapping_sub(1))
}

/// Hardware `pdep`.
///
/// # Safety
/// The CPU must support BMI2: check `detect_features().has_bmi2` first.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "bmi2")]
pub unsafe fn pdep_hw(v: u64, x: u64) -> u64 {
    std::arch::x86_64::_pdep_u64(v, x)
}

/// Hardware `tzcnt`.
///
/// # Safety
/// The CPU must support BMI1: check `detect_features().has_tzcnt` first.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "bmi1")]
pub unsafe fn tzcnt_hw(x: u64) -> u32 {
    // Within a bmi1-enabled function trailing_zeros lowers to tzcnt.
    x.trailing_zeros()
}

/// `1 << j`, with an all-zero result once `j` leaves the word. Keeps the
/// deposit source empty for out-of-range ranks so select uniformly reports
/// 64 instead of wrapping the shift.
#[inline]
fn rank_bit(j: u32) -> u64 {
    1u64.checked_shl(j).unwrap_or(0)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "bmi1,bmi2")]
unsafe fn ptselect_hw(x: u64, j: u32) -> u32 {
    std::arch::x86_64::_pdep_u64(rank_bit(j), x).trailing_zeros()
}

/// Position of the `(j+1)`-th set bit via shift + `pdep` + `tzcnt`.
///
/// Deposits a single bit at the position of the target 1, then counts
/// trailing zeros. Falls back to the software deposit/count pair off
/// BMI1/BMI2 hardware; results are identical either way.
#[inline]
pub fn select_word_ptselect(x: u64, j: u32) -> u32 {
    #[cfg(target_arch = "x86_64")]
    {
        let f = detect_features();
        if f.has_bmi2 && f.has_tzcnt {
            return unsafe { ptselect_hw(x, j) };
        }
    }
    tzcnt_soft(pdep_soft(rank_bit(j), x))
}

const ONES_STEP_8: u64 = 0x0101_0101_0101_0101;
const MSBS_STEP_8: u64 = 0x8080_8080_8080_8080;

/// Position of the `(j+1)`-th set bit via broadword byte-rank arithmetic.
///
/// Computes per-byte popcounts and their inclusive prefix sums in parallel,
/// locates the target byte with a packed comparison, and finishes in the
/// byte table. No BMI instructions, so it runs on any hardware.
#[inline]
pub fn select_word_broadword(x: u64, j: u32) -> u32 {
    if j >= 64 {
        return 64;
    }
    let mut s = x - ((x >> 1) & 0x5555_5555_5555_5555);
    s = (s & 0x3333_3333_3333_3333) + ((s >> 2) & 0x3333_3333_3333_3333);
    s = (s + (s >> 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    // Byte b of `prefix` holds popcount of bytes 0..=b.
    let prefix = s.wrapping_mul(ONES_STEP_8);
    // MSB of byte b set iff j >= prefix_b, so the count of set MSBs is the
    // index of the first byte whose inclusive prefix exceeds j.
    let step = (j as u64).wrapping_mul(ONES_STEP_8);
    let geq = ((step | MSBS_STEP_8) - prefix) & MSBS_STEP_8;
    let place = geq.count_ones() * 8;
    if place == 64 {
        return 64; // j >= popcount64(x)
    }
    let byte_rank = (j as u64 - (((prefix << 8) >> place) & 0xFF)) as u32;
    place + select_in_byte(((x >> place) & 0xFF) as u8, byte_rank)
}

/// Position of the `(j+1)`-th set bit by scanning the 8 bytes of `x` with
/// per-byte popcounts, then resolving in the found byte via the table.
#[inline]
pub fn select_word_bytescan(x: u64, j: u32) -> u32 {
    let mut remaining = j;
    for byte_idx in 0..8u32 {
        let byte = ((x >> (byte_idx * 8)) & 0xFF) as u8;
        let ones = (byte as u32).count_ones();
        if remaining < ones {
            return byte_idx * 8 + select_in_byte(byte, remaining);
        }
        remaining -= ones;
    }
    64
}

/// Definitional word select: walk bits 0..63 counting ones. Ground truth
/// for every other implementation.
pub fn select_word_oracle(x: u64, j: u32) -> u32 {
    let mut seen = 0u32;
    for pos in 0..64u32 {
        if (x >> pos) & 1 == 1 {
            if seen == j {
                return pos;
            }
            seen += 1;
        }
    }
    64
}

/// Word select through the chosen backend (`Auto` resolved first).
#[inline]
pub fn select_word(backend: WordSelectBackend, x: u64, j: u32) -> u32 {
    match backend.resolve() {
        WordSelectBackend::PtSelect => select_word_ptselect(x, j),
        WordSelectBackend::Broadword => select_word_broadword(x, j),
        WordSelectBackend::ByteScan => select_word_bytescan(x, j),
        WordSelectBackend::Oracle => select_word_oracle(x, j),
        WordSelectBackend::Auto => unreachable!("Auto resolves to a concrete backend"),
    }
}

/// `SELECT_IN_BYTE[b * 8 + k]` is the position (0-7) of the k-th set bit of
/// byte `b`, or 8 when the byte has no k-th set bit.
static SELECT_IN_BYTE: [u8; 2048] = {
    let mut table = [8u8; 2048];
    let mut byte = 0usize;
    while byte < 256 {
        let mut pos = 0usize;
        let mut count = 0usize;
        while pos < 8 {
            if (byte >> pos) & 1 == 1 {
                table[byte * 8 + count] = pos as u8;
                count += 1;
            }
            pos += 1;
        }
        byte += 1;
    }
    table
};

/// Position of the k-th set bit in a byte, or 8 when out of range.
#[inline]
pub fn select_in_byte(byte: u8, k: u32) -> u32 {
    if k >= 8 {
        return 8;
    }
    SELECT_IN_BYTE[byte as usize * 8 + k as usize] as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    /// The 12-bit worked-example vector 100101001010 with position i stored
    /// as bit i: ones at bits {0, 3, 5, 8, 10}.
    pub(crate) const EXAMPLE_WORD: u64 = (1 << 0) | (1 << 3) | (1 << 5) | (1 << 8) | (1 << 10);

    fn all_backends(x: u64, j: u32) -> [u32; 4] {
        [
            select_word_ptselect(x, j),
            select_word_broadword(x, j),
            select_word_bytescan(x, j),
            select_word_oracle(x, j),
        ]
    }

    #[test]
    fn popcount_examples() {
        assert_eq!(popcount64(0), 0);
        assert_eq!(popcount64(u64::MAX), 64);
        assert_eq!(popcount64(0b1011), 3);
        assert_eq!(popcount64_soft(0), 0);
        assert_eq!(popcount64_soft(u64::MAX), 64);
        assert_eq!(popcount64_soft(0b1011), 3);
    }

    #[test]
    fn popcount_soft_matches_hardware() {
        let mut g = SplitMix64::new(0xC0DE);
        for _ in 0..100_000 {
            let x = g.next_u64();
            assert_eq!(popcount64_soft(x), popcount64(x));
        }
    }

    #[test]
    fn pdep_soft_examples() {
        let mut g = SplitMix64::new(1);
        for _ in 0..1000 {
            let v = g.next_u64();
            assert_eq!(pdep_soft(v, 0), 0);
            assert_eq!(pdep_soft(v, u64::MAX), v);
        }
        // Bit 1 of v lands at the position of the second one of the mask.
        assert_eq!(pdep_soft(0b10, 0b1010), 0b1000);
    }

    #[test]
    fn tzcnt_soft_examples() {
        // The binary numeral 110010100000 has five trailing zeros.
        assert_eq!(tzcnt_soft(0b1100_1010_0000), 5);
        assert_eq!(tzcnt_soft(1), 0);
        assert_eq!(tzcnt_soft(0), 64);
        for b in 0..64 {
            assert_eq!(tzcnt_soft(1u64 << b), b as u32);
        }
    }

    #[test]
    fn tzcnt_popcount_consistency() {
        // For x != 0, bit tzcnt_soft(x) is set and all lower bits are clear.
        let mut g = SplitMix64::new(2);
        for _ in 0..100_000 {
            let x = g.next_u64();
            if x == 0 {
                continue;
            }
            let t = tzcnt_soft(x);
            assert_eq!((x >> t) & 1, 1);
            assert_eq!(x & ((1u64 << t) - 1), 0);
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn soft_paths_agree_with_hardware() {
        let f = detect_features();
        if !(f.has_bmi2 && f.has_tzcnt) {
            eprintln!("skipping hardware agreement test: BMI1/BMI2 not available");
            return;
        }
        let mut g = SplitMix64::new(3);
        for _ in 0..1_000_000 {
            let v = g.next_u64();
            let x = g.next_u64();
            assert_eq!(pdep_soft(v, x), unsafe { pdep_hw(v, x) });
            assert_eq!(tzcnt_soft(x), unsafe { tzcnt_hw(x) });
        }
    }

    #[test]
    fn worked_example_word() {
        // select(4) = 8 in 1-based terms, so j = 3 here.
        assert_eq!(select_word_ptselect(EXAMPLE_WORD, 3), 8);
        assert_eq!(select_word_broadword(EXAMPLE_WORD, 3), 8);
        assert_eq!(select_word_bytescan(EXAMPLE_WORD, 3), 8);
        assert_eq!(select_word_oracle(EXAMPLE_WORD, 3), 8);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(select_word_oracle(0, 0), 64);
        assert_eq!(select_word_oracle(0b100, 0), 2);
        assert_eq!(select_word_oracle(EXAMPLE_WORD, 3), 8);
    }

    #[test]
    fn trivial_select_cases() {
        assert_eq!(select_word_ptselect(1, 0), 0);
        for j in [0u32, 17, 63] {
            for res in all_backends(u64::MAX, j) {
                assert_eq!(res, j);
            }
        }
        assert_eq!(select_word_broadword(0x8000_0000_0000_0000, 0), 63);
        assert_eq!(select_word_bytescan(0xFF00, 7), 15);
    }

    #[test]
    fn dispatch_matches_backends() {
        let mut g = SplitMix64::new(4);
        for _ in 0..1000 {
            let x = g.next_u64();
            let j = (g.next_u64() % 66) as u32;
            assert_eq!(
                select_word(WordSelectBackend::Oracle, x, j),
                select_word_oracle(x, j)
            );
            let resolved = WordSelectBackend::Auto.resolve();
            assert_ne!(resolved, WordSelectBackend::Auto);
            assert_eq!(
                select_word(WordSelectBackend::Auto, x, j),
                select_word(resolved, x, j)
            );
        }
        assert_eq!(
            select_word(WordSelectBackend::Broadword, EXAMPLE_WORD, 3),
            8
        );
    }

    #[test]
    fn backends_agree_exhaustively_on_16_bit_words() {
        for w in 0u64..=0xFFFF {
            for j in 0..=17u32 {
                let expected = select_word_oracle(w, j);
                assert_eq!(select_word_ptselect(w, j), expected, "w={w:#x} j={j}");
                assert_eq!(select_word_broadword(w, j), expected, "w={w:#x} j={j}");
                assert_eq!(select_word_bytescan(w, j), expected, "w={w:#x} j={j}");
            }
        }
    }

    #[test]
    fn structured_words() {
        let mut words: Vec<u64> = vec![0, u64::MAX, 0x5555_5555_5555_5555, 0xAAAA_AAAA_AAAA_AAAA];
        words.extend((0..64).map(|b| 1u64 << b));
        for &w in &words {
            for j in 0..=64u32 {
                let expected = select_word_oracle(w, j);
                for res in all_backends(w, j) {
                    assert_eq!(res, expected, "w={w:#x} j={j}");
                }
            }
        }
    }

    #[test]
    fn out_of_range_returns_64() {
        let mut g = SplitMix64::new(5);
        for _ in 0..10_000 {
            let x = g.next_u64();
            let pc = popcount64(x);
            for j in [pc, pc + 1, 63.max(pc), 64, 65, 1000] {
                for res in all_backends(x, j) {
                    assert_eq!(res, 64, "x={x:#x} j={j}");
                }
            }
        }
    }

    #[test]
    fn alg1_software_composition_matches_oracle() {
        let mut g = SplitMix64::new(6);
        for _ in 0..10_000 {
            let x = g.next_u64();
            for j in 0..popcount64(x) {
                assert_eq!(
                    tzcnt_soft(pdep_soft(1u64 << j, x)),
                    select_word_oracle(x, j)
                );
            }
        }
    }

    #[test]
    fn select_in_byte_table() {
        for b in 0u16..256 {
            let byte = b as u8;
            let mut count = 0u32;
            for pos in 0..8u32 {
                if (byte >> pos) & 1 == 1 {
                    assert_eq!(select_in_byte(byte, count), pos);
                    count += 1;
                }
            }
            for k in count..9 {
                assert_eq!(select_in_byte(byte, k), 8);
            }
        }
    }

    #[test]
    fn feature_detection_is_stable() {
        let a = detect_features();
        let b = detect_features();
        assert_eq!(a, b);
        #[cfg(not(target_arch = "x86_64"))]
        assert_eq!(
            a,
            CpuFeatures {
                has_bmi2: false,
                has_popcnt: false,
                has_tzcnt: false
            }
        );
    }

    #[test]
    fn backend_names_round_trip() {
        for b in WordSelectBackend::CONCRETE
            .iter()
            .chain([WordSelectBackend::Auto].iter())
        {
            assert_eq!(b.name().parse::<WordSelectBackend>().unwrap(), *b);
        }
        assert!("fancy".parse::<WordSelectBackend>().is_err());
    }
}
