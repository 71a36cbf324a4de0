//! Shared test support: an independent rank/select oracle and fixture
//! builders.
#![allow(dead_code)]

use rankselect::{BitVector, Density};

/// Ground-truth rank/select built by a single direct walk over the raw
/// words. Deliberately shares no code with the index query paths: select
/// is an array lookup into the collected one-positions and rank is a
/// binary search over them.
pub struct RankSelectOracle {
    positions: Vec<u64>,
    n: u64,
}

impl RankSelectOracle {
    pub fn build(bv: &BitVector) -> Self {
        let mut positions = Vec::new();
        for (w, &word) in bv.words().iter().enumerate() {
            let mut rest = word;
            while rest != 0 {
                positions.push(w as u64 * 64 + rest.trailing_zeros() as u64);
                rest &= rest - 1;
            }
        }
        RankSelectOracle {
            positions,
            n: bv.len(),
        }
    }

    pub fn ones(&self) -> u64 {
        self.positions.len() as u64
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    /// Ones in the inclusive prefix `[0, j]`.
    pub fn rank(&self, j: u64) -> u64 {
        self.positions.partition_point(|&p| p <= j) as u64
    }

    /// Position of the r-th one, r 1-based.
    pub fn select(&self, r: u64) -> u64 {
        self.positions[(r - 1) as usize]
    }

    /// Anchor the oracle against the library's definitional scans on a
    /// sample of points, so the two independent routes vouch for each
    /// other before either is trusted in bulk.
    pub fn anchor_against_naive(&self, bv: &BitVector) {
        assert_eq!(self.ones(), bv.count_ones());
        let step_r = (self.ones() / 97).max(1);
        let mut r = 1;
        while r <= self.ones() {
            assert_eq!(
                self.select(r),
                bv.select_naive(r).unwrap(),
                "anchor select({r})"
            );
            r += step_r;
        }
        let step_j = (self.n / 97).max(1);
        let mut j = 0;
        while j < self.n {
            assert_eq!(self.rank(j), bv.rank_naive(j).unwrap(), "anchor rank({j})");
            j += step_j;
        }
    }
}

pub fn fixture(log2_n: u32, density: f64, seed: u64) -> BitVector {
    BitVector::from_random(1u64 << log2_n, Density::new(density).unwrap(), seed)
}

/// The worked-example vector: 100101001010, character i stored as bit i.
pub fn worked_example() -> BitVector {
    BitVector::from_bit_str("100101001010").unwrap()
}

/// Boundary ranks named by the acceptance sweep: 1, every multiple of 64,
/// of 4096, and of the sampling interval, and the final rank.
pub fn boundary_ranks(ones: u64, sampling: u64) -> Vec<u64> {
    let mut ranks = vec![1, ones];
    for step in [64u64, 4096, sampling] {
        let mut m = step;
        while m <= ones {
            ranks.push(m);
            m += step;
        }
    }
    ranks.sort_unstable();
    ranks.dedup();
    ranks
}

/// Boundary positions for rank checks: 0, n-1, and both sides of every
/// 512-bit block edge (which covers the 2048-bit edges too).
pub fn boundary_positions(n: u64) -> Vec<u64> {
    let mut js = vec![0, n - 1];
    let mut m = 512;
    while m < n {
        js.push(m - 1);
        js.push(m);
        m += 512;
    }
    js.sort_unstable();
    js.dedup();
    js
}
