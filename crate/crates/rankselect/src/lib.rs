//! Bit-vector rank and select with swappable machine-word select backends.
//!
//! The interesting part of a bit-vector select is the last step: finding
//! the j-th set bit inside one 64-bit word. [`word_select`] provides four
//! interchangeable implementations of that step (`pdep`+`tzcnt`, broadword
//! arithmetic, a byte scan, and a brute-force oracle), and the two full
//! indexes in [`poppy`] and [`clark_select`] are parameterized over them so
//! the impact of the word select on whole-vector queries can be measured.
//! [`bench`] holds the measurement harness and [`cli`] the command-line
//! front end.
//!
//! ```
//! use rankselect::{BitVector, PoppyIndex, WordSelectBackend};
//!
//! let bv = BitVector::from_bit_str("100101001010").unwrap();
//! let idx = PoppyIndex::build(&bv, 8192, WordSelectBackend::Auto);
//! assert_eq!(idx.rank(&bv, 5).unwrap(), 3);   // ones in B[0..=5]
//! assert_eq!(idx.select(&bv, 4).unwrap(), 8); // position of the 4th one
//! ```

pub mod bench;
pub mod bitvector;
pub mod clark_select;
pub mod cli;
pub mod error;
pub mod poppy;
pub mod rng;
mod serial;
pub mod word_select;

pub use bitvector::{BitVector, Density};
pub use clark_select::ClarkSelectIndex;
pub use error::{Error, Result};
pub use poppy::PoppyIndex;
pub use word_select::{detect_features, select_word, CpuFeatures, WordSelectBackend};
