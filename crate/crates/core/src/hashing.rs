//! Seeded emulation of the fully random hash functions `h_u: [n] -> [C]`
//! and sign functions `s_u: [n] -> {+1, -1}` used by every sketch row.
//!
//! The emulation is a counter-based PRF: the triple `(master_seed, row, item)`
//! is folded through three rounds of the SplitMix64 finalizer. Nothing is
//! stored, and the output is identical on every platform.
//!
//! Bit 0 of the PRF output is the sign. The column is the remaining 63 bits
//! reduced mod `C`, so column and sign never share an input bit.

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 step: advance by the golden gamma and finalize.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent-looking 64-bit seed for a numbered sub-stream.
///
/// Experiments use this to give every trial (and every role inside a trial)
/// its own seed without keeping RNG state around.
#[inline]
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

/// Full identity of one hash evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashKey {
    pub master_seed: u64,
    pub row: u32,
    pub item: u64,
}

impl HashKey {
    pub fn new(master_seed: u64, row: u32, item: u64) -> Self {
        Self {
            master_seed,
            row,
            item,
        }
    }

    #[inline]
    fn prf(&self) -> u64 {
        RowHasher::new(self.master_seed, self.row).prf(self.item)
    }
}

/// Column `h_u(i)` in `[0, num_columns)`.
pub fn hash_column(key: HashKey, num_columns: u32) -> Result<u32> {
    if num_columns == 0 {
        return Err(Error::config("number of columns must be at least 1"));
    }
    Ok(reduce_column(key.prf(), num_columns))
}

/// Sign `s_u(i)` as `+1` or `-1`.
pub fn hash_sign(key: HashKey) -> i8 {
    sign_of(key.prf())
}

#[inline]
fn reduce_column(word: u64, num_columns: u32) -> u32 {
    ((word >> 1) % u64::from(num_columns)) as u32
}

#[inline]
fn sign_of(word: u64) -> i8 {
    if word & 1 == 0 {
        1
    } else {
        -1
    }
}

/// The hash pair of a single row with the `(seed, row)` prefix precomputed.
///
/// `RowHasher::new(seed, u).column(i, C)` is bit-identical to
/// `hash_column(HashKey::new(seed, u, i), C)`; sketches hold one of these per
/// row so the prefix is not re-mixed on every update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowHasher {
    base: u64,
}

impl RowHasher {
    pub fn new(master_seed: u64, row: u32) -> Self {
        Self {
            base: splitmix64(splitmix64(master_seed) ^ u64::from(row)),
        }
    }

    #[inline]
    fn prf(&self, item: u64) -> u64 {
        splitmix64(self.base ^ item)
    }

    /// Column and sign for `item`, from one PRF evaluation.
    #[inline]
    pub fn locate(&self, item: u64, num_columns: u32) -> (usize, f64) {
        let word = self.prf(item);
        let sign = if word & 1 == 0 { 1.0 } else { -1.0 };
        (reduce_column(word, num_columns) as usize, sign)
    }

    #[inline]
    pub fn column(&self, item: u64, num_columns: u32) -> u32 {
        reduce_column(self.prf(item), num_columns)
    }

    #[inline]
    pub fn sign(&self, item: u64) -> i8 {
        sign_of(self.prf(item))
    }
}
