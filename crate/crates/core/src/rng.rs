//! Counter-based splittable random number generation.
//!
//! Every random draw in the engine is addressed by a path of integers
//! (operation tag, step index, slot index, ...) folded into a key with
//! [`RngState::fork`]. Streams derived from the same path are identical no
//! matter which thread computes them or in which order, which is what makes
//! batched runs bitwise equal to solo runs.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of a splittable generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    key: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x5851_F42D_4C95_7F2D),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child generator for `index`. Pure function of `(self, index)`.
    #[inline]
    pub fn split(&self, index: u64) -> Self {
        let salt = mix64(index.wrapping_add(GOLDEN).wrapping_mul(GOLDEN | 1));
        Self {
            key: mix64(self.key.rotate_left(17) ^ salt),
        }
    }

    /// Successive splits along `path`.
    pub fn fork(&self, path: &[u64]) -> Self {
        path.iter().fold(*self, |acc, &i| acc.split(i))
    }

    pub fn stream(&self) -> Stream {
        Stream {
            key: self.key,
            counter: 0,
        }
    }
}

/// Sequence of draws under a fixed key; draw `k` is `mix(key, k)`.
#[derive(Clone, Debug)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ self.counter.wrapping_mul(GOLDEN))
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform integer in `[lo, hi)`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo < hi);
        let span = hi.wrapping_sub(lo) as u64;
        lo.wrapping_add(self.below(span) as i64)
    }

    /// Uniform real in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// First `k` entries of a uniformly random permutation of `0..n`.
    pub fn choose_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n).collect();
        let k = k.min(n);
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
