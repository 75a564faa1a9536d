//! Pinned pseudo-random number generation.
//!
//! Every random draw in the toolkit goes through [`SplitMix64`] so that
//! datasets, subsamples and network initializations are identical on every
//! platform and toolchain. The generator is SplitMix64:
//!
//! ```text
//! state = state + 0x9E37_79B9_7F4A_7C15            (wrapping)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9      (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB      (wrapping)
//! output = z ^ (z >> 31)
//! ```
//!
//! Uniform reals take the top 53 bits: `(output >> 11) * 2^-53`.
//!
//! Counter-based draws ([`hash_u64`], [`counter_f64`]) fold a seed and a tuple
//! of integer coordinates through the same finalizer, so a pixel's random
//! value depends only on its address and not on visiting order.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential SplitMix64 stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for a sub-task, derived from `seed` and `stream`.
    pub fn derive(seed: u64, stream: u64) -> Self {
        Self::new(hash_u64(seed, &[stream]))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        finalize(self.state)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n` (unbiased, rejection sampling).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, returned in ascending order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}

/// Hash a seed and a coordinate tuple into 64 random bits.
pub fn hash_u64(seed: u64, coords: &[u64]) -> u64 {
    let mut h = finalize(seed.wrapping_add(GOLDEN_GAMMA));
    for &c in coords {
        h = finalize(h ^ c.wrapping_add(GOLDEN_GAMMA).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    h
}

/// Counter-based uniform in `[0, 1)` addressed by `coords`.
pub fn counter_f64(seed: u64, coords: &[u64]) -> f64 {
    to_unit(hash_u64(seed, coords))
}
