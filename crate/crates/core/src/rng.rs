//! Seeded randomness.
//!
//! Every chain draws from `rand_pcg::Pcg64` (PCG XSL RR 128/64, LCG multiplier
//! 0x2360ed051fc65da44385df649fccf645, increment 0x5851f42d4c957f2d14057b7ef767814f),
//! seeded with `SeedableRng::seed_from_u64`. Bounded integers use Lemire's
//! multiply-and-reject method, so draws are unbiased and identical on every
//! platform. Trial `i` of a batch seeded with `s` uses `s ^ splitmix64(i)`.

use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64;

/// SplitMix64 finalizer applied to `x + 0x9e3779b97f4a7c15`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ splitmix64(trial)
}

#[derive(Clone, Debug)]
pub struct ChainRng(Pcg64);

impl ChainRng {
    pub fn new(seed: u64) -> Self {
        ChainRng(Pcg64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let mut m = self.next_u64() as u128 * n as u128;
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = self.next_u64() as u128 * n as u128;
            }
        }
        (m >> 64) as u64
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}
