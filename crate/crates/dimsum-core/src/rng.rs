//! Splittable pseudorandom streams.
//!
//! Every randomized mapper draws from a stream derived from a master seed
//! and its row index, so the map phase can run in any order (or in
//! parallel) and still produce the exact same draws. The construction is
//! the SplittableRandom design: each stream advances a counter by its own
//! odd increment and finalizes it with a 64-bit mixer.

/// Golden-ratio increment used by the base SplitMix64 sequence.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stafford "variant 13" finalizer. Avalanches all input bits.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixer used to derive increments; must differ from `mix64` so a stream's
/// state and increment are decorrelated.
#[inline]
fn mix64_gamma(mut z: u64) -> u64 {
    z = (z ^ (z >> 33)).wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    z = (z ^ (z >> 33)).wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    z ^ (z >> 33)
}

/// Derive a sub-seed from a master seed and an index (trial number,
/// generator tag, ...). Distinct indices give unrelated seeds.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ mix64(index.wrapping_mul(GOLDEN).wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// A deterministic pseudorandom stream.
///
/// Streams derived from distinct `(master_seed, row_index)` pairs use
/// distinct odd increments, so no two streams walk the same cycle.
#[derive(Debug, Clone)]
pub struct RngStream {
    state: u64,
    increment: u64,
}

impl RngStream {
    /// Stream seeded directly, with the default increment.
    pub fn from_seed(seed: u64) -> Self {
        RngStream {
            state: mix64(seed),
            increment: GOLDEN,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(self.increment);
        mix64(self.state)
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) via rejection to avoid modulo bias.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }
}

/// Derive the per-row stream for a job: deterministic in
/// `(master_seed, row_index)` and independent of execution order.
pub fn derive_row_rng(master_seed: u64, row_index: usize) -> RngStream {
    let row = row_index as u64;
    let state = mix64(master_seed ^ mix64_gamma(row.wrapping_mul(GOLDEN)));
    // Increment must be odd for the walk to cover the full 2^64 cycle.
    let increment = mix64_gamma(master_seed.wrapping_add(row).wrapping_mul(0xDA94_2042_E4DD_58B5)) | 1;
    RngStream { state, increment }
}
