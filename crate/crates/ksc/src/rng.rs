//! Seeded pseudo-random stream used everywhere randomness is needed.
//!
//! Keys generated on one machine must be reproducible on any other, in any
//! language, from the seed alone, so the generator is pinned to splitmix64
//! and every derived draw is specified exactly:
//!
//! Stream: the state starts at the seed. Each call to [`SplitMix64::next_u64`]
//! updates `state = state + 0x9E3779B97F4A7C15 (mod 2^64)` and returns
//!
//! ```text
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (mod 2^64)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB  (mod 2^64)
//! output = z ^ (z >> 31)
//! ```
//!
//! Derived draws:
//! - bit: `next_u64() & 1`
//! - integer in `[0, n)`: `next_u64() mod n` (the modulo bias is below 2^-32
//!   for every n used here and is irrelevant to the key-space argument)
//! - float in `[0, 1)`: `(next_u64() >> 11) * 2^-53`

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() & 1) as u8
    }

    /// Integer uniform on `[0, n)`. `n` must be nonzero.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Float uniform on `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Float uniform on `[-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}
