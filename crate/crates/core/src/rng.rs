//! Portable random streams.
//!
//! Every random decision in a run comes from a PCG32 (XSH-RR 64/32)
//! generator. A fresh generator is derived for world initialisation and for
//! every tick, so any tick can be replayed from `(seed, tick)` alone:
//!
//! ```text
//! splitmix64(x):  z = x + 0x9E3779B97F4A7C15
//!                 z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!                 z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!                 return z ^ (z >> 31)
//! stream_seed(master, key) = splitmix64(splitmix64(master) ^ key)
//! generator(seed)          = pcg32_srandom(initstate = seed, initseq = splitmix64(seed))
//! ```
//!
//! `key` is the tick index for tick streams and [`INIT_STREAM`] for the
//! initialisation stream. All arithmetic is wrapping `u64`.

/// Stream key used for world initialisation (population placement).
pub const INIT_STREAM: u64 = u64::MAX;

const PCG_MULTIPLIER: u64 = 6364136223846793005;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stream identified by `key` under the run's master seed.
pub fn stream_seed(master: u64, key: u64) -> u64 {
    splitmix64(splitmix64(master) ^ key)
}

/// PCG32 generator, bit-compatible with the reference `pcg32_srandom_r` /
/// `pcg32_random_r` pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    pub fn new(initstate: u64, initseq: u64) -> Self {
        let mut rng = Pcg32 {
            state: 0,
            inc: (initseq << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(initstate);
        rng.next_u32();
        rng
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, splitmix64(seed))
    }

    /// Generator for stream `key` of a run seeded with `master`.
    pub fn for_stream(master: u64, key: u64) -> Self {
        Self::from_seed(stream_seed(master, key))
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(PCG_MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Uniform draw in `[0, 1)` with 32-bit resolution (one `next_u32`).
    pub fn next_f64(&mut self) -> f64 {
        f64::from(self.next_u32()) / 4_294_967_296.0
    }

    /// Unbiased draw in `0..bound` by rejection (reference `pcg32_boundedrand_r`).
    ///
    /// Panics if `bound` is zero.
    pub fn next_bounded(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u32();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// In-place Fisher-Yates shuffle: for `i` from `len-1` down to 1, swap
    /// `i` with `next_bounded(i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_bounded(i as u32 + 1) as usize;
            items.swap(i, j);
        }
    }
}
