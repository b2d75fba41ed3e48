//! Counter-based random streams for reproducible parallel trials.
//!
//! Trial `t` of a run reads ChaCha8 keyed by the run's [`StreamKey`], on
//! stream number `t`, from word 0 onward. The draw index is the ChaCha block
//! counter, so any trial can be replayed without touching the others and
//! results do not depend on how trials are spread across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Identifies the generator and sampling conventions; bump on any change that
/// alters the sequence of sampled values.
pub const GENERATOR_ID: &str = "chacha8-stream-per-trial/v1";

/// 256-bit ChaCha key derived from a user seed plus scenario words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    /// Layout: seed (8 bytes LE), then up to six 32-bit tags (LE), zero padded.
    pub fn new(seed: u64, tags: &[u32]) -> Self {
        assert!(tags.len() <= 6, "at most six tag words fit in a key");
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        for (i, t) in tags.iter().enumerate() {
            key[8 + 4 * i..12 + 4 * i].copy_from_slice(&t.to_le_bytes());
        }
        StreamKey(key)
    }
}

/// Random source for a single trial.
pub struct TrialRng {
    inner: ChaCha8Rng,
    bits: u32,
    bits_left: u32,
}

impl TrialRng {
    pub fn new(key: &StreamKey, trial: u64) -> Self {
        let mut inner = ChaCha8Rng::from_seed(key.0);
        inner.set_stream(trial);
        inner.set_word_pos(0);
        TrialRng { inner, bits: 0, bits_left: 0 }
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    /// Uniform integer in `[0, bound)`.
    ///
    /// Power-of-two bounds take exactly `log2(bound)` bits from a buffered
    /// word (leftover bits are dropped on refill). Other bounds use rejection
    /// on whole words so no residue is favoured.
    #[inline]
    pub fn below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "empty range");
        if bound.is_power_of_two() {
            let width = bound.trailing_zeros();
            if width == 0 {
                return 0;
            }
            if self.bits_left < width {
                self.bits = self.next_u32();
                self.bits_left = 32;
            }
            let v = self.bits & (bound - 1);
            self.bits = self.bits.checked_shr(width).unwrap_or(0);
            self.bits_left -= width;
            return v;
        }
        let limit = (1u64 << 32) / bound as u64 * bound as u64;
        loop {
            let v = self.next_u32() as u64;
            if v < limit {
                return (v % bound as u64) as u32;
            }
        }
    }

    /// Uniform integer in `[0, bound)` for 64-bit bounds, by rejection.
    pub fn below_u64(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        if bound <= u32::MAX as u64 {
            return self.below(bound as u32) as u64;
        }
        let limit = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let v = self.inner.next_u64();
            if v <= limit {
                return v % bound;
            }
        }
    }

    /// True with probability `numer / denom`.
    pub fn bernoulli(&mut self, numer: u64, denom: u64) -> bool {
        self.below_u64(denom) < numer
    }
}
