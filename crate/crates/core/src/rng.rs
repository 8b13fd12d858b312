//! Seeded randomness.
//!
//! Every simulation draws from ChaCha12 streams derived from a single 64-bit
//! [`RngSeed`]. A session splits its seed into independent streams by ChaCha's
//! stream counter, one per consumer ([`Stream`]), so that e.g. an eavesdropper
//! drawing extra random numbers never shifts the values Alice and Bob see.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::bits::BitString;

pub type SimRng = ChaCha12Rng;

/// Named sub-streams of a session seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Eve = 2,
    Alice = 3,
    Bob = 4,
    Reconcile = 5,
    Link = 6,
    Trials = 7,
    Tamper = 8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self, stream: Stream) -> SimRng {
        self.rng_raw(stream as u64)
    }

    pub fn rng_raw(self, stream: u64) -> SimRng {
        let mut rng = SimRng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// Seed for the `index`-th of a family of derived sessions (trial loops).
    pub fn derive(self, index: u64) -> RngSeed {
        let mut rng = self.rng_raw(0x5eed_0000_0000_0000 ^ index);
        RngSeed(rng.next_u64())
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

/// `n` independent fair bits.
pub fn random_bitstring<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> BitString {
    let words = (0..n.div_ceil(64)).map(|_| rng.next_u64()).collect();
    BitString::from_words(words, n)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
