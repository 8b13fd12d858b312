//! Shared secret storage with one-time consumption.

use std::ops::Range;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// A store of shared secret bits and the index of the first unused one.
///
/// Consumption is strictly linear: the pointer only moves forward, so a bit
/// handed out once is never handed out again.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretPool {
    store: BitString,
    pointer: usize,
}

impl SecretPool {
    pub fn new(store: BitString) -> Self {
        Self { store, pointer: 0 }
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.store.len() - self.pointer
    }

    pub fn store(&self) -> &BitString {
        &self.store
    }

    /// Hands out the next `n` unused bits.
    pub fn consume(&mut self, n: usize) -> Result<BitString> {
        Ok(self.consume_tracked(n)?.0)
    }

    /// Like [`consume`](Self::consume) but also reports the range taken.
    pub fn consume_tracked(&mut self, n: usize) -> Result<(BitString, Range<usize>)> {
        if n > self.remaining() {
            return Err(Error::PoolExhausted {
                requested: n,
                available: self.remaining(),
            });
        }
        let range = self.pointer..self.pointer + n;
        let out = self.store.slice(range.clone());
        self.pointer += n;
        Ok((out, range))
    }

    /// Moves the pointer forward to `index`; never moves it back.
    pub fn advance_to(&mut self, index: usize) -> Result<()> {
        if index > self.store.len() {
            return Err(Error::PoolExhausted {
                requested: index - self.pointer.min(index),
                available: self.remaining(),
            });
        }
        self.pointer = self.pointer.max(index);
        Ok(())
    }

    /// Appends freshly distilled key material.
    pub fn refuel(&mut self, fresh: &BitString) {
        self.store.extend(fresh);
    }
}

/// The pointer both parties adopt after announcing theirs: the higher one.
pub fn pointer_sync(local: usize, remote: usize) -> usize {
    local.max(remote)
}

/// Three identification sequences consumed together by one identification attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triad {
    pub is1: BitString,
    pub is2: BitString,
    pub is3: BitString,
}

impl Triad {
    pub fn new(is1: BitString, is2: BitString, is3: BitString) -> Result<Self> {
        if is1.len() != is2.len() || is1.len() != is3.len() {
            return Err(Error::LengthMismatch {
                left: is1.len(),
                right: if is1.len() != is2.len() { is2.len() } else { is3.len() },
            });
        }
        Ok(Self { is1, is2, is3 })
    }

    /// Carves a triad of `n_is`-bit sequences out of a pool.
    pub fn from_pool(pool: &mut SecretPool, n_is: usize) -> Result<Self> {
        if pool.remaining() < 3 * n_is {
            return Err(Error::PoolExhausted {
                requested: 3 * n_is,
                available: pool.remaining(),
            });
        }
        Ok(Self {
            is1: pool.consume(n_is)?,
            is2: pool.consume(n_is)?,
            is3: pool.consume(n_is)?,
        })
    }

    pub fn len(&self) -> usize {
        self.is1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is1.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_bitstring, RngSeed, Stream};
    use proptest::prelude::*;

    fn pool(n: usize) -> SecretPool {
        SecretPool::new(random_bitstring(n, &mut RngSeed(11).rng(Stream::Trials)))
    }

    #[test]
    fn consume_returns_prefix() {
        let mut p = pool(100);
        let first = p.consume(40).unwrap();
        assert_eq!(p.pointer(), 40);
        assert_eq!(first, p.store().slice(0..40));
    }

    #[test]
    fn consume_zero_is_noop() {
        let mut p = pool(100);
        assert!(p.consume(0).unwrap().is_empty());
        assert_eq!(p.pointer(), 0);
    }

    #[test]
    fn consume_past_end_fails() {
        let mut p = pool(100);
        p.advance_to(90).unwrap();
        assert_eq!(
            p.consume(20),
            Err(Error::PoolExhausted {
                requested: 20,
                available: 10
            })
        );
        assert_eq!(p.pointer(), 90);
    }

    #[test]
    fn pointer_sync_examples() {
        assert_eq!(pointer_sync(3, 3), 3);
        assert_eq!(pointer_sync(2, 5), 5);
        assert_eq!(pointer_sync(7, 0), 7);
    }

    #[test]
    fn advance_never_rewinds() {
        let mut p = pool(50);
        p.advance_to(30).unwrap();
        p.advance_to(10).unwrap();
        assert_eq!(p.pointer(), 30);
        assert!(p.advance_to(51).is_err());
    }

    #[test]
    fn triad_lengths_must_match() {
        assert!(Triad::new(BitString::zeros(3), BitString::zeros(3), BitString::zeros(4)).is_err());
    }

    proptest! {
        #[test]
        fn consumed_ranges_are_disjoint(sizes in proptest::collection::vec(0usize..40, 0..30)) {
            let mut p = pool(400);
            let mut ranges: Vec<std::ops::Range<usize>> = Vec::new();
            for n in sizes {
                if let Ok((_, r)) = p.consume_tracked(n) {
                    for q in &ranges {
                        prop_assert!(r.end <= q.start || q.end <= r.start || r.is_empty());
                    }
                    ranges.push(r);
                }
            }
        }

        #[test]
        fn sync_commutes_and_is_idempotent(a in any::<usize>(), b in any::<usize>()) {
            prop_assert_eq!(pointer_sync(a, b), pointer_sync(b, a));
            prop_assert_eq!(pointer_sync(a, a), a);
        }
    }
}
