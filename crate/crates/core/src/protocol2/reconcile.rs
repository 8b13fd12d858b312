//! Interactive error correction by block parities and bisection.
//!
//! A simplified Cascade. Alice's string is the reference and Bob corrects his.
//!
//! Phase 1 runs passes over blocks of size `k1 · 2^j`, where `k1 ≈ 0.73/ε`.
//! The first pass uses the natural order and later passes use fresh public
//! shuffles. For every block Alice discloses its parity. Where Bob's parity
//! differs, a bisection finds one error, and each bisection step discloses one
//! more parity. Flipping a bit changes one block parity in every earlier pass,
//! so blocks that turn odd are bisected in turn. Phase 1 stops after the first
//! pass in which no block is odd.
//!
//! Phase 2 checks 20 random-subset parities. A mismatch is bisected within
//! that subset, corrected and cascaded, and then phase 2 starts over. Equal
//! strings pass all 20 checks. Unequal strings pass them with probability
//! 2^-20.

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rng::random_bitstring;

pub const CONFIRM_PARITIES: usize = 20;
const MAX_PASSES: usize = 40;
const MAX_CONFIRM_ROUNDS: usize = 200;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EcStats {
    pub block_parities: usize,
    pub bisection_parities: usize,
    pub confirm_parities: usize,
    pub corrections: usize,
    pub passes: usize,
}

impl EcStats {
    /// Parity bits disclosed on the public channel.
    pub fn leaked(&self) -> usize {
        self.block_parities + self.bisection_parities + self.confirm_parities
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcResult {
    pub alice: BitString,
    pub bob: BitString,
    pub stats: EcStats,
    /// Every parity bit Alice disclosed, in order.
    pub disclosed: BitString,
}

impl EcResult {
    pub fn leaked(&self) -> usize {
        self.stats.leaked()
    }
}

/// Initial block size for an expected error rate.
pub fn first_block_size(eps_hint: f64, n: usize) -> usize {
    let k = (0.73 / eps_hint.max(1e-3)).round() as usize;
    k.max(4).min(n.max(1))
}

struct Pass {
    order: Vec<usize>,
    /// Position of each bit within `order`.
    rank: Vec<usize>,
    size: usize,
    alice_parity: Vec<bool>,
    bob_parity: Vec<bool>,
}

impl Pass {
    fn block_of(&self, bit: usize) -> usize {
        self.rank[bit] / self.size
    }

    fn block(&self, b: usize) -> &[usize] {
        let end = ((b + 1) * self.size).min(self.order.len());
        &self.order[b * self.size..end]
    }
}

struct Reconciler<'a> {
    alice: &'a BitString,
    bob: BitString,
    passes: Vec<Pass>,
    stats: EcStats,
    disclosed: BitString,
}

fn parity_of(bits: &BitString, idx: &[usize]) -> bool {
    idx.iter().fold(false, |acc, &i| acc ^ bits.get(i))
}

impl<'a> Reconciler<'a> {
    fn disclose(&mut self, idx: &[usize]) -> bool {
        let p = parity_of(self.alice, idx);
        self.disclosed.push(p);
        p
    }

    /// Finds and fixes one error in `idx`, whose parities are known to differ.
    fn bisect(&mut self, idx: &[usize]) -> usize {
        let mut lo = 0;
        let mut hi = idx.len();
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let a = self.disclose(&idx[lo..mid]);
            self.stats.bisection_parities += 1;
            if a != parity_of(&self.bob, &idx[lo..mid]) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let bit = idx[lo];
        self.flip(bit);
        bit
    }

    fn flip(&mut self, bit: usize) {
        self.bob.flip(bit);
        self.stats.corrections += 1;
        for pass in &mut self.passes {
            let b = pass.block_of(bit);
            pass.bob_parity[b] ^= true;
        }
    }

    /// Bisects every odd block in every pass until none is left.
    fn cascade(&mut self) {
        loop {
            let odd = self.passes.iter().enumerate().find_map(|(i, p)| {
                p.alice_parity
                    .iter()
                    .zip(&p.bob_parity)
                    .position(|(a, b)| a != b)
                    .map(|b| (i, b))
            });
            let Some((i, b)) = odd else { return };
            let idx = self.passes[i].block(b).to_vec();
            self.bisect(&idx);
        }
    }

    fn add_pass<R: RngCore + ?Sized>(&mut self, size: usize, rng: &mut R) -> bool {
        let n = self.alice.len();
        let mut order: Vec<usize> = (0..n).collect();
        if !self.passes.is_empty() {
            order.shuffle(rng);
        }
        let mut rank = vec![0; n];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let size = size.min(n);
        let blocks = n.div_ceil(size);
        let mut pass = Pass {
            order,
            rank,
            size,
            alice_parity: Vec::with_capacity(blocks),
            bob_parity: Vec::with_capacity(blocks),
        };
        for b in 0..blocks {
            let idx = pass.block(b);
            let a = parity_of(self.alice, idx);
            let bp = parity_of(&self.bob, idx);
            self.disclosed.push(a);
            pass.alice_parity.push(a);
            pass.bob_parity.push(bp);
        }
        self.stats.block_parities += blocks;
        self.stats.passes += 1;
        let any_odd = pass.alice_parity != pass.bob_parity;
        self.passes.push(pass);
        any_odd
    }

    /// One phase-2 round. Returns true if all checks matched.
    fn confirm<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> bool {
        let n = self.alice.len();
        for _ in 0..CONFIRM_PARITIES {
            let mask = random_bitstring(n, rng);
            let a = self.alice.and_parity_at(0, &mask);
            self.disclosed.push(a);
            self.stats.confirm_parities += 1;
            if a != self.bob.and_parity_at(0, &mask) {
                let idx: Vec<usize> = (0..n).filter(|&i| mask.get(i)).collect();
                self.bisect(&idx);
                self.cascade();
                return false;
            }
        }
        true
    }
}

/// Reconciles Bob's string to Alice's. `rng` stands for public randomness
/// both parties see (shuffles and check subsets).
pub fn error_correct<R: RngCore + ?Sized>(
    alice: &BitString,
    bob: &BitString,
    eps_hint: f64,
    rng: &mut R,
) -> Result<EcResult> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    let n = alice.len();
    let mut rec = Reconciler {
        alice,
        bob: bob.clone(),
        passes: Vec::new(),
        stats: EcStats::default(),
        disclosed: BitString::new(),
    };
    if n > 0 {
        let k1 = first_block_size(eps_hint, n);
        let mut size = k1;
        loop {
            if rec.stats.passes >= MAX_PASSES {
                return Err(Error::NonConvergence {
                    passes: rec.stats.passes,
                });
            }
            if !rec.add_pass(size, rng) {
                break;
            }
            rec.cascade();
            size = size.saturating_mul(2);
        }
        let mut rounds = 0;
        while !rec.confirm(rng) {
            rounds += 1;
            if rounds >= MAX_CONFIRM_ROUNDS {
                return Err(Error::NonConvergence {
                    passes: rec.stats.passes,
                });
            }
        }
    }
    Ok(EcResult {
        alice: alice.clone(),
        bob: rec.bob,
        stats: rec.stats,
        disclosed: rec.disclosed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngSeed, Stream};

    #[test]
    fn identical_inputs_cost_one_pass_and_the_checks() {
        let mut rng = RngSeed(1).rng(Stream::Reconcile);
        let a = random_bitstring(1000, &mut rng);
        let r = error_correct(&a, &a, 0.01, &mut rng).unwrap();
        assert_eq!(r.stats.corrections, 0);
        assert_eq!(r.stats.passes, 1);
        let k1 = first_block_size(0.01, 1000);
        assert_eq!(r.leaked(), 1000usize.div_ceil(k1) + CONFIRM_PARITIES);
        assert_eq!(r.disclosed.len(), r.leaked());
    }

    #[test]
    fn single_error_is_found() {
        let mut rng = RngSeed(2).rng(Stream::Reconcile);
        let a = random_bitstring(1024, &mut rng);
        let mut b = a.clone();
        b.flip(517);
        let r = error_correct(&a, &b, 0.001, &mut rng).unwrap();
        assert_eq!(r.bob, a);
        assert_eq!(r.stats.corrections, 1);
        let k1 = first_block_size(0.001, 1024);
        let overhead = 1024usize.div_ceil(k1) + 1024usize.div_ceil(2 * k1) + CONFIRM_PARITIES;
        assert!(r.leaked() <= 2 * 10 + overhead, "leaked {}", r.leaked());
    }

    #[test]
    fn many_errors_converge() {
        let mut rng = RngSeed(3).rng(Stream::Reconcile);
        let a = random_bitstring(20_000, &mut rng);
        let mut b = a.clone();
        for i in (0..20_000).step_by(97) {
            b.flip(i);
        }
        let r = error_correct(&a, &b, 0.01, &mut rng).unwrap();
        assert_eq!(r.bob, a);
        // Bisection only ever lands on real errors.
        assert_eq!(r.stats.corrections, b.hamming_distance(&a).unwrap());
    }

    #[test]
    fn tiny_and_empty_inputs() {
        let mut rng = RngSeed(4).rng(Stream::Reconcile);
        let r = error_correct(&BitString::new(), &BitString::new(), 0.1, &mut rng).unwrap();
        assert_eq!(r.leaked(), 0);
        let a = BitString::from_bit_str("101").unwrap();
        let b = BitString::from_bit_str("100").unwrap();
        assert_eq!(error_correct(&a, &b, 0.1, &mut rng).unwrap().bob, a);
        assert!(error_correct(&a, &BitString::zeros(2), 0.1, &mut rng).is_err());
    }
}
