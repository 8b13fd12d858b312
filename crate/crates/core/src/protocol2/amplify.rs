//! Privacy amplification by a seeded binary Toeplitz matrix.

use crate::bits::BitString;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashFamily {
    #[default]
    Toeplitz,
    /// Keeps the first `out_len` bits. Only for testing the plumbing.
    Identity,
}

/// Seed length a Toeplitz matrix of `out_len × key_len` needs.
pub fn toeplitz_seed_len(key_len: usize, out_len: usize) -> usize {
    if out_len == 0 || key_len == 0 {
        0
    } else {
        key_len + out_len - 1
    }
}

/// `M · key` over GF(2) with `M[i][j] = seed[i + n − 1 − j]`, so output bit
/// `i` is the parity of `seed[i .. i + n]` against the reversed key.
pub fn privacy_amplify(key: &BitString, out_len: usize, seed: &BitString) -> Result<BitString> {
    privacy_amplify_with(HashFamily::Toeplitz, key, out_len, seed)
}

pub fn privacy_amplify_with(family: HashFamily, key: &BitString, out_len: usize, seed: &BitString) -> Result<BitString> {
    if out_len > key.len() {
        return Err(invalid("out_len", format!("{out_len} exceeds key length {}", key.len())));
    }
    if out_len == 0 {
        return Ok(BitString::new());
    }
    match family {
        HashFamily::Identity => Ok(key.slice(0..out_len)),
        HashFamily::Toeplitz => {
            let need = toeplitz_seed_len(key.len(), out_len);
            if seed.len() < need {
                return Err(invalid("seed", format!("{} bits, need {need}", seed.len())));
            }
            let rev = key.reversed();
            Ok((0..out_len).map(|i| seed.and_parity_at(i, &rev)).collect())
        }
    }
}
