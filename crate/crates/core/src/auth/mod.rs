//! Orthogonal-array message authentication.
//!
//! A key is `d` digits `r_i` in `[0, p)`, a message is encoded as `d` digits
//! `c_i` whose first nonzero digit is 1, and the tag is `Σ r_i c_i mod p`.
//! For any message and tag value exactly `p^(d-1)` keys produce that tag, so a
//! forger who has seen one tagged message succeeds with probability `1/p`.
//! Keys are one-time: every tag consumes fresh bits from the pool.
//!
//! # Message encoding for p = 2^61 − 1
//!
//! `c_1 = 1`. The message followed by a single `1` bit is cut into 61-bit
//! big-endian groups, the last one zero-padded. A group equal to `2^61 − 1`
//! (not a valid digit) becomes the pair `[ESC, 1]` and a group equal to
//! `ESC = 2^61 − 2` becomes `[ESC, 0]`; every other group is one digit.
//! Remaining digits up to `d` are zero. Decoding strips trailing zero bits
//! and the final `1`, which makes the map injective across lengths. Without
//! escapes the capacity is `61(d − 1) − 1` bits, i.e. 45,017 at `d = 739`.
//!
//! For other primes each digit carries `⌊log2 p⌋` bits and no escaping is
//! needed.

mod field;
pub mod vectors;

use std::ops::Range;

pub use field::{add_mod, is_prime, mul_mod, M61};

use crate::bits::BitString;
use crate::error::{invalid, Error, Result};
use crate::pool::SecretPool;

/// Tag length charged in budget formulas.
pub const TAG_BITS: usize = 61;

const ESC: u64 = M61 - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuthParams {
    pub p: u64,
    pub d: usize,
}

impl AuthParams {
    pub fn new(p: u64, d: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(invalid("p", format!("{p} is not prime")));
        }
        if d < 2 {
            return Err(invalid("d", format!("{d} < 2")));
        }
        Ok(Self { p, d })
    }

    /// `p = 2^61 − 1`, `d = 739`.
    pub fn production() -> Self {
        Self { p: M61, d: 739 }
    }

    /// Smallest `d` whose escape-free capacity holds `len` bits.
    pub fn for_len(p: u64, len: usize) -> Result<Self> {
        let probe = Self::new(p, 2)?;
        let w = probe.digit_bits();
        Self::new(p, (len + 1).div_ceil(w) + 1)
    }

    /// Message bits carried per digit.
    pub fn digit_bits(&self) -> usize {
        if self.p == M61 {
            61
        } else {
            63 - self.p.leading_zeros() as usize
        }
    }

    /// Bits read per key digit; groups at or above `p` are discarded.
    pub fn key_group_bits(&self) -> usize {
        64 - (self.p - 1).leading_zeros() as usize
    }

    /// Key length when no group is discarded.
    pub fn key_bits(&self) -> usize {
        self.d * self.key_group_bits()
    }

    pub fn max_message_len(&self) -> usize {
        (self.d - 1) * self.digit_bits() - 1
    }

    /// `p^d ≥ m(n − 1) + 1` for `m = (p^d − 1)/(p − 1)` encodable messages
    /// and `n = p` tags. `None` if `p^d` overflows 128 bits.
    pub fn key_count_bound(&self) -> Option<bool> {
        let p = self.p as u128;
        let kappa = p.checked_pow(self.d as u32)?;
        let m = (kappa - 1) / (p - 1);
        Some(kappa >= m * (p - 1) + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthKey {
    digits: Vec<u64>,
}

impl AuthKey {
    pub fn from_digits(digits: Vec<u64>, params: &AuthParams) -> Result<Self> {
        if digits.len() != params.d {
            return Err(Error::LengthMismatch {
                left: digits.len(),
                right: params.d,
            });
        }
        if digits.iter().any(|&r| r >= params.p) {
            return Err(invalid("key", "digit not below p"));
        }
        Ok(Self { digits })
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// Draws a key from the pool group by group and reports the range used.
    pub fn from_pool(pool: &mut SecretPool, params: &AuthParams) -> Result<(Self, Range<usize>)> {
        let start = pool.pointer();
        let w = params.key_group_bits();
        let mut digits = Vec::with_capacity(params.d);
        while digits.len() < params.d {
            let group = pool.consume(w)?.read_uint(0, w);
            if group < params.p {
                digits.push(group);
            }
        }
        Ok((Self { digits }, start..pool.pointer()))
    }
}

/// Reads a key from raw bits, skipping groups that are not valid digits.
/// Returns the key and the number of bits used.
pub fn key_from_bits(raw: &BitString, params: &AuthParams) -> Result<(AuthKey, usize)> {
    let mut pool = SecretPool::new(raw.clone());
    let (key, used) = AuthKey::from_pool(&mut pool, params)?;
    Ok((key, used.len()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMessage {
    digits: Vec<u64>,
}

impl EncodedMessage {
    /// Any digit vector whose first nonzero digit is 1.
    pub fn from_digits(digits: Vec<u64>, params: &AuthParams) -> Result<Self> {
        if digits.len() != params.d {
            return Err(Error::LengthMismatch {
                left: digits.len(),
                right: params.d,
            });
        }
        if digits.iter().any(|&c| c >= params.p) {
            return Err(Error::MalformedMessage("digit not below p"));
        }
        match digits.iter().find(|&&c| c != 0) {
            Some(1) => Ok(Self { digits }),
            _ => Err(Error::MalformedMessage("first nonzero digit must be 1")),
        }
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }
}

pub fn encode_message(msg: &BitString, params: &AuthParams) -> Result<EncodedMessage> {
    let too_long = Error::MessageTooLong {
        len: msg.len(),
        max: params.max_message_len(),
    };
    if msg.len() > params.max_message_len() {
        return Err(too_long);
    }
    let w = params.digit_bits();
    let mut stream = msg.clone();
    stream.push(true);
    let groups = stream.len().div_ceil(w);
    stream.extend(&BitString::zeros(groups * w - stream.len()));

    let mut digits = Vec::with_capacity(params.d);
    digits.push(1);
    for g in 0..groups {
        let v = stream.read_uint(g * w, w);
        if params.p == M61 && v == M61 {
            digits.extend([ESC, 1]);
        } else if params.p == M61 && v == ESC {
            digits.extend([ESC, 0]);
        } else {
            digits.push(v);
        }
    }
    if digits.len() > params.d {
        return Err(too_long);
    }
    digits.resize(params.d, 0);
    Ok(EncodedMessage { digits })
}

pub fn decode_message(enc: &EncodedMessage, params: &AuthParams) -> Result<BitString> {
    let digits = enc.digits();
    if digits.len() != params.d || digits[0] != 1 {
        return Err(Error::MalformedMessage("missing leading sentinel"));
    }
    let w = params.digit_bits();
    let mut stream = BitString::with_capacity((digits.len() - 1) * w);
    let mut it = digits[1..].iter();
    while let Some(&c) = it.next() {
        let group = if params.p == M61 && c == ESC {
            match it.next() {
                Some(1) => M61,
                Some(0) => ESC,
                _ => return Err(Error::MalformedMessage("bad escape")),
            }
        } else {
            c
        };
        stream.push_uint(group, w);
    }
    let mut end = stream.len();
    while end > 0 && !stream.get(end - 1) {
        end -= 1;
    }
    if end == 0 {
        return Err(Error::MalformedMessage("missing terminator"));
    }
    Ok(stream.slice(0..end - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tag(pub u64);

impl Tag {
    pub fn to_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    pub fn from_bytes(bytes: [u8; 8], params: &AuthParams) -> Result<Self> {
        let v = u64::from_be_bytes(bytes);
        if v >= params.p {
            return Err(Error::Wire(format!("tag {v:#x} not below p")));
        }
        Ok(Tag(v))
    }
}

fn check_lengths(key: &AuthKey, msg: &EncodedMessage, params: &AuthParams) -> Result<()> {
    for len in [key.digits.len(), msg.digits.len()] {
        if len != params.d {
            return Err(Error::LengthMismatch {
                left: len,
                right: params.d,
            });
        }
    }
    Ok(())
}

pub fn tag(key: &AuthKey, msg: &EncodedMessage, params: &AuthParams) -> Result<Tag> {
    check_lengths(key, msg, params)?;
    let p = params.p;
    let acc = key
        .digits
        .iter()
        .zip(&msg.digits)
        .fold(0u64, |acc, (&r, &c)| add_mod(acc, mul_mod(r, c, p), p));
    Ok(Tag(acc))
}

/// Recomputes the tag and compares without an early exit.
pub fn verify(key: &AuthKey, msg: &EncodedMessage, t: Tag, params: &AuthParams) -> Result<bool> {
    let expect = tag(key, msg, params)?;
    Ok((expect.0 ^ t.0) == 0)
}

/// Convenience for raw bit messages: encode, then tag.
pub fn tag_bits(key: &AuthKey, msg: &BitString, params: &AuthParams) -> Result<Tag> {
    tag(key, &encode_message(msg, params)?, params)
}

/// Encode-then-verify; an unencodable message simply fails.
pub fn verify_bits(key: &AuthKey, msg: &BitString, t: Tag, params: &AuthParams) -> Result<bool> {
    match encode_message(msg, params) {
        Ok(enc) => verify(key, &enc, t, params),
        Err(Error::MessageTooLong { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}
