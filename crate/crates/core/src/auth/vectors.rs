//! Plain-text test vectors for cross-checking tag implementations.
//!
//! One vector per line, whitespace separated:
//!
//! ```text
//! p d key_digits_hex msg tag_hex
//! ```
//!
//! `key_digits_hex` is the `d` key digits, each as 16 hex digits, concatenated.
//! `msg` is `<bit length>:<hex>` with the bits packed big-endian and
//! zero-padded to whole bytes. `tag_hex` is the tag as 16 hex digits.
//! Blank lines and lines starting with `#` are ignored.

use rand::RngCore;

use super::{encode_message, key_from_bits, tag, verify, AuthKey, AuthParams, Tag};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rng::random_bitstring;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestVector {
    pub params: AuthParams,
    pub key: AuthKey,
    pub msg: BitString,
    pub tag: Tag,
}

impl TestVector {
    pub fn to_line(&self) -> String {
        let key: String = self.key.digits().iter().map(|r| format!("{r:016x}")).collect();
        format!(
            "{} {} {key} {} {:016x}",
            self.params.p, self.params.d, self.msg, self.tag.0
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [p, d, key, msg, t] = fields[..] else {
            return Err(Error::Wire(format!("expected 5 fields, found {}", fields.len())));
        };
        let bad = |what: &str| Error::Wire(format!("bad {what}"));
        let p: u64 = p.parse().map_err(|_| bad("p"))?;
        let d: usize = d.parse().map_err(|_| bad("d"))?;
        let params = AuthParams::new(p, d)?;
        if key.len() != 16 * d || !key.is_ascii() {
            return Err(bad("key length"));
        }
        let digits = (0..d)
            .map(|i| u64::from_str_radix(&key[16 * i..16 * (i + 1)], 16).map_err(|_| bad("key digit")))
            .collect::<Result<Vec<_>>>()?;
        let key = AuthKey::from_digits(digits, &params)?;
        let msg: BitString = msg.parse()?;
        if t.len() != 16 {
            return Err(bad("tag"));
        }
        let tag = Tag(u64::from_str_radix(t, 16).map_err(|_| bad("tag"))?);
        Ok(Self { params, key, msg, tag })
    }

    /// True iff the recorded tag verifies.
    pub fn check(&self) -> Result<bool> {
        match encode_message(&self.msg, &self.params) {
            Ok(enc) => verify(&self.key, &enc, self.tag, &self.params),
            Err(Error::MessageTooLong { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }
}

/// Random vectors with message lengths up to `max_len` bits.
pub fn generate<R: RngCore + ?Sized>(
    count: usize,
    params: &AuthParams,
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<TestVector>> {
    let max_len = max_len.min(params.max_message_len());
    (0..count)
        .map(|_| {
            let len = (rng.next_u64() % (max_len as u64 + 1)) as usize;
            let msg = random_bitstring(len, rng);
            let raw = random_bitstring(params.key_bits() + 64 * params.key_group_bits(), rng);
            let (key, _) = key_from_bits(&raw, params)?;
            let t = tag(&key, &encode_message(&msg, params)?, params)?;
            Ok(TestVector {
                params: *params,
                key,
                msg,
                tag: t,
            })
        })
        .collect()
}

/// Parses a whole file, skipping comments and blank lines.
pub fn parse_file(text: &str) -> Result<Vec<TestVector>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(TestVector::parse_line)
        .collect()
}
