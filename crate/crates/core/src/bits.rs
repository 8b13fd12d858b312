//! Packed bit strings.
//!
//! Bits are stored most-significant-first in `u64` words, so bit `i` of the
//! string lives in word `i / 64` at bit position `63 - i % 64`. This makes the
//! byte serialization big-endian within bytes and lets fixed-width integers be
//! read and written without reversing. Bits beyond `len` in the last word are
//! always zero.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn mask(bit: usize) -> u64 {
    1u64 << (63 - (bit & 63))
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    /// Builds a string from raw words, clearing anything past `len`.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut s = Self { words, len };
        s.clear_tail();
        s
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Parses a string of `'0'`/`'1'` characters. Other characters are rejected.
    pub fn from_bit_str(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Wire(format!("invalid bit character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bools)
    }

    /// Big-endian bit order within bytes; trailing bits past `len` are ignored.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() * 8 < len {
            return Err(Error::Wire(format!(
                "{} bytes cannot hold {len} bits",
                bytes.len()
            )));
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for (i, chunk) in bytes[..len.div_ceil(8)].chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words[i] = u64::from_be_bytes(buf);
        }
        Ok(Self::from_words(words, len))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(n);
        for w in &self.words {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.truncate(n);
        out
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.len.div_ceil(4));
        for b in self.to_bytes() {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        if hex.len() % 2 != 0 {
            return Err(Error::Wire("odd-length hex string".into()));
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&hex[i..i + 2], 16)
                    .map_err(|e| Error::Wire(format!("bad hex: {e}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Wire(format!(
                "hex carries {} bytes, {len} bits need {}",
                bytes.len(),
                len.div_ceil(8)
            )));
        }
        Self::from_bytes(&bytes, len)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i >> 6] & mask(i) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        if value {
            self.words[i >> 6] |= mask(i);
        } else {
            self.words[i >> 6] &= !mask(i);
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i >> 6] ^= mask(i);
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        if value {
            let i = self.len - 1;
            self.words[i >> 6] |= mask(i);
        }
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "value wider than field");
        for k in (0..width).rev() {
            self.push((value >> k) & 1 == 1);
        }
    }

    /// Reads `width` bits starting at `start` as a big-endian unsigned integer.
    pub fn read_uint(&self, start: usize, width: usize) -> u64 {
        assert!(width <= 64);
        assert!(start + width <= self.len, "read past end of bit string");
        if width == 0 {
            return 0;
        }
        self.window(start) >> (64 - width)
    }

    /// The 64 bits starting at `start`, zero-filled past the end.
    #[inline]
    fn window(&self, start: usize) -> u64 {
        let w = start >> 6;
        let r = start & 63;
        let hi = self.words.get(w).copied().unwrap_or(0);
        if r == 0 {
            hi
        } else {
            let lo = self.words.get(w + 1).copied().unwrap_or(0);
            (hi << r) | (lo >> (64 - r))
        }
    }

    pub fn extend(&mut self, other: &BitString) {
        if self.len % 64 == 0 {
            self.words.truncate(self.len / 64);
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        for i in 0..other.len {
            self.push(other.get(i));
        }
    }

    pub fn slice(&self, range: Range<usize>) -> BitString {
        assert!(range.start <= range.end && range.end <= self.len, "slice out of range");
        let n = range.end - range.start;
        let words = (0..n.div_ceil(64))
            .map(|k| self.window(range.start + 64 * k))
            .collect();
        BitString::from_words(words, n)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect();
        Ok(BitString {
            words,
            len: self.len,
        })
    }

    pub fn reversed(&self) -> BitString {
        let mut out = BitString::zeros(self.len);
        for i in 0..self.len {
            if self.get(i) {
                out.set(self.len - 1 - i, true);
            }
        }
        out
    }

    /// Parity of `self[offset .. offset + other.len()] AND other`.
    pub fn and_parity_at(&self, offset: usize, other: &BitString) -> bool {
        assert!(offset + other.len <= self.len, "window past end of bit string");
        let mut acc = 0u64;
        if offset % 64 == 0 {
            let base = offset / 64;
            for (k, w) in other.words.iter().enumerate() {
                acc ^= self.words[base + k] & w;
            }
        } else {
            for (k, w) in other.words.iter().enumerate() {
                acc ^= self.window(offset + 64 * k) & w;
            }
        }
        acc.count_ones() & 1 == 1
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 << (64 - r);
            }
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

/// Text form: decimal length, a colon, then the big-endian hex bytes.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.len, self.to_hex())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (len, hex) = s
            .split_once(':')
            .ok_or_else(|| Error::Wire(format!("missing length prefix in {s:?}")))?;
        let len: usize = len
            .parse()
            .map_err(|_| Error::Wire(format!("bad length prefix {len:?}")))?;
        BitString::from_hex(hex, len)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString::from_bools(iter)
    }
}

/// One of the two conjugate BB84 bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, Basis::Diagonal)
    }
}

/// Sequence of bases, stored as bits (`0` rectilinear, `1` diagonal).
#[derive(Clone, Default, PartialEq, Eq)]
pub struct BasisString(BitString);

impl BasisString {
    pub fn from_bits(bits: BitString) -> Self {
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Basis {
        Basis::from_bit(self.0.get(i))
    }

    pub fn push(&mut self, b: Basis) {
        self.0.push(b.bit());
    }

    pub fn set(&mut self, i: usize, b: Basis) {
        self.0.set(i, b.bit());
    }

    pub fn as_bits(&self) -> &BitString {
        &self.0
    }
}

impl fmt::Debug for BasisString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasisString({})", self.0)
    }
}

impl FromIterator<Basis> for BasisString {
    fn from_iter<I: IntoIterator<Item = Basis>>(iter: I) -> Self {
        Self(iter.into_iter().map(Basis::bit).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn push_get_and_tail_invariant() {
        let mut s = BitString::new();
        for i in 0..130 {
            s.push(i % 3 == 0);
        }
        assert_eq!(s.len(), 130);
        assert!(s.get(0) && !s.get(1) && s.get(129));
        assert_eq!(s.words().len(), 3);
        assert_eq!(s.words()[2] & ((1u64 << 62) - 1), 0);
    }

    #[test]
    fn uint_fields_are_big_endian() {
        let mut s = BitString::new();
        s.push_uint(0b101, 3);
        s.push_uint(0x1234_5678_9abc, 48);
        assert_eq!(s.read_uint(0, 3), 0b101);
        assert_eq!(s.read_uint(3, 48), 0x1234_5678_9abc);
        assert_eq!(s.to_bytes()[0] >> 5, 0b101);
    }

    #[test]
    fn display_and_parse() {
        let s = BitString::from_bit_str("1010000111").unwrap();
        assert_eq!(s.to_string(), "10:a1c0");
        assert_eq!("10:a1c0".parse::<BitString>().unwrap(), s);
        assert!("10:a1".parse::<BitString>().is_err());
    }

    #[test]
    fn equality_ignores_storage_past_len() {
        let a = BitString::from_words(vec![u64::MAX], 3);
        let b = BitString::from_bit_str("111").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hamming_requires_equal_length() {
        let a = BitString::zeros(5);
        let b = BitString::zeros(6);
        assert!(matches!(
            a.hamming_distance(&b),
            Err(Error::LengthMismatch { left: 5, right: 6 })
        ));
    }

    #[test]
    #[should_panic]
    fn get_out_of_range_panics() {
        BitString::zeros(4).get(4);
    }

    proptest! {
        #[test]
        fn bytes_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let s = BitString::from_bools(bits.iter().copied());
            let back = BitString::from_bytes(&s.to_bytes(), s.len()).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.iter().collect::<Vec<_>>(), bits);
        }

        #[test]
        fn slice_and_extend_agree(bits in proptest::collection::vec(any::<bool>(), 0..300), a in 0usize..300, b in 0usize..300) {
            let s = BitString::from_bools(bits.iter().copied());
            let (lo, hi) = (a.min(b).min(s.len()), a.max(b).min(s.len()));
            let sl = s.slice(lo..hi);
            prop_assert_eq!(sl.iter().collect::<Vec<_>>(), bits[lo..hi].to_vec());
            let mut joined = s.slice(0..lo);
            joined.extend(&s.slice(lo..s.len()));
            prop_assert_eq!(joined, s);
        }

        #[test]
        fn and_parity_matches_naive(bits in proptest::collection::vec(any::<bool>(), 1..400), other in proptest::collection::vec(any::<bool>(), 0..200), off in 0usize..200) {
            let s = BitString::from_bools(bits.iter().copied());
            let o = BitString::from_bools(other.iter().copied());
            prop_assume!(off + o.len() <= s.len());
            let naive = (0..o.len()).filter(|&j| bits[off + j] && other[j]).count() % 2 == 1;
            prop_assert_eq!(s.and_parity_at(off, &o), naive);
        }
    }
}
