//! Public-channel messages and their byte encoding.
//!
//! A message is one kind byte, the payload length in bits as a big-endian
//! `u32`, the payload bits packed big-endian and zero-padded to a whole byte,
//! and for authenticated kinds an 8-byte big-endian tag.

use std::fmt;

use crate::auth::Tag;
use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Kind {
    Positions = 0x01,
    BasesAndBits = 0x02,
    FinalVerdict = 0x03,
    Abort = 0x04,
    Pointer = 0x10,
    /// Bob's detections outside the subset and his bases for them.
    BasisAnnounce = 0x11,
    /// Alice's per-detection basis match flags.
    BasisMatch = 0x12,
    /// Parity bits disclosed during error correction (log only).
    EcParity = 0x14,
    PaSeed = 0x13,
}

impl Kind {
    pub const AUTHENTICATED: [Kind; 3] = [Kind::Positions, Kind::BasesAndBits, Kind::FinalVerdict];

    pub fn is_authenticated(self) -> bool {
        Self::AUTHENTICATED.contains(&self)
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0x01 => Kind::Positions,
            0x02 => Kind::BasesAndBits,
            0x03 => Kind::FinalVerdict,
            0x04 => Kind::Abort,
            0x10 => Kind::Pointer,
            0x11 => Kind::BasisAnnounce,
            0x12 => Kind::BasisMatch,
            0x13 => Kind::PaSeed,
            0x14 => Kind::EcParity,
            other => return Err(Error::Wire(format!("unknown kind {other:#04x}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Positions => "positions",
            Kind::BasesAndBits => "bases_and_bits",
            Kind::FinalVerdict => "final_verdict",
            Kind::Abort => "abort",
            Kind::Pointer => "pointer",
            Kind::BasisAnnounce => "basis_announce",
            Kind::BasisMatch => "basis_match",
            Kind::EcParity => "ec_parity",
            Kind::PaSeed => "pa_seed",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicMessage {
    pub kind: Kind,
    pub payload: BitString,
    pub tag: Option<Tag>,
}

impl PublicMessage {
    pub fn plain(kind: Kind, payload: BitString) -> Self {
        Self {
            kind,
            payload,
            tag: None,
        }
    }

    /// Payload length plus 64 tag bits if present.
    pub fn tamperable_bits(&self) -> usize {
        self.payload.len() + if self.tag.is_some() { 64 } else { 0 }
    }

    /// Flips bit `i` of the payload, or of the 64-bit tag word for
    /// `i ≥ payload.len()` (most significant bit first).
    pub fn flip_bit(&mut self, i: usize) {
        let n = self.payload.len();
        if i < n {
            self.payload.flip(i);
        } else if let Some(t) = &mut self.tag {
            assert!(i - n < 64, "bit {i} past the tag");
            t.0 ^= 1u64 << (63 - (i - n));
        } else {
            panic!("bit {i} past an untagged payload of {n} bits");
        }
    }

    pub fn to_wire(&self) -> Vec<u8> {
        let len = u32::try_from(self.payload.len()).expect("payload over 2^32 bits");
        let mut out = Vec::with_capacity(5 + self.payload.len().div_ceil(8) + 8);
        out.push(self.kind as u8);
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&self.payload.to_bytes());
        if let Some(t) = self.tag {
            out.extend_from_slice(&t.to_bytes());
        }
        out
    }

    pub fn from_wire(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 5 {
            return Err(Error::Wire("truncated header".into()));
        }
        let kind = Kind::from_byte(bytes[0])?;
        let len = u32::from_be_bytes(bytes[1..5].try_into().unwrap()) as usize;
        let body = len.div_ceil(8);
        let tag_len = if kind.is_authenticated() { 8 } else { 0 };
        if bytes.len() != 5 + body + tag_len {
            return Err(Error::Wire(format!(
                "{} bytes for a {len}-bit {kind} message",
                bytes.len()
            )));
        }
        let payload = BitString::from_bytes(&bytes[5..5 + body], len)?;
        let tag = (tag_len > 0).then(|| Tag(u64::from_be_bytes(bytes[5 + body..].try_into().unwrap())));
        Ok(Self { kind, payload, tag })
    }
}
