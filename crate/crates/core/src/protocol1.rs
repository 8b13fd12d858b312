//! Three-pass identification over an unjammable public channel.
//!
//! Alice and Bob share a stack of triads of identification sequences (ISs).
//! After agreeing on the higher of their two triad pointers, Alice sends the
//! first IS, Bob answers with the second and Alice finishes with the third.
//! Each receiver accepts a sequence if it differs from its own copy in at most
//! `k` positions. A rejection aborts the attempt; the aborting party discards
//! the triad and the peer discards it on seeing the `Abort` message. Success
//! also consumes the triad, so no IS is ever sent twice.

use std::fmt;

use rand::RngCore;

use crate::bits::BitString;
use crate::error::{invalid, Error, Result};
use crate::math::bracket;
use crate::pool::{pointer_sync, Triad};
use crate::rng::{random_bitstring, unit_f64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol1Config {
    pub n_is: usize,
    pub eps_tol: f64,
    /// Maximum tolerated mismatches: the smallest integer greater than `eps_tol * n_is`.
    pub k: usize,
}

impl Protocol1Config {
    pub fn new(n_is: usize, eps_tol: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps_tol) {
            return Err(invalid("eps_tol", format!("{eps_tol} not in [0, 1)")));
        }
        let k = bracket(eps_tol * n_is as f64) as usize;
        Self::with_k(n_is, eps_tol, k)
    }

    /// Explicit tolerance, e.g. `k = 0` for exact matching.
    pub fn with_k(n_is: usize, eps_tol: f64, k: usize) -> Result<Self> {
        if k >= n_is {
            return Err(invalid("k", format!("tolerance {k} must be below IS length {n_is}")));
        }
        Ok(Self { n_is, eps_tol, k })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Alice,
    Bob,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentOutcome {
    Success,
    AbortPass1,
    AbortPass2,
    AbortPass3,
}

impl IdentOutcome {
    pub fn is_success(self) -> bool {
        self == IdentOutcome::Success
    }

    fn abort_at(pass: u8) -> Self {
        match pass {
            1 => IdentOutcome::AbortPass1,
            2 => IdentOutcome::AbortPass2,
            _ => IdentOutcome::AbortPass3,
        }
    }
}

/// One party's stack of triads and the index of its first unused triad.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Party1State {
    pub role: Role,
    pub triads: Vec<Triad>,
    pointer: usize,
    impostor: bool,
}

impl Party1State {
    pub fn new(role: Role, triads: Vec<Triad>) -> Self {
        Self {
            role,
            triads,
            pointer: 0,
            impostor: false,
        }
    }

    /// A party holding guessed sequences. It has no genuine copy to check
    /// incoming sequences against, so it accepts whatever arrives and answers
    /// with its guesses.
    pub fn impostor(role: Role, guesses: Vec<Triad>) -> Self {
        Self {
            impostor: true,
            ..Self::new(role, guesses)
        }
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }

    pub fn remaining(&self) -> usize {
        self.triads.len().saturating_sub(self.pointer)
    }

    pub fn sync_to(&mut self, remote: usize) {
        self.pointer = pointer_sync(self.pointer, remote);
    }

    fn current(&self) -> Result<&Triad> {
        self.triads.get(self.pointer).ok_or(Error::PoolExhausted {
            requested: 1,
            available: 0,
        })
    }

    fn discard_current(&mut self) {
        self.pointer += 1;
    }

    /// Appends freshly refuelled triads.
    pub fn refuel(&mut self, triads: impl IntoIterator<Item = Triad>) {
        self.triads.extend(triads);
    }
}

/// Accepts iff the Hamming distance is at most `k`.
pub fn compare_with_tolerance(a: &BitString, b: &BitString, k: usize) -> Result<bool> {
    Ok(a.hamming_distance(b)? <= k)
}

/// Messages exchanged on the public channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message1 {
    Pointer(usize),
    Sequence { pass: u8, bits: BitString },
    Abort { pass: u8 },
}

/// One party's view of an identification attempt.
///
/// The machine is fed incoming messages and returns the reply to send (if
/// any). It finishes with an [`IdentOutcome`] once it has either accepted the
/// last pass or seen an abort.
#[derive(Debug)]
pub struct Session1<'a> {
    party: &'a mut Party1State,
    cfg: Protocol1Config,
    expected_pass: u8,
    outcome: Option<IdentOutcome>,
}

impl<'a> Session1<'a> {
    /// Starts a session after pointer synchronisation with `remote_pointer`.
    pub fn new(party: &'a mut Party1State, cfg: Protocol1Config, remote_pointer: usize) -> Result<Self> {
        party.sync_to(remote_pointer);
        let triad = party.current()?;
        if triad.len() != cfg.n_is {
            return Err(Error::LengthMismatch {
                left: triad.len(),
                right: cfg.n_is,
            });
        }
        let expected_pass = match party.role {
            Role::Alice => 2,
            Role::Bob => 1,
        };
        Ok(Self {
            party,
            cfg,
            expected_pass,
            outcome: None,
        })
    }

    pub fn outcome(&self) -> Option<IdentOutcome> {
        self.outcome
    }

    /// Alice's opening message.
    pub fn opening(&self) -> Result<Message1> {
        match self.party.role {
            Role::Alice => Ok(Message1::Sequence {
                pass: 1,
                bits: self.party.current()?.is1.clone(),
            }),
            Role::Bob => Err(invalid("role", "only Alice opens the exchange")),
        }
    }

    fn finish(&mut self, outcome: IdentOutcome) {
        self.party.discard_current();
        self.outcome = Some(outcome);
    }

    pub fn receive(&mut self, msg: &Message1) -> Result<Option<Message1>> {
        if self.outcome.is_some() {
            return Ok(None);
        }
        match msg {
            Message1::Abort { pass } => {
                self.finish(IdentOutcome::abort_at(*pass));
                Ok(None)
            }
            Message1::Pointer(_) => Err(invalid("message", "pointer after session start")),
            Message1::Sequence { pass, bits } => {
                if *pass != self.expected_pass {
                    self.finish(IdentOutcome::abort_at(*pass));
                    return Ok(Some(Message1::Abort { pass: *pass }));
                }
                let triad = self.party.current()?;
                let mine = match pass {
                    1 => &triad.is1,
                    2 => &triad.is2,
                    _ => &triad.is3,
                };
                let ok = self.party.impostor
                    || (bits.len() == mine.len() && compare_with_tolerance(bits, mine, self.cfg.k)?);
                if !ok {
                    self.finish(IdentOutcome::abort_at(*pass));
                    return Ok(Some(Message1::Abort { pass: *pass }));
                }
                let reply = match (self.party.role, pass) {
                    (Role::Bob, 1) => {
                        self.expected_pass = 3;
                        Some(Message1::Sequence {
                            pass: 2,
                            bits: triad.is2.clone(),
                        })
                    }
                    (Role::Alice, 2) => {
                        let is3 = triad.is3.clone();
                        self.finish(IdentOutcome::Success);
                        Some(Message1::Sequence { pass: 3, bits: is3 })
                    }
                    _ => {
                        self.finish(IdentOutcome::Success);
                        None
                    }
                };
                Ok(reply)
            }
        }
    }
}

/// Public channel that flips each transmitted IS bit independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyLink {
    pub flip_prob: f64,
}

impl NoisyLink {
    pub fn transmit<R: RngCore + ?Sized>(&self, msg: &Message1, rng: &mut R) -> Message1 {
        match msg {
            Message1::Sequence { pass, bits } if self.flip_prob > 0.0 => {
                let mut noisy = bits.clone();
                for i in 0..noisy.len() {
                    if unit_f64(rng) < self.flip_prob {
                        noisy.flip(i);
                    }
                }
                Message1::Sequence {
                    pass: *pass,
                    bits: noisy,
                }
            }
            other => other.clone(),
        }
    }
}

/// One row of a session transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptRow {
    pub pass: u8,
    pub from: Role,
    pub payload_hex: String,
    pub verdict: &'static str,
}

impl TranscriptRow {
    pub const CSV_HEADER: &'static str = "pass,direction,payload_hex,verdict";

    pub fn csv(&self) -> String {
        let dir = match self.from {
            Role::Alice => "alice->bob",
            Role::Bob => "bob->alice",
        };
        format!("{},{dir},{},{}", self.pass, self.payload_hex, self.verdict)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol1Report {
    /// Outcome as seen by the party that finished last.
    pub outcome: IdentOutcome,
    pub alice_pointer: usize,
    pub bob_pointer: usize,
    pub transcript: Vec<TranscriptRow>,
}

/// Runs one honest-scheduler identification attempt between two parties.
pub fn run_protocol1<R: RngCore + ?Sized>(
    alice: &mut Party1State,
    bob: &mut Party1State,
    link: NoisyLink,
    cfg: Protocol1Config,
    rng: &mut R,
) -> Result<Protocol1Report> {
    let (pa, pb) = (alice.pointer(), bob.pointer());
    let mut transcript = Vec::new();
    let mut a = Session1::new(alice, cfg, pb)?;
    let mut b = Session1::new(bob, cfg, pa)?;

    let mut in_flight = Some((Role::Alice, a.opening()?));
    while let Some((from, msg)) = in_flight.take() {
        let delivered = link.transmit(&msg, rng);
        let receiver = match from {
            Role::Alice => &mut b,
            Role::Bob => &mut a,
        };
        let reply = receiver.receive(&delivered)?;
        let verdict = match (&delivered, &reply, receiver.outcome()) {
            (Message1::Abort { .. }, _, _) => "abort-noted",
            (_, Some(Message1::Abort { .. }), _) => "reject",
            (_, _, Some(IdentOutcome::Success)) | (_, Some(_), _) => "accept",
            _ => "pending",
        };
        if let Message1::Sequence { pass, bits } = &msg {
            transcript.push(TranscriptRow {
                pass: *pass,
                from,
                payload_hex: bits.to_hex(),
                verdict,
            });
        } else if let Message1::Abort { pass } = &msg {
            transcript.push(TranscriptRow {
                pass: *pass,
                from,
                payload_hex: String::new(),
                verdict,
            });
        }
        let next_from = match from {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        };
        in_flight = reply.map(|m| (next_from, m));
    }

    let outcome = match (a.outcome(), b.outcome()) {
        (Some(IdentOutcome::Success), Some(IdentOutcome::Success)) => IdentOutcome::Success,
        (Some(o), _) if !o.is_success() => o,
        (_, Some(o)) if !o.is_success() => o,
        (oa, ob) => {
            return Err(invalid(
                "session",
                format!("session ended without a joint outcome ({oa:?}, {ob:?})"),
            ))
        }
    };
    drop((a, b));
    Ok(Protocol1Report {
        outcome,
        alice_pointer: alice.pointer(),
        bob_pointer: bob.pointer(),
        transcript,
    })
}

/// One impostor attempt: Eve guesses each bit of an unknown IS correctly with
/// probability `eve_bit_probs[i]` and passes if her guess is within tolerance.
pub fn eve_impersonation_trial<R: RngCore + ?Sized>(
    eve_bit_probs: &[f64],
    cfg: &Protocol1Config,
    rng: &mut R,
) -> Result<bool> {
    if eve_bit_probs.len() != cfg.n_is {
        return Err(Error::LengthMismatch {
            left: eve_bit_probs.len(),
            right: cfg.n_is,
        });
    }
    let truth = random_bitstring(cfg.n_is, rng);
    let guess: BitString = eve_bit_probs
        .iter()
        .enumerate()
        .map(|(i, &p)| truth.get(i) ^ (unit_f64(rng) >= p))
        .collect();
    compare_with_tolerance(&guess, &truth, cfg.k)
}
