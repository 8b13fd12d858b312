//! Identification with key refuelling over an authenticated public channel.
//!
//! One session runs, in this order:
//!
//! 1. raw BB84 transmission;
//! 2. pointer exchange, both pools moving to the higher pointer;
//! 3. Bob → Alice: the `2s` subset positions, tagged;
//! 4. Alice → Bob: her bases and bits at those positions, tagged;
//! 5. Bob → Alice: the verdict (accept flag, retained count, error count), tagged.
//!
//! Each tag uses a fresh key from the pool. A failed check aborts the session
//! and counts as a failed identification. Keys already drawn stay consumed and
//! nothing else is drawn. The error estimate is the first thing discussed.
//! Bases of the remaining detections are only compared after both parties
//! accept the verdict, and only an [`Accepted`] token unlocks that step.
//! After that come sifting, error correction, privacy amplification and
//! refuelling of both pools. Those later messages are not authenticated.
//! Tampering with them can spoil the new key but cannot fake an
//! identification.
//!
//! Verdict layout (32 bits): accept flag, 15-bit retained count, 16-bit error
//! count. Alice re-applies the acceptance test to the conveyed counts.

pub mod adversary;
pub mod amplify;
pub mod reconcile;
pub mod wire;

use std::fmt;
use std::ops::Range;

use rand::seq::index::sample;
use rand::RngCore;

pub use adversary::{AdversaryScript, EveView, TamperHook};
pub use amplify::{privacy_amplify, privacy_amplify_with, toeplitz_seed_len, HashFamily};
pub use reconcile::{error_correct, EcResult, EcStats};
pub use wire::{Kind, PublicMessage};

use crate::analysis::{corrected_len, distilled_from, BudgetParams, DistilledBreakdown};
use crate::auth::{tag_bits, verify_bits, AuthKey, AuthParams, M61, TAG_BITS};
use crate::bits::{Basis, BitString};
use crate::channel::{run_raw_transmission, ChannelParams, RawTranscript};
use crate::error::{invalid, Error, Result};
use crate::estimation::{solve_eps_lim, EstimationParams};
use crate::math::bracket_log2;
use crate::pool::SecretPool;
use crate::protocol1::Role;
use crate::rng::{random_bitstring, RngSeed, SimRng, Stream};

pub const VERDICT_BITS: usize = 32;
const RETAINED_BITS: usize = 15;
const ERRORS_BITS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Party2 {
    pub pool: SecretPool,
}

impl Party2 {
    pub fn new(pool: SecretPool) -> Self {
        Self { pool }
    }
}

/// Two parties holding the same `bits` random secret bits.
pub fn shared_parties(bits: usize, seed: RngSeed) -> (Party2, Party2) {
    let store = random_bitstring(bits, &mut seed.rng(Stream::Trials));
    (Party2::new(SecretPool::new(store.clone())), Party2::new(SecretPool::new(store)))
}

/// Which subset size the acceptance limit is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpsLimMode {
    /// The number of subset bits actually retained in this session.
    #[default]
    Realized,
    /// The nominal `s`.
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol2Params {
    pub channel: ChannelParams,
    pub estimation: EstimationParams,
    pub auth_prime: u64,
    pub eps_lim_mode: EpsLimMode,
}

impl Protocol2Params {
    pub fn baseline() -> Self {
        Self {
            channel: ChannelParams::baseline(),
            estimation: EstimationParams::baseline(),
            auth_prime: M61,
            eps_lim_mode: EpsLimMode::Realized,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.estimation.validate()?;
        AuthParams::new(self.auth_prime, 2)?;
        if self.estimation.two_s() >= 1 << RETAINED_BITS {
            return Err(invalid("s", "2s must fit the 15-bit retained count"));
        }
        Ok(())
    }

    /// Budget inputs for a session of `n_pulses`.
    pub fn budget(&self, n_pulses: usize) -> BudgetParams {
        let c = &self.channel;
        BudgetParams {
            mu: c.mu,
            eta_tl: c.eta_tl,
            eta_bob: c.eta_bob,
            eta_det: c.eta_det,
            eta_overall: c.eta_overall,
            eps: c.eps_intrinsic,
            eps_max: self.estimation.eps_max,
            delta: self.estimation.delta,
            s: self.estimation.s as u64,
            a: TAG_BITS as u64,
            n_pulses: n_pulses as f64,
        }
    }

    /// Bit width of one announced position.
    pub fn position_width(n_pulses: usize) -> usize {
        bracket_log2(n_pulses as u64) as usize
    }

    /// Authentication parameters for the three tagged messages, in order.
    pub fn message_auth(&self, n_pulses: usize) -> Result<[AuthParams; 3]> {
        let two_s = self.estimation.two_s();
        Ok([
            AuthParams::for_len(self.auth_prime, two_s * Self::position_width(n_pulses))?,
            AuthParams::for_len(self.auth_prime, 2 * two_s)?,
            AuthParams::for_len(self.auth_prime, VERDICT_BITS)?,
        ])
    }

    /// Pool bits one session draws when no key group is discarded.
    pub fn key_bits_needed(&self, n_pulses: usize) -> Result<usize> {
        Ok(self.message_auth(n_pulses)?.iter().map(AuthParams::key_bits).sum())
    }
}

/// Uniform `two_s`-subset of the detected positions, sorted ascending.
pub fn select_subset_positions<R: RngCore + ?Sized>(detected: &[usize], two_s: usize, rng: &mut R) -> Result<Vec<usize>> {
    if detected.len() < two_s {
        return Err(Error::InsufficientDetections {
            needed: two_s,
            available: detected.len(),
        });
    }
    let mut out: Vec<usize> = sample(rng, detected.len(), two_s).iter().map(|i| detected[i]).collect();
    out.sort_unstable();
    Ok(out)
}

fn encode_positions(positions: &[usize], width: usize) -> BitString {
    let mut out = BitString::with_capacity(positions.len() * width);
    for &p in positions {
        out.push_uint(p as u64, width);
    }
    out
}

/// Reads positions as announced for a run of `n_pulses`. `None` unless they
/// are in range and strictly increasing.
pub(crate) fn parse_positions_any(payload: &BitString, n_pulses: usize) -> Option<Vec<usize>> {
    let width = Protocol2Params::position_width(n_pulses);
    if payload.len() % width != 0 {
        return None;
    }
    let pos: Vec<usize> = (0..payload.len() / width)
        .map(|i| payload.read_uint(i * width, width) as usize)
        .collect();
    let ok = pos.iter().all(|&p| p < n_pulses) && pos.windows(2).all(|w| w[0] < w[1]);
    ok.then_some(pos)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    PositionsRejected,
    BasesRejected,
    VerdictRejected,
    /// No subset bit survived basis comparison, or no limit exists for the
    /// retained count.
    NoEstimate,
    ErrorRateTooHigh,
    SiftingMismatch,
    ReconciliationFailed,
    NothingToDistill,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AbortReason::PositionsRejected => "positions_rejected",
            AbortReason::BasesRejected => "bases_rejected",
            AbortReason::VerdictRejected => "verdict_rejected",
            AbortReason::NoEstimate => "no_estimate",
            AbortReason::ErrorRateTooHigh => "error_rate_too_high",
            AbortReason::SiftingMismatch => "sifting_mismatch",
            AbortReason::ReconciliationFailed => "reconciliation_failed",
            AbortReason::NothingToDistill => "nothing_to_distill",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub from: Role,
    /// The message as delivered.
    pub message: PublicMessage,
    pub tampered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol2Outcome {
    pub identified: bool,
    pub refueled: bool,
    pub eps_est: Option<f64>,
    pub eps_lim: Option<f64>,
    pub errors: Option<usize>,
    pub retained: Option<usize>,
    /// Alice's copy of the new key.
    pub distilled: Option<BitString>,
    /// Pool bits Alice drew for tags this session.
    pub bits_consumed: usize,
    pub bits_gained: usize,
    pub key_ranges: Vec<(Role, Range<usize>)>,
    pub detected: usize,
    pub n_sifted: usize,
    pub leaked: usize,
    /// Corrected length predicted by the empirical formula for this session's
    /// sifted length and estimate, next to the measured `n_sifted − leaked`.
    pub model_n_c: Option<f64>,
    pub breakdown: Option<DistilledBreakdown>,
    pub keys_agree: bool,
    pub abort_reason: Option<AbortReason>,
    pub transcript: Vec<TranscriptEntry>,
}

impl Protocol2Outcome {
    pub const CSV_HEADER: &'static str = "seed,n_pulses,eps_est,identified,refueled,consumed,gained";

    pub fn csv_row(&self, seed: RngSeed, n_pulses: usize) -> String {
        let eps = self.eps_est.map(|e| format!("{e:.6}")).unwrap_or_default();
        format!(
            "{},{n_pulses},{eps},{},{},{},{}",
            seed.0,
            u8::from(self.identified),
            u8::from(self.refueled),
            self.bits_consumed,
            self.bits_gained
        )
    }

    fn empty(detected: usize) -> Self {
        Self {
            identified: false,
            refueled: false,
            eps_est: None,
            eps_lim: None,
            errors: None,
            retained: None,
            distilled: None,
            bits_consumed: 0,
            bits_gained: 0,
            key_ranges: Vec::new(),
            detected,
            n_sifted: 0,
            leaked: 0,
            model_n_c: None,
            breakdown: None,
            keys_agree: false,
            abort_reason: None,
            transcript: Vec::new(),
        }
    }
}

/// Evidence that both parties accepted the error estimate. Only the verdict
/// step can produce one.
#[derive(Debug)]
pub struct Accepted {
    _private: (),
}

struct Link<'a> {
    transcript: Vec<TranscriptEntry>,
    hook: Option<&'a mut TamperHook>,
    raw: &'a RawTranscript,
    rng: SimRng,
}

impl Link<'_> {
    fn send(&mut self, from: Role, msg: PublicMessage) -> PublicMessage {
        let mut delivered = msg.clone();
        if let Some(hook) = self.hook.as_mut() {
            let mut view = EveView {
                from,
                transcript: self.raw,
                rng: &mut self.rng,
            };
            hook(&mut delivered, &mut view);
        }
        self.transcript.push(TranscriptEntry {
            from,
            tampered: delivered != msg,
            message: delivered.clone(),
        });
        delivered
    }

    /// Records a message the adversary cannot alter in this model.
    fn log(&mut self, from: Role, msg: PublicMessage) {
        self.transcript.push(TranscriptEntry {
            from,
            message: msg,
            tampered: false,
        });
    }
}

fn pointer_message(pointer: usize) -> PublicMessage {
    let mut p = BitString::with_capacity(64);
    p.push_uint(pointer as u64, 64);
    PublicMessage::plain(Kind::Pointer, p)
}

fn abort_message(pass: u8) -> PublicMessage {
    let mut p = BitString::with_capacity(8);
    p.push_uint(pass as u64, 8);
    PublicMessage::plain(Kind::Abort, p)
}

fn checked(msg: &PublicMessage, kind: Kind, key: &AuthKey, params: &AuthParams) -> Result<bool> {
    match msg.tag {
        Some(t) if msg.kind == kind => verify_bits(key, &msg.payload, t, params),
        _ => Ok(false),
    }
}

fn eps_limit(params: &Protocol2Params, retained: usize) -> Option<f64> {
    let s = match params.eps_lim_mode {
        EpsLimMode::Realized => retained,
        EpsLimMode::Nominal => params.estimation.s,
    };
    if s == 0 {
        return None;
    }
    let est = EstimationParams { s, ..params.estimation };
    solve_eps_lim(&est).ok()
}

/// The acceptance test both parties apply to `(retained, errors)`.
fn acceptance(params: &Protocol2Params, retained: usize, errors: usize) -> (Option<f64>, Option<f64>, bool) {
    if retained == 0 {
        return (None, None, false);
    }
    let eps_est = errors as f64 / retained as f64;
    let lim = eps_limit(params, retained);
    (Some(eps_est), lim, lim.is_some_and(|l| eps_est <= l))
}

struct Remainder {
    alice: BitString,
    bob: BitString,
}

/// Basis comparison of everything Bob detected outside the subset.
fn sift_remainder(
    _token: &Accepted,
    raw: &RawTranscript,
    subset: &[usize],
    link: &mut Link<'_>,
) -> Option<Remainder> {
    let n = raw.n_pulses();
    let mut in_subset = BitString::zeros(n);
    for &i in subset {
        in_subset.set(i, true);
    }
    // Bob: which pulses he detected (outside the subset) and his bases there.
    let bob_list: Vec<usize> = (0..n).filter(|&i| raw.detected.get(i) && !in_subset.get(i)).collect();
    let mut announce = BitString::zeros(n);
    for &i in &bob_list {
        announce.set(i, true);
    }
    for &i in &bob_list {
        announce.push(raw.bob_bases.get(i).bit());
    }
    let got = link.send(Role::Bob, PublicMessage::plain(Kind::BasisAnnounce, announce));

    // Alice: parse the announcement, reply with match flags.
    let payload = got.payload;
    if payload.len() < n {
        return None;
    }
    let listed: Vec<usize> = (0..n).filter(|&i| payload.get(i)).collect();
    if payload.len() != n + listed.len() {
        return None;
    }
    let mut flags = BitString::with_capacity(listed.len());
    let mut alice_key = BitString::new();
    for (j, &i) in listed.iter().enumerate() {
        let m = raw.alice_bases.get(i) == Basis::from_bit(payload.get(n + j));
        flags.push(m);
        if m {
            alice_key.push(raw.alice_bits.get(i));
        }
    }
    let flags = link.send(Role::Alice, PublicMessage::plain(Kind::BasisMatch, flags)).payload;

    // Bob: apply the flags to his own list.
    if flags.len() != bob_list.len() {
        return None;
    }
    let bob_key: BitString = bob_list
        .iter()
        .enumerate()
        .filter(|&(j, _)| flags.get(j))
        .map(|(_, &i)| raw.bob_bit(i).unwrap_or(false))
        .collect();
    (alice_key.len() == bob_key.len()).then_some(Remainder {
        alice: alice_key,
        bob: bob_key,
    })
}

/// Runs one session. Channel randomness and every party's private choices
/// are drawn from separate streams of `seed`.
pub fn run_protocol2(
    alice: &mut Party2,
    bob: &mut Party2,
    params: &Protocol2Params,
    n_pulses: usize,
    adversary: &mut AdversaryScript,
    seed: RngSeed,
) -> Result<Protocol2Outcome> {
    params.validate()?;
    let raw = run_raw_transmission(&params.channel, n_pulses, adversary.eve, seed)?;
    let mut out = Protocol2Outcome::empty(raw.detected_count());
    let mut link = Link {
        transcript: Vec::new(),
        hook: adversary.hook.as_mut(),
        raw: &raw,
        rng: seed.rng(Stream::Tamper),
    };

    let result = session(alice, bob, params, &raw, &mut link, &mut out, seed);
    out.transcript = link.transcript;
    out.bits_consumed = out
        .key_ranges
        .iter()
        .filter(|(r, _)| *r == Role::Alice)
        .map(|(_, range)| range.len())
        .sum();
    result.map(|reason| {
        out.abort_reason = reason;
        out
    })
}

fn session(
    alice: &mut Party2,
    bob: &mut Party2,
    params: &Protocol2Params,
    raw: &RawTranscript,
    link: &mut Link<'_>,
    out: &mut Protocol2Outcome,
    seed: RngSeed,
) -> Result<Option<AbortReason>> {
    let n_pulses = raw.n_pulses();
    let [auth1, auth2, auth3] = params.message_auth(n_pulses)?;
    let width = Protocol2Params::position_width(n_pulses);
    let two_s = params.estimation.two_s();

    // Pointer exchange.
    let from_alice = link.send(Role::Alice, pointer_message(alice.pool.pointer()));
    let from_bob = link.send(Role::Bob, pointer_message(bob.pool.pointer()));
    let read = |m: &PublicMessage| (m.payload.len() == 64).then(|| m.payload.read_uint(0, 64) as usize);
    let alice_target = read(&from_bob).unwrap_or(0).max(alice.pool.pointer());
    let bob_target = read(&from_alice).unwrap_or(0).max(bob.pool.pointer());
    alice.pool.advance_to(alice_target)?;
    bob.pool.advance_to(bob_target)?;
    let need = params.key_bits_needed(n_pulses)?;
    for party in [&*alice, &*bob] {
        if party.pool.remaining() < need {
            return Err(Error::PoolExhausted {
                requested: need,
                available: party.pool.remaining(),
            });
        }
    }

    // Pass 1: Bob announces the subset positions.
    let detected = raw.detected_positions();
    let subset = select_subset_positions(&detected, two_s, &mut seed.rng(Stream::Bob))?;
    let payload = encode_positions(&subset, width);
    let (key, range) = AuthKey::from_pool(&mut bob.pool, &auth1)?;
    out.key_ranges.push((Role::Bob, range));
    let t = tag_bits(&key, &payload, &auth1)?;
    let m1 = link.send(
        Role::Bob,
        PublicMessage {
            kind: Kind::Positions,
            payload,
            tag: Some(t),
        },
    );
    let (key, range) = AuthKey::from_pool(&mut alice.pool, &auth1)?;
    out.key_ranges.push((Role::Alice, range));
    let positions = if checked(&m1, Kind::Positions, &key, &auth1)? {
        parse_positions_any(&m1.payload, n_pulses).filter(|p| p.len() == two_s)
    } else {
        None
    };
    let Some(positions) = positions else {
        link.send(Role::Alice, abort_message(1));
        return Ok(Some(AbortReason::PositionsRejected));
    };

    // Pass 2: Alice reveals her bases and bits there.
    let mut payload = BitString::with_capacity(2 * two_s);
    for &i in &positions {
        payload.push(raw.alice_bases.get(i).bit());
        payload.push(raw.alice_bits.get(i));
    }
    let (key, range) = AuthKey::from_pool(&mut alice.pool, &auth2)?;
    out.key_ranges.push((Role::Alice, range));
    let t = tag_bits(&key, &payload, &auth2)?;
    let m2 = link.send(
        Role::Alice,
        PublicMessage {
            kind: Kind::BasesAndBits,
            payload,
            tag: Some(t),
        },
    );
    let (key, range) = AuthKey::from_pool(&mut bob.pool, &auth2)?;
    out.key_ranges.push((Role::Bob, range));
    if !checked(&m2, Kind::BasesAndBits, &key, &auth2)? || m2.payload.len() != 2 * two_s {
        link.send(Role::Bob, abort_message(2));
        return Ok(Some(AbortReason::BasesRejected));
    }

    // Pass 3: Bob's estimate and verdict.
    let (mut retained, mut errors) = (0usize, 0usize);
    for (j, &i) in subset.iter().enumerate() {
        if raw.bob_bases.get(i).bit() == m2.payload.get(2 * j) {
            retained += 1;
            if raw.bob_bit(i) != Some(m2.payload.get(2 * j + 1)) {
                errors += 1;
            }
        }
    }
    let (_, _, bob_accepts) = acceptance(params, retained, errors);
    let mut payload = BitString::with_capacity(VERDICT_BITS);
    payload.push(bob_accepts);
    payload.push_uint(retained as u64, RETAINED_BITS);
    payload.push_uint(errors as u64, ERRORS_BITS);
    let (key, range) = AuthKey::from_pool(&mut bob.pool, &auth3)?;
    out.key_ranges.push((Role::Bob, range));
    let t = tag_bits(&key, &payload, &auth3)?;
    let m3 = link.send(
        Role::Bob,
        PublicMessage {
            kind: Kind::FinalVerdict,
            payload,
            tag: Some(t),
        },
    );
    let (key, range) = AuthKey::from_pool(&mut alice.pool, &auth3)?;
    out.key_ranges.push((Role::Alice, range));
    if !checked(&m3, Kind::FinalVerdict, &key, &auth3)? || m3.payload.len() != VERDICT_BITS {
        link.send(Role::Alice, abort_message(3));
        return Ok(Some(AbortReason::VerdictRejected));
    }
    out.identified = true;

    let flag = m3.payload.get(0);
    let retained = m3.payload.read_uint(1, RETAINED_BITS) as usize;
    let errors = m3.payload.read_uint(1 + RETAINED_BITS, ERRORS_BITS) as usize;
    let (eps_est, eps_lim, alice_accepts) = acceptance(params, retained, errors);
    out.eps_est = eps_est;
    out.eps_lim = eps_lim;
    out.errors = Some(errors);
    out.retained = Some(retained);
    if eps_est.is_none() || eps_lim.is_none() {
        return Ok(Some(AbortReason::NoEstimate));
    }
    if !(flag && alice_accepts) {
        return Ok(Some(AbortReason::ErrorRateTooHigh));
    }
    let token = Accepted { _private: () };

    // Key distillation.
    let Some(rem) = sift_remainder(&token, raw, &subset, link) else {
        return Ok(Some(AbortReason::SiftingMismatch));
    };
    let n_sifted = rem.alice.len();
    out.n_sifted = n_sifted;
    let eps_hint = eps_est.unwrap_or(0.0);
    let ec = match error_correct(&rem.alice, &rem.bob, eps_hint, &mut seed.rng(Stream::Reconcile)) {
        Ok(ec) => ec,
        Err(Error::NonConvergence { .. }) => return Ok(Some(AbortReason::ReconciliationFailed)),
        Err(e) => return Err(e),
    };
    link.log(Role::Alice, PublicMessage::plain(Kind::EcParity, ec.disclosed.clone()));
    out.leaked = ec.leaked();
    out.model_n_c = Some(corrected_len(n_sifted as f64, eps_hint));

    let budget = params.budget(n_pulses);
    let breakdown = distilled_from(&budget, n_sifted.saturating_sub(ec.leaked()) as f64, n_sifted as f64);
    out.breakdown = Some(breakdown);
    let out_len = (breakdown.total.floor() as usize).min(n_sifted);
    if out_len == 0 {
        return Ok(Some(AbortReason::NothingToDistill));
    }

    let pa_seed = random_bitstring(toeplitz_seed_len(n_sifted, out_len), &mut seed.rng(Stream::Alice));
    let got = link.send(Role::Alice, PublicMessage::plain(Kind::PaSeed, pa_seed.clone()));
    let alice_new = privacy_amplify(&ec.alice, out_len, &pa_seed)?;
    let Ok(bob_new) = privacy_amplify(&ec.bob, out_len, &got.payload) else {
        return Ok(Some(AbortReason::ReconciliationFailed));
    };
    alice.pool.refuel(&alice_new);
    bob.pool.refuel(&bob_new);
    out.keys_agree = alice_new == bob_new;
    out.refueled = true;
    out.bits_gained = out_len;
    out.distilled = Some(alice_new);
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::EveStrategy;

    fn small_params() -> Protocol2Params {
        Protocol2Params::baseline()
    }

    #[test]
    fn subset_selection() {
        let detected: Vec<usize> = (0..50).map(|i| 3 * i).collect();
        let mut rng = RngSeed(1).rng(Stream::Bob);
        assert_eq!(select_subset_positions(&detected, 50, &mut rng).unwrap(), detected);
        assert!(select_subset_positions(&detected, 0, &mut rng).unwrap().is_empty());
        let s = select_subset_positions(&detected, 10, &mut rng).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(matches!(
            select_subset_positions(&detected, 51, &mut rng),
            Err(Error::InsufficientDetections { .. })
        ));
    }

    #[test]
    fn message_sizes() {
        let p = Protocol2Params::baseline();
        let [a1, a2, a3] = p.message_auth(6_250_000).unwrap();
        assert_eq!(Protocol2Params::position_width(6_250_000), 23);
        assert_eq!((a1.d, a2.d, a3.d), (756, 67, 2));
        assert_eq!(p.key_bits_needed(6_250_000).unwrap(), 46_116 + 4_087 + 122);
    }

    #[test]
    fn honest_session_refuels_with_equal_keys() {
        let params = small_params();
        let (mut a, mut b) = shared_parties(100_000, RngSeed(1));
        let out = run_protocol2(&mut a, &mut b, &params, 100_000, &mut AdversaryScript::honest(), RngSeed(1)).unwrap();
        assert!(out.identified && out.refueled, "{:?}", out.abort_reason);
        assert!(out.keys_agree);
        assert_eq!(out.bits_gained, out.distilled.as_ref().unwrap().len());
        assert_eq!(a.pool, b.pool);
        assert_eq!(out.bits_consumed, a.pool.pointer());
        let kinds: Vec<Kind> = out.transcript.iter().map(|e| e.message.kind).collect();
        let verdict = kinds.iter().position(|&k| k == Kind::FinalVerdict).unwrap();
        let announce = kinds.iter().position(|&k| k == Kind::BasisAnnounce).unwrap();
        assert!(verdict < announce);
    }

    #[test]
    fn tampered_positions_fail_identification() {
        let params = small_params();
        let (mut a, mut b) = shared_parties(100_000, RngSeed(2));
        let mut adv = AdversaryScript::flip_bit(Kind::Positions, 5);
        let out = run_protocol2(&mut a, &mut b, &params, 100_000, &mut adv, RngSeed(2)).unwrap();
        assert!(!out.identified && !out.refueled);
        assert_eq!(out.abort_reason, Some(AbortReason::PositionsRejected));
        assert_eq!(a.pool.pointer(), b.pool.pointer());
    }

    #[test]
    fn intercept_resend_is_rejected_after_identification() {
        let params = small_params();
        let (mut a, mut b) = shared_parties(100_000, RngSeed(3));
        let mut adv = AdversaryScript::passive(EveStrategy::InterceptResend { fraction: 1.0 });
        let out = run_protocol2(&mut a, &mut b, &params, 100_000, &mut adv, RngSeed(3)).unwrap();
        assert!(out.identified && !out.refueled);
        assert!(out.eps_est.unwrap() > 0.15);
        assert!(!out.transcript.iter().any(|e| e.message.kind == Kind::BasisAnnounce));
    }

    #[test]
    fn empty_pool_is_an_error() {
        let params = small_params();
        let (mut a, mut b) = shared_parties(100, RngSeed(4));
        let r = run_protocol2(&mut a, &mut b, &params, 100_000, &mut AdversaryScript::honest(), RngSeed(4));
        assert!(matches!(r, Err(Error::PoolExhausted { .. })));
    }
}
