use std::ops::Range;

use rand::RngCore;
use qident_core::channel::EveStrategy;
use qident_core::protocol1::Role;
use qident_core::protocol2::{
    run_protocol2, shared_parties, AbortReason, AdversaryScript, Kind, Protocol2Outcome, Protocol2Params,
};
use qident_core::RngSeed;

const DESK_PULSES: usize = 100_000;

fn session(adv: &mut AdversaryScript, seed: u64) -> Protocol2Outcome {
    let (mut a, mut b) = shared_parties(120_000, RngSeed(seed));
    run_protocol2(&mut a, &mut b, &Protocol2Params::baseline(), DESK_PULSES, adv, RngSeed(seed)).unwrap()
}

/// Flips one uniformly chosen payload-or-tag bit of the first message of `kind`.
fn random_flip(kind: Kind) -> AdversaryScript {
    let mut done = false;
    AdversaryScript {
        eve: EveStrategy::None,
        hook: Some(Box::new(move |msg, view| {
            if msg.kind == kind && !done {
                let i = (view.rng.next_u64() % msg.tamperable_bits() as u64) as usize;
                msg.flip_bit(i);
                done = true;
            }
        })),
    }
}

fn verdict_comes_first(out: &Protocol2Outcome) -> bool {
    let kinds: Vec<Kind> = out.transcript.iter().map(|e| e.message.kind).collect();
    match kinds.iter().position(|&k| k == Kind::BasisAnnounce) {
        None => true,
        Some(a) => kinds[..a].contains(&Kind::FinalVerdict),
    }
}

#[test]
fn any_single_flip_of_an_authenticated_message_fails_identification() {
    for kind in Kind::AUTHENTICATED {
        for seed in 0..40 {
            let out = session(&mut random_flip(kind), 1000 + seed);
            assert!(out.transcript.iter().any(|e| e.tampered), "{kind} seed {seed}");
            assert!(!out.identified && !out.refueled, "{kind} seed {seed}");
            assert!(verdict_comes_first(&out));
        }
    }
}

#[test]
fn every_tag_bit_of_the_verdict_is_checked() {
    let probe = session(&mut AdversaryScript::honest(), 7);
    let verdict = probe.transcript.iter().find(|e| e.message.kind == Kind::FinalVerdict).unwrap();
    let bits = verdict.message.tamperable_bits();
    for i in 0..bits {
        let out = session(&mut AdversaryScript::flip_bit(Kind::FinalVerdict, i), 7);
        assert_eq!(out.abort_reason, Some(AbortReason::VerdictRejected), "bit {i}");
    }
}

#[test]
fn full_intercept_resend_never_refuels() {
    for seed in 0..100 {
        let mut adv = AdversaryScript::passive(EveStrategy::InterceptResend { fraction: 1.0 });
        let out = session(&mut adv, 2000 + seed);
        assert!(!out.refueled, "seed {seed}: eps_est {:?}", out.eps_est);
        assert!(verdict_comes_first(&out));
    }
}

#[test]
fn three_party_sifting_attack_is_defeated() {
    for forge in [true, false] {
        for seed in 0..100 {
            let out = session(&mut AdversaryScript::three_party_sifting(forge), 3000 + seed);
            let mac_failed = !out.identified;
            let estimate_failed = matches!(
                (out.eps_est, out.eps_lim),
                (Some(e), Some(l)) if e > l
            );
            assert!(mac_failed || estimate_failed, "forge={forge} seed {seed}");
            assert!(!out.refueled);
            if forge {
                assert_eq!(out.abort_reason, Some(AbortReason::BasesRejected));
            }
        }
    }
}

fn disjoint(ranges: &[Range<usize>]) -> bool {
    let mut r = ranges.to_vec();
    r.sort_by_key(|x| x.start);
    r.windows(2).all(|w| w[0].end <= w[1].start)
}

#[test]
fn tag_keys_never_overlap_within_or_across_sessions() {
    let params = Protocol2Params::baseline();
    let (mut a, mut b) = shared_parties(400_000, RngSeed(40));
    let mut ranges = Vec::new();
    for seed in 0..8u64 {
        let mut adv = match seed % 4 {
            0 => AdversaryScript::honest(),
            1 => random_flip(Kind::BasesAndBits),
            2 => AdversaryScript::passive(EveStrategy::InterceptResend { fraction: 1.0 }),
            _ => random_flip(Kind::Positions),
        };
        let before = (a.pool.pointer(), b.pool.pointer());
        let out = run_protocol2(&mut a, &mut b, &params, DESK_PULSES, &mut adv, RngSeed(40 + seed)).unwrap();
        for (role, r) in &out.key_ranges {
            let start = match role {
                Role::Alice => before.0,
                Role::Bob => before.1,
            };
            assert!(r.start >= start);
        }
        ranges.extend(out.key_ranges);
        assert_eq!(a.pool.pointer(), b.pool.pointer());
    }
    for role in [Role::Alice, Role::Bob] {
        let mine: Vec<Range<usize>> = ranges.iter().filter(|(r, _)| *r == role).map(|(_, x)| x.clone()).collect();
        assert!(mine.len() >= 8);
        assert!(disjoint(&mine), "{role}");
    }
}

#[test]
fn honest_sessions_at_full_scale_gain_more_than_they_spend() {
    let params = Protocol2Params::baseline();
    let runs = 4;
    let mut positive = 0;
    for seed in 0..runs {
        let (mut a, mut b) = shared_parties(60_000, RngSeed(50 + seed));
        let out =
            run_protocol2(&mut a, &mut b, &params, 6_250_000, &mut AdversaryScript::honest(), RngSeed(50 + seed)).unwrap();
        assert!(out.identified && out.refueled && out.keys_agree);
        positive += usize::from(out.bits_gained > out.bits_consumed);
    }
    assert_eq!(positive, runs as usize);
}

#[test]
fn sessions_replay_bit_for_bit() {
    let first = session(&mut AdversaryScript::honest(), 60);
    let again = session(&mut AdversaryScript::honest(), 60);
    assert_eq!(first, again);
}
