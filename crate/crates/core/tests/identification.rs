use qident_core::analysis::{deception_probability_bound, deception_probability_exact};
use qident_core::protocol1::{
    eve_impersonation_trial, run_protocol1, IdentOutcome, Message1, NoisyLink, Party1State, Protocol1Config, Role,
    Session1,
};
use qident_core::{random_bitstring, RngSeed, SecretPool, Stream, Triad};

fn triads(count: usize, n: usize, seed: u64) -> Vec<Triad> {
    let mut pool = SecretPool::new(random_bitstring(3 * n * count, &mut RngSeed(seed).rng(Stream::Trials)));
    (0..count).map(|_| Triad::from_pool(&mut pool, n).unwrap()).collect()
}

/// P(Binomial(n, q) <= k) by direct summation.
fn binomial_cdf(n: u64, q: f64, k: u64) -> f64 {
    let mut c = 1.0;
    let mut sum = 0.0;
    for j in 0..=k {
        if j > 0 {
            c *= (n - j + 1) as f64 / j as f64;
        }
        sum += c * q.powi(j as i32) * (1.0 - q).powi((n - j) as i32);
    }
    sum
}

fn within_4_sigma(hits: usize, trials: usize, p: f64) -> bool {
    let f = hits as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    (f - p).abs() <= 4.0 * sigma.max(1.0 / trials as f64)
}

#[test]
fn honest_success_rate_matches_three_binomial_passes() {
    let trials = 10_000;
    let cfg = Protocol1Config::new(50, 0.01).unwrap();
    assert_eq!(cfg.k, 1);
    let stack = triads(trials, 50, 21);
    let mut alice = Party1State::new(Role::Alice, stack.clone());
    let mut bob = Party1State::new(Role::Bob, stack);
    let mut rng = RngSeed(21).rng(Stream::Link);
    let mut ok = 0;
    for _ in 0..trials {
        let r = run_protocol1(&mut alice, &mut bob, NoisyLink { flip_prob: 0.01 }, cfg, &mut rng).unwrap();
        ok += usize::from(r.outcome.is_success());
        assert_eq!(r.alice_pointer, r.bob_pointer);
    }
    let oracle = binomial_cdf(50, 0.01, 1).powi(3);
    // 0.99^50 + 50·0.01·0.99^49 = 0.91056 per pass.
    assert!((oracle - 0.75495).abs() < 1e-4, "{oracle}");
    assert!(within_4_sigma(ok, trials, oracle), "{ok}/{trials} vs {oracle}");
}

#[test]
fn two_bit_impersonation_matches_enumeration() {
    let cfg = Protocol1Config::with_k(2, 0.5, 1).unwrap();
    let mut rng = RngSeed(22).rng(Stream::Trials);
    let trials = 100_000;
    let hits = (0..trials)
        .filter(|_| eve_impersonation_trial(&[0.6, 0.6], &cfg, &mut rng).unwrap())
        .count();
    let (p, q) = (0.6, 0.4);
    let oracle = p * p + q * p + p * q;
    assert!((oracle - 0.84_f64).abs() < 1e-12);
    assert!(within_4_sigma(hits, trials, oracle), "{hits}/{trials}");
}

#[test]
fn twenty_bit_impersonation_matches_exact_tail() {
    let cfg = Protocol1Config::with_k(20, 0.05, 1).unwrap();
    let probs = [0.6; 20];
    let mut rng = RngSeed(23).rng(Stream::Trials);
    let trials = 200_000;
    let hits = (0..trials)
        .filter(|_| eve_impersonation_trial(&probs, &cfg, &mut rng).unwrap())
        .count();
    let exact = deception_probability_exact(&probs, 1);
    assert!((exact - binomial_cdf(20, 0.4, 1)).abs() < 1e-15);
    assert!(within_4_sigma(hits, trials, exact), "{hits}/{trials} vs {exact}");
}

#[test]
fn triads_are_never_reused_across_successes_and_aborts() {
    let n = 30;
    let stack = triads(40, n, 24);
    let mut alice = Party1State::new(Role::Alice, stack.clone());
    let mut bob = Party1State::new(Role::Bob, stack.clone());
    let cfg = Protocol1Config::with_k(n, 0.1, 3).unwrap();
    let mut rng = RngSeed(24).rng(Stream::Link);
    let mut seen = std::collections::HashSet::new();
    for round in 0..30 {
        // A noisy link makes some attempts abort at different passes.
        let flip_prob = if round % 3 == 0 { 0.2 } else { 0.02 };
        let before = alice.pointer().max(bob.pointer());
        let r = run_protocol1(&mut alice, &mut bob, NoisyLink { flip_prob }, cfg, &mut rng).unwrap();
        assert_eq!((r.alice_pointer, r.bob_pointer), (before + 1, before + 1));
        for row in &r.transcript {
            if !row.payload_hex.is_empty() {
                assert!(seen.insert((before, row.pass)), "triad {before} pass {} sent twice", row.pass);
            }
        }
    }
}

/// Eve poses as Bob, collects Alice's first sequence and gets rejected at
/// pass 2. She then replays that sequence to the real Bob, who has not yet
/// moved his pointer, and has to guess the third sequence.
#[test]
fn replayed_first_pass_does_not_get_past_bob() {
    let n = 50;
    let cfg = Protocol1Config::new(n, 0.01).unwrap();
    let trials = 2_000;
    let stack = triads(trials, n, 25);
    let mut alice = Party1State::new(Role::Alice, stack.clone());
    let mut bob = Party1State::new(Role::Bob, stack);
    let mut eve_rng = RngSeed(25).rng(Stream::Eve);
    let mut link_rng = RngSeed(25).rng(Stream::Link);
    let mut fooled = 0;
    for _ in 0..trials {
        let fake_bob_triads = (0..alice.triads.len()).map(|i| {
            let g = || random_bitstring(n, &mut RngSeed(i as u64).rng(Stream::Eve));
            Triad::new(g(), g(), g()).unwrap()
        });
        let mut eve_as_bob = Party1State::impostor(Role::Bob, fake_bob_triads.collect());
        eve_as_bob.sync_to(alice.pointer());
        let r = run_protocol1(&mut alice, &mut eve_as_bob, NoisyLink { flip_prob: 0.0 }, cfg, &mut link_rng).unwrap();
        assert_eq!(r.outcome, IdentOutcome::AbortPass2);
        let captured = hex_to_bits(&r.transcript[0].payload_hex, n);

        let stale = alice.pointer() - 1;
        let mut session = Session1::new(&mut bob, cfg, stale).unwrap();
        let reply = session
            .receive(&Message1::Sequence { pass: 1, bits: captured })
            .unwrap();
        assert!(matches!(reply, Some(Message1::Sequence { pass: 2, .. })));
        let guess = random_bitstring(n, &mut eve_rng);
        session.receive(&Message1::Sequence { pass: 3, bits: guess }).unwrap();
        fooled += usize::from(session.outcome() == Some(IdentOutcome::Success));
    }
    // A blind guess of a 50-bit sequence with one tolerated error.
    let bound = deception_probability_bound(n as u64, 0.01, 0.5).unwrap();
    assert!(bound < 1e-12);
    assert!(fooled as f64 / trials as f64 <= bound + 3.0 / trials as f64, "fooled {fooled}");
    assert_eq!(fooled, 0);
}

fn hex_to_bits(hex: &str, n: usize) -> qident_core::BitString {
    qident_core::BitString::from_hex(hex, n).unwrap()
}
