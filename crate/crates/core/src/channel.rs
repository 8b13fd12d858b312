//! BB84 raw transmission over a lossy, noisy line with optional eavesdropping.
//!
//! Each pulse is detected independently with probability `1 - exp(-eta * mu)`.
//! When Bob's basis matches the basis of the state reaching him, he reads that
//! state's bit, flipped with the intrinsic error probability; otherwise his bit
//! is a fair coin. Dark counts and dead time are not modelled.
//!
//! Randomness for Alice and Bob comes from the [`Stream::Channel`] stream with a
//! fixed draw pattern (one word per pulse, one more per detection), and all of
//! Eve's choices come from [`Stream::Eve`]. A passive attacker therefore leaves
//! every Bob-visible field bit-identical to the run without her.

use std::io::Write;

use rand::RngCore;

use crate::bits::{Basis, BasisString, BitString};
use crate::error::{invalid, Result};
use crate::math::binary_entropy;
use crate::rng::{unit_f64, RngSeed, Stream};

/// Optical parameters of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Mean photon number per pulse at Alice's output.
    pub mu: f64,
    pub eta_tl: f64,
    pub eta_bob: f64,
    pub eta_det: f64,
    /// Overall transmissivity to use instead of the product of the three factors.
    pub eta_overall: Option<f64>,
    pub eps_intrinsic: f64,
}

impl ChannelParams {
    /// The prototype's published values, with the overall transmissivity
    /// quoted as 0.12.
    pub fn baseline() -> Self {
        Self {
            mu: 0.8,
            eta_tl: 0.63,
            eta_bob: 0.35,
            eta_det: 0.55,
            eta_overall: Some(0.12),
            eps_intrinsic: 0.004,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta_overall
            .unwrap_or(self.eta_tl * self.eta_bob * self.eta_det)
    }

    pub fn detection_probability(&self) -> f64 {
        -(-self.eta() * self.mu).exp_m1()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} not in (0, 1]")))
            }
        };
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", format!("{} must be positive", self.mu)));
        }
        unit("eta_tl", self.eta_tl)?;
        unit("eta_bob", self.eta_bob)?;
        unit("eta_det", self.eta_det)?;
        if let Some(eta) = self.eta_overall {
            unit("eta", eta)?;
        }
        if !(0.0..1.0).contains(&self.eps_intrinsic) {
            return Err(invalid("eps", format!("{} not in [0, 1)", self.eps_intrinsic)));
        }
        Ok(())
    }
}

/// What the eavesdropper does on the quantum channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EveStrategy {
    None,
    /// Measure a fraction of pulses in a random basis and resend the result.
    InterceptResend { fraction: f64 },
    /// Abstract individual attack: Eve guesses each detected bit correctly
    /// with probability `p_bar`, without disturbing the channel.
    PerBitGuess { p_bar: f64 },
    /// Passive tap on a fraction of detected pulses.
    Beamsplit { tap: f64 },
}

impl EveStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EveStrategy::None => Ok(()),
            EveStrategy::InterceptResend { fraction } if (0.0..=1.0).contains(&fraction) => Ok(()),
            EveStrategy::PerBitGuess { p_bar } if (0.5..=1.0).contains(&p_bar) => Ok(()),
            EveStrategy::Beamsplit { tap } if (0.0..=1.0).contains(&tap) => Ok(()),
            other => Err(invalid("eve", format!("{other:?} out of range"))),
        }
    }
}

/// Simulation-side record of what Eve learned. Never shown to the parties.
#[derive(Debug, Clone, PartialEq)]
pub enum EveKnowledge {
    None,
    InterceptResend {
        intercepted: BitString,
        bases: BasisString,
        bits: BitString,
    },
    PerBitGuess {
        p_bar: f64,
        /// Eve's guess for each pulse (meaningful where detected).
        guesses: BitString,
    },
    Beamsplit {
        tapped: BitString,
    },
}

/// Per-pulse record of one raw transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTranscript {
    pub alice_bits: BitString,
    pub alice_bases: BasisString,
    pub bob_bases: BasisString,
    pub detected: BitString,
    /// Zero where nothing was detected; use [`bob_bit`](Self::bob_bit).
    bob_bits: BitString,
    pub eve_knowledge: EveKnowledge,
}

impl RawTranscript {
    /// Assembles a transcript from its columns. Bob's bits at undetected
    /// positions are cleared.
    pub fn from_parts(
        alice_bits: BitString,
        alice_bases: BasisString,
        bob_bases: BasisString,
        detected: BitString,
        mut bob_bits: BitString,
        eve_knowledge: EveKnowledge,
    ) -> Result<Self> {
        let n = alice_bits.len();
        for (name, len) in [
            ("alice_bases", alice_bases.len()),
            ("bob_bases", bob_bases.len()),
            ("detected", detected.len()),
            ("bob_bits", bob_bits.len()),
        ] {
            if len != n {
                return Err(invalid(name, format!("length {len}, expected {n}")));
            }
        }
        for i in 0..n {
            if !detected.get(i) {
                bob_bits.set(i, false);
            }
        }
        Ok(Self {
            alice_bits,
            alice_bases,
            bob_bases,
            detected,
            bob_bits,
            eve_knowledge,
        })
    }

    pub fn n_pulses(&self) -> usize {
        self.alice_bits.len()
    }

    pub fn bob_bit(&self, i: usize) -> Option<bool> {
        self.detected.get(i).then(|| self.bob_bits.get(i))
    }

    pub fn detected_count(&self) -> usize {
        self.detected.count_ones()
    }

    pub fn detected_positions(&self) -> Vec<usize> {
        (0..self.n_pulses()).filter(|&i| self.detected.get(i)).collect()
    }

    /// Writes the debugging CSV dump, one row per pulse.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "pulse_index,alice_bit,alice_basis,bob_basis,detected,bob_bit")?;
        for i in 0..self.n_pulses() {
            let bob = match self.bob_bit(i) {
                Some(b) => u8::from(b).to_string(),
                None => String::new(),
            };
            writeln!(
                out,
                "{i},{},{},{},{},{bob}",
                u8::from(self.alice_bits.get(i)),
                u8::from(self.alice_bases.get(i).bit()),
                u8::from(self.bob_bases.get(i).bit()),
                u8::from(self.detected.get(i)),
            )?;
        }
        Ok(())
    }
}

/// Simulates `n_pulses` BB84 pulses. Randomness is drawn from the
/// [`Stream::Channel`] and [`Stream::Eve`] streams of `seed`.
pub fn run_raw_transmission(
    params: &ChannelParams,
    n_pulses: usize,
    eve: EveStrategy,
    seed: RngSeed,
) -> Result<RawTranscript> {
    params.validate()?;
    eve.validate()?;
    if n_pulses == 0 {
        return Err(invalid("n_pulses", "must be at least 1"));
    }
    let mut rng = seed.rng(Stream::Channel);
    let mut eve_rng = seed.rng(Stream::Eve);
    let p_det = params.detection_probability();
    let eps = params.eps_intrinsic;

    let mut alice_bits = BitString::zeros(n_pulses);
    let mut alice_bases = BitString::zeros(n_pulses);
    let mut bob_bases = BitString::zeros(n_pulses);
    let mut detected = BitString::zeros(n_pulses);
    let mut bob_bits = BitString::zeros(n_pulses);

    let mut knowledge = match eve {
        EveStrategy::None => EveKnowledge::None,
        EveStrategy::InterceptResend { .. } => EveKnowledge::InterceptResend {
            intercepted: BitString::zeros(n_pulses),
            bases: BasisString::from_bits(BitString::zeros(n_pulses)),
            bits: BitString::zeros(n_pulses),
        },
        EveStrategy::PerBitGuess { p_bar } => EveKnowledge::PerBitGuess {
            p_bar,
            guesses: BitString::zeros(n_pulses),
        },
        EveStrategy::Beamsplit { .. } => EveKnowledge::Beamsplit {
            tapped: BitString::zeros(n_pulses),
        },
    };

    // Bit layout of the per-pulse word: 0 alice bit, 1 alice basis, 2 bob basis,
    // 3 coin for mismatched bases; bits 11.. drive the detection draw.
    let det_threshold = (p_det * (1u64 << 53) as f64) as u64;
    for i in 0..n_pulses {
        let r = rng.next_u64();
        let a_bit = r & 1 == 1;
        let a_basis = r & 2 != 0;
        let b_basis = r & 4 != 0;
        let coin = r & 8 != 0;
        let is_detected = (r >> 11) < det_threshold;
        alice_bits.set(i, a_bit);
        alice_bases.set(i, a_basis);
        bob_bases.set(i, b_basis);

        // State reaching Bob.
        let (mut in_basis, mut in_bit) = (a_basis, a_bit);
        if let (
            EveStrategy::InterceptResend { fraction },
            EveKnowledge::InterceptResend {
                intercepted,
                bases,
                bits,
            },
        ) = (eve, &mut knowledge)
        {
            if unit_f64(&mut eve_rng) < fraction {
                let e = eve_rng.next_u64();
                let e_basis = e & 1 == 1;
                let e_bit = if e_basis == a_basis { a_bit } else { e & 2 != 0 };
                intercepted.set(i, true);
                bases.set(i, Basis::from_bit(e_basis));
                bits.set(i, e_bit);
                in_basis = e_basis;
                in_bit = e_bit;
            }
        }

        if is_detected {
            let flip = unit_f64(&mut rng) < eps;
            detected.set(i, true);
            let b = if b_basis == in_basis { in_bit ^ flip } else { coin };
            bob_bits.set(i, b);
            match (eve, &mut knowledge) {
                (EveStrategy::PerBitGuess { p_bar }, EveKnowledge::PerBitGuess { guesses, .. }) => {
                    let right = unit_f64(&mut eve_rng) < p_bar;
                    guesses.set(i, a_bit == right);
                }
                (EveStrategy::Beamsplit { tap }, EveKnowledge::Beamsplit { tapped }) => {
                    if unit_f64(&mut eve_rng) < tap {
                        tapped.set(i, true);
                    }
                }
                _ => {}
            }
        }
    }

    Ok(RawTranscript {
        alice_bits,
        alice_bases: BasisString::from_bits(alice_bases),
        bob_bases: BasisString::from_bits(bob_bases),
        detected,
        bob_bits,
        eve_knowledge: knowledge,
    })
}

/// Matched-basis detections outside `exclude`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sifted {
    pub positions: Vec<usize>,
    pub alice: BitString,
    pub bob: BitString,
}

impl Sifted {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn error_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.alice.hamming_distance(&self.bob).unwrap_or(0) as f64 / self.len() as f64
    }
}

/// Keeps detected positions not in `exclude` whose bases coincide.
pub fn sift(t: &RawTranscript, exclude: &[usize]) -> Sifted {
    let mut skip = BitString::zeros(t.n_pulses());
    for &i in exclude {
        skip.set(i, true);
    }
    let mut out = Sifted {
        positions: Vec::new(),
        alice: BitString::new(),
        bob: BitString::new(),
    };
    for i in 0..t.n_pulses() {
        if t.detected.get(i) && !skip.get(i) && t.alice_bases.get(i) == t.bob_bases.get(i) {
            out.positions.push(i);
            out.alice.push(t.alice_bits.get(i));
            out.bob.push(t.bob_bits.get(i));
        }
    }
    out
}

/// Eve's information on the sifted key, in bits.
///
/// Beamsplitting counts tapped sifted bits; per-bit guessing contributes
/// `1 - H2(p)` per sifted bit; intercept-resend counts sifted bits Eve measured
/// in the right basis.
pub fn eve_information_bits(t: &RawTranscript, eve: EveStrategy) -> f64 {
    let sifted = sift(t, &[]);
    match (&eve, &t.eve_knowledge) {
        (EveStrategy::None, _) => 0.0,
        (EveStrategy::PerBitGuess { p_bar }, _) => {
            sifted.len() as f64 * (1.0 - binary_entropy(*p_bar))
        }
        (EveStrategy::Beamsplit { .. }, EveKnowledge::Beamsplit { tapped }) => {
            sifted.positions.iter().filter(|&&i| tapped.get(i)).count() as f64
        }
        (
            EveStrategy::InterceptResend { .. },
            EveKnowledge::InterceptResend {
                intercepted, bases, ..
            },
        ) => sifted
            .positions
            .iter()
            .filter(|&&i| intercepted.get(i) && bases.get(i) == t.alice_bases.get(i))
            .count() as f64,
        _ => 0.0,
    }
}
