//! Scripted adversaries: an eavesdropping strategy on the quantum channel
//! plus an optional hook that may rewrite any public message in flight.

use std::fmt;

use rand::RngCore;

use super::wire::{Kind, PublicMessage};
use crate::auth::M61;
use crate::bits::BitString;
use crate::channel::{EveKnowledge, EveStrategy, RawTranscript};
use crate::protocol1::Role;
use crate::rng::SimRng;

/// What the adversary can see when a message passes by.
pub struct EveView<'a> {
    pub from: Role,
    pub transcript: &'a RawTranscript,
    pub rng: &'a mut SimRng,
}

pub type TamperHook = Box<dyn FnMut(&mut PublicMessage, &mut EveView<'_>)>;

pub struct AdversaryScript {
    pub eve: EveStrategy,
    pub hook: Option<TamperHook>,
}

impl fmt::Debug for AdversaryScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdversaryScript")
            .field("eve", &self.eve)
            .field("hook", &self.hook.is_some())
            .finish()
    }
}

impl Default for AdversaryScript {
    fn default() -> Self {
        Self::honest()
    }
}

impl AdversaryScript {
    pub fn honest() -> Self {
        Self {
            eve: EveStrategy::None,
            hook: None,
        }
    }

    pub fn passive(eve: EveStrategy) -> Self {
        Self { eve, hook: None }
    }

    /// Flips bit `target` (see [`PublicMessage::flip_bit`]) of the first
    /// message of `kind`.
    pub fn flip_bit(kind: Kind, target: usize) -> Self {
        let mut done = false;
        Self {
            eve: EveStrategy::None,
            hook: Some(Box::new(move |msg, _| {
                if msg.kind == kind && !done {
                    msg.flip_bit(target);
                    done = true;
                }
            })),
        }
    }

    /// Eve measures every pulse and keeps a separate sifted key with each
    /// party. To hide the errors her resending causes, she replaces Alice's
    /// announced subset bases and bits with the states she sent Bob, and
    /// guesses a tag for the altered message. With `forge_discussion` off she
    /// relays the authenticated messages untouched and relies on luck in the
    /// error estimate instead.
    pub fn three_party_sifting(forge_discussion: bool) -> Self {
        let mut positions: Option<Vec<usize>> = None;
        Self {
            eve: EveStrategy::InterceptResend { fraction: 1.0 },
            hook: Some(Box::new(move |msg, view| {
                if !forge_discussion {
                    return;
                }
                match msg.kind {
                    Kind::Positions => positions = super::parse_positions_any(&msg.payload, view.transcript.n_pulses()),
                    Kind::BasesAndBits => {
                        let (Some(pos), EveKnowledge::InterceptResend { bases, bits, .. }) =
                            (&positions, &view.transcript.eve_knowledge)
                        else {
                            return;
                        };
                        let mut forged = BitString::with_capacity(2 * pos.len());
                        for &i in pos {
                            forged.push(bases.get(i).bit());
                            forged.push(bits.get(i));
                        }
                        if forged.len() == msg.payload.len() {
                            msg.payload = forged;
                            msg.tag = msg.tag.map(|_| crate::auth::Tag(view.rng.next_u64() % M61));
                        }
                    }
                    _ => {}
                }
            })),
        }
    }
}
