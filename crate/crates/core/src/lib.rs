//! Simulation laboratory for identification protocols that refuel their
//! one-time secrets through BB84 quantum key distribution.
//!
//! The crate covers the raw quantum transmission ([`channel`]), the
//! unjammable-channel identification exchange ([`protocol1`]), the
//! orthogonal-array authentication code ([`auth`]), Bayesian error-rate
//! acceptance limits ([`estimation`]), the authenticated identification and
//! key-refuelling session ([`protocol2`]) and the closed-form deception and key
//! budget analysis ([`analysis`]).

pub mod analysis;
pub mod auth;
pub mod bits;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod math;
pub mod pool;
pub mod protocol1;
pub mod protocol2;
pub mod rng;

pub use bits::{Basis, BasisString, BitString};
pub use error::{Error, Result};
pub use pool::{pointer_sync, SecretPool, Triad};
pub use rng::{random_bitstring, RngSeed, Stream};
