//! Simulation and key distillation for detector-device-independent QKD.
//!
//! Alice and Bob each prepare BB84-type polarization qubits and send them to
//! an untrusted Bell-state analyzer. Bob keeps his qubit's preparation secret,
//! so every detector-side attack is reduced to a relay that can only announce
//! Bell outcomes. The crate covers the physics ([`quantum`], [`channel`]), the
//! protocol run and its estimators ([`protocol`]), finite-size key rates
//! ([`finite_key`]), classical post-processing ([`postproc`]), attacks on the
//! relay ([`adversary`]) and the experiment harness behind the `ddiqkd` binary
//! ([`harness`]).

pub mod adversary;
pub mod bits;
pub mod channel;
pub mod error;
pub mod finite_key;
pub mod harness;
pub mod postproc;
pub mod protocol;
pub mod quantum;
mod sampling;

pub use error::{Error, Result};
