//! The round-by-round protocol: state choices, physical simulation, sifting and
//! the error-rate estimators fed by the tally matrix.

mod estimators;
mod session;
mod tally;
mod transcript;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::quantum::ProtocolState;

pub use estimators::{observed_x_error, phase_error_threestate, qber_x_fourstate, qber_z};
pub use session::{effective_alice_state, run_session, sift, BasisCounts, Session, SiftedKeys};
pub use tally::{TallyMatrix, DOUBLE_SLOT, NONE_SLOT, SLOTS};
pub use transcript::{Transcript, TranscriptRow};

/// Alice's state alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AliceStates {
    /// H, V and + only.
    #[default]
    ThreeState,
    FourState,
}

/// How the physical layer is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Draw the photon number, thin it and route every photon, pulse by pulse.
    PhotonLevel,
    /// Jump between pulses that can produce a click; statistically identical
    /// to `PhotonLevel` and fast at low detection probability.
    #[default]
    EventSkipping,
}

/// Basis used by an intercept-resend eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterceptResend {
    /// Z or X with probability 1/2 each.
    RandomBasis,
    ZOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Alice's probability of choosing the Z basis.
    pub z_basis_prob: f64,
    /// Bob's probability of choosing the Z basis.
    pub bob_z_basis_prob: f64,
    pub alice_states: AliceStates,
    /// Number of pulses; a hard cap when `target_sifted` is set.
    pub rounds: u64,
    /// Stop as soon as this many Z-matched detections have been collected.
    pub target_sifted: Option<u64>,
    pub engine: Engine,
    pub record_transcript: bool,
    pub intercept: Option<InterceptResend>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            z_basis_prob: 0.875,
            bob_z_basis_prob: 0.875,
            alice_states: AliceStates::ThreeState,
            rounds: 1_000_000,
            target_sifted: None,
            engine: Engine::EventSkipping,
            record_transcript: true,
            intercept: None,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("z_basis_prob", self.z_basis_prob),
            ("bob_z_basis_prob", self.bob_z_basis_prob),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {p}")));
            }
        }
        if self.rounds == 0 {
            return Err(Error::invalid("session needs at least one round"));
        }
        if self.target_sifted == Some(0) {
            return Err(Error::invalid("target_sifted must be positive"));
        }
        Ok(())
    }

    /// Alice's selection probabilities indexed by [`ProtocolState::index`].
    pub fn alice_distribution(&self) -> [f64; 4] {
        let z = self.z_basis_prob;
        match self.alice_states {
            AliceStates::ThreeState => [z / 2.0, z / 2.0, 1.0 - z, 0.0],
            AliceStates::FourState => [z / 2.0, z / 2.0, (1.0 - z) / 2.0, (1.0 - z) / 2.0],
        }
    }

    pub fn bob_distribution(&self) -> [f64; 4] {
        let z = self.bob_z_basis_prob;
        [z / 2.0, z / 2.0, (1.0 - z) / 2.0, (1.0 - z) / 2.0]
    }

    pub fn alice_alphabet(&self) -> &'static [ProtocolState] {
        match self.alice_states {
            AliceStates::ThreeState => &ProtocolState::ALL[..3],
            AliceStates::FourState => &ProtocolState::ALL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyRole {
    Raw,
    Sifted,
    Corrected,
    Secret,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// A bit string tagged with its stage in the pipeline and its owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyBlock {
    pub bits: BitString,
    pub role: KeyRole,
    pub party: Party,
    pub block_id: u64,
}

impl KeyBlock {
    pub fn new(bits: BitString, role: KeyRole, party: Party, block_id: u64) -> Self {
        Self {
            bits,
            role,
            party,
            block_id,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Same owner and id, new contents and role.
    pub fn derive(&self, bits: BitString, role: KeyRole) -> Self {
        Self {
            bits,
            role,
            party: self.party,
            block_id: self.block_id,
        }
    }
}
