use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::channel::sample_index;
use crate::error::{Error, Result};
use crate::protocol::{sift, ProtocolConfig, SiftedKeys, TallyMatrix, Transcript, TranscriptRow};
use crate::quantum::{alice_bit, bell_outcome_distribution, usd_success_lower_bound, Basis, BellOutcome, ProtocolState};

/// Eve's photon-number encoding of her measurement result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiphoningConfig {
    /// Photon number injected for Eve's outcome H, V, +, −.
    pub photon_encoding: [u32; 4],
    /// Replaces the USD success bound when set.
    pub usd_success_override: Option<f64>,
}

impl Default for SiphoningConfig {
    fn default() -> Self {
        Self {
            photon_encoding: [11, 13, 15, 17],
            usd_success_override: None,
        }
    }
}

impl SiphoningConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.photon_encoding;
        if let Some(&bad) = n.iter().find(|&&k| k < 3) {
            return Err(Error::invalid(format!("photon numbers must be >= 3, got {bad}")));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if n[i] == n[j] {
                    return Err(Error::invalid(format!("photon numbers must be distinct, {} repeats", n[i])));
                }
            }
        }
        if let Some(p) = self.usd_success_override {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("usd_success_override must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    fn usd_success(&self, state: ProtocolState) -> Result<f64> {
        match self.usd_success_override {
            Some(p) => Ok(p),
            None => usd_success_lower_bound(self.photon_encoding[state.index()]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SiphoningOutcome {
    pub tally: TallyMatrix,
    pub transcript: Transcript,
    pub sifted: SiftedKeys,
    /// Eve's guess of every sifted bit, aligned with `sifted`.
    pub eve_key: BitString,
    /// Per round: did Fred announce a Bell outcome.
    pub conclusive: Vec<bool>,
}

impl SiphoningOutcome {
    /// Fraction of sifted bits Eve holds correctly.
    pub fn eve_agreement(&self) -> Result<f64> {
        let n = self.sifted.alice.len();
        if n == 0 {
            return Err(Error::UndefinedRate("no sifted bits"));
        }
        let wrong = self.eve_key.hamming_distance(&self.sifted.alice.bits)?;
        Ok(1.0 - wrong as f64 / n as f64)
    }
}

/// Intercept-resend with photon-number tagging plus a detection unit that reads
/// Bob's setting by unambiguous discrimination.
///
/// Eve measures each pulse in a random basis and resends `n_j` photons in her
/// outcome state. Fred decodes `n_j`, attempts USD on Bob's transformation and,
/// on success with Eve's basis equal to Bob's, announces a Bell outcome drawn
/// from the honest distribution for (Eve's state, Bob's state). All other
/// rounds are announced inconclusive.
pub fn run_siphoning_attack(
    config: &SiphoningConfig,
    protocol: &ProtocolConfig,
    rounds: u64,
    seed: u64,
) -> Result<SiphoningOutcome> {
    config.validate()?;
    protocol.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alice_p = protocol.alice_distribution();
    let bob_p = protocol.bob_distribution();
    let success: Vec<f64> = ProtocolState::ALL
        .iter()
        .map(|&s| config.usd_success(s))
        .collect::<Result<_>>()?;

    let mut tally = TallyMatrix::new();
    let mut transcript = Transcript::new();
    let mut conclusive = Vec::with_capacity(rounds as usize);
    let mut eve_states = Vec::new();
    for round in 0..rounds {
        let a = ProtocolState::from_index(sample_index(&alice_p, &mut rng));
        let b = ProtocolState::from_index(sample_index(&bob_p, &mut rng));
        let eve_basis = if rng.random::<bool>() { Basis::Z } else { Basis::X };
        let e = if eve_basis == a.basis() {
            a
        } else {
            ProtocolState::from_basis_bit(eve_basis, rng.random_range(0..2))
        };
        let usd_ok = rng.random::<f64>() < success[e.index()];
        if usd_ok && eve_basis == b.basis() {
            let o = BellOutcome::from_index(sample_index(&bell_outcome_distribution(e, b), &mut rng));
            tally.add_outcome(a, b, o, false, 1);
            transcript.push(TranscriptRow { index: round, alice: a, bob: b, outcome: o, double_click: false });
            eve_states.push(e);
            conclusive.push(true);
        } else {
            tally.add_no_click(a, b, 1);
            conclusive.push(false);
        }
    }

    let sifted = sift(&tally, &transcript);
    let eve_key: BitString = transcript
        .rows
        .iter()
        .zip(&eve_states)
        .filter(|(r, _)| r.alice.basis() == Basis::Z && r.bob.basis() == Basis::Z)
        .map(|(_, &e)| alice_bit(e))
        .collect();
    Ok(SiphoningOutcome { tally, transcript, sifted, eve_key, conclusive })
}

/// Fraction of rounds with an announced Bell outcome.
pub fn attack_detection_rate(tally: &TallyMatrix) -> Result<f64> {
    let rounds = tally.rounds();
    if rounds == 0 {
        return Err(Error::UndefinedRate("no rounds"));
    }
    Ok(tally.total_detections() as f64 / rounds as f64)
}
