use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_index, ChannelParams, DetectorArray, DetectorMode, DetectorModel, SourceParams};
use crate::error::{Error, Result};
use crate::protocol::{run_session, ProtocolConfig, Session, TallyMatrix, Transcript, TranscriptRow};
use crate::quantum::{Basis, BellOutcome, BellTable, ProtocolState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlindingConfig {
    /// Continuous blinding light; zero leaves the detectors in Geiger mode.
    pub blinding_power: f64,
    /// Faked-pulse energy per Eve outcome (H, V, +, −); chosen from the
    /// thresholds when absent.
    pub pulse_energies: Option<[f64; 4]>,
    /// Linear-mode thresholds per Bell output.
    pub thresholds: [f64; 4],
    /// Outputs present in Bob's analyzer.
    pub enabled: [bool; 4],
}

impl Default for BlindingConfig {
    fn default() -> Self {
        Self {
            blinding_power: 1.0,
            pulse_energies: None,
            thresholds: [1.0; 4],
            enabled: [true; 4],
        }
    }
}

impl BlindingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.blinding_power >= 0.0) {
            return Err(Error::invalid("blinding_power must be >= 0"));
        }
        if self.thresholds.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::invalid("thresholds must be positive and finite"));
        }
        if let Some(e) = self.pulse_energies {
            if e.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::invalid("pulse energies must be >= 0"));
            }
        }
        if !self.enabled.iter().any(|&x| x) {
            return Err(Error::invalid("at least one output must be enabled"));
        }
        Ok(())
    }

    /// Faked-pulse energy for each Eve outcome.
    pub fn energies(&self) -> [f64; 4] {
        self.pulse_energies.unwrap_or([faked_pulse_energy(&self.thresholds, &self.enabled); 4])
    }

    /// Detectors as Bob would run them honestly, with absent outputs disabled.
    pub fn mask(&self, detectors: &[DetectorModel; 4]) -> [DetectorModel; 4] {
        let mut d = *detectors;
        for (i, m) in d.iter_mut().enumerate() {
            if !self.enabled[i] {
                *m = DetectorModel::disabled();
            }
        }
        d
    }
}

/// Energy that makes half-pulse ports click and quarter-pulse ports stay dark.
///
/// With equal thresholds `t` this is `3t`, so both ports of a matched-basis
/// pair fire together. With unequal thresholds it is the midpoint of
/// `(2·t_min, min(2·t_max, 4·t_min))`, so only the lower-threshold port of a
/// pair fires.
pub fn faked_pulse_energy(thresholds: &[f64; 4], enabled: &[bool; 4]) -> f64 {
    let active = thresholds.iter().zip(enabled).filter(|(_, &e)| e).map(|(&t, _)| t);
    let lo = active.clone().fold(f64::INFINITY, f64::min);
    let hi = active.fold(0.0, f64::max);
    if hi - lo <= 1e-12 * lo {
        3.0 * lo
    } else {
        (2.0 * lo + (2.0 * hi).min(4.0 * lo)) / 2.0
    }
}

/// Faked-state attack on blinded detectors.
///
/// Eve measures every pulse in a random basis and resends a bright pulse in
/// her outcome state. Bob's transformation splits its energy over the Bell
/// outputs in the honest proportions, and each blinded detector fires when its
/// share exceeds its threshold. Double clicks are assigned at random as Bob
/// would. With zero blinding power the honest session is returned for the
/// same seed.
pub fn run_blinding_attack(
    config: &BlindingConfig,
    protocol: &ProtocolConfig,
    source: &SourceParams,
    channel: &ChannelParams,
    detectors: &[DetectorModel; 4],
    seed: u64,
) -> Result<Session> {
    config.validate()?;
    if config.blinding_power == 0.0 {
        return run_session(protocol, source, channel, &config.mask(detectors), seed);
    }
    protocol.validate()?;
    source.validate()?;
    let linear = config.thresholds.map(|t| DetectorModel {
        mode: DetectorMode::Linear,
        threshold: t,
        ..DetectorModel::ideal()
    });
    let mut array = DetectorArray::new(linear, source.pulse_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = BellTable::compute();
    let alice_p = protocol.alice_distribution();
    let bob_p = protocol.bob_distribution();
    let energy = config.energies();

    let mut tally = TallyMatrix::new();
    let mut transcript = Transcript::new();
    for round in 0..protocol.rounds {
        let a = ProtocolState::from_index(sample_index(&alice_p, &mut rng));
        let b = ProtocolState::from_index(sample_index(&bob_p, &mut rng));
        let eve_basis = if rng.random::<bool>() { Basis::Z } else { Basis::X };
        let e = if eve_basis == a.basis() {
            a
        } else {
            ProtocolState::from_basis_bit(eve_basis, rng.random_range(0..2))
        };
        let dist = table.get(e, b);
        let mut port = [0.0; 4];
        for o in 0..4 {
            if config.enabled[o] {
                port[o] = energy[e.index()] * dist[o];
            }
        }
        let mut ev = array.detect_linear(round, &port)?;
        if ev.double_click {
            let k = rng.random_range(0..ev.clicked.len());
            ev.assigned = ev.clicked.nth(k).map(BellOutcome::from_index);
        }
        tally.record(a, b, &ev);
        if let (Some(outcome), true) = (ev.assigned, protocol.record_transcript) {
            transcript.push(TranscriptRow { index: round, alice: a, bob: b, outcome, double_click: ev.double_click });
        }
    }
    Ok(Session::from_records(tally, transcript, protocol.rounds))
}
