use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::{Engine, InterceptResend, KeyBlock, KeyRole, Party, ProtocolConfig, TallyMatrix, Transcript, TranscriptRow};
use crate::bits::BitString;
use crate::channel::{
    draw_photon_number, sample_clicks_given_any, sample_index, transmit, ChannelParams, DetectionEvent,
    DetectorArray, DetectorModel, SourceParams,
};
use crate::error::{Error, Result};
use crate::quantum::{alice_bit, decode_bit, Basis, BellTable, ProtocolState};
use crate::sampling::multinomial;

/// Everything a session produces.
#[derive(Debug, Clone)]
pub struct Session {
    pub tally: TallyMatrix,
    pub transcript: Transcript,
    /// Alice's bit for every transcript row.
    pub raw_alice: KeyBlock,
    /// Bob's decoded bit for every transcript row.
    pub raw_bob: KeyBlock,
    /// Pulses actually sent.
    pub rounds: u64,
}

impl Session {
    /// Derives both raw keys from the transcript.
    pub fn from_records(tally: TallyMatrix, transcript: Transcript, rounds: u64) -> Self {
        let raw_alice: BitString = transcript.rows.iter().map(|r| alice_bit(r.alice)).collect();
        let raw_bob: BitString = transcript.rows.iter().map(|r| decode_bit(r.bob, r.outcome)).collect();
        Self {
            tally,
            transcript,
            raw_alice: KeyBlock::new(raw_alice, KeyRole::Raw, Party::Alice, 0),
            raw_bob: KeyBlock::new(raw_bob, KeyRole::Raw, Party::Bob, 0),
            rounds,
        }
    }

    /// Simulated acquisition time at the source's pulse rate.
    pub fn duration_s(&self, source: &SourceParams) -> f64 {
        self.rounds as f64 / source.pulse_rate
    }
}

/// Alice's state as it reaches Bob after an optional intercept-resend and the
/// channel's Pauli errors.
pub fn effective_alice_state<R: Rng + ?Sized>(
    alice: ProtocolState,
    channel: &ChannelParams,
    intercept: Option<InterceptResend>,
    rng: &mut R,
) -> ProtocolState {
    let mut s = alice;
    if let Some(mode) = intercept {
        let eve_basis = match mode {
            InterceptResend::ZOnly => Basis::Z,
            InterceptResend::RandomBasis => {
                if rng.random::<bool>() {
                    Basis::Z
                } else {
                    Basis::X
                }
            }
        };
        if eve_basis != s.basis() {
            s = ProtocolState::from_basis_bit(eve_basis, rng.random_range(0..2));
        }
    }
    if channel.bit_flip_prob > 0.0 && rng.random::<f64>() < channel.bit_flip_prob {
        s = s.bit_flipped();
    }
    if channel.phase_flip_prob > 0.0 && rng.random::<f64>() < channel.phase_flip_prob {
        s = s.phase_flipped();
    }
    s
}

struct Recorder {
    tally: TallyMatrix,
    transcript: Transcript,
    keep_transcript: bool,
    sifted: u64,
}

impl Recorder {
    fn record(&mut self, alice: ProtocolState, bob: ProtocolState, event: &DetectionEvent) {
        self.tally.record(alice, bob, event);
        if let Some(outcome) = event.assigned {
            if alice.basis() == Basis::Z && bob.basis() == Basis::Z {
                self.sifted += 1;
            }
            if self.keep_transcript {
                self.transcript.push(TranscriptRow {
                    index: event.round_index,
                    alice,
                    bob,
                    outcome,
                    double_click: event.double_click,
                });
            }
        }
    }
}

/// Runs one seeded session of the protocol.
pub fn run_session(
    config: &ProtocolConfig,
    source: &SourceParams,
    channel: &ChannelParams,
    detectors: &[DetectorModel; 4],
    seed: u64,
) -> Result<Session> {
    config.validate()?;
    source.validate()?;
    channel.validate()?;
    let mut array = DetectorArray::new(*detectors, source.pulse_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = BellTable::compute();
    let alice_p = config.alice_distribution();
    let bob_p = config.bob_distribution();
    let mut rec = Recorder {
        tally: TallyMatrix::new(),
        transcript: Transcript::new(),
        keep_transcript: config.record_transcript,
        sifted: 0,
    };
    let target = config.target_sifted.unwrap_or(u64::MAX);
    let limit = config.rounds;

    let rounds = match config.engine {
        Engine::PhotonLevel => {
            let mut round = 0;
            while round < limit && rec.sifted < target {
                let a = ProtocolState::from_index(sample_index(&alice_p, &mut rng));
                let b = ProtocolState::from_index(sample_index(&bob_p, &mut rng));
                let eff = effective_alice_state(a, channel, config.intercept, &mut rng);
                let k = draw_photon_number(source, &mut rng);
                let arriving = transmit(k, channel, &mut rng);
                let ev = array.detect(round, table.get(eff, b), arriving, &mut rng);
                rec.record(a, b, &ev);
                round += 1;
            }
            round
        }
        Engine::EventSkipping => {
            let mean_arrivals = source.mu * channel.transmittance();
            let p_max = array.max_event_probability(mean_arrivals);
            if p_max <= 0.0 {
                if config.target_sifted.is_some() {
                    return Err(Error::invalid("no clicks possible: target_sifted unreachable"));
                }
                spread_no_clicks(&mut rec.tally, limit, &alice_p, &bob_p, &mut rng);
                limit
            } else {
                let gaps = Geometric::new(p_max.min(1.0))
                    .map_err(|e| Error::invalid(format!("event probability {p_max}: {e}")))?;
                let mut round = 0u64;
                let mut skipped = 0u64;
                while round < limit && rec.sifted < target {
                    // no click is possible while every detector is dead
                    let live = array.next_live_round(round).min(limit);
                    skipped += live - round;
                    round = live;
                    if round == limit {
                        break;
                    }
                    let gap = gaps.sample(&mut rng);
                    if gap >= limit - round {
                        skipped += limit - round;
                        round = limit;
                        break;
                    }
                    skipped += gap;
                    round += gap;

                    let a = ProtocolState::from_index(sample_index(&alice_p, &mut rng));
                    let b = ProtocolState::from_index(sample_index(&bob_p, &mut rng));
                    let eff = effective_alice_state(a, channel, config.intercept, &mut rng);
                    let c = array.click_probabilities(round, table.get(eff, b), mean_arrivals);
                    let p_event = 1.0 - c.iter().map(|p| 1.0 - p).product::<f64>();
                    if rng.random::<f64>() * p_max < p_event {
                        let clicks = sample_clicks_given_any(&c, &mut rng);
                        let ev = array.register(round, clicks, &mut rng);
                        rec.record(a, b, &ev);
                    } else {
                        rec.tally.add_no_click(a, b, 1);
                    }
                    round += 1;
                }
                spread_no_clicks(&mut rec.tally, skipped, &alice_p, &bob_p, &mut rng);
                round
            }
        }
    };

    Ok(Session::from_records(rec.tally, rec.transcript, rounds))
}

/// Distributes `n` undetected pulses over the (alice, bob) cells.
fn spread_no_clicks<R: Rng + ?Sized>(tally: &mut TallyMatrix, n: u64, alice_p: &[f64; 4], bob_p: &[f64; 4], rng: &mut R) {
    if n == 0 {
        return;
    }
    let mut probs = [0.0; 16];
    for a in 0..4 {
        for b in 0..4 {
            probs[a * 4 + b] = alice_p[a] * bob_p[b];
        }
    }
    for (k, c) in multinomial(n, &probs, rng).into_iter().enumerate() {
        if c > 0 {
            tally.add_no_click(ProtocolState::from_index(k / 4), ProtocolState::from_index(k % 4), c);
        }
    }
}

/// Detection counts split by basis agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BasisCounts {
    pub z_matched: u64,
    pub x_matched: u64,
    pub mismatched: u64,
    /// Pulses (detected or not) with both parties in Z.
    pub signals_z: u64,
    pub signals_x: u64,
}

#[derive(Debug, Clone)]
pub struct SiftedKeys {
    pub alice: KeyBlock,
    pub bob: KeyBlock,
    pub counts: BasisCounts,
}

/// Keeps Z-matched detections as key; everything else is for estimation only.
pub fn sift(tally: &TallyMatrix, transcript: &Transcript) -> SiftedKeys {
    let mut alice = BitString::with_capacity(transcript.len());
    let mut bob = BitString::with_capacity(transcript.len());
    let mut counts = BasisCounts {
        signals_z: tally.signals_z(),
        signals_x: tally.signals_x(),
        ..Default::default()
    };
    for r in &transcript.rows {
        match (r.alice.basis(), r.bob.basis()) {
            (Basis::Z, Basis::Z) => {
                counts.z_matched += 1;
                alice.push(alice_bit(r.alice));
                bob.push(decode_bit(r.bob, r.outcome));
            }
            (Basis::X, Basis::X) => counts.x_matched += 1,
            _ => counts.mismatched += 1,
        }
    }
    SiftedKeys {
        alice: KeyBlock::new(alice, KeyRole::Sifted, Party::Alice, 0),
        bob: KeyBlock::new(bob, KeyRole::Sifted, Party::Bob, 0),
        counts,
    }
}
