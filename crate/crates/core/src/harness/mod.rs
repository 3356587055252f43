//! Experiment harness behind the `ddiqkd` binary: configuration, seeded runs,
//! distillation, sweeps and attack reports. Each command returns a summary and
//! writes its artifacts under the configured output directory.

mod config;
mod session_dir;
mod sweep;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adversary::{
    attack_detection_rate, countermeasure_statistics, run_blinding_attack, run_siphoning_attack, CountermeasureConfig,
    CountermeasureReport,
};
use crate::channel::{detection_ceiling, ChannelParams, SourceParams};
use crate::error::{Error, Result};
use crate::finite_key::{FiniteKeyInput, FiniteKeyResult};
use crate::postproc::{distill_block, save_key, DistillOutcome, DistillationLog, LogRow};
use crate::protocol::{observed_x_error, phase_error_threestate, qber_z, run_session, sift, Session};

pub use config::{ExperimentConfig, OutputConfig, Scenario, SweepAxis, SweepConfig};
pub use session_dir::{load_session, save_session, SessionMeta, META_FILE, TALLY_FILE, TRANSCRIPT_FILE};
pub use sweep::{cmd_sweep, load_sweep_csv, pilot_skr, read_sweep_csv, sweep_point, write_sweep_csv, SweepRow, SWEEP_HEADER};

const DISTILL_STREAM: u64 = 1;

/// Independent seed for sub-stream `stream` of `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream + 1);
    rng.next_u64()
}

fn rate_or_nan(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub scenario: Scenario,
    pub seed: u64,
    pub rounds: u64,
    pub detections: u64,
    pub sifted: u64,
    pub qber_z: f64,
    pub qber_x: f64,
    pub phase_error: f64,
    pub duration_s: f64,
    pub conclusive_fraction: Option<f64>,
    pub eve_agreement: Option<f64>,
    pub output_dir: PathBuf,
}

impl SimulateSummary {
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }
}

fn meta_for(cfg: &ExperimentConfig, seed: u64, rounds: u64) -> SessionMeta {
    SessionMeta {
        seed,
        mu: cfg.source.mu,
        pulse_rate: cfg.source.pulse_rate,
        rounds,
        attenuation_db: cfg.channel.attenuation_db,
        distance_km: cfg.channel.distance_km,
    }
}

/// Runs the configured scenario and writes transcript, tally and metadata.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulateSummary> {
    cfg.validate()?;
    let seed = cfg.seed;
    let (session, conclusive_fraction, eve_agreement) = match cfg.scenario {
        Scenario::Honest => (
            run_session(&cfg.protocol, &cfg.source, &cfg.channel, &cfg.detectors(), seed)?,
            None,
            None,
        ),
        Scenario::Blinding => (
            run_blinding_attack(&cfg.blinding, &cfg.protocol, &cfg.source, &cfg.channel, &cfg.detectors(), seed)?,
            None,
            None,
        ),
        Scenario::Siphoning => {
            let out = run_siphoning_attack(&cfg.siphoning, &cfg.protocol, cfg.protocol.rounds, seed)?;
            let frac = attack_detection_rate(&out.tally).ok();
            let agree = out.eve_agreement().ok();
            let rounds = out.tally.rounds();
            (Session::from_records(out.tally, out.transcript, rounds), frac, agree)
        }
    };
    let dir = &cfg.output.dir;
    save_session(dir, &session, &meta_for(cfg, seed, session.rounds))?;
    let t = &session.tally;
    Ok(SimulateSummary {
        scenario: cfg.scenario,
        seed,
        rounds: session.rounds,
        detections: t.total_detections(),
        sifted: t.n_z(),
        qber_z: rate_or_nan(qber_z(t)),
        qber_x: rate_or_nan(observed_x_error(t)),
        phase_error: rate_or_nan(phase_error_threestate(t)),
        duration_s: session.duration_s(&cfg.source),
        conclusive_fraction,
        eve_agreement,
        output_dir: dir.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct DistillSummary {
    pub row: LogRow,
    pub outcome: DistillOutcome,
    pub log_path: PathBuf,
}

/// Distills a saved session: cascade, verification, finite-key bound and
/// privacy amplification. Seeded by `seed`, so a replay gives the same key.
pub fn distill_session(cfg: &ExperimentConfig, session: &Session, meta: &SessionMeta, seed: u64) -> Result<(LogRow, DistillOutcome)> {
    let sifted = sift(&session.tally, &session.transcript);
    let qber = qber_z(&session.tally).unwrap_or(0.0);
    let stats = FiniteKeyInput::from_tally(&session.tally, meta.mu, cfg.distill.eps_sec, cfg.distill.eps_cor, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, DISTILL_STREAM));
    let out = distill_block(&sifted.alice, &sifted.bob, &stats, qber, &cfg.distill, &mut rng)?;
    let duration = meta.rounds as f64 / meta.pulse_rate;
    let rec = out.reconciliation.as_ref();
    let row = LogRow {
        block: 0,
        n: sifted.alice.len() as u64,
        qber,
        disclosed: rec.map_or(0, |r| r.disclosed_bits),
        tag_bits: out.verification.map_or(0, |v| v.tag_bits),
        f_ec: rec.and_then(|r| r.efficiency),
        ell: out.ell,
        attenuation_db: meta.attenuation_db + meta.distance_km * cfg.channel.fiber_loss_db_per_km,
        skr_bps: if duration > 0.0 { out.ell as f64 / duration } else { 0.0 },
        note: out.note.clone().unwrap_or_default(),
    };
    Ok((row, out))
}

/// Distills the session stored in `session_dir` (the output directory by
/// default) and writes both secret keys and the distillation log there.
pub fn cmd_distill(cfg: &ExperimentConfig, session_dir: Option<&Path>) -> Result<DistillSummary> {
    cfg.validate()?;
    let dir = session_dir.unwrap_or(&cfg.output.dir);
    let (session, meta) = load_session(dir)?;
    let (row, outcome) = distill_session(cfg, &session, &meta, meta.seed)?;
    save_key(&dir.join("alice_secret.key"), &outcome.alice_secret.bits)?;
    save_key(&dir.join("bob_secret.key"), &outcome.bob_secret.bits)?;
    let log_path = dir.join("distill.log");
    let log = DistillationLog { rows: vec![row.clone()] };
    let f = std::fs::File::create(&log_path).map_err(|e| Error::file(&log_path, e))?;
    log.write_to(std::io::BufWriter::new(f))?;
    Ok(DistillSummary { row, outcome, log_path })
}

/// Evaluates the finite-key bound on a stored flat record.
pub fn cmd_finite_key(input: &Path) -> Result<FiniteKeyResult> {
    FiniteKeyInput::load(input)?.evaluate()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub rounds: u64,
    pub qber_z: f64,
    pub qber_x: f64,
    pub conclusive_fraction: Option<f64>,
    pub eve_agreement: Option<f64>,
    pub countermeasure: Option<CountermeasureReport>,
}

impl AttackReport {
    pub fn to_record(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    /// One-line verdict table for the terminal.
    pub fn verdict_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10} {:>10} {:>8} {:>8} {:>10} {:>8}", "scenario", "rounds", "qber_z", "qber_x", "chi2_p", "verdict");
        let (p, v) = match &self.countermeasure {
            Some(c) => (format!("{:.3e}", c.p_value), format!("{:?}", c.verdict).to_lowercase()),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            s,
            "{:<10} {:>10} {:>8.4} {:>8.4} {:>10} {:>8}",
            format!("{:?}", self.scenario).to_lowercase(),
            self.rounds,
            self.qber_z,
            self.qber_x,
            p,
            v
        );
        s
    }
}

/// Countermeasure settings with the ceiling taken from the calibrated model.
pub fn calibrated_countermeasure(cfg: &ExperimentConfig, source: &SourceParams, channel: &ChannelParams) -> CountermeasureConfig {
    CountermeasureConfig {
        click_ceiling: Some(detection_ceiling(source, channel, &cfg.blinding.mask(&cfg.detectors()))),
        enabled: cfg.blinding.enabled,
        ..cfg.countermeasure
    }
}

/// Runs the configured scenario and checks it against the detection statistics.
pub fn cmd_attack(cfg: &ExperimentConfig) -> Result<AttackReport> {
    cfg.validate()?;
    let seed = cfg.seed;
    let cm = calibrated_countermeasure(cfg, &cfg.source, &cfg.channel);
    let report = match cfg.scenario {
        Scenario::Siphoning => {
            let out = run_siphoning_attack(&cfg.siphoning, &cfg.protocol, cfg.protocol.rounds, seed)?;
            AttackReport {
                scenario: cfg.scenario,
                seed,
                rounds: out.tally.rounds(),
                qber_z: rate_or_nan(qber_z(&out.tally)),
                qber_x: rate_or_nan(observed_x_error(&out.tally)),
                conclusive_fraction: attack_detection_rate(&out.tally).ok(),
                eve_agreement: out.eve_agreement().ok(),
                countermeasure: None,
            }
        }
        Scenario::Honest | Scenario::Blinding => {
            let s = if cfg.scenario == Scenario::Honest {
                run_session(&cfg.protocol, &cfg.source, &cfg.channel, &cfg.blinding.mask(&cfg.detectors()), seed)?
            } else {
                run_blinding_attack(&cfg.blinding, &cfg.protocol, &cfg.source, &cfg.channel, &cfg.detectors(), seed)?
            };
            AttackReport {
                scenario: cfg.scenario,
                seed,
                rounds: s.rounds,
                qber_z: rate_or_nan(qber_z(&s.tally)),
                qber_x: rate_or_nan(observed_x_error(&s.tally)),
                conclusive_fraction: None,
                eve_agreement: None,
                countermeasure: Some(countermeasure_statistics(&s.tally, &cm)?),
            }
        }
    };
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let p = dir.join("attack_report.toml");
    std::fs::write(&p, report.to_record()).map_err(|e| Error::file(&p, e))?;
    Ok(report)
}
