use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, distill_session, save_session, ExperimentConfig, SessionMeta, SweepAxis};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::finite_key::{binary_entropy, optimize_mu, FiniteKeyInput, MuChoice};
use crate::protocol::{observed_x_error, qber_z, run_session, ProtocolConfig, TallyMatrix};

pub const SWEEP_HEADER: &str = "# ddiqkd sweep v1";

/// Pulse cap for runs that stop on a sifted-bit target.
const ROUND_CAP: u64 = 1 << 52;

/// One sweep point. Failures leave the numeric fields at zero or NaN and put
/// the reason in `note`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub attenuation_db: f64,
    pub distance_km: f64,
    pub skr_bps: f64,
    pub qber_z: f64,
    pub qber_x: f64,
    pub ell: u64,
    pub mu_opt: f64,
    pub rounds: u64,
    pub seed: u64,
    pub note: String,
}

fn point_channel(cfg: &ExperimentConfig, x: f64) -> ChannelParams {
    let mut ch = cfg.channel.clone();
    match cfg.sweep.axis {
        SweepAxis::AttenuationDb => ch.attenuation_db = x,
        SweepAxis::DistanceKm => ch.distance_km = x,
    }
    ch
}

fn targeted(cfg: &ExperimentConfig, sifted: u64, transcript: bool) -> ProtocolConfig {
    ProtocolConfig {
        rounds: ROUND_CAP,
        target_sifted: Some(sifted),
        record_transcript: transcript,
        ..cfg.protocol.clone()
    }
}

/// Finite-key record for a pilot tally scaled up by `k`, with the leak
/// projected as `f·n·h₂(QBER)`.
fn projected_input(t: &TallyMatrix, mu: f64, k: f64, cfg: &ExperimentConfig) -> Option<FiniteKeyInput> {
    let s = |x: u64| (x as f64 * k).round() as u64;
    let q = qber_z(t).ok()?;
    let n_z = s(t.n_z());
    let leak = (cfg.sweep.pilot_ec_efficiency * n_z as f64 * binary_entropy(q).ok()?).ceil() as u64;
    let base = FiniteKeyInput::from_tally(t, mu, cfg.distill.eps_sec, cfg.distill.eps_cor, leak);
    Some(FiniteKeyInput {
        n_z,
        signals_z: s(base.signals_z),
        n_x: s(base.n_x),
        signals_x: s(base.signals_x),
        m_plus_h: s(base.m_plus_h),
        m_plus_v: s(base.m_plus_v),
        m_minus_plus: s(base.m_minus_plus),
        m_x_h: s(base.m_x_h),
        m_x_v: s(base.m_x_v),
        m_x_plus: s(base.m_x_plus),
        signals_x_h: s(base.signals_x_h),
        signals_x_v: s(base.signals_x_v),
        signals_x_plus: s(base.signals_x_plus),
        mode: cfg.distill.mode,
        ..base
    })
}

/// Projected secret key rate at intensity `mu`, from a pilot run scaled to
/// one block.
pub fn pilot_skr(cfg: &ExperimentConfig, channel: &ChannelParams, mu: f64, seed: u64) -> f64 {
    let source = cfg.source.clone().with_mu(mu);
    let proto = targeted(cfg, cfg.sweep.pilot_sifted, false);
    let Ok(s) = run_session(&proto, &source, channel, &cfg.detectors(), seed) else {
        return 0.0;
    };
    let n = s.tally.n_z();
    if n == 0 {
        return 0.0;
    }
    let k = cfg.block_size as f64 / n as f64;
    let Some(input) = projected_input(&s.tally, mu, k, cfg) else {
        return 0.0;
    };
    match input.evaluate() {
        Ok(r) => r.ell as f64 * source.pulse_rate / (s.rounds as f64 * k),
        Err(_) => 0.0,
    }
}

/// Chooses μ on pilot runs, then simulates and distills one full block.
pub fn sweep_point(cfg: &ExperimentConfig, x: f64, seed: u64) -> SweepRow {
    let channel = point_channel(cfg, x);
    let mut row = SweepRow {
        attenuation_db: channel.attenuation_db,
        distance_km: channel.distance_km,
        skr_bps: 0.0,
        qber_z: f64::NAN,
        qber_x: f64::NAN,
        ell: 0,
        mu_opt: f64::NAN,
        rounds: 0,
        seed,
        note: String::new(),
    };
    if let Err(e) = run_point(cfg, &channel, seed, &mut row) {
        row.note = format!("error: {e}");
    }
    row
}

fn run_point(cfg: &ExperimentConfig, channel: &ChannelParams, seed: u64, row: &mut SweepRow) -> Result<()> {
    // Same pilot seed for every μ, so the comparison uses common random numbers.
    let pilot_seed = derive_seed(seed, 0);
    let MuChoice { mu, no_key, .. } = optimize_mu(&cfg.sweep.grid(), |mu| pilot_skr(cfg, channel, mu, pilot_seed))?;
    row.mu_opt = mu;
    let source = cfg.source.clone().with_mu(mu);
    let run_seed = derive_seed(seed, 1);
    let session = run_session(&targeted(cfg, cfg.block_size, true), &source, channel, &cfg.detectors(), run_seed)?;
    row.rounds = session.rounds;
    row.qber_z = qber_z(&session.tally).unwrap_or(f64::NAN);
    row.qber_x = observed_x_error(&session.tally).unwrap_or(f64::NAN);
    let meta = SessionMeta {
        seed: run_seed,
        mu,
        pulse_rate: source.pulse_rate,
        rounds: session.rounds,
        attenuation_db: channel.attenuation_db,
        distance_km: channel.distance_km,
    };
    if cfg.sweep.save_sessions {
        let dir = cfg.output.dir.join(format!("point-{:.3}-{:.3}", channel.attenuation_db, channel.distance_km));
        save_session(&dir, &session, &meta)?;
    }
    let (log, _) = distill_session(cfg, &session, &meta, run_seed)?;
    row.ell = log.ell;
    row.skr_bps = log.skr_bps;
    row.note = match (no_key, log.note.is_empty()) {
        (true, true) => "pilot search found no key at any mu".into(),
        (true, false) => format!("pilot search found no key at any mu; {}", log.note),
        _ => log.note,
    };
    Ok(())
}

/// Runs every configured point in parallel and writes `sweep.csv`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let rows: Vec<SweepRow> = cfg
        .sweep
        .points
        .par_iter()
        .enumerate()
        .map(|(i, &x)| sweep_point(cfg, x, derive_seed(cfg.seed, 100 + i as u64)))
        .collect();
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let p = dir.join("sweep.csv");
    let f = std::fs::File::create(&p).map_err(|e| Error::file(&p, e))?;
    write_sweep_csv(std::io::BufWriter::new(f), &rows)?;
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse { line: p.line() as usize, message: e.to_string() },
        None => Error::Config(e.to_string()),
    }
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    let mut cw = csv::Writer::from_writer(w);
    for r in rows {
        cw.serialize(r).map_err(csv_err)?;
    }
    cw.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(r)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

pub fn load_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    read_sweep_csv(std::fs::File::open(path).map_err(|e| Error::file(path, e))?)
}
