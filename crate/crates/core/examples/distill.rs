//! Full post-processing of one simulated block: Cascade, verification,
//! finite-key length and Toeplitz privacy amplification.

use ddiqkd::channel::{ChannelParams, DetectorModel, SourceParams};
use ddiqkd::finite_key::{BoundMode, FiniteKeyInput};
use ddiqkd::postproc::{distill_block, DistillParams};
use ddiqkd::protocol::{qber_z, run_session, sift, ProtocolConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ddiqkd::Result<()> {
    let source = SourceParams::default().with_mu(0.01);
    let channel = ChannelParams { attenuation_db: 2.8, ..Default::default() };
    let proto = ProtocolConfig { rounds: 1 << 50, target_sifted: Some(1_000_000), ..Default::default() };
    let s = run_session(&proto, &source, &channel, &[DetectorModel::default(); 4], 11)?;
    let keys = sift(&s.tally, &s.transcript);
    let q = qber_z(&s.tally)?;
    let params = DistillParams { mode: BoundMode::Asymptotic, ..Default::default() };
    let stats = FiniteKeyInput::from_tally(&s.tally, source.mu, params.eps_sec, params.eps_cor, 0);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let out = distill_block(&keys.alice, &keys.bob, &stats, q, &params, &mut rng)?;
    let rec = out.reconciliation.as_ref().expect("reconciled");
    println!("sifted bits       {}", keys.alice.len());
    println!("QBER              {q:.4}");
    println!("cascade passes    {}", rec.passes);
    println!("disclosed bits    {}", rec.disclosed_bits);
    println!("f_EC              {:.3}", rec.efficiency.unwrap_or(f64::NAN));
    println!("verified          {}", out.verification.map_or(false, |v| v.passed));
    println!("secret bits       {}", out.ell);
    println!("keys identical    {}", out.alice_secret.bits == out.bob_secret.bits);
    println!("SKR (model time)  {:.1} bps", out.ell as f64 / s.duration_s(&source));
    if let Some(note) = out.note {
        println!("note              {note}");
    }
    Ok(())
}
