//! One honest session at the calibrated defaults: counts, QBERs and the
//! three-state phase-error estimate, then the same run with an
//! intercept-resend eavesdropper.

use ddiqkd::channel::{ChannelParams, DetectorModel, SourceParams};
use ddiqkd::protocol::{observed_x_error, phase_error_threestate, qber_x_fourstate, qber_z, run_session, sift, InterceptResend, ProtocolConfig};

fn main() -> ddiqkd::Result<()> {
    let source = SourceParams::default().with_mu(0.01);
    let channel = ChannelParams::default();
    let detectors = [DetectorModel::default(); 4];
    let proto = ProtocolConfig { rounds: 200_000_000, ..Default::default() };

    let s = run_session(&proto, &source, &channel, &detectors, 2024)?;
    let sifted = sift(&s.tally, &s.transcript);
    println!("rounds            {}", s.rounds);
    println!("acquisition       {:.3} s", s.duration_s(&source));
    println!("detections        {}", s.tally.total_detections());
    println!("sifted Z bits     {}", sifted.alice.len());
    println!("QBER Z            {:.4}", qber_z(&s.tally)?);
    println!("X error (+ sent)  {:.4}", observed_x_error(&s.tally)?);
    println!("phase error est.  {:.4}", phase_error_threestate(&s.tally)?);

    let four = ProtocolConfig { alice_states: ddiqkd::protocol::AliceStates::FourState, ..proto.clone() };
    let s4 = run_session(&four, &source, &channel, &detectors, 2024)?;
    println!("four-state X QBER {:.4}", qber_x_fourstate(&s4.tally)?);

    let eve = ProtocolConfig { intercept: Some(InterceptResend::RandomBasis), ..proto };
    let se = run_session(&eve, &source, &ChannelParams { bit_flip_prob: 0.0, phase_flip_prob: 0.0, ..channel }, &detectors, 7)?;
    println!("\nintercept-resend: QBER Z {:.4}, phase error {:.4}", qber_z(&se.tally)?, phase_error_threestate(&se.tally)?);
    Ok(())
}
