//! Photon-number siphoning against an analyzer that trusts its input to be a
//! single photon. Eve learns every sifted bit while the observed QBER stays
//! at zero and the detection rate looks like a lossy channel.

use ddiqkd::adversary::{attack_detection_rate, run_siphoning_attack, SiphoningConfig};
use ddiqkd::protocol::{qber_z, ProtocolConfig};

fn main() -> ddiqkd::Result<()> {
    let cfg = SiphoningConfig::default();
    let proto = ProtocolConfig { rounds: 100_000, ..Default::default() };
    let out = run_siphoning_attack(&cfg, &proto, proto.rounds, 3)?;
    println!("photon numbers     {:?}", cfg.photon_encoding);
    println!("conclusive rounds  {:.4}", attack_detection_rate(&out.tally)?);
    println!("sifted bits        {}", out.sifted.alice.len());
    println!("observed QBER      {:.4}", qber_z(&out.tally)?);
    println!("Eve agreement      {:.4}", out.eve_agreement()?);
    Ok(())
}
