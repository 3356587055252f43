//! Detector blinding with equal and unequal thresholds, and with a single
//! Bell output, checked against the detection-statistics monitor.

use ddiqkd::adversary::{countermeasure_statistics, run_blinding_attack, BlindingConfig, CountermeasureConfig};
use ddiqkd::channel::{detection_ceiling, ChannelParams, DetectorModel, SourceParams};
use ddiqkd::protocol::{qber_z, run_session, ProtocolConfig};

fn main() -> ddiqkd::Result<()> {
    let source = SourceParams::default();
    let channel = ChannelParams::default();
    let det = [DetectorModel::default(); 4];
    let proto = ProtocolConfig { rounds: 100_000_000, ..Default::default() };

    let variants = [
        ("honest", None),
        ("equal", Some(BlindingConfig::default())),
        ("unequal", Some(BlindingConfig { thresholds: [1.0, 2.0, 2.0, 1.0], ..Default::default() })),
        ("single", Some(BlindingConfig { enabled: [true, false, false, false], ..Default::default() })),
    ];
    println!("{:<8} {:>9} {:>7} {:>10} {:>10} {:>10} {:>7}", "run", "detect", "qber", "chi2_p", "double_p", "ceiling_p", "flag");
    for (name, attack) in variants {
        let enabled = attack.map_or([true; 4], |a| a.enabled);
        let masked = BlindingConfig { enabled, ..Default::default() }.mask(&det);
        let s = match attack {
            None => run_session(&proto, &source, &channel, &det, 9)?,
            Some(cfg) => run_blinding_attack(&cfg, &proto, &source, &channel, &det, 9)?,
        };
        let cm = CountermeasureConfig {
            enabled,
            click_ceiling: Some(detection_ceiling(&source, &channel, &masked)),
            ..Default::default()
        };
        let r = countermeasure_statistics(&s.tally, &cm)?;
        println!(
            "{name:<8} {:>9} {:>7.4} {:>10.2e} {:>10.2e} {:>10.2e} {:>7?}",
            r.detections,
            qber_z(&s.tally).unwrap_or(f64::NAN),
            r.p_value,
            r.double_click_p,
            r.ceiling_p.unwrap_or(1.0),
            r.verdict
        );
    }
    Ok(())
}
