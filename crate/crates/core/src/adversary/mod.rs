//! Attacks on the untrusted detection unit and the statistics that expose them.

mod blinding;
mod countermeasure;
mod siphoning;

pub use blinding::{faked_pulse_energy, run_blinding_attack, BlindingConfig};
pub use countermeasure::{countermeasure_statistics, CountermeasureConfig, CountermeasureReport, Verdict};
pub use siphoning::{attack_detection_rate, run_siphoning_attack, SiphoningConfig, SiphoningOutcome};
