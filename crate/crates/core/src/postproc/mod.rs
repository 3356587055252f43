//! Classical distillation: Cascade reconciliation, hash-based verification and
//! Toeplitz privacy amplification, plus key-file and log I/O.

mod cascade;
mod gf2;
mod keyfile;
mod log;
mod pipeline;
mod toeplitz;
mod verify;

pub use cascade::{cascade_reconcile, cascade_reconcile_with, CascadeParams, ReconciliationResult};
pub use keyfile::{load_key, read_key, save_key, write_key};
pub use log::{DistillationLog, LogRow};
pub use pipeline::{distill_block, DistillOutcome, DistillParams};
pub use toeplitz::{privacy_amplify, toeplitz_hash, HashSpec};
pub use verify::{tag_bits, verify_keys, Verification, VerificationHash};
