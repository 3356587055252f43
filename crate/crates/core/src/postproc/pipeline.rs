use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{cascade_reconcile_with, privacy_amplify, verify_keys, CascadeParams, HashSpec, ReconciliationResult, Verification};
use crate::error::{Error, Result};
use crate::finite_key::{BoundMode, FiniteKeyInput, FiniteKeyResult};
use crate::protocol::{KeyBlock, KeyRole};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillParams {
    pub eps_sec: f64,
    pub eps_cor: f64,
    pub mode: BoundMode,
    pub cascade: CascadeParams,
}

impl Default for DistillParams {
    fn default() -> Self {
        Self {
            eps_sec: 2e-9,
            eps_cor: 2e-9,
            mode: BoundMode::Finite,
            cascade: CascadeParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DistillOutcome {
    pub alice_secret: KeyBlock,
    pub bob_secret: KeyBlock,
    pub reconciliation: Option<ReconciliationResult>,
    pub verification: Option<Verification>,
    pub bounds: Option<FiniteKeyResult>,
    pub ell: u64,
    /// Why the block yielded no key, if it did not.
    pub note: Option<String>,
}

impl DistillOutcome {
    /// Cascade disclosures plus verification tag bits.
    pub fn disclosed_total(&self) -> u64 {
        self.reconciliation.as_ref().map_or(0, |r| r.disclosed_bits)
            + self.verification.map_or(0, |v| u64::from(v.tag_bits))
    }

    fn empty(alice: &KeyBlock, bob: &KeyBlock, note: String) -> Self {
        Self {
            alice_secret: alice.derive(Default::default(), KeyRole::Secret),
            bob_secret: bob.derive(Default::default(), KeyRole::Secret),
            reconciliation: None,
            verification: None,
            bounds: None,
            ell: 0,
            note: Some(note),
        }
    }
}

/// Reconciles, verifies, bounds and compresses one sifted block.
///
/// `stats` carries the block's parameter-estimation counts; its `leak_ec` and
/// `mode` are overwritten with the Cascade disclosures and `params.mode`. A
/// block that yields no key is a success with `ell = 0` and a note.
pub fn distill_block<R: Rng + ?Sized>(
    alice: &KeyBlock,
    bob: &KeyBlock,
    stats: &FiniteKeyInput,
    qber_estimate: f64,
    params: &DistillParams,
    rng: &mut R,
) -> Result<DistillOutcome> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch { expected: alice.len(), actual: bob.len() });
    }
    if alice.is_empty() {
        return Ok(DistillOutcome::empty(alice, bob, "no key: empty sifted block".into()));
    }
    if qber_estimate >= 0.5 {
        return Ok(DistillOutcome::empty(alice, bob, format!("no key: QBER estimate {qber_estimate:.4} >= 1/2")));
    }
    let rec = match cascade_reconcile_with(&params.cascade, alice, bob, qber_estimate, rng) {
        Ok(r) => r,
        Err(Error::ReconciliationAborted(why)) => {
            return Ok(DistillOutcome::empty(alice, bob, format!("no key: reconciliation aborted ({why})")))
        }
        Err(e) => return Err(e),
    };
    let ver = verify_keys(&rec.alice.bits, &rec.bob.bits, params.eps_cor, rng)?;
    let mut out = DistillOutcome::empty(alice, bob, String::new());
    out.verification = Some(ver);
    if !ver.passed {
        out.note = Some("no key: verification failed, block rejected".into());
        out.reconciliation = Some(rec);
        return Ok(out);
    }

    let mut input = stats.clone();
    input.leak_ec = rec.disclosed_bits;
    input.eps_sec = params.eps_sec;
    input.eps_cor = params.eps_cor;
    input.mode = params.mode;
    let bounds = match input.evaluate() {
        Ok(b) => b,
        Err(Error::EstimationImpossible(why)) => {
            out.note = Some(format!("no key: {why}"));
            out.reconciliation = Some(rec);
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let ell = bounds.ell.min(rec.alice.len() as u64) as usize;
    let spec = HashSpec::random(rec.alice.len(), ell, rng)?;
    out.alice_secret = privacy_amplify(&rec.alice, &spec)?;
    out.bob_secret = privacy_amplify(&rec.bob, &spec)?;
    out.ell = ell as u64;
    out.note = (ell == 0).then(|| {
        format!(
            "no key: finite-key length is zero (s_z1_lb {}, delta {:.4}, leak {})",
            bounds.s_z1_lb, bounds.delta_z_ph_ub, rec.disclosed_bits
        )
    });
    out.bounds = Some(bounds);
    out.reconciliation = Some(rec);
    Ok(out)
}
