use super::TallyMatrix;
use crate::error::{Error, Result};
use crate::quantum::ProtocolState::{Minus, Plus, H, V};

fn ratio(num: u64, den: u64, what: &'static str) -> Result<f64> {
    if den == 0 {
        return Err(Error::UndefinedRate(what));
    }
    Ok(num as f64 / den as f64)
}

/// Fraction of Z-matched detections where Bob's decoded bit differs from Alice's.
pub fn qber_z(tally: &TallyMatrix) -> Result<f64> {
    ratio(tally.z_errors(), tally.n_z(), "no Z-matched detections")
}

/// Four-state X error rate, `(N+- + N-+) / (N++ + N-- + N+- + N-+)`.
pub fn qber_x_fourstate(tally: &TallyMatrix) -> Result<f64> {
    let pm = tally.n_result(Plus, Minus);
    let mp = tally.n_result(Minus, Plus);
    let pp = tally.n_result(Plus, Plus);
    let mm = tally.n_result(Minus, Minus);
    ratio(pm + mp, pp + mm + pm + mp, "no X-matched detections")
}

/// Observed error on the single X state Alice sends, `N+- / (N++ + N+-)`.
pub fn observed_x_error(tally: &TallyMatrix) -> Result<f64> {
    let pm = tally.n_result(Plus, Minus);
    ratio(pm, tally.n_result(Plus, Plus) + pm, "no detections with Alice + and Bob X")
}

/// Phase-error rate reconstructed from matched and mismatched statistics:
///
/// `N+-/(N++ + N+-) + ½ (NH+/(NH+ + NH-) + NV+/(NV+ + NV-) - 1)`, clamped to `[0, 1]`.
pub fn phase_error_threestate(tally: &TallyMatrix) -> Result<f64> {
    let matched = observed_x_error(tally)?;
    let hp = tally.n_result(H, Plus);
    let vp = tally.n_result(V, Plus);
    let from_h = ratio(hp, hp + tally.n_result(H, Minus), "no detections with Alice H and Bob X")?;
    let from_v = ratio(vp, vp + tally.n_result(V, Minus), "no detections with Alice V and Bob X")?;
    Ok((matched + 0.5 * (from_h + from_v - 1.0)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{BellOutcome, ProtocolState};

    /// Puts `n` detections in cell (alice, bob) whose decoded bit is `bit`.
    fn add_result(t: &mut TallyMatrix, alice: ProtocolState, bob: ProtocolState, bit: u8, n: u64) {
        let o = BellOutcome::ALL
            .into_iter()
            .find(|&o| crate::quantum::decode_bit(bob, o) == bit)
            .unwrap();
        t.add_outcome(alice, bob, o, false, n);
    }

    #[test]
    fn fourstate_arithmetic() {
        let mut t = TallyMatrix::new();
        add_result(&mut t, Plus, Plus, 1, 5); // N+-
        add_result(&mut t, Minus, Minus, 0, 5); // N-+
        add_result(&mut t, Plus, Plus, 0, 45);
        add_result(&mut t, Minus, Minus, 1, 45);
        assert!((qber_x_fourstate(&t).unwrap() - 0.10).abs() < 1e-15);
    }

    #[test]
    fn zero_denominators_are_errors() {
        let t = TallyMatrix::new();
        assert!(matches!(qber_z(&t), Err(Error::UndefinedRate(_))));
        assert!(matches!(qber_x_fourstate(&t), Err(Error::UndefinedRate(_))));
        assert!(matches!(phase_error_threestate(&t), Err(Error::UndefinedRate(_))));
    }

    #[test]
    fn noiseless_threestate_is_zero() {
        let mut t = TallyMatrix::new();
        add_result(&mut t, Plus, Plus, 0, 100);
        for a in [H, V] {
            add_result(&mut t, a, Plus, 0, 50);
            add_result(&mut t, a, Plus, 1, 50);
        }
        assert_eq!(phase_error_threestate(&t).unwrap(), 0.0);
    }

    #[test]
    fn negative_bracket_is_clamped() {
        let mut t = TallyMatrix::new();
        add_result(&mut t, Plus, Plus, 0, 100);
        for a in [H, V] {
            add_result(&mut t, a, Plus, 0, 40);
            add_result(&mut t, a, Plus, 1, 60);
        }
        assert_eq!(phase_error_threestate(&t).unwrap(), 0.0);
    }

    #[test]
    fn z_errors_and_flipped_decoding() {
        let mut t = TallyMatrix::new();
        add_result(&mut t, H, H, 1, 10);
        add_result(&mut t, V, V, 0, 10);
        assert_eq!(qber_z(&t).unwrap(), 1.0);
    }
}
