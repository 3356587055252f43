//! Finite-size secret key length.
//!
//! The bound proceeds in three steps: lower-bound the single-photon detections
//! in each basis by subtracting the worst-case multi-photon contribution
//! [`multiphoton_correction`], upper-bound the phase-error rate from the
//! three-state statistics with Hoeffding corrections, and plug both into the
//! key-length formula [`secret_key_length`].
//!
//! [`BoundMode::Asymptotic`] drops every statistical deviation and every
//! ε-dependent term, leaving the infinite-key rate for the same tallies.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::TallyMatrix;
use crate::quantum::ProtocolState::{Minus, Plus, H, V};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    #[default]
    Finite,
    Asymptotic,
}

/// `−p log₂ p − (1−p) log₂(1−p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("binary entropy needs p in [0, 1], got {p}")));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// `G(x) = ⌊x(1 − (1+μ)e^{−μ}) + √(ln(1/ε) x / 2)⌋`: multi-photon emissions
/// plus their Hoeffding deviation.
pub fn multiphoton_correction(x: u64, mu: f64, eps_sec: f64) -> u64 {
    multiphoton_correction_in(x, mu, eps_sec, BoundMode::Finite)
}

fn multiphoton_correction_in(x: u64, mu: f64, eps_sec: f64, mode: BoundMode) -> u64 {
    let x = x as f64;
    // 1 − (1+μ)e^{−μ} via expm1 keeps precision for tiny μ
    let p_multi = (-(-mu).exp_m1() - mu * (-mu).exp()).max(0.0);
    let dev = match mode {
        BoundMode::Finite => ((1.0 / eps_sec).ln() * x / 2.0).sqrt(),
        BoundMode::Asymptotic => 0.0,
    };
    (x * p_multi + dev).floor() as u64
}

/// `max(0, n − G(N))`.
pub fn single_photon_lb(n: u64, big_n: u64, mu: f64, eps_sec: f64) -> u64 {
    n.saturating_sub(multiphoton_correction(big_n, mu, eps_sec))
}

/// Hoeffding deviation `√(ln(1/ε) / (2x))`.
pub fn hoeffding_deviation(x: u64, eps_sec: f64) -> f64 {
    if x == 0 {
        return f64::INFINITY;
    }
    ((1.0 / eps_sec).ln() / (2.0 * x as f64)).sqrt()
}

/// Detection counts feeding the phase-error bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseErrorCounts {
    /// m(+, H), m(+, V), m(−, +).
    pub m_plus_h: u64,
    pub m_plus_v: u64,
    pub m_minus_plus: u64,
    /// Single-photon lower bounds q_X,1(a) for a = H, V, +.
    pub q_h: u64,
    pub q_v: u64,
    pub q_plus: u64,
}

/// Returns `(p_X_err_ub, delta_Z_ph_ub)`, both within `[0, ½]`.
pub fn phase_error_ub(c: &PhaseErrorCounts, s_x1_lb: u64, eps_sec: f64, mode: BoundMode) -> Result<(f64, f64)> {
    for (name, q) in [("H", c.q_h), ("V", c.q_v), ("+", c.q_plus)] {
        if q == 0 {
            return Err(Error::EstimationImpossible(format!(
                "no single-photon X detections bounded for Alice {name}"
            )));
        }
    }
    if s_x1_lb == 0 {
        return Err(Error::EstimationImpossible("no single-photon X-matched detections".into()));
    }
    let k = |x: u64| match mode {
        BoundMode::Finite => hoeffding_deviation(x, eps_sec),
        BoundMode::Asymptotic => 0.0,
    };
    let p = |m: u64, q: u64| (m as f64 / q as f64).min(0.5) + k(q);
    let p_err = 0.5 * (p(c.m_plus_h, c.q_h) + p(c.m_plus_v, c.q_v) + 2.0 * p(c.m_minus_plus, c.q_plus) - 1.0);
    let p_err = p_err.clamp(0.0, 0.5);
    let delta = (p_err + k(s_x1_lb)).min(0.5);
    Ok((p_err, delta))
}

/// `ℓ = ⌊s(1 − h₂(δ)) − leak − 4 log₂(7/ε_sec) − log₂(1/ε_cor)⌋`, clamped at 0.
pub fn secret_key_length(s_z1_lb: u64, delta: f64, leak_ec: u64, eps_sec: f64, eps_cor: f64) -> Result<u64> {
    secret_key_length_in(s_z1_lb, delta, leak_ec, eps_sec, eps_cor, BoundMode::Finite)
}

fn secret_key_length_in(
    s_z1_lb: u64,
    delta: f64,
    leak_ec: u64,
    eps_sec: f64,
    eps_cor: f64,
    mode: BoundMode,
) -> Result<u64> {
    let h = binary_entropy(delta.clamp(0.0, 0.5))?;
    let eps_terms = match mode {
        BoundMode::Finite => 4.0 * (7.0 / eps_sec).log2() + (1.0 / eps_cor).log2(),
        BoundMode::Asymptotic => 0.0,
    };
    let ell = (s_z1_lb as f64 * (1.0 - h) - leak_ec as f64 - eps_terms).floor();
    Ok(if ell > 0.0 { (ell as u64).min(s_z1_lb) } else { 0 })
}

/// Everything the bound consumes, as logged after a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteKeyInput {
    /// Z-matched detections and pulses.
    pub n_z: u64,
    pub signals_z: u64,
    /// X-matched detections and pulses.
    pub n_x: u64,
    pub signals_x: u64,
    /// m(+,H), m(+,V), m(−,+): detections by Alice's state and Bob's decoded X result.
    pub m_plus_h: u64,
    pub m_plus_v: u64,
    pub m_minus_plus: u64,
    /// Detections with Bob in X, per Alice state.
    pub m_x_h: u64,
    pub m_x_v: u64,
    pub m_x_plus: u64,
    /// Pulses with Bob in X, per Alice state.
    pub signals_x_h: u64,
    pub signals_x_v: u64,
    pub signals_x_plus: u64,
    pub mu: f64,
    pub eps_sec: f64,
    pub eps_cor: f64,
    pub leak_ec: u64,
    #[serde(default)]
    pub mode: BoundMode,
}

impl FiniteKeyInput {
    pub fn from_tally(t: &TallyMatrix, mu: f64, eps_sec: f64, eps_cor: f64, leak_ec: u64) -> Self {
        Self {
            n_z: t.n_z(),
            signals_z: t.signals_z(),
            n_x: t.n_x(),
            signals_x: t.signals_x(),
            m_plus_h: t.n_result(H, Plus),
            m_plus_v: t.n_result(V, Plus),
            m_minus_plus: t.n_result(Plus, Minus),
            m_x_h: t.m_x(H),
            m_x_v: t.m_x(V),
            m_x_plus: t.m_x(Plus),
            signals_x_h: t.signals_x_for(H),
            signals_x_v: t.signals_x_for(V),
            signals_x_plus: t.signals_x_for(Plus),
            mu,
            eps_sec,
            eps_cor,
            leak_ec,
            mode: BoundMode::Finite,
        }
    }

    pub fn with_mode(mut self, mode: BoundMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("eps_sec", self.eps_sec), ("eps_cor", self.eps_cor)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {e}")));
            }
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be positive, got {}", self.mu)));
        }
        let pairs = [
            ("n_z", self.n_z, self.signals_z),
            ("n_x", self.n_x, self.signals_x),
            ("m_x_h", self.m_x_h, self.signals_x_h),
            ("m_x_v", self.m_x_v, self.signals_x_v),
            ("m_x_plus", self.m_x_plus, self.signals_x_plus),
            ("m_plus_h", self.m_plus_h, self.m_x_h),
            ("m_plus_v", self.m_plus_v, self.m_x_v),
            ("m_minus_plus", self.m_minus_plus, self.m_x_plus),
        ];
        for (name, n, cap) in pairs {
            if n > cap {
                return Err(Error::invalid(format!("{name} = {n} exceeds its pool of {cap}")));
            }
        }
        Ok(())
    }

    /// Parses the flat `key = value` record.
    pub fn parse(text: &str) -> Result<Self> {
        let input: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        input.validate()?;
        Ok(input)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text)
    }

    pub fn to_record(&self) -> String {
        toml::to_string(self).expect("flat record serializes")
    }

    pub fn evaluate(&self) -> Result<FiniteKeyResult> {
        self.validate()?;
        let g = |x| multiphoton_correction_in(x, self.mu, self.eps_sec, self.mode);
        let s_z1_lb = self.n_z.saturating_sub(g(self.signals_z));
        let s_x1_lb = self.n_x.saturating_sub(g(self.signals_x));
        let q = [
            self.m_x_h.saturating_sub(g(self.signals_x_h)),
            self.m_x_v.saturating_sub(g(self.signals_x_v)),
            self.m_x_plus.saturating_sub(g(self.signals_x_plus)),
        ];
        let counts = PhaseErrorCounts {
            m_plus_h: self.m_plus_h,
            m_plus_v: self.m_plus_v,
            m_minus_plus: self.m_minus_plus,
            q_h: q[0],
            q_v: q[1],
            q_plus: q[2],
        };
        let (p_x_err_ub, delta_z_ph_ub) = phase_error_ub(&counts, s_x1_lb, self.eps_sec, self.mode)?;
        let ell = secret_key_length_in(s_z1_lb, delta_z_ph_ub, self.leak_ec, self.eps_sec, self.eps_cor, self.mode)?;
        Ok(FiniteKeyResult {
            s_z1_lb,
            s_x1_lb,
            q_x1_lb: q,
            p_x_err_ub,
            delta_z_ph_ub,
            ell,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteKeyResult {
    pub s_z1_lb: u64,
    pub s_x1_lb: u64,
    /// For Alice sending H, V, +.
    pub q_x1_lb: [u64; 3],
    pub p_x_err_ub: f64,
    pub delta_z_ph_ub: f64,
    pub ell: u64,
}

impl FiniteKeyResult {
    pub fn to_record(&self) -> String {
        toml::to_string(self).expect("flat record serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuChoice {
    pub mu: f64,
    /// Objective at `mu`, e.g. secret bits per second.
    pub value: f64,
    /// Every grid point gave zero key.
    pub no_key: bool,
}

/// Grid search for the intensity maximizing `objective`; ties go to the smaller μ.
/// Grid points are evaluated in parallel.
pub fn optimize_mu<F>(grid: &[f64], objective: F) -> Result<MuChoice>
where
    F: Fn(f64) -> f64 + Sync,
{
    if grid.is_empty() {
        return Err(Error::invalid("empty mu grid"));
    }
    let mut points: Vec<(f64, f64)> = grid.par_iter().map(|&mu| (mu, objective(mu))).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = points[0];
    for &p in &points[1..] {
        if p.1 > best.1 {
            best = p;
        }
    }
    let no_key = !(best.1 > 0.0);
    Ok(MuChoice {
        mu: best.0,
        value: if no_key { 0.0 } else { best.1 },
        no_key,
    })
}

/// `n` points spaced logarithmically over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_5).abs() < 1e-12);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn correction_golden_values() {
        assert_eq!(multiphoton_correction(0, 0.5, 1e-9), 0);
        assert_eq!(multiphoton_correction(1_000_000, 0.5, 1e-9), 93_422);
        assert_eq!(single_photon_lb(100_000, 1_000_000, 0.5, 1e-9), 6_578);
        assert_eq!(single_photon_lb(0, 1_000_000, 0.5, 1e-9), 0);
        assert_eq!(single_photon_lb(1_000, 1_000_000, 0.5, 1e-9), 0);
        // μ → 0 leaves only the statistical term
        let stat = ((1e9f64).ln() * 1e6 / 2.0).sqrt().floor() as u64;
        assert_eq!(multiphoton_correction(1_000_000, 1e-12, 1e-9), stat);
    }

    #[test]
    fn key_length_golden_values() {
        assert_eq!(secret_key_length(900_000, 0.02, 200_000, 2e-9, 2e-9).unwrap(), 572_547);
        assert_eq!(secret_key_length(0, 0.02, 0, 2e-9, 2e-9).unwrap(), 0);
        assert_eq!(secret_key_length(900_000, 0.5, 0, 2e-9, 2e-9).unwrap(), 0);
        assert_eq!(secret_key_length(900_000, 0.7, 0, 2e-9, 2e-9).unwrap(), 0);
    }

    fn pe(m: [u64; 3], q: [u64; 3]) -> PhaseErrorCounts {
        PhaseErrorCounts { m_plus_h: m[0], m_plus_v: m[1], m_minus_plus: m[2], q_h: q[0], q_v: q[1], q_plus: q[2] }
    }

    #[test]
    fn phase_error_limits() {
        let (p, d) = phase_error_ub(&pe([50, 50, 0], [100, 100, 100]), 100, 1e-9, BoundMode::Asymptotic).unwrap();
        assert_eq!((p, d), (0.0, 0.0));
        let (p, _) = phase_error_ub(&pe([50, 50, 25], [100, 100, 100]), 100, 1e-9, BoundMode::Asymptotic).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
        // f capped at ½
        let (a, _) = phase_error_ub(&pe([90, 50, 10], [100, 100, 100]), 100, 1e-9, BoundMode::Asymptotic).unwrap();
        let (b, _) = phase_error_ub(&pe([50, 50, 10], [100, 100, 100]), 100, 1e-9, BoundMode::Asymptotic).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            phase_error_ub(&pe([0, 0, 0], [0, 1, 1]), 1, 1e-9, BoundMode::Finite),
            Err(Error::EstimationImpossible(_))
        ));
        assert!(phase_error_ub(&pe([0, 0, 0], [1, 1, 1]), 0, 1e-9, BoundMode::Finite).is_err());
    }

    #[test]
    fn deviation_vanishes() {
        assert!(hoeffding_deviation(0, 1e-9).is_infinite());
        assert!(hoeffding_deviation(10_000, 1e-9) > hoeffding_deviation(1_000_000, 1e-9));
        assert!(hoeffding_deviation(u64::MAX, 1e-9) < 1e-8);
    }

    /// Tallies with fixed per-pulse rates scaled to `pulses_z` Z-matched pulses.
    fn scaled_input(pulses_z: u64) -> FiniteKeyInput {
        let px = pulses_z / 4;
        let det = 0.01;
        let n = |p: u64| (p as f64 * det) as u64;
        FiniteKeyInput {
            n_z: n(pulses_z),
            signals_z: pulses_z,
            n_x: n(px),
            signals_x: px,
            m_plus_h: n(px) / 2,
            m_plus_v: n(px) / 2,
            m_minus_plus: n(px) / 100,
            m_x_h: n(px),
            m_x_v: n(px),
            m_x_plus: n(px),
            signals_x_h: px,
            signals_x_v: px,
            signals_x_plus: px,
            mu: 0.01,
            eps_sec: 1e-9,
            eps_cor: 1e-9,
            leak_ec: (n(pulses_z) as f64 * 0.1) as u64,
            mode: BoundMode::Finite,
        }
    }

    #[test]
    fn penalty_scales_as_inverse_sqrt() {
        let mut scaled = Vec::new();
        for e in 4..=8 {
            let big_n = 10u64.pow(e) * 100;
            let fin = scaled_input(big_n).evaluate().unwrap().ell as f64;
            let asy = scaled_input(big_n).with_mode(BoundMode::Asymptotic).evaluate().unwrap().ell as f64;
            let penalty = (asy - fin) / big_n as f64;
            scaled.push(penalty * (big_n as f64).sqrt());
        }
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 2.0, "{scaled:?}");
    }

    #[test]
    fn record_round_trip() {
        let input = scaled_input(1_000_000);
        let text = input.to_record();
        assert!(text.contains("n_z = "));
        assert_eq!(FiniteKeyInput::parse(&text).unwrap(), input);
        assert!(FiniteKeyInput::parse("n_z = 1\n").is_err());
        let mut bad = input.clone();
        bad.n_z = bad.signals_z + 1;
        assert!(FiniteKeyInput::parse(&bad.to_record()).is_err());
    }

    #[test]
    fn optimizer_cases() {
        assert_eq!(optimize_mu(&[0.3], |_| 5.0).unwrap().mu, 0.3);
        assert!(optimize_mu(&[], |_| 1.0).is_err());
        let z = optimize_mu(&[0.2, 0.1, 0.4], |_| 0.0).unwrap();
        assert!(z.no_key && z.mu == 0.1);
        let tie = optimize_mu(&[0.2, 0.1, 0.4], |m| if m < 0.3 { 1.0 } else { 0.5 }).unwrap();
        assert_eq!(tie.mu, 0.1);

        let f = |mu: f64| mu * (-mu / 0.07).exp();
        let grid = log_grid(1e-3, 1.0, 40);
        let choice = optimize_mu(&grid, f).unwrap();
        let dense = log_grid(1e-3, 1.0, 100_000);
        let best = dense.iter().cloned().max_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
        let step = grid[1] / grid[0];
        assert!(choice.mu / best < step && best / choice.mu < step);
    }

    proptest! {
        #[test]
        fn ell_monotone(s in 0u64..10_000_000, d in 0.0f64..0.5, leak in 0u64..1_000_000, ds in 0u64..10_000, dd in 0.0f64..0.05, dl in 0u64..10_000) {
            let ell = |s, d, l| secret_key_length(s, d, l, 1e-9, 1e-9).unwrap();
            let base = ell(s, d, leak);
            prop_assert!(base <= s);
            prop_assert!(ell(s + ds, d, leak) >= base);
            prop_assert!(ell(s, (d + dd).min(0.5), leak) <= base);
            prop_assert!(ell(s, d, leak + dl) <= base);
        }

        #[test]
        fn bounds_within_raw_counts(n in 0u64..1_000_000, extra in 0u64..10_000_000, mu in 1e-4f64..1.0) {
            let lb = single_photon_lb(n, n + extra, mu, 1e-9);
            prop_assert!(lb <= n);
            prop_assert!(multiphoton_correction(n + extra, mu, 1e-9) <= multiphoton_correction(n + extra + 1000, mu, 1e-9));
        }

        #[test]
        fn probabilities_in_range(m in proptest::array::uniform3(0u64..2000), q in proptest::array::uniform3(1u64..2000), s in 1u64..100_000) {
            let (p, d) = phase_error_ub(&pe(m, q), s, 1e-9, BoundMode::Finite).unwrap();
            prop_assert!((0.0..=0.5).contains(&p));
            prop_assert!((0.0..=0.5).contains(&d));
            prop_assert!(d >= p);
        }
    }
}
