//! State algebra of the single-photon Bell-state analyzer.
//!
//! Alice's polarization qubit is converted into a path qubit (`r`, `t`) at the
//! input of Bob's apparatus, and Bob writes his own qubit into the photon's
//! polarization. The two-qubit state is stored as a complex 4-vector in the
//! ordered basis `|rH>, |rV>, |tH>, |tV>`; Bell probabilities are obtained by
//! explicit projection, so the outcome table is computed rather than stored.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-12;

/// A normalized qubit `alpha|0> + beta|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationQubit {
    alpha: Complex64,
    beta: Complex64,
}

impl PolarizationQubit {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!(
                "qubit amplitudes not normalized (|a|^2+|b|^2 = {norm})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Tensor product `self ⊗ other` in the order `|00>, |01>, |10>, |11>`.
    pub fn tensor(&self, other: &PolarizationQubit) -> [Complex64; 4] {
        [
            self.alpha * other.alpha,
            self.alpha * other.beta,
            self.beta * other.alpha,
            self.beta * other.beta,
        ]
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &PolarizationQubit) -> f64 {
        (self.alpha.conj() * other.alpha + self.beta.conj() * other.beta).norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
        })
    }
}

/// One of the four BB84 states used by either party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolState {
    H,
    V,
    Plus,
    Minus,
}

impl ProtocolState {
    pub const ALL: [ProtocolState; 4] = [
        ProtocolState::H,
        ProtocolState::V,
        ProtocolState::Plus,
        ProtocolState::Minus,
    ];

    pub fn from_basis_bit(basis: Basis, bit: u8) -> Self {
        match (basis, bit & 1) {
            (Basis::Z, 0) => ProtocolState::H,
            (Basis::Z, _) => ProtocolState::V,
            (Basis::X, 0) => ProtocolState::Plus,
            (Basis::X, _) => ProtocolState::Minus,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn basis(self) -> Basis {
        match self {
            ProtocolState::H | ProtocolState::V => Basis::Z,
            ProtocolState::Plus | ProtocolState::Minus => Basis::X,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            ProtocolState::H | ProtocolState::Plus => 0,
            ProtocolState::V | ProtocolState::Minus => 1,
        }
    }

    /// Phase written by the modulator, `(|H> + e^{iφ}|V>)/√2` up to a fixed rotation.
    pub fn phase(self) -> f64 {
        match self {
            ProtocolState::H => 0.0,
            ProtocolState::V => PI,
            ProtocolState::Plus => PI / 2.0,
            ProtocolState::Minus => 3.0 * PI / 2.0,
        }
    }

    pub fn qubit(self) -> PolarizationQubit {
        let (a, b) = match self {
            ProtocolState::H => (1.0, 0.0),
            ProtocolState::V => (0.0, 1.0),
            ProtocolState::Plus => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            ProtocolState::Minus => (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        };
        PolarizationQubit {
            alpha: Complex64::new(a, 0.0),
            beta: Complex64::new(b, 0.0),
        }
    }

    /// Pauli X on the polarization (H <-> V); X-basis states are eigenstates.
    pub fn bit_flipped(self) -> Self {
        match self {
            ProtocolState::H => ProtocolState::V,
            ProtocolState::V => ProtocolState::H,
            s => s,
        }
    }

    /// Pauli Z on the polarization (+ <-> -); Z-basis states are eigenstates.
    pub fn phase_flipped(self) -> Self {
        match self {
            ProtocolState::Plus => ProtocolState::Minus,
            ProtocolState::Minus => ProtocolState::Plus,
            s => s,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProtocolState::H => "H",
            ProtocolState::V => "V",
            ProtocolState::Plus => "+",
            ProtocolState::Minus => "-",
        }
    }
}

impl fmt::Display for ProtocolState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProtocolState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(ProtocolState::H),
            "V" | "v" => Ok(ProtocolState::V),
            "+" | "P" | "plus" => Ok(ProtocolState::Plus),
            "-" | "M" | "minus" => Ok(ProtocolState::Minus),
            other => Err(Error::invalid(format!("unknown state label {other:?}"))),
        }
    }
}

/// Outcome of the Bell-state measurement; detector `i` registers outcome `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    /// Bell vector in the `|rH>, |rV>, |tH>, |tV>` ordering.
    pub fn vector(self) -> [Complex64; 4] {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            BellOutcome::PhiPlus => [s, z, z, s],
            BellOutcome::PhiMinus => [s, z, z, -s],
            BellOutcome::PsiPlus => [z, s, s, z],
            BellOutcome::PsiMinus => [z, s, -s, z],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "Phi+",
            BellOutcome::PhiMinus => "Phi-",
            BellOutcome::PsiPlus => "Psi+",
            BellOutcome::PsiMinus => "Psi-",
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BellOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BellOutcome::ALL
            .into_iter()
            .find(|o| o.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown Bell outcome {s:?}")))
    }
}

/// Probabilities over the four Bell outcomes, indexed by [`BellOutcome::index`].
pub type BellDistribution = [f64; 4];

/// Projects `|ψ_A> ⊗ |ψ_B>` onto the four Bell vectors.
///
/// Alice's amplitudes ride the path qubit (`alpha` on `r`, `beta` on `t`) and
/// Bob's ride the polarization.
pub fn bell_distribution_for(alice: &PolarizationQubit, bob: &PolarizationQubit) -> BellDistribution {
    let psi = alice.tensor(bob);
    let mut out = [0.0; 4];
    for outcome in BellOutcome::ALL {
        let amp: Complex64 = outcome
            .vector()
            .iter()
            .zip(psi.iter())
            .map(|(b, p)| b.conj() * p)
            .sum();
        out[outcome.index()] = amp.norm_sqr();
    }
    out
}

pub fn bell_outcome_distribution(alice: ProtocolState, bob: ProtocolState) -> BellDistribution {
    bell_distribution_for(&alice.qubit(), &bob.qubit())
}

/// Precomputed outcome distributions for all sixteen state pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellTable([[BellDistribution; 4]; 4]);

impl BellTable {
    pub fn compute() -> Self {
        let mut t = [[[0.0; 4]; 4]; 4];
        for a in ProtocolState::ALL {
            for b in ProtocolState::ALL {
                t[a.index()][b.index()] = bell_outcome_distribution(a, b);
            }
        }
        Self(t)
    }

    pub fn get(&self, alice: ProtocolState, bob: ProtocolState) -> &BellDistribution {
        &self.0[alice.index()][bob.index()]
    }
}

impl Default for BellTable {
    fn default() -> Self {
        Self::compute()
    }
}

/// Bob's bit as a function of his own state and the announced outcome.
pub fn decode_bit(bob: ProtocolState, outcome: BellOutcome) -> u8 {
    use BellOutcome::*;
    use ProtocolState::*;
    match (bob, outcome) {
        (H, PhiPlus | PhiMinus) => 0,
        (H, PsiPlus | PsiMinus) => 1,
        (V, PhiPlus | PhiMinus) => 1,
        (V, PsiPlus | PsiMinus) => 0,
        (Plus, PhiPlus | PsiPlus) => 0,
        (Plus, PhiMinus | PsiMinus) => 1,
        (Minus, PhiPlus | PsiPlus) => 1,
        (Minus, PhiMinus | PsiMinus) => 0,
    }
}

pub fn alice_bit(alice: ProtocolState) -> u8 {
    alice.bit()
}

/// Largest |eigenvalue| of `C(n) = (1/√2)^n [[1, 1], [1, (-1)^n]]`.
fn overlap_block_spectral_radius(n: u32) -> f64 {
    let c = 0.5f64.powf(n as f64 / 2.0);
    if n % 2 == 0 {
        // [[1,1],[1,1]] has eigenvalues {2, 0}
        2.0 * c
    } else {
        // [[1,1],[1,-1]] has eigenvalues {±√2}
        std::f64::consts::SQRT_2 * c
    }
}

/// Lower bound on the success probability of unambiguously discriminating
/// Bob's four states from `n` copies.
///
/// Returns `λ_min([[I, C(n)], [C(n), I]])` clamped to `[0, 1]`. The block
/// matrix has eigenvalues `1 ± eig(C)`, so the minimum is `1 - ρ(C)`.
pub fn usd_success_lower_bound(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("USD bound needs at least one photon"));
    }
    Ok((1.0 - overlap_block_spectral_radius(n)).clamp(0.0, 1.0))
}

/// The `C(n)` block of the USD Gram matrix, exposed for independent checks.
pub fn usd_overlap_block(n: u32) -> [[f64; 2]; 2] {
    let c = FRAC_1_SQRT_2.powi(n as i32);
    let d = (-FRAC_1_SQRT_2).powi(n as i32);
    [[c, c], [c, d]]
}

/// Effective per-photon qubit reaching the detector unit for Bob's phase `phi`,
/// in the `{|0~>, |1~>}` basis.
pub fn transformed_bob_state(phi: f64) -> PolarizationQubit {
    let e = Complex64::from_polar(1.0, phi);
    let one = Complex64::new(1.0, 0.0);
    PolarizationQubit {
        alpha: (one + e) / 2.0,
        beta: (one - e) / 2.0,
    }
}
