//! Physical layer: weak-coherent source, lossy channel and the four threshold
//! detectors behind the Bell-state analyzer.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{BellDistribution, BellOutcome};

/// Phase-randomized laser source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceParams {
    /// Mean photon number per pulse.
    pub mu: f64,
    /// Pulses per second.
    pub pulse_rate: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            mu: 0.05,
            pulse_rate: 625e6,
        }
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.pulse_rate > 0.0 && self.pulse_rate.is_finite()) {
            return Err(Error::invalid("pulse_rate must be > 0"));
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn vacuum_prob(&self) -> f64 {
        (-self.mu).exp()
    }

    pub fn single_photon_prob(&self) -> f64 {
        self.mu * (-self.mu).exp()
    }

    /// `1 - (1 + μ) e^{-μ}`
    pub fn multi_photon_prob(&self) -> f64 {
        -(-self.mu).exp_m1() - self.mu * (-self.mu).exp()
    }
}

/// Loss budget between Alice's output and Bob's detectors, plus a simple
/// Pauli error model for optical imperfections on Alice's qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub fiber_loss_db_per_km: f64,
    pub distance_km: f64,
    /// Variable attenuator standing in for fiber.
    pub attenuation_db: f64,
    pub bob_insertion_loss_db: f64,
    /// Probability of an H<->V flip on Alice's qubit per pulse.
    pub bit_flip_prob: f64,
    /// Probability of a +<->- flip on Alice's qubit per pulse.
    pub phase_flip_prob: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            fiber_loss_db_per_km: 0.2,
            distance_km: 0.0,
            attenuation_db: 0.0,
            bob_insertion_loss_db: 7.1,
            bit_flip_prob: 0.01,
            phase_flip_prob: 0.01,
        }
    }
}

impl ChannelParams {
    /// A channel with no loss and no optical errors.
    pub fn ideal() -> Self {
        Self {
            fiber_loss_db_per_km: 0.0,
            distance_km: 0.0,
            attenuation_db: 0.0,
            bob_insertion_loss_db: 0.0,
            bit_flip_prob: 0.0,
            phase_flip_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_neg = [
            ("fiber_loss_db_per_km", self.fiber_loss_db_per_km),
            ("distance_km", self.distance_km),
            ("attenuation_db", self.attenuation_db),
            ("bob_insertion_loss_db", self.bob_insertion_loss_db),
        ];
        for (name, v) in non_neg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, p) in [
            ("bit_flip_prob", self.bit_flip_prob),
            ("phase_flip_prob", self.phase_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Loss between Alice and Bob's entrance (fiber plus attenuator).
    pub fn link_loss_db(&self) -> f64 {
        self.fiber_loss_db_per_km * self.distance_km + self.attenuation_db
    }

    pub fn total_loss_db(&self) -> f64 {
        self.link_loss_db() + self.bob_insertion_loss_db
    }

    /// Per-photon survival probability up to the detectors.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.total_loss_db() / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DetectorMode {
    #[default]
    Geiger,
    Linear,
}

/// One threshold detector behind a Bell-analyzer output port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark-count probability per pulse slot.
    pub dark_count_prob: f64,
    pub dead_time_ns: f64,
    /// Click threshold in the linear (blinded) regime, relative optical energy.
    pub threshold: f64,
    pub mode: DetectorMode,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.5,
            dark_count_prob: 1e-8,
            dead_time_ns: 5_000.0,
            threshold: 1.0,
            mode: DetectorMode::Geiger,
        }
    }
}

impl DetectorModel {
    /// Unit efficiency, no dark counts, no dead time.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_prob: 0.0,
            dead_time_ns: 0.0,
            threshold: 1.0,
            mode: DetectorMode::Geiger,
        }
    }

    /// A port with no detector attached.
    pub fn disabled() -> Self {
        Self {
            efficiency: 0.0,
            dark_count_prob: 0.0,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) || !(0.0..=1.0).contains(&self.dark_count_prob) {
            return Err(Error::invalid("detector probabilities must lie in [0, 1]"));
        }
        if !(self.dead_time_ns >= 0.0) || !(self.threshold >= 0.0) {
            return Err(Error::invalid("dead time and threshold must be >= 0"));
        }
        Ok(())
    }
}

/// Set of clicked detector indices (bit `i` set when detector `i` fired).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClickSet(u8);

impl ClickSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..4).filter(move |&i| self.contains(i))
    }

    pub fn nth(&self, n: usize) -> Option<usize> {
        self.iter().nth(n)
    }
}

impl FromIterator<usize> for ClickSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = ClickSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionEvent {
    pub round_index: u64,
    pub clicked: ClickSet,
    /// Outcome reported to Bob; a random clicked detector on double clicks.
    pub assigned: Option<BellOutcome>,
    pub double_click: bool,
}

/// The four detectors together with their dead-time state.
#[derive(Debug, Clone)]
pub struct DetectorArray {
    models: [DetectorModel; 4],
    slot_ns: f64,
    dead_until_ns: [f64; 4],
}

impl DetectorArray {
    pub fn new(models: [DetectorModel; 4], pulse_rate: f64) -> Result<Self> {
        for m in &models {
            m.validate()?;
        }
        if !(pulse_rate > 0.0) {
            return Err(Error::invalid("pulse_rate must be > 0"));
        }
        Ok(Self {
            models,
            slot_ns: 1e9 / pulse_rate,
            dead_until_ns: [f64::NEG_INFINITY; 4],
        })
    }

    pub fn uniform(model: DetectorModel, pulse_rate: f64) -> Result<Self> {
        Self::new([model; 4], pulse_rate)
    }

    pub fn models(&self) -> &[DetectorModel; 4] {
        &self.models
    }

    pub fn reset(&mut self) {
        self.dead_until_ns = [f64::NEG_INFINITY; 4];
    }

    fn time_ns(&self, round: u64) -> f64 {
        round as f64 * self.slot_ns
    }

    pub fn is_live(&self, detector: usize, round: u64) -> bool {
        self.time_ns(round) >= self.dead_until_ns[detector]
    }

    /// First round at or after `round` with at least one detector live.
    pub(crate) fn next_live_round(&self, round: u64) -> u64 {
        let earliest = self.dead_until_ns.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.time_ns(round) >= earliest {
            round
        } else {
            ((earliest / self.slot_ns).ceil() as u64).max(round)
        }
    }

    /// Geiger-mode response to `photons` photons routed independently by `dist`.
    pub fn detect<R: Rng + ?Sized>(
        &mut self,
        round: u64,
        dist: &BellDistribution,
        photons: u64,
        rng: &mut R,
    ) -> DetectionEvent {
        let mut clicked = ClickSet::empty();
        for _ in 0..photons {
            let o = sample_index(dist, rng);
            if self.is_live(o, round) && rng.random::<f64>() < self.models[o].efficiency {
                clicked.insert(o);
            }
        }
        for o in 0..4 {
            let d = self.models[o].dark_count_prob;
            if d > 0.0 && self.is_live(o, round) && rng.random::<f64>() < d {
                clicked.insert(o);
            }
        }
        self.register(round, clicked, rng)
    }

    /// Linear-regime response: detector `i` fires iff its energy exceeds its threshold.
    pub fn detect_linear(&mut self, round: u64, energies: &[f64; 4]) -> Result<DetectionEvent> {
        if self.models.iter().any(|m| m.mode != DetectorMode::Linear) {
            return Err(Error::MixedDetectorModes);
        }
        let clicked: ClickSet = (0..4)
            .filter(|&i| energies[i] > self.models[i].threshold)
            .collect();
        // random assignment is left to the caller's rng; take the lowest index
        // so that the linear response itself stays deterministic
        Ok(DetectionEvent {
            round_index: round,
            clicked,
            assigned: clicked.nth(0).map(BellOutcome::from_index),
            double_click: clicked.len() >= 2,
        })
    }

    /// Per-detector click probabilities when Poisson(`mean_arrivals`) photons
    /// reach the analyzer and route according to `dist`.
    pub(crate) fn click_probabilities(
        &self,
        round: u64,
        dist: &BellDistribution,
        mean_arrivals: f64,
    ) -> [f64; 4] {
        let mut c = [0.0; 4];
        for o in 0..4 {
            if !self.is_live(o, round) {
                continue;
            }
            let m = &self.models[o];
            let lambda = mean_arrivals * m.efficiency * dist[o];
            c[o] = 1.0 - (1.0 - m.dark_count_prob) * (-lambda).exp();
        }
        c
    }

    /// Upper bound on the probability that a pulse produces any click,
    /// independent of the routing distribution and dead-time state.
    pub(crate) fn max_event_probability(&self, mean_arrivals: f64) -> f64 {
        let eta_max = self.models.iter().map(|m| m.efficiency).fold(0.0, f64::max);
        let dark_none: f64 = self.models.iter().map(|m| 1.0 - m.dark_count_prob).product();
        1.0 - dark_none * (-mean_arrivals * eta_max).exp()
    }

    /// Applies dead time and double-click assignment to a raw click pattern.
    pub(crate) fn register<R: Rng + ?Sized>(
        &mut self,
        round: u64,
        clicked: ClickSet,
        rng: &mut R,
    ) -> DetectionEvent {
        let t = self.time_ns(round);
        for o in clicked.iter() {
            self.dead_until_ns[o] = t + self.models[o].dead_time_ns;
        }
        let assigned = match clicked.len() {
            0 => None,
            1 => clicked.nth(0),
            n => clicked.nth(rng.random_range(0..n)),
        }
        .map(BellOutcome::from_index);
        DetectionEvent {
            round_index: round,
            clicked,
            assigned,
            double_click: clicked.len() >= 2,
        }
    }
}

/// Highest per-pulse click probability the source, channel and detectors allow,
/// reached with every detector live.
pub fn detection_ceiling(source: &SourceParams, channel: &ChannelParams, detectors: &[DetectorModel; 4]) -> f64 {
    let eta_max = detectors.iter().map(|m| m.efficiency).fold(0.0, f64::max);
    let dark_none: f64 = detectors.iter().map(|m| 1.0 - m.dark_count_prob).product();
    1.0 - dark_none * (-source.mu * channel.transmittance() * eta_max).exp()
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64; 4], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(3)
}

/// Samples independent Bernoulli(`c[i]`) clicks conditioned on at least one firing.
pub(crate) fn sample_clicks_given_any<R: Rng + ?Sized>(c: &[f64; 4], rng: &mut R) -> ClickSet {
    let none: f64 = c.iter().map(|p| 1.0 - p).product();
    let any = 1.0 - none;
    let mut u = rng.random::<f64>() * any;
    let mut prefix_none = 1.0;
    let mut first = 3;
    for (i, &p) in c.iter().enumerate() {
        let w = prefix_none * p;
        if u < w {
            first = i;
            break;
        }
        u -= w;
        prefix_none *= 1.0 - p;
    }
    let mut set = ClickSet::empty();
    set.insert(first);
    for (i, &p) in c.iter().enumerate().skip(first + 1) {
        if rng.random::<f64>() < p {
            set.insert(i);
        }
    }
    set
}

pub fn draw_photon_number<R: Rng + ?Sized>(source: &SourceParams, rng: &mut R) -> u64 {
    match Poisson::new(source.mu) {
        Ok(p) => p.sample(rng) as u64,
        Err(_) => 0,
    }
}

/// Binomial thinning of `k` photons by the channel transmittance.
pub fn transmit<R: Rng + ?Sized>(k: u64, channel: &ChannelParams, rng: &mut R) -> u64 {
    if k == 0 {
        return 0;
    }
    let p = channel.transmittance().clamp(0.0, 1.0);
    if p >= 1.0 {
        return k;
    }
    Binomial::new(k, p).map(|b| b.sample(rng)).unwrap_or(0)
}
