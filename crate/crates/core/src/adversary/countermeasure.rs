use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use crate::error::{Error, Result};
use crate::protocol::TallyMatrix;
use crate::quantum::{bell_outcome_distribution, BellOutcome};

const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountermeasureConfig {
    /// Any test with a p-value below this flags an attack.
    pub p_threshold: f64,
    /// Highest double-click fraction of detections expected without an attack.
    pub max_double_click_rate: f64,
    /// Outputs present in Bob's analyzer.
    pub enabled: [bool; 4],
    /// Highest per-pulse detection probability the calibrated source, channel
    /// and detectors allow; the ceiling test is skipped when absent.
    pub click_ceiling: Option<f64>,
}

impl Default for CountermeasureConfig {
    fn default() -> Self {
        Self {
            p_threshold: 1e-6,
            max_double_click_rate: 0.01,
            enabled: [true; 4],
            click_ceiling: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Clean,
    Attack,
}

/// Outcome of the detection-statistics tests on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountermeasureReport {
    pub detections: u64,
    pub double_click_rate: f64,
    /// P(double clicks at least this many | rate = max_double_click_rate).
    pub double_click_p: f64,
    /// Per-cell detection totals against a common fitted efficiency.
    pub rate_chi2: f64,
    /// Within-cell outcome frequencies against the Bell-outcome table.
    pub shape_chi2: f64,
    pub chi2_stat: f64,
    pub dof: u64,
    pub p_value: f64,
    pub ceiling_p: Option<f64>,
    /// Some cell had an expected count below 5 and was left out.
    pub insufficient_statistics: bool,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
}

impl CountermeasureReport {
    /// Flat `key = value` record.
    pub fn to_record(&self) -> String {
        toml::to_string(self).expect("flat record serializes")
    }
}

/// Checks a tally against the honest Bell-outcome statistics.
///
/// The χ² statistic has two parts. The rate part compares each cell's total
/// detections with `N_ab · Σ_o p(o|a,b) · η̂`, where η̂ is fitted over all
/// cells. The shape part compares, within each cell, the counts of outcomes
/// the table allows with their normalized table probabilities; outcomes the
/// table forbids carry channel noise and are left out. Double clicks are
/// checked separately against `max_double_click_rate`, and the overall
/// detection rate against `click_ceiling`.
pub fn countermeasure_statistics(tally: &TallyMatrix, config: &CountermeasureConfig) -> Result<CountermeasureReport> {
    if !(config.p_threshold > 0.0 && config.p_threshold < 1.0) {
        return Err(Error::invalid("p_threshold must lie in (0, 1)"));
    }
    let enabled = config.enabled;
    let detections = tally.total_detections();
    let doubles = tally.total_double_clicks();
    let mut insufficient = false;

    let weight = |a, b| -> f64 {
        let p = bell_outcome_distribution(a, b);
        (0..4).filter(|&o| enabled[o]).map(|o| p[o]).sum()
    };
    let cells: Vec<_> = tally.cells().filter(|&(a, b)| tally.signals(a, b) > 0 && weight(a, b) > 0.0).collect();
    let exposure: f64 = cells.iter().map(|&(a, b)| tally.signals(a, b) as f64 * weight(a, b)).sum();
    let counted: u64 = cells.iter().map(|&(a, b)| tally.detections(a, b)).sum();
    let eta = if exposure > 0.0 { counted as f64 / exposure } else { 0.0 };

    let mut rate_chi2 = 0.0;
    let mut rate_cells = 0u64;
    for &(a, b) in &cells {
        let n = tally.signals(a, b) as f64;
        let p = (weight(a, b) * eta).min(1.0);
        let expect = n * p;
        if expect < MIN_EXPECTED {
            insufficient = true;
            continue;
        }
        let var = (expect * (1.0 - p)).max(f64::MIN_POSITIVE);
        rate_chi2 += (tally.detections(a, b) as f64 - expect).powi(2) / var;
        rate_cells += 1;
    }
    let rate_dof = rate_cells.saturating_sub(1);

    let mut shape_chi2 = 0.0;
    let mut shape_dof = 0u64;
    for &(a, b) in &cells {
        let p = bell_outcome_distribution(a, b);
        let support: Vec<usize> = (0..4).filter(|&o| enabled[o] && p[o] > 0.0).collect();
        if support.len() < 2 {
            continue;
        }
        let mass: f64 = support.iter().map(|&o| p[o]).sum();
        let counts: Vec<f64> = support
            .iter()
            .map(|&o| tally.outcome_detections(a, b, BellOutcome::from_index(o)) as f64)
            .collect();
        let total: f64 = counts.iter().sum();
        if support.iter().any(|&o| total * p[o] / mass < MIN_EXPECTED) {
            insufficient = true;
            continue;
        }
        for (k, &o) in support.iter().enumerate() {
            let expect = total * p[o] / mass;
            shape_chi2 += (counts[k] - expect).powi(2) / expect;
        }
        shape_dof += support.len() as u64 - 1;
    }

    let chi2_stat = rate_chi2 + shape_chi2;
    let dof = rate_dof + shape_dof;
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::invalid(e.to_string()))?
            .sf(chi2_stat)
    };

    let upper_tail = |k: u64, n: u64, p: f64| -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let d = Binomial::new(p.clamp(0.0, 1.0), n).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(d.sf(k - 1))
    };
    let double_click_rate = if detections > 0 { doubles as f64 / detections as f64 } else { 0.0 };
    let double_click_p = upper_tail(doubles, detections, config.max_double_click_rate)?;
    let ceiling_p = config
        .click_ceiling
        .map(|c| upper_tail(detections, tally.rounds(), c))
        .transpose()?;

    let mut reasons = Vec::new();
    if p_value < config.p_threshold {
        reasons.push(format!("detection pattern deviates from the Bell-outcome table (p = {p_value:.3e})"));
    }
    if double_click_p < config.p_threshold {
        reasons.push(format!("double-click rate {double_click_rate:.4} above {}", config.max_double_click_rate));
    }
    if let Some(p) = ceiling_p.filter(|&p| p < config.p_threshold) {
        reasons.push(format!("detection rate above the calibrated ceiling (p = {p:.3e})"));
    }
    Ok(CountermeasureReport {
        detections,
        double_click_rate,
        double_click_p,
        rate_chi2,
        shape_chi2,
        chi2_stat,
        dof,
        p_value,
        ceiling_p,
        insufficient_statistics: insufficient,
        verdict: if reasons.is_empty() { Verdict::Clean } else { Verdict::Attack },
        reasons,
    })
}
