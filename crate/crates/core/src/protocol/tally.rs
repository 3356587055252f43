use std::io::{BufRead, Write};
use std::ops::AddAssign;

use crate::channel::DetectionEvent;
use crate::error::{Error, Result};
use crate::quantum::{decode_bit, Basis, BellOutcome, ProtocolState};

/// Slots per (alice, bob) cell: four single-click outcomes, double click, no click.
pub const SLOTS: usize = 6;
pub const DOUBLE_SLOT: usize = 4;
pub const NONE_SLOT: usize = 5;

const HEADER: &str = "# ddiqkd tally v1";

/// Counts per (Alice state, Bob state, outcome slot).
///
/// Double clicks are counted once in [`DOUBLE_SLOT`] and their randomly
/// assigned outcome is kept on the side, so estimators see them as ordinary
/// detections while monitors can still see the double-click rate. All
/// marginals are derived from these counts on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TallyMatrix {
    counts: [[[u64; SLOTS]; 4]; 4],
    double_assigned: [[[u64; 4]; 4]; 4],
}

type S = ProtocolState;

impl TallyMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, alice: S, bob: S, event: &DetectionEvent) {
        let cell = &mut self.counts[alice.index()][bob.index()];
        match event.assigned {
            None => cell[NONE_SLOT] += 1,
            Some(o) if event.double_click => {
                cell[DOUBLE_SLOT] += 1;
                self.double_assigned[alice.index()][bob.index()][o.index()] += 1;
            }
            Some(o) => cell[o.index()] += 1,
        }
    }

    pub fn add_outcome(&mut self, alice: S, bob: S, outcome: BellOutcome, double_click: bool, n: u64) {
        if double_click {
            self.counts[alice.index()][bob.index()][DOUBLE_SLOT] += n;
            self.double_assigned[alice.index()][bob.index()][outcome.index()] += n;
        } else {
            self.counts[alice.index()][bob.index()][outcome.index()] += n;
        }
    }

    pub fn add_no_click(&mut self, alice: S, bob: S, n: u64) {
        self.counts[alice.index()][bob.index()][NONE_SLOT] += n;
    }

    pub fn slot(&self, alice: S, bob: S, slot: usize) -> u64 {
        self.counts[alice.index()][bob.index()][slot]
    }

    /// Single-click detections of `outcome` only.
    pub fn single_clicks(&self, alice: S, bob: S, outcome: BellOutcome) -> u64 {
        self.counts[alice.index()][bob.index()][outcome.index()]
    }

    pub fn double_clicks(&self, alice: S, bob: S) -> u64 {
        self.counts[alice.index()][bob.index()][DOUBLE_SLOT]
    }

    /// Detections announced as `outcome`, double clicks included after assignment.
    pub fn outcome_detections(&self, alice: S, bob: S, outcome: BellOutcome) -> u64 {
        self.single_clicks(alice, bob, outcome)
            + self.double_assigned[alice.index()][bob.index()][outcome.index()]
    }

    /// Pulses sent in the cell, detected or not.
    pub fn signals(&self, alice: S, bob: S) -> u64 {
        self.counts[alice.index()][bob.index()].iter().sum()
    }

    pub fn detections(&self, alice: S, bob: S) -> u64 {
        let c = &self.counts[alice.index()][bob.index()];
        c[..NONE_SLOT].iter().sum()
    }

    pub fn rounds(&self) -> u64 {
        self.cells().map(|(a, b)| self.signals(a, b)).sum()
    }

    pub fn total_detections(&self) -> u64 {
        self.cells().map(|(a, b)| self.detections(a, b)).sum()
    }

    pub fn total_double_clicks(&self) -> u64 {
        self.cells().map(|(a, b)| self.double_clicks(a, b)).sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = (S, S)> {
        S::ALL.into_iter().flat_map(|a| S::ALL.into_iter().map(move |b| (a, b)))
    }

    /// Detections where Alice sent `alice` and Bob's decoded result is the
    /// state `result` (Bob in `result`'s basis, decoded bit equal to its bit).
    pub fn n_result(&self, alice: S, result: S) -> u64 {
        S::ALL
            .into_iter()
            .filter(|b| b.basis() == result.basis())
            .map(|b| {
                BellOutcome::ALL
                    .into_iter()
                    .filter(|&o| decode_bit(b, o) == result.bit())
                    .map(|o| self.outcome_detections(alice, b, o))
                    .sum::<u64>()
            })
            .sum()
    }

    fn sum_over(&self, alice: Basis, bob: Basis, f: impl Fn(S, S) -> u64) -> u64 {
        self.cells()
            .filter(|(a, b)| a.basis() == alice && b.basis() == bob)
            .map(|(a, b)| f(a, b))
            .sum()
    }

    /// Detections with both parties in the Z basis.
    pub fn n_z(&self) -> u64 {
        self.sum_over(Basis::Z, Basis::Z, |a, b| self.detections(a, b))
    }

    /// Pulses with both parties in the Z basis.
    pub fn signals_z(&self) -> u64 {
        self.sum_over(Basis::Z, Basis::Z, |a, b| self.signals(a, b))
    }

    pub fn n_x(&self) -> u64 {
        self.sum_over(Basis::X, Basis::X, |a, b| self.detections(a, b))
    }

    pub fn signals_x(&self) -> u64 {
        self.sum_over(Basis::X, Basis::X, |a, b| self.signals(a, b))
    }

    /// Detections with Alice sending `alice` and Bob in the X basis.
    pub fn m_x(&self, alice: S) -> u64 {
        S::ALL
            .into_iter()
            .filter(|b| b.basis() == Basis::X)
            .map(|b| self.detections(alice, b))
            .sum()
    }

    /// Pulses with Alice sending `alice` and Bob in the X basis.
    pub fn signals_x_for(&self, alice: S) -> u64 {
        S::ALL
            .into_iter()
            .filter(|b| b.basis() == Basis::X)
            .map(|b| self.signals(alice, b))
            .sum()
    }

    /// Z-matched detections whose decoded bit differs from Alice's.
    pub fn z_errors(&self) -> u64 {
        self.cells()
            .filter(|(a, b)| a.basis() == Basis::Z && b.basis() == Basis::Z)
            .map(|(a, b)| {
                BellOutcome::ALL
                    .into_iter()
                    .filter(|&o| decode_bit(b, o) != a.bit())
                    .map(|o| self.outcome_detections(a, b, o))
                    .sum::<u64>()
            })
            .sum()
    }

    pub fn merge(&mut self, other: &TallyMatrix) {
        for a in 0..4 {
            for b in 0..4 {
                for s in 0..SLOTS {
                    self.counts[a][b][s] += other.counts[a][b][s];
                }
                for o in 0..4 {
                    self.double_assigned[a][b][o] += other.double_assigned[a][b][o];
                }
            }
        }
    }

    /// One line per cell: alice bob phi+ phi- psi+ psi- double none dphi+ dphi- dpsi+ dpsi-
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{HEADER}")?;
        writeln!(w, "# alice bob phi+ phi- psi+ psi- double none double_as_phi+ double_as_phi- double_as_psi+ double_as_psi-")?;
        for (a, b) in self.cells() {
            let c = &self.counts[a.index()][b.index()];
            let d = &self.double_assigned[a.index()][b.index()];
            writeln!(
                w,
                "{} {} {} {} {} {} {} {} {} {} {} {}",
                a, b, c[0], c[1], c[2], c[3], c[4], c[5], d[0], d[1], d[2], d[3]
            )?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut t = TallyMatrix::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 12 {
                return Err(parse_err(format!("expected 12 fields, found {}", fields.len())));
            }
            let a: S = fields[0].parse().map_err(|e: Error| parse_err(e.to_string()))?;
            let b: S = fields[1].parse().map_err(|e: Error| parse_err(e.to_string()))?;
            let nums = fields[2..]
                .iter()
                .map(|f| f.parse::<u64>().map_err(|e| parse_err(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            t.counts[a.index()][b.index()].copy_from_slice(&nums[..SLOTS]);
            t.double_assigned[a.index()][b.index()].copy_from_slice(&nums[SLOTS..]);
        }
        Ok(t)
    }
}

impl AddAssign<&TallyMatrix> for TallyMatrix {
    fn add_assign(&mut self, rhs: &TallyMatrix) {
        self.merge(rhs);
    }
}
