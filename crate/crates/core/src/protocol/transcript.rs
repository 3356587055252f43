use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::quantum::{BellOutcome, ProtocolState};

const HEADER: &str = "# ddiqkd transcript v1";

/// One detection round as announced over the classical channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptRow {
    pub index: u64,
    pub alice: ProtocolState,
    pub bob: ProtocolState,
    pub outcome: BellOutcome,
    pub double_click: bool,
}

/// Detection rounds in order. No-click rounds are dropped before sifting and
/// live only in the tally.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    pub rows: Vec<TranscriptRow>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: TranscriptRow) {
        self.rows.push(row);
    }

    /// Appends `other`, shifting its round indices by `offset`.
    pub fn extend_shifted(&mut self, other: &Transcript, offset: u64) {
        self.rows.extend(other.rows.iter().map(|r| TranscriptRow {
            index: r.index + offset,
            ..*r
        }));
    }

    /// Columnar text: `index alice bob outcome double`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{HEADER}")?;
        writeln!(w, "# index alice bob outcome double")?;
        for r in &self.rows {
            writeln!(
                w,
                "{} {} {} {} {}",
                r.index,
                r.alice,
                r.bob,
                r.outcome,
                u8::from(r.double_click)
            )?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut t = Transcript::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", f.len())));
            }
            let double_click = match f[4] {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("bad double-click flag {other:?}"))),
            };
            t.push(TranscriptRow {
                index: f[0].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
                alice: f[1].parse().map_err(|e: Error| err(e.to_string()))?,
                bob: f[2].parse().map_err(|e: Error| err(e.to_string()))?,
                outcome: f[3].parse().map_err(|e: Error| err(e.to_string()))?,
                double_click,
            });
        }
        Ok(t)
    }
}
