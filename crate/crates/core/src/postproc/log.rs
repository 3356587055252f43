use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

const HEADER: &str = "# ddiqkd distillation log v1";
const COLUMNS: &str = "block n qber disclosed tag_bits f_ec ell attenuation_db skr_bps note";

/// One distilled block. Missing values print as `-`; the note is free text to
/// the end of the line.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub block: u64,
    pub n: u64,
    pub qber: f64,
    pub disclosed: u64,
    pub tag_bits: u32,
    pub f_ec: Option<f64>,
    pub ell: u64,
    pub attenuation_db: f64,
    pub skr_bps: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistillationLog {
    pub rows: Vec<LogRow>,
}

impl DistillationLog {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{HEADER}")?;
        writeln!(w, "# {COLUMNS}")?;
        for r in &self.rows {
            let mut line = String::new();
            let f = r.f_ec.map_or("-".to_string(), |f| format!("{f:.6}"));
            write!(
                line,
                "{} {} {:.8} {} {} {} {} {} {:.6}",
                r.block, r.n, r.qber, r.disclosed, r.tag_bits, f, r.ell, r.attenuation_db, r.skr_bps
            )
            .expect("string write");
            if !r.note.is_empty() {
                line.push(' ');
                line.push_str(&r.note.replace('\n', " "));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut log = Self::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Parse { line: i + 1, message: m };
            let mut f = line.splitn(10, ' ');
            let mut next = |name: &str| f.next().ok_or_else(|| err(format!("missing {name}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(e.to_string()));
            let int = |s: &str| s.parse::<u64>().map_err(|e| err(e.to_string()));
            let block = int(next("block")?)?;
            let n = int(next("n")?)?;
            let qber = num(next("qber")?)?;
            let disclosed = int(next("disclosed")?)?;
            let tag_bits = int(next("tag_bits")?)? as u32;
            let f_ec = match next("f_ec")? {
                "-" => None,
                s => Some(num(s)?),
            };
            let ell = int(next("ell")?)?;
            let attenuation_db = num(next("attenuation_db")?)?;
            let skr_bps = num(next("skr_bps")?)?;
            let note = f.next().unwrap_or("").to_string();
            log.rows.push(LogRow { block, n, qber, disclosed, tag_bits, f_ec, ell, attenuation_db, skr_bps, note });
        }
        Ok(log)
    }
}
