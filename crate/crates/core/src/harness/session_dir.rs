use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{Session, TallyMatrix, Transcript};

pub const TRANSCRIPT_FILE: &str = "transcript.txt";
pub const TALLY_FILE: &str = "tally.txt";
pub const META_FILE: &str = "session.toml";

/// Run parameters stored next to a session's transcript and tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionMeta {
    pub seed: u64,
    pub mu: f64,
    pub pulse_rate: f64,
    pub rounds: u64,
    pub attenuation_db: f64,
    pub distance_km: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::file(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::file(path, e))?))
}

pub fn save_session(dir: &Path, session: &Session, meta: &SessionMeta) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let p = dir.join(TRANSCRIPT_FILE);
    let mut w = create(&p)?;
    session.transcript.write_to(&mut w)?;
    w.flush().map_err(|e| Error::file(&p, e))?;
    let p = dir.join(TALLY_FILE);
    let mut w = create(&p)?;
    session.tally.write_to(&mut w)?;
    w.flush().map_err(|e| Error::file(&p, e))?;
    let p = dir.join(META_FILE);
    std::fs::write(&p, toml::to_string(meta).expect("meta serializes")).map_err(|e| Error::file(&p, e))
}

pub fn load_session(dir: &Path) -> Result<(Session, SessionMeta)> {
    let transcript = Transcript::read_from(open(&dir.join(TRANSCRIPT_FILE))?)?;
    let tally = TallyMatrix::read_from(open(&dir.join(TALLY_FILE))?)?;
    let p = dir.join(META_FILE);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::file(&p, e))?;
    let meta: SessionMeta = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
    Ok((Session::from_records(tally, transcript, meta.rounds), meta))
}
