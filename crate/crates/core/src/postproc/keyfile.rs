use std::io::{Read, Write};
use std::path::Path;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Writes `u64` little-endian bit length followed by the LSB-first packed bytes.
pub fn write_key<W: Write>(mut w: W, key: &BitString) -> Result<()> {
    w.write_all(&(key.len() as u64).to_le_bytes())?;
    w.write_all(&key.to_bytes())?;
    Ok(())
}

pub fn read_key<R: Read>(mut r: R) -> Result<BitString> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut bytes = Vec::with_capacity(len.div_ceil(8));
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::LengthMismatch {
            expected: len.div_ceil(8),
            actual: bytes.len(),
        });
    }
    BitString::from_bytes(&bytes, len)
}

pub fn save_key(path: &Path, key: &BitString) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_key(&mut w, key)?;
    w.flush().map_err(|e| Error::file(path, e))
}

pub fn load_key(path: &Path) -> Result<BitString> {
    let f = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    read_key(std::io::BufReader::new(f))
}
