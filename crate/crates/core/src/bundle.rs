//! Self-describing parameter files: 4 magic bytes, a u32 length, a UTF-8 JSON
//! header of that length, then the parameters as packed little-endian f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn write_bundle<H: Serialize>(
    path: &Path,
    magic: &[u8; 4],
    header: &H,
    payload: &[f64],
) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::format("header too large"))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(magic)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(&(payload.len() as u64).to_le_bytes())?;
    for v in payload {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_bundle<H: DeserializeOwned>(
    path: &Path,
    magic: &[u8; 4],
) -> Result<(H, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::format(format!(
            "{} is not a {} file",
            path.display(),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let mut json = vec![0u8; u32::from_le_bytes(b4) as usize];
    r.read_exact(&mut json)?;
    let header: H = serde_json::from_slice(&json)?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let mut payload = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        payload.push(f64::from_le_bytes(b8));
    }
    Ok((header, payload))
}

/// Sequential reader over a payload slice.
pub(crate) struct Floats<'a> {
    data: &'a [f64],
    pos: usize,
}

impl<'a> Floats<'a> {
    pub(crate) fn new(data: &'a [f64]) -> Self {
        Floats { data, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [f64]> {
        if self.pos + n > self.data.len() {
            return Err(Error::format("parameter payload is truncated"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::format("parameter payload has trailing values"));
        }
        Ok(())
    }
}
