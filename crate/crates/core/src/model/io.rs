//! Dataset files: a text CSV layout and a compact little-endian binary layout.
//!
//! CSV: header `seq,label,processed,re0,im0,...,re{B-1},im{B-1}`, one snapshot per line,
//! empty label for unlabeled snapshots.
//!
//! Binary: magic `CIR1`, u32 snapshot count, u32 bin count, u8 processed flag, then per
//! snapshot an i64 seq, an i32 label (-1 = unlabeled) and `bin count` (re, im) f64 pairs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use super::{AreaId, CirSnapshot, Dataset, PROCESSED_BINS, RAW_BINS};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CIR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Binary,
}

impl DatasetFormat {
    /// `.csv` means CSV; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Binary,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DatasetFormat::Csv),
            "binary" | "bin" => Ok(DatasetFormat::Binary),
            other => Err(Error::arg(format!("unknown dataset format '{other}'"))),
        }
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset> {
    let file = File::open(path)?;
    let meta = format!("loaded from {}", path.display());
    let snapshots = match format {
        DatasetFormat::Csv => read_csv(BufReader::new(file))?,
        DatasetFormat::Binary => read_binary(BufReader::new(file))?,
    };
    let mut d = Dataset::new(snapshots, "")?;
    d.meta = meta;
    Ok(d)
}

pub fn save_dataset(dataset: &Dataset, path: &Path, format: DatasetFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        DatasetFormat::Csv => write_csv(dataset, &mut w)?,
        DatasetFormat::Binary => write_binary(dataset, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn bins_for(dataset: &Dataset) -> (usize, bool) {
    match dataset.processed() {
        Some(true) => (PROCESSED_BINS, true),
        _ => (RAW_BINS, false),
    }
}

pub(crate) fn write_csv<W: Write>(dataset: &Dataset, w: &mut W) -> Result<()> {
    let (b, _) = bins_for(dataset);
    let mut header = String::from("seq,label,processed");
    for i in 0..b {
        header.push_str(&format!(",re{i},im{i}"));
    }
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for s in dataset.snapshots() {
        line.clear();
        line.push_str(&s.seq.to_string());
        line.push(',');
        if let Some(l) = s.label {
            line.push_str(&l.0.to_string());
        }
        line.push_str(if s.processed { ",1" } else { ",0" });
        for c in &s.bins {
            // `{:?}` prints the shortest representation that parses back to the same f64.
            line.push_str(&format!(",{:?},{:?}", c.re, c.im));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub(crate) fn read_csv<R: BufRead>(r: R) -> Result<Vec<CirSnapshot>> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Parse {
                row: 1,
                msg: "missing header".into(),
            })
        }
    };
    let header_fields: Vec<&str> = header.trim_end().split(',').collect();
    if header_fields.len() < 3 || header_fields[..3] != ["seq", "label", "processed"] {
        return Err(Error::Parse {
            row: 1,
            msg: "header must start with seq,label,processed".into(),
        });
    }
    let header_bins = (header_fields.len() - 3) / 2;
    if (header_fields.len() - 3) % 2 != 0
        || !(header_bins == RAW_BINS || header_bins == PROCESSED_BINS)
    {
        return Err(Error::format(format!(
            "header declares {} value columns",
            header_fields.len() - 3
        )));
    }

    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 || (fields.len() - 3) % 2 != 0 {
            return Err(Error::Parse {
                row,
                msg: format!("wrong field count {}", fields.len()),
            });
        }
        let nbins = (fields.len() - 3) / 2;
        if nbins != header_bins {
            return Err(Error::format(format!(
                "row {row}: {nbins} bins but header declares {header_bins}"
            )));
        }
        let seq = match fields[0].trim() {
            "" => out.len() as i64,
            s => s.parse::<i64>().map_err(|e| Error::Parse {
                row,
                msg: format!("seq: {e}"),
            })?,
        };
        let label = match fields[1].trim() {
            "" => None,
            s => Some(AreaId(s.parse::<u32>().map_err(|e| Error::Parse {
                row,
                msg: format!("label: {e}"),
            })?)),
        };
        let processed = match fields[2].trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(Error::Parse {
                    row,
                    msg: format!("processed flag '{other}'"),
                })
            }
        };
        let mut bins = Vec::with_capacity(nbins);
        for pair in fields[3..].chunks(2) {
            let re = parse_finite(pair[0], row)?;
            let im = parse_finite(pair[1], row)?;
            bins.push(Complex64::new(re, im));
        }
        let snap = CirSnapshot::new(bins, label, seq, processed)
            .map_err(|e| Error::format(format!("row {row}: {e}")))?;
        out.push(snap);
    }
    Ok(out)
}

fn parse_finite(s: &str, row: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|e| Error::Parse {
        row,
        msg: format!("'{s}': {e}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            msg: format!("non-finite value '{s}'"),
        });
    }
    Ok(v)
}

pub(crate) fn write_binary<W: Write>(dataset: &Dataset, w: &mut W) -> Result<()> {
    let (b, processed) = bins_for(dataset);
    let count = u32::try_from(dataset.len()).map_err(|_| Error::format("too many snapshots"))?;
    w.write_all(MAGIC)?;
    w.write_all(&count.to_le_bytes())?;
    w.write_all(&(b as u32).to_le_bytes())?;
    w.write_all(&[processed as u8])?;
    for s in dataset.snapshots() {
        w.write_all(&s.seq.to_le_bytes())?;
        let label: i32 = match s.label {
            Some(l) => {
                i32::try_from(l.0).map_err(|_| Error::format("label does not fit in i32"))?
            }
            None => -1,
        };
        w.write_all(&label.to_le_bytes())?;
        for c in &s.bins {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub(crate) fn read_binary<R: Read>(mut r: R) -> Result<Vec<CirSnapshot>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::format("bad magic, expected CIR1"));
    }
    let count = read_u32(&mut r)? as usize;
    let nbins = read_u32(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let processed = match flag[0] {
        0 => false,
        1 => true,
        f => return Err(Error::format(format!("bad processed flag {f}"))),
    };
    let mut out = Vec::with_capacity(count.min(1 << 20));
    let mut buf8 = [0u8; 8];
    let mut buf4 = [0u8; 4];
    for i in 0..count {
        r.read_exact(&mut buf8)?;
        let seq = i64::from_le_bytes(buf8);
        r.read_exact(&mut buf4)?;
        let label = match i32::from_le_bytes(buf4) {
            -1 => None,
            l if l >= 0 => Some(AreaId(l as u32)),
            l => {
                return Err(Error::Parse {
                    row: i,
                    msg: format!("negative label {l}"),
                })
            }
        };
        let mut bins = Vec::with_capacity(nbins);
        for _ in 0..nbins {
            r.read_exact(&mut buf8)?;
            let re = f64::from_le_bytes(buf8);
            r.read_exact(&mut buf8)?;
            let im = f64::from_le_bytes(buf8);
            bins.push(Complex64::new(re, im));
        }
        out.push(CirSnapshot::new(bins, label, seq, processed)?);
    }
    Ok(out)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
