//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `EIFG`, format version u32 = 1, dims u8,
//! per-axis sizes u64 x d, time f64, then row-major f64 nodal values. The
//! payload is written bit-exactly, so write -> read round-trips identically.

use eifg_core::PhysicalField;
use ndarray::{ArrayD, IxDyn};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"EIFG";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad snapshot: {0}")]
    Format(String),
}

/// A snapshot read back from disk (grid metadata only, no domain).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub sizes: Vec<usize>,
    pub time: f64,
    pub values: ArrayD<f64>,
}

pub fn write_snapshot(path: &Path, field: &PhysicalField, time: f64) -> Result<(), SnapshotError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let sizes = field.grid().sizes();
    w.write_all(&[sizes.len() as u8])?;
    for &n in sizes {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&time.to_le_bytes())?;
    for &v in field.values().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::Format(format!(
            "magic {magic:?} is not {MAGIC:?}"
        )));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(SnapshotError::Format(format!(
            "unsupported version {version}"
        )));
    }
    let mut dims = [0u8; 1];
    r.read_exact(&mut dims)?;
    let dims = dims[0] as usize;
    if !(1..=3).contains(&dims) {
        return Err(SnapshotError::Format(format!("bad dims {dims}")));
    }
    let mut sizes = Vec::with_capacity(dims);
    let mut u64buf = [0u8; 8];
    for _ in 0..dims {
        r.read_exact(&mut u64buf)?;
        sizes.push(u64::from_le_bytes(u64buf) as usize);
    }
    r.read_exact(&mut u64buf)?;
    let time = f64::from_le_bytes(u64buf);
    let count: usize = sizes.iter().product();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut u64buf)?;
        values.push(f64::from_le_bytes(u64buf));
    }
    // must be the end of the file
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(SnapshotError::Format("trailing bytes after payload".into()));
    }
    let values = ArrayD::from_shape_vec(IxDyn(&sizes), values)
        .map_err(|e| SnapshotError::Format(e.to_string()))?;
    Ok(Snapshot {
        sizes,
        time,
        values,
    })
}
