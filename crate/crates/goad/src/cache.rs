//! Binary cache of an encoded dataset.
//!
//! | field            | encoding                                   |
//! |------------------|--------------------------------------------|
//! | magic            | `GOADDATA` (8 bytes)                       |
//! | version          | u32 = 1                                    |
//! | rows, cols       | u64, u64                                   |
//! | feature names    | `cols` × (u32 length + UTF-8)              |
//! | continuous mask  | `cols` bytes, 0 or 1                       |
//! | payload          | `rows·cols` f64, row-major                 |
//! | labels           | `rows` bytes, 0 = normal, 1 = anomaly      |
//!
//! All integers and floats are little-endian.

use std::path::Path;

use goad_core::dataset::{EncodedDataset, Label};
use goad_core::Matrix;

use crate::bin_io::{Reader, Writer};
use crate::error::{GoadError, Result};

pub const DATA_MAGIC: &[u8; 8] = b"GOADDATA";
pub const DATA_VERSION: u32 = 1;

pub fn dataset_to_bytes(ds: &EncodedDataset) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(DATA_MAGIC);
    w.u32(DATA_VERSION);
    w.usize(ds.x.rows());
    w.usize(ds.x.cols());
    for name in &ds.feature_names {
        w.str(name);
    }
    for &c in &ds.continuous_mask {
        w.u8(c as u8);
    }
    w.f64s(ds.x.as_slice());
    for l in &ds.y {
        w.u8(l.is_anomaly() as u8);
    }
    w.buf
}

pub fn dataset_from_bytes(bytes: &[u8]) -> std::result::Result<EncodedDataset, String> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != DATA_MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32()?;
    if version != DATA_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let rows = r.usize()?;
    let cols = r.usize()?;
    let names = (0..cols).map(|_| r.str()).collect::<std::result::Result<Vec<_>, _>>()?;
    let mask = (0..cols)
        .map(|_| match r.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(format!("bad mask byte {b}")),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let data = r.f64s(rows.checked_mul(cols).ok_or("shape overflow")?)?;
    let labels = (0..rows)
        .map(|_| match r.u8()? {
            0 => Ok(Label::Normal),
            1 => Ok(Label::Anomaly),
            b => Err(format!("bad label byte {b}")),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if r.remaining() != 0 {
        return Err(format!("{} trailing bytes", r.remaining()));
    }
    let x = Matrix::new(rows, cols, data).map_err(|e| e.to_string())?;
    EncodedDataset::new(x, labels, names, mask).map_err(|e| e.to_string())
}

pub fn save_dataset(path: &Path, ds: &EncodedDataset) -> Result<()> {
    std::fs::write(path, dataset_to_bytes(ds)).map_err(|e| GoadError::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<EncodedDataset> {
    let bytes = std::fs::read(path).map_err(|e| GoadError::io(path, e))?;
    dataset_from_bytes(&bytes).map_err(|message| GoadError::Format {
        path: path.to_owned(),
        what: "dataset cache",
        message,
    })
}
