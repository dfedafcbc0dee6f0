//! Field export: a flat little-endian `f64` file plus a JSON sidecar.

use super::{Field, Grid};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub grid: Grid,
    pub axis_order: Vec<String>,
    pub shape: Vec<usize>,
    pub dtype: String,
}

impl Sidecar {
    pub fn for_grid(grid: &Grid) -> Self {
        let mut axis_order: Vec<String> = (1..=grid.d).map(|i| format!("x{i}")).collect();
        if grid.y.is_some() {
            axis_order.extend((1..=grid.d).map(|i| format!("y{i}")));
        }
        if grid.t.is_some() {
            axis_order.push("t".into());
        }
        Self { grid: grid.clone(), axis_order, shape: grid.shape(), dtype: "f64-le".into() }
    }
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `<stem>.bin` and `<stem>.json` into `dir`; returns the binary path.
pub fn write_field(field: &Field, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("{stem}.bin"));
    let mut bytes = Vec::with_capacity(8 * field.len());
    for v in &field.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    fs::write(sidecar_path(&bin), serde_json::to_string_pretty(&Sidecar::for_grid(&field.grid))?)?;
    Ok(bin)
}

/// Reads a field written by [`write_field`].
pub fn read_field(bin: &Path) -> Result<Field> {
    let meta: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(bin))?)?;
    let bytes = fs::read(bin)?;
    if bytes.len() != 8 * meta.grid.len() {
        return Err(Error::DimensionMismatch { expected: 8 * meta.grid.len(), got: bytes.len() });
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Field::new(meta.grid, values)
}
