//! Field files: the little-endian `NLF1` binary layout and plain CSV.
//!
//! An `NLF1` file holds the magic bytes `NLF1`, then `n`, the cells per axis and the
//! component count as `u32`, then every value as an `f64`. Values are stored component by
//! component, each in row-major node order. The file stores no geometry; readers attach a
//! [`GridSpec`] with the matching shape.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};

const MAGIC: &[u8; 4] = b"NLF1";

/// Raw contents of an `NLF1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct NlfData {
    pub n: usize,
    pub cells: usize,
    pub components: usize,
    pub values: Vec<f64>,
}

impl NlfData {
    /// Attaches a grid, which must have the stored dimension and cell count.
    pub fn into_field(self, grid: GridSpec) -> Result<GridField> {
        if grid.n != self.n || grid.cells != self.cells {
            return Err(Error::GridMismatch);
        }
        Ok(GridField { grid, components: self.components, values: self.values })
    }
}

pub fn write_nlf<W: Write>(mut w: W, field: &GridField) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    for v in [field.grid.n, field.grid.cells, field.components] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

pub fn read_nlf<R: Read>(mut r: R) -> Result<NlfData> {
    let io = |e: std::io::Error| Error::InvalidParams(format!("unreadable NLF1 data: {e}"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::InvalidParams("missing NLF1 magic".into()));
    }
    let n = read_u32(&mut r).map_err(io)?;
    let cells = read_u32(&mut r).map_err(io)?;
    let components = read_u32(&mut r).map_err(io)?;
    if !(n == 1 || n == 2) || components == 0 {
        return Err(Error::InvalidParams(format!("bad NLF1 header: n = {n}, components = {components}")));
    }
    let count = cells.checked_pow(n as u32).and_then(|c| c.checked_mul(components));
    let count = count.ok_or_else(|| Error::InvalidParams("NLF1 header overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != 8 * count {
        return Err(Error::InvalidParams(format!("NLF1 body holds {} bytes, expected {}", bytes.len(), 8 * count)));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok(NlfData { n, cells, components, values })
}

/// Writes one row per node: coordinates followed by the components.
pub fn write_field_csv<W: Write>(mut w: W, field: &GridField) -> std::io::Result<()> {
    let grid = field.grid;
    let len = grid.len();
    let axes = ["x", "y"];
    let mut cols: Vec<String> = axes[..grid.n].iter().map(|s| s.to_string()).collect();
    cols.extend((0..field.components).map(|c| format!("v{c}")));
    writeln!(w, "{}", cols.join(","))?;
    for i in 0..len {
        let x = grid.coord(i);
        let mut row: Vec<String> = x[..grid.n].iter().map(|v| format!("{v:.17e}")).collect();
        row.extend((0..field.components).map(|c| format!("{:.17e}", field.values[c * len + i])));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}
