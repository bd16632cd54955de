//! Binary checkpoints.
//!
//! Little-endian layout:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `EMHD` |
//! | 4     | format version (u32) |
//! | 4     | `n_per_axis` (u32) |
//! | 8 × 4 | `box_length`, `s`, `kappa`, `time` (f64) |
//! | 3 · n³ · 16 | coefficients, component-major, each mode as `(re, im)` f64 |
//!
//! Modes within a component follow the grid's storage order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{EmhdError, Result};
use crate::field::{SpectralField, SpectralVectorField};
use crate::grid::Grid3;

pub const MAGIC: &[u8; 4] = b"EMHD";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub s: f64,
    pub kappa: f64,
    pub time: f64,
    pub field: SpectralVectorField,
}

pub fn write_checkpoint<W: Write>(mut w: W, field: &SpectralVectorField, s: f64, kappa: f64, time: f64) -> Result<()> {
    let g = field.grid();
    let n = u32::try_from(g.n()).map_err(|_| EmhdError::Format("grid too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    for v in [g.box_length(), s, kappa, time] {
        w.write_all(&v.to_le_bytes())?;
    }
    for comp in field.coeffs() {
        for c in comp {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(EmhdError::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(EmhdError::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let box_length = read_f64(&mut r)?;
    let s = read_f64(&mut r)?;
    let kappa = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;
    let grid = Grid3::with_box_length(n, box_length)?;
    let mut comps: [Vec<Complex64>; 3] = Default::default();
    for comp in comps.iter_mut() {
        comp.reserve_exact(grid.len());
        for _ in 0..grid.len() {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            comp.push(Complex64::new(re, im));
        }
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(EmhdError::Format("trailing bytes after coefficients".into()));
    }
    let field = SpectralVectorField::from_components(grid, comps, true)?;
    Ok(Checkpoint { s, kappa, time, field })
}

pub fn save(path: &Path, field: &SpectralVectorField, s: f64, kappa: f64, time: f64) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), field, s, kappa, time)
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
