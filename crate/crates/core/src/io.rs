//! Binary field (`.patf`) and sinogram (`.pats`) files, PGM previews and CSV.
//!
//! `.patf`: `"PATF"`, u32 nx, u32 ny, f32 h, then nx*ny f64 values, all
//! little-endian, row-major in `[ix, iy]` order.
//! `.pats`: `"PATS"`, u32 count, u32 nt, f64 h_t, then count*nt f64 values,
//! one row per sensor.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{PatError, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::sensors::Sinogram;

const FIELD_MAGIC: &[u8; 4] = b"PATF";
const SINO_MAGIC: &[u8; 4] = b"PATS";

pub fn write_field<W: Write>(f: &ScalarField, mut out: W) -> Result<()> {
    let (nx, ny) = f.grid.shape();
    out.write_all(FIELD_MAGIC)?;
    out.write_all(&dim_u32(nx)?.to_le_bytes())?;
    out.write_all(&dim_u32(ny)?.to_le_bytes())?;
    out.write_all(&(f.grid.h as f32).to_le_bytes())?;
    for v in f.values.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a field and rebuilds its grid. The header stores `h` only in single
/// precision, so a half-width within 1e-5 of an integer is snapped to it.
pub fn read_field<R: Read>(mut input: R) -> Result<ScalarField> {
    expect_magic(&mut input, FIELD_MAGIC)?;
    let nx = read_u32(&mut input)? as usize;
    let ny = read_u32(&mut input)? as usize;
    let mut hb = [0u8; 4];
    input.read_exact(&mut hb)?;
    let h = f32::from_le_bytes(hb) as f64;
    if nx != ny || nx < 2 {
        return Err(PatError::Format(format!("expected a square grid, got {nx}x{ny}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(PatError::Format(format!("bad grid spacing {h}")));
    }
    let mut extent = 0.5 * h * (nx - 1) as f64;
    if (extent - extent.round()).abs() < 1e-5 * extent.max(1.0) {
        extent = extent.round();
    }
    let grid = Grid2D::square(nx, extent)?;
    let values = read_f64s(&mut input, nx * ny)?;
    let values = Array2::from_shape_vec((nx, ny), values).expect("length matches header");
    ScalarField::from_values(grid, values)
}

pub fn write_sinogram<W: Write>(g: &Sinogram, mut out: W) -> Result<()> {
    out.write_all(SINO_MAGIC)?;
    out.write_all(&dim_u32(g.count())?.to_le_bytes())?;
    out.write_all(&dim_u32(g.nt())?.to_le_bytes())?;
    out.write_all(&g.h_t.to_le_bytes())?;
    for v in g.values.iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sinogram<R: Read>(mut input: R) -> Result<Sinogram> {
    expect_magic(&mut input, SINO_MAGIC)?;
    let count = read_u32(&mut input)? as usize;
    let nt = read_u32(&mut input)? as usize;
    let h_t = f64::from_le_bytes(read_array(&mut input)?);
    if !(h_t > 0.0 && h_t.is_finite()) {
        return Err(PatError::Format(format!("bad time step {h_t}")));
    }
    let values = read_f64s(&mut input, count * nt)?;
    let values = Array2::from_shape_vec((count, nt), values).expect("length matches header");
    Ok(Sinogram { values, h_t })
}

pub fn save_field(f: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    write_field(f, BufWriter::new(File::create(path)?))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    read_field(BufReader::new(File::open(path)?))
}

pub fn save_sinogram(g: &Sinogram, path: impl AsRef<Path>) -> Result<()> {
    write_sinogram(g, BufWriter::new(File::create(path)?))
}

pub fn load_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    read_sinogram(BufReader::new(File::open(path)?))
}

/// 8-bit binary PGM, linearly rescaled from `[min, max]` to `[0, 255]`.
/// Rows run from top (`j = ny - 1`) to bottom so the picture shows the usual
/// orientation of the `(x, y)` plane.
pub fn write_pgm<W: Write>(values: &Array2<f64>, mut out: W) -> Result<()> {
    let (nx, ny) = values.dim();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    write!(out, "P5\n{nx} {ny}\n255\n")?;
    let mut row = vec![0u8; nx];
    for j in (0..ny).rev() {
        for (i, px) in row.iter_mut().enumerate() {
            let v = values[[i, j]];
            *px = if span > 0.0 && v.is_finite() { (255.0 * (v - lo) / span).round() as u8 } else { 0 };
        }
        out.write_all(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_pgm(values: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(values, BufWriter::new(File::create(path)?))
}

/// One line per first index, comma separated over the second.
pub fn write_csv<W: Write>(values: &Array2<f64>, mut out: W) -> Result<()> {
    for row in values.outer_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn dim_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| PatError::Format(format!("dimension {n} does not fit in 32 bits")))
}

fn expect_magic<R: Read>(input: &mut R, magic: &[u8; 4]) -> Result<()> {
    let got: [u8; 4] = read_array(input)?;
    if &got != magic {
        return Err(PatError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn read_array<R: Read, const N: usize>(input: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input.read_exact(&mut b).map_err(truncated)?;
    Ok(b)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(input)?))
}

fn read_f64s<R: Read>(input: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n.checked_mul(8).ok_or_else(|| PatError::Format("header too large".into()))?];
    input.read_exact(&mut bytes).map_err(truncated)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect())
}

fn truncated(e: std::io::Error) -> PatError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        PatError::Format("file is truncated".into())
    } else {
        PatError::Io(e)
    }
}
