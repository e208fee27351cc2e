//! Binary field files: magic `CGO8F001`, little-endian u32 n, f64 L,
//! u32 component count, then component-major interleaved (re, im) f64
//! samples in x-fastest order.

use super::{Field8, FieldError, Grid3, ScalarField, VectorField, C64};
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 8] = b"CGO8F001";
const HEADER: usize = 8 + 4 + 8 + 4;

fn encode(components: &[&ScalarField]) -> Vec<u8> {
    let grid = components[0].grid();
    let mut out = Vec::with_capacity(HEADER + components.len() * grid.len() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    out.extend_from_slice(&(components.len() as u32).to_le_bytes());
    for c in components {
        for v in c.data() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

/// Writes through a temporary sibling file and renames, so readers never see
/// a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FieldError> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_scalar(path: impl AsRef<Path>, f: &ScalarField) -> Result<(), FieldError> {
    write_atomic(path.as_ref(), &encode(&[f]))
}

pub fn write_vector(path: impl AsRef<Path>, v: &VectorField) -> Result<(), FieldError> {
    write_atomic(path.as_ref(), &encode(&[&v.c[0], &v.c[1], &v.c[2]]))
}

pub fn write_field8(path: impl AsRef<Path>, w: &Field8) -> Result<(), FieldError> {
    let comps: Vec<&ScalarField> = (0..8).map(|j| w.component(j)).collect();
    write_atomic(path.as_ref(), &encode(&comps))
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn read_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

/// Reads any field file and returns its grid and components.
pub fn read_components(path: impl AsRef<Path>) -> Result<(Grid3, Vec<ScalarField>), FieldError> {
    let bytes = fs::read(path)?;
    if bytes.len() < HEADER {
        return Err(FieldError::Truncated { expected: HEADER, found: bytes.len() });
    }
    if &bytes[..8] != MAGIC {
        return Err(FieldError::BadMagic);
    }
    let n_raw = read_u32(&bytes, 8);
    let box_length = read_f64(&bytes, 12);
    let count = read_u32(&bytes, 20);
    if !matches!(count, 1 | 3 | 8) {
        return Err(FieldError::UnsupportedComponents(count));
    }
    let n = n_raw as usize;
    let samples = n
        .checked_mul(n)
        .and_then(|v| v.checked_mul(n))
        .filter(|v| v.checked_mul(16 * count as usize).is_some())
        .ok_or(FieldError::DimensionOverflow(n_raw))?;
    let expected = HEADER + samples * 16 * count as usize;
    if bytes.len() != expected {
        return Err(FieldError::Truncated { expected, found: bytes.len() });
    }
    let grid = Grid3::new(n, box_length)?;
    let mut comps = Vec::with_capacity(count as usize);
    let mut at = HEADER;
    for _ in 0..count {
        let mut data = Vec::with_capacity(samples);
        for _ in 0..samples {
            data.push(C64::new(read_f64(&bytes, at), read_f64(&bytes, at + 8)));
            at += 16;
        }
        comps.push(ScalarField::from_vec(grid, data));
    }
    Ok((grid, comps))
}

pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarField, FieldError> {
    let (_, mut c) = read_components(path)?;
    if c.len() != 1 {
        return Err(FieldError::ComponentCount { expected: 1, found: c.len() });
    }
    Ok(c.pop().unwrap())
}

pub fn read_field8(path: impl AsRef<Path>) -> Result<Field8, FieldError> {
    let (_, c) = read_components(path)?;
    if c.len() != 8 {
        return Err(FieldError::ComponentCount { expected: 8, found: c.len() });
    }
    Ok(Field8::from_components(c))
}
