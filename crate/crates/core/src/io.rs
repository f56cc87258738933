//! OFX1 field files and small output helpers.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 8 | magic `b"OFX1FLD\0"` |
//! | 8 | 4 | `u32` version (1) |
//! | 12 | 4 | `u32` reserved (0) |
//! | 16 | 4 | `u32` geometry tag (0 periodic, 1 channel) |
//! | 20 | 12 | `u32` dims[3] |
//! | 32 | 24 | `f64` lengths[3] |
//! | 56 | 24·n | three `f64` component arrays, x-fastest |

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Geometry, Grid, GridField};

pub const MAGIC: &[u8; 8] = b"OFX1FLD\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 56;

/// Mean magnitude above which a loaded periodic field is projected.
pub const MEAN_TOLERANCE: f64 = 1e-13;

pub fn encode(field: &GridField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&g.geometry.tag().to_le_bytes());
    for d in g.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for l in g.lengths {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for c in field.components() {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<GridField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32_at(bytes, 8);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let tag = u32_at(bytes, 16);
    let geometry = Geometry::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown geometry tag {tag}")))?;
    let dims = [u32_at(bytes, 20), u32_at(bytes, 24), u32_at(bytes, 28)].map(|d| d as usize);
    let lengths = [f64_at(bytes, 32), f64_at(bytes, 40), f64_at(bytes, 48)];
    let n = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| Error::Format("dims overflow".into()))?;
    let expected = n.checked_mul(24).and_then(|p| p.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::Format(format!(
            "payload length {} does not match dims {dims:?}",
            bytes.len()
        )));
    }
    let grid = Grid::new(dims, lengths, geometry).map_err(|e| Error::Format(e.to_string()))?;
    let comps = std::array::from_fn(|c| {
        let base = HEADER_LEN + 8 * n * c;
        (0..n).map(|i| f64_at(bytes, base + 8 * i)).collect()
    });
    GridField::new(grid, comps)
}

pub fn write_field(path: impl AsRef<Path>, field: &GridField) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<GridField> {
    decode(&fs::read(path)?)
}

/// Reads a field; a periodic field with nonzero mean is projected onto zero
/// mean and a warning is logged.
pub fn read_field_zero_mean(path: impl AsRef<Path>) -> Result<GridField> {
    let path = path.as_ref();
    let f = read_field(path)?;
    if f.grid().geometry != Geometry::Periodic3 {
        return Ok(f);
    }
    let mean = f.mean();
    if mean.iter().any(|m| m.abs() > MEAN_TOLERANCE) {
        log::warn!("{}: removing nonzero mean {mean:?}", path.display());
        return Ok(f.remove_mean());
    }
    Ok(f)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, s + "\n")?;
    Ok(())
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = Grid::channel([4, 2, 5], [1.0, 2.0, 3.0]).unwrap();
        let b = encode(&GridField::zeros(g));
        assert_eq!(b.len(), HEADER_LEN + 24 * 40);
        assert_eq!(&b[..8], MAGIC);
        assert_eq!(u32_at(&b, 16), 1);
        assert_eq!(u32_at(&b, 28), 5);
        assert_eq!(f64_at(&b, 48), 3.0);
    }

    #[test]
    fn rejects_corruption() {
        let g = Grid::periodic([4, 4, 4]).unwrap();
        let b = encode(&GridField::zeros(g));
        assert!(decode(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = b;
        bad[8] = 2;
        assert!(decode(&bad).is_err());
    }
}
