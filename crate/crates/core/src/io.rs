//! The SWRL1 field container and atomic file writes.
//!
//! Layout (little-endian): 8-byte magic `SWRL1\0\0\0`; `u32` nr, nz, field_count;
//! `f64` R_max, L_z, time; then per field a 16-byte NUL-padded name followed by
//! `nr·nz` `f64` values, r-major.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{RoleTag, ScalarFieldRZ};
use crate::grid::HalfPlaneGrid;

pub const MAGIC: [u8; 8] = *b"SWRL1\0\0\0";
const NAME_LEN: usize = 16;
const HEADER_LEN: usize = 8 + 3 * 4 + 3 * 8;

/// Fields read from one SWRL1 file.
#[derive(Debug, Clone)]
pub struct FieldBundle {
    pub grid: Arc<HalfPlaneGrid>,
    pub time: f64,
    pub fields: Vec<(String, ScalarFieldRZ)>,
}

impl FieldBundle {
    pub fn get(&self, name: &str) -> Option<&ScalarFieldRZ> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

/// Role implied by a stored field name.
pub fn role_for_name(name: &str) -> RoleTag {
    match name {
        "gamma" => RoleTag::Gamma,
        "G" => RoleTag::G,
        "phi" => RoleTag::Phi,
        n if n.starts_with("shell") => RoleTag::Shell,
        _ => RoleTag::Generic,
    }
}

pub fn encode(time: f64, fields: &[(&str, &ScalarFieldRZ)]) -> Result<Vec<u8>> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidParameter("SWRL1 needs at least one field".into()))?
        .1;
    let grid = first.grid().clone();
    for (name, f) in fields {
        f.same_grid(first)?;
        if name.len() > NAME_LEN || name.is_empty() || name.as_bytes().contains(&0) {
            return Err(Error::InvalidParameter(format!("field name {name:?} must be 1..=16 bytes without NUL")));
        }
    }
    let mut out = Vec::with_capacity(HEADER_LEN + fields.len() * (NAME_LEN + 8 * grid.len()));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(grid.nr() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.nz() as u32).to_le_bytes());
    out.extend_from_slice(&(fields.len() as u32).to_le_bytes());
    out.extend_from_slice(&grid.r_max().to_le_bytes());
    out.extend_from_slice(&grid.z_extent().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for (name, f) in fields {
        let mut label = [0u8; NAME_LEN];
        label[..name.len()].copy_from_slice(name.as_bytes());
        out.extend_from_slice(&label);
        for v in f.values().iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated { expected: self.pos + n, found: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Decodes a container; `grid` (when given) must match the stored dimensions.
pub fn decode(bytes: &[u8], grid: Option<&Arc<HalfPlaneGrid>>) -> Result<FieldBundle> {
    let mut c = Cursor { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() || c.take(8)? != MAGIC {
        return Err(Error::Format("bad magic: not an SWRL1 file".into()));
    }
    let nr = c.u32()? as usize;
    let nz = c.u32()? as usize;
    let count = c.u32()? as usize;
    let r_max = c.f64()?;
    let z_extent = c.f64()?;
    let time = c.f64()?;
    let expected = HEADER_LEN + count * (NAME_LEN + 8 * nr * nz);
    if bytes.len() < expected {
        return Err(Error::Truncated { expected, found: bytes.len() });
    }
    let grid = match grid {
        Some(g) => {
            if g.nr() != nr || g.nz() != nz || g.r_max() != r_max || g.z_extent() != z_extent {
                return Err(Error::GridMismatch(format!(
                    "file grid {nr}x{nz} (R={r_max}, L={z_extent}) differs from {}x{} (R={}, L={})",
                    g.nr(),
                    g.nz(),
                    g.r_max(),
                    g.z_extent()
                )));
            }
            g.clone()
        }
        None => HalfPlaneGrid::new(nr, nz, r_max, z_extent)?,
    };
    let mut fields = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = c.take(NAME_LEN)?;
        let end = raw.iter().position(|&b| b == 0).unwrap_or(NAME_LEN);
        let name = std::str::from_utf8(&raw[..end])
            .map_err(|_| Error::Format("field name is not UTF-8".into()))?
            .to_string();
        let data = c.take(8 * nr * nz)?;
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        let values = Array2::from_shape_vec((nr, nz), values).expect("length checked");
        let role = role_for_name(&name);
        fields.push((name, ScalarFieldRZ::new(grid.clone(), values, role)?));
    }
    Ok(FieldBundle { grid, time, fields })
}

pub fn write_fields(path: &Path, time: f64, fields: &[(&str, &ScalarFieldRZ)]) -> Result<()> {
    atomic_write(path, &encode(time, fields)?)
}

pub fn read_fields(path: &Path) -> Result<FieldBundle> {
    decode(&fs::read(path)?, None)
}

/// Reads into an existing grid; dimensions must agree.
pub fn read_fields_into(path: &Path, grid: &Arc<HalfPlaneGrid>) -> Result<FieldBundle> {
    decode(&fs::read(path)?, Some(grid))
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Arc<HalfPlaneGrid> {
        HalfPlaneGrid::new(16, 8, 3.0, 2.0).unwrap()
    }

    #[test]
    fn gamma_round_trip_through_file() {
        let g = grid();
        let gamma = ScalarFieldRZ::from_fn(g.clone(), RoleTag::Gamma, |r, z| r * r * (-(r * r + z * z)).exp()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.swrl");
        write_fields(&path, 0.25, &[("gamma", &gamma)]).unwrap();
        let back = read_fields_into(&path, &g).unwrap();
        assert_eq!(back.time, 0.25);
        let f = back.get("gamma").unwrap();
        assert_eq!(f.role(), RoleTag::Gamma);
        for (a, b) in f.values().iter().zip(gamma.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = encode(0.0, &[("G", &ScalarFieldRZ::zeros(grid(), RoleTag::G))]).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes, None), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode(0.0, &[("G", &ScalarFieldRZ::zeros(grid(), RoleTag::G))]).unwrap();
        let short = &bytes[..bytes.len() - 8];
        assert!(matches!(decode(short, None), Err(Error::Truncated { .. })));
    }

    #[test]
    fn grid_mismatch() {
        let bytes = encode(0.0, &[("G", &ScalarFieldRZ::zeros(grid(), RoleTag::G))]).unwrap();
        let other = HalfPlaneGrid::new(16, 8, 3.5, 2.0).unwrap();
        assert!(matches!(decode(&bytes, Some(&other)), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn header_layout() {
        let bytes = encode(1.5, &[("G", &ScalarFieldRZ::zeros(grid(), RoleTag::G))]).unwrap();
        assert_eq!(&bytes[..8], b"SWRL1\0\0\0");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(bytes[36..44].try_into().unwrap()), 1.5);
        assert_eq!(bytes.len(), HEADER_LEN + 16 + 8 * 16 * 8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn bit_exact_round_trip(values in proptest::collection::vec(-1e300f64..1e300, 16 * 8), t in -1e6f64..1e6) {
            let g = grid();
            let f = ScalarFieldRZ::new(g.clone(), Array2::from_shape_vec((16, 8), values).unwrap(), RoleTag::Generic).unwrap();
            let bytes = encode(t, &[("a", &f), ("bb", &f.scaled(-1.0))]).unwrap();
            let back = decode(&bytes, Some(&g)).unwrap();
            prop_assert_eq!(back.time.to_bits(), t.to_bits());
            for (a, b) in back.fields[0].1.values().iter().zip(f.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back.fields[1].0.as_str(), "bb");
        }
    }
}
