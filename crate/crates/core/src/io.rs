//! NFS1 field dumps and atomic file output.
//!
//! Layout (all little-endian): magic `NFS1`, `u32` dimension, `u32` samples
//! per axis, `f64` half width, then `n^d` `f64` samples in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{FieldRole, GridSpec, RealField};

pub const NFS1_MAGIC: &[u8; 4] = b"NFS1";
const HEADER_LEN: usize = 20;

pub fn encode_nfs1(field: &RealField) -> Vec<u8> {
    let spec = field.spec();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.values().len());
    out.extend_from_slice(NFS1_MAGIC);
    out.extend_from_slice(&(spec.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(spec.n() as u32).to_le_bytes());
    out.extend_from_slice(&spec.half_width().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_nfs1(bytes: &[u8], role: FieldRole) -> Result<RealField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != NFS1_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let dim = u32_at(4);
    let n = u32_at(8);
    let half_width = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let spec = GridSpec::new(dim, n, half_width)?;
    let expected = HEADER_LEN + 8 * spec.len();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for a {n}^{dim} grid, found {}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    RealField::new(spec, values, role)
}

pub fn read_nfs1(path: &Path, role: FieldRole) -> Result<RealField> {
    decode_nfs1(&fs::read(path)?, role)
}

pub fn write_nfs1(path: &Path, field: &RealField) -> Result<()> {
    write_atomic(path, &encode_nfs1(field))
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let spec = GridSpec::new(2, 4, 1.5).unwrap();
        let f = RealField::from_fn(spec, FieldRole::Generic, |x| x[0] - 2.0 * x[1]).unwrap();
        let bytes = encode_nfs1(&f);
        assert_eq!(&bytes[..4], b"NFS1");
        assert_eq!(&bytes[4..8], &[2, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[4, 0, 0, 0]);
        assert_eq!(&bytes[12..20], &1.5f64.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 16 * 8);
        assert_eq!(&bytes[20..28], &f.values()[0].to_le_bytes());
    }

    #[test]
    fn rejects_bad_magic_and_length() {
        let spec = GridSpec::new(1, 4, 1.0).unwrap();
        let mut bytes = encode_nfs1(&RealField::zeros(spec));
        let good = bytes.clone();
        bytes[0] = b'X';
        assert!(matches!(
            decode_nfs1(&bytes, FieldRole::Generic),
            Err(Error::Format(_))
        ));
        let short = &good[..good.len() - 1];
        assert!(matches!(
            decode_nfs1(short, FieldRole::Generic),
            Err(Error::Format(_))
        ));
        let mut long = good.clone();
        long.extend_from_slice(&[0; 8]);
        assert!(matches!(
            decode_nfs1(&long, FieldRole::Generic),
            Err(Error::Format(_))
        ));
        assert!(decode_nfs1(&good[..10], FieldRole::Generic).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("nfs1-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.nfs");
        let spec = GridSpec::new(3, 4, 2.0).unwrap();
        let f = RealField::from_fn(spec, FieldRole::Source, |x| x.iter().sum()).unwrap();
        write_nfs1(&path, &f).unwrap();
        let g = read_nfs1(&path, FieldRole::Source).unwrap();
        assert_eq!(f, g);
        fs::remove_dir_all(dir).unwrap();
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(values in prop::collection::vec(-1e300f64..1e300, 16), l in 1e-3f64..1e3) {
            let spec = GridSpec::new(2, 4, l).unwrap();
            let f = RealField::new(spec, values, FieldRole::Generic).unwrap();
            prop_assert_eq!(decode_nfs1(&encode_nfs1(&f), FieldRole::Generic).unwrap(), f);
        }
    }
}
