//! MAT1: a little-endian binary matrix file.
//!
//! | bytes | content |
//! |-------|---------|
//! | 0..4  | magic `BMC1` |
//! | 4     | version, 1 |
//! | 5     | dtype, 1 = f64 |
//! | 6..8  | zero |
//! | 8..16 | rows, u64 |
//! | 16..24| cols, u64 |
//! | 24..  | rows × cols f64, row-major |

use std::path::Path;

use crate::error::{Error, Result};
use crate::Mat;

pub const MAGIC: &[u8; 4] = b"BMC1";
pub const VERSION: u8 = 1;
pub const DTYPE_F64: u8 = 1;
pub const HEADER_LEN: usize = 24;

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::FormatError { offset: offset as u64, message: message.into() }
}

pub fn encode_matrix(m: &Mat) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, DTYPE_F64, 0, 0]);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u64(bytes: &[u8], at: usize) -> Result<u64> {
    let chunk = bytes
        .get(at..at + 8)
        .ok_or_else(|| format_err(bytes.len(), "file ends inside the header"))?;
    Ok(u64::from_le_bytes(chunk.try_into().expect("8-byte slice")))
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Mat> {
    for (i, &b) in MAGIC.iter().enumerate() {
        match bytes.get(i) {
            None => return Err(format_err(bytes.len(), "file ends inside the magic")),
            Some(&c) if c != b => return Err(format_err(i, "bad magic, expected BMC1")),
            _ => {}
        }
    }
    let byte = |at: usize| bytes.get(at).copied().ok_or_else(|| format_err(bytes.len(), "file ends inside the header"));
    let version = byte(4)?;
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let dtype = byte(5)?;
    if dtype != DTYPE_F64 {
        return Err(format_err(5, format!("unsupported dtype {dtype}")));
    }
    for at in 6..8 {
        if byte(at)? != 0 {
            return Err(format_err(at, "reserved byte is not zero"));
        }
    }
    let rows = read_u64(bytes, 8)?;
    if rows == 0 {
        return Err(format_err(8, "row count is zero"));
    }
    let cols = read_u64(bytes, 16)?;
    if cols == 0 {
        return Err(format_err(16, "column count is zero"));
    }
    let n = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .filter(|n| n.checked_mul(8).is_some())
        .ok_or_else(|| format_err(8, format!("{rows}x{cols} is too large")))?;
    let expected = HEADER_LEN + 8 * n;
    if bytes.len() < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated: {rows}x{cols} needs {expected} bytes, file has {}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(format_err(expected, "trailing bytes after the matrix data"));
    }
    let mut data = Vec::with_capacity(n);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        if v.is_nan() {
            return Err(format_err(HEADER_LEN + 8 * k, format!("NaN entry at index {k}")));
        }
        data.push(v);
    }
    Mat::new(rows as usize, cols as usize, data)
}

pub fn save_matrix(m: &Mat, path: &Path) -> Result<()> {
    std::fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<Mat> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes).map_err(|e| e.context(path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    fn offset(r: Result<Mat>) -> u64 {
        match r {
            Err(Error::FormatError { offset, .. }) => offset,
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m: Mat = Rng::new(1).normal_matrix(7, 3, 1.0);
        let back = decode_matrix(&encode_matrix(&m)).unwrap();
        assert_eq!(m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        let z = Mat::filled(1, 1, -0.0);
        assert!(decode_matrix(&encode_matrix(&z)).unwrap()[(0, 0)].is_sign_negative());
    }

    #[test]
    fn header_layout() {
        let bytes = encode_matrix(&Mat::filled(2, 3, 1.5));
        assert_eq!(&bytes[..8], b"BMC1\x01\x01\x00\x00");
        assert_eq!(bytes[8], 2);
        assert_eq!(bytes[16], 3);
        assert_eq!(bytes.len(), 24 + 48);
    }

    #[test]
    fn corruption_is_positioned() {
        let good = encode_matrix(&Mat::filled(2, 2, 1.0));
        let mut b = good.clone();
        b[0] = b'X';
        assert_eq!(offset(decode_matrix(&b)), 0);
        let mut b = good.clone();
        b[4] = 2;
        assert_eq!(offset(decode_matrix(&b)), 4);
        let mut b = good.clone();
        b[5] = 2;
        assert_eq!(offset(decode_matrix(&b)), 5);
        assert_eq!(offset(decode_matrix(&good[..30])), 30);
        assert_eq!(offset(decode_matrix(&good[..10])), 10);
        let mut b = good.clone();
        b.push(0);
        assert_eq!(offset(decode_matrix(&b)), good.len() as u64);
        let mut b = good.clone();
        b[32..40].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(offset(decode_matrix(&b)), 32);
    }
}
