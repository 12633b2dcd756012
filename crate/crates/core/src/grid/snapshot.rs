//! Binary field snapshots: a 16-byte header (the magic `SCHF`, a
//! little-endian `u32` node count, eight reserved zero bytes) followed by
//! `n` little-endian `f64` values.
//! A trajectory file is a plain concatenation of such frames.

use std::io::{Read, Write};

use super::{Field, Grid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SCHF";
pub const HEADER_LEN: usize = 16;

pub fn write_field<W: Write>(out: &mut W, field: &Field) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(field.grid().n() as u32).to_le_bytes())?;
    out.write_all(&[0u8; 8])?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn encode(field: &Field) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * field.grid().n());
    write_field(&mut buf, field).expect("writing to a Vec cannot fail");
    buf
}

/// Decodes exactly one frame from the front of `bytes`, returning the field
/// and the number of bytes consumed.
pub fn decode(bytes: &[u8]) -> Result<(Field, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "need {HEADER_LEN} header bytes, got {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic (expected SCHF)".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let grid = Grid::new(n)?;
    let end = HEADER_LEN + 8 * n;
    if bytes.len() < end {
        return Err(Error::Format(format!(
            "truncated frame: {n} values need {end} bytes, got {}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Field::new(grid, values)?, end))
}

pub fn decode_all(bytes: &[u8]) -> Result<Vec<Field>> {
    let mut fields = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        let (f, used) = decode(rest)?;
        fields.push(f);
        rest = &rest[used..];
    }
    Ok(fields)
}

pub fn read_field<R: Read>(input: &mut R) -> Result<Field> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Format(e.to_string()))?;
    let (f, used) = decode(&bytes)?;
    if used != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after frame",
            bytes.len() - used
        )));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::new(16).unwrap();
        let f = Field::from_fn(g, |x| x.sin() / 3.0 + 1e-300);
        let bytes = encode(&f);
        assert_eq!(bytes.len(), 16 + 8 * 16);
        assert_eq!(&bytes[..4], b"SCHF");
        let (back, used) = decode(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, f);
    }

    #[test]
    fn concatenated_frames() {
        let g = Grid::new(8).unwrap();
        let a = Field::constant(g, 1.0);
        let b = Field::constant(g, -2.0);
        let mut bytes = encode(&a);
        bytes.extend(encode(&b));
        assert_eq!(decode_all(&bytes).unwrap(), vec![a, b]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode(b"NOPE0000000000000000").is_err());
        let g = Grid::new(8).unwrap();
        let bytes = encode(&Field::zeros(g));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
    }
}
