//! Little-endian primitives for the binary table and trajectory files.

use std::io::{self, Read, Write};

pub fn put_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn put_f64<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn put_f64s<W: Write>(w: &mut W, v: &[f64]) -> io::Result<()> {
    put_u64(w, v.len() as u64)?;
    for &x in v {
        put_f64(w, x)?;
    }
    Ok(())
}

pub fn get_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn get_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a length-prefixed array, refusing lengths other than `expected` when given.
pub fn get_f64s<R: Read>(r: &mut R, expected: Option<usize>) -> io::Result<Vec<f64>> {
    let n = get_u64(r)? as usize;
    if let Some(e) = expected {
        if n != e {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("array of length {n}, expected {e}"),
            ));
        }
    }
    if n > 1 << 32 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "implausible array length"));
    }
    (0..n).map(|_| get_f64(r)).collect()
}

pub fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 8]) -> io::Result<()> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    if &b != magic {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad file signature"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrays_round_trip() {
        let mut buf = Vec::new();
        put_f64s(&mut buf, &[1.5, -2.0, f64::MIN_POSITIVE]).unwrap();
        let back = get_f64s(&mut buf.as_slice(), Some(3)).unwrap();
        assert_eq!(back, vec![1.5, -2.0, f64::MIN_POSITIVE]);
        assert!(get_f64s(&mut buf.as_slice(), Some(2)).is_err());
    }
}
