use std::io::{Read, Write};

use num_complex::Complex64;

use crate::{Error, Result};

/// First eight header bytes of a coefficient file.
pub const COEFF_MAGIC: [u8; 8] = *b"HPEFCOEF";

/// Write `coeffs` as a 16-byte header (magic, little-endian `u64` length)
/// followed by little-endian `(re, im)` pairs.
pub fn write_coefficients<W: Write>(mut w: W, coeffs: &[Complex64]) -> Result<()> {
    w.write_all(&COEFF_MAGIC)?;
    w.write_all(&(coeffs.len() as u64).to_le_bytes())?;
    for c in coeffs {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_coefficients<R: Read>(mut r: R) -> Result<Vec<Complex64>> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if head[..8] != COEFF_MAGIC {
        return Err(Error::Parse { line: 0, msg: "bad coefficient file magic".into() });
    }
    let n = u64::from_le_bytes(head[8..].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; 16 * n];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}
