//! Little-endian integer framing shared by every serialized block.
//!
//! Reads distinguish truncation (a format error) from transport failures so
//! that a short file never surfaces as a bare I/O error.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub fn put_u8<W: Write>(w: &mut W, v: u8) -> Result<()> {
    w.write_all(&[v])?;
    Ok(())
}

pub fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn get_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut buf = [0u8; 1];
    fill(r, &mut buf)?;
    Ok(buf[0])
}

pub fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    fill(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    fill(r, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn get_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    fill(r, buf)
}

/// Reads a u64 length and checks it against a sanity bound before any
/// allocation, so a corrupt header cannot request absurd buffer sizes.
pub fn get_len<R: Read>(r: &mut R, limit: u64, what: &str) -> Result<usize> {
    let n = get_u64(r)?;
    if n > limit {
        return Err(Error::Format(format!(
            "{what} length {n} exceeds limit {limit}"
        )));
    }
    Ok(n as usize)
}

fn fill<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    match r.read_exact(buf) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
            Err(Error::Format("unexpected end of data".into()))
        }
        Err(e) => Err(Error::Io(e)),
    }
}
