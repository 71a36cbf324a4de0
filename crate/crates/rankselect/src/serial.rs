//! Little-endian read/write helpers shared by the index file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) fn write_u64<W: Write>(sink: &mut W, v: u64) -> Result<()> {
    sink.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u64<R: Read>(source: &mut R, what: &'static str) -> Result<u64> {
    let mut buf = [0u8; 8];
    read_exact_or(source, &mut buf, what)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn write_u64_section<W: Write>(sink: &mut W, data: &[u64]) -> Result<()> {
    write_u64(sink, data.len() as u64)?;
    for &v in data {
        write_u64(sink, v)?;
    }
    Ok(())
}

pub(crate) fn read_u64_section<R: Read>(source: &mut R, what: &'static str) -> Result<Vec<u64>> {
    let len = read_u64(source, what)?;
    let mut out = Vec::with_capacity(usize::try_from(len).map_err(|_| Error::Truncated(what))?);
    for _ in 0..len {
        out.push(read_u64(source, what)?);
    }
    Ok(out)
}

pub(crate) fn write_u32_section<W: Write>(sink: &mut W, data: &[u32]) -> Result<()> {
    write_u64(sink, data.len() as u64)?;
    for &v in data {
        sink.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_u32_section<R: Read>(source: &mut R, what: &'static str) -> Result<Vec<u32>> {
    let len = read_u64(source, what)?;
    let mut out = Vec::with_capacity(usize::try_from(len).map_err(|_| Error::Truncated(what))?);
    let mut buf = [0u8; 4];
    for _ in 0..len {
        read_exact_or(source, &mut buf, what)?;
        out.push(u32::from_le_bytes(buf));
    }
    Ok(out)
}

pub(crate) fn read_exact_or<R: Read>(
    source: &mut R,
    buf: &mut [u8],
    what: &'static str,
) -> Result<()> {
    source.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated(what)
        } else {
            Error::Io(e)
        }
    })
}

/// Check an 8-byte magic of the form `XXXXX001`; distinguishes a wrong
/// family from a wrong version of the right family.
pub(crate) fn check_magic<R: Read>(
    source: &mut R,
    expected: &'static [u8; 8],
    expected_str: &'static str,
    family: &'static str,
) -> Result<()> {
    let mut magic = [0u8; 8];
    read_exact_or(source, &mut magic, "magic")?;
    if &magic == expected {
        return Ok(());
    }
    if magic[..5] == expected[..5] {
        let found = std::str::from_utf8(&magic[5..])
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        return Err(Error::UnsupportedVersion { family, found });
    }
    Err(Error::BadMagic {
        expected: expected_str,
    })
}
